"""Library walkthrough: every stage of the pipeline as plain function calls.

Runs in under a minute on one core; prints what it measures as it goes.
"""

import tempfile
from pathlib import Path

import numpy as np

from patn import (
    FrameConfig,
    HatoConfig,
    PatnConfig,
    TrainConfig,
    bounds_from_dataset,
    deploy_generator,
    equal_error_rate,
    export_generator,
    init_patn,
    load_generator,
    make_window_pairs,
    misalignment_eval,
    to_frames,
    train_attacker,
    train_patn,
)
from patn.data import (
    load_motionsense,
    synthesize_static_recordings,
    write_synthetic_motionsense,
)

T_IN, T_OUT = 30, 10

root = Path(tempfile.mkdtemp()) / "corpus"
print(f"1. synthetic corpus at {root}")
write_synthetic_motionsense(root, n_subjects=10, trials_per_activity=1,
                            seconds_per_trial=30.0, seed=7)
train, test = load_motionsense(root, split_ratio=0.7, seed=7)
print(f"   {len(train)} train / {len(test)} test recordings")

print("2. framing and budgets")
fc = FrameConfig(frame_sec=0.5)
train_f = [to_frames(s, fc) for s in train]
test_f = [to_frames(s, fc) for s in test]
static_f = [to_frames(s, fc) for s in
            synthesize_static_recordings(3, 20.0, seed=8)]
b = bounds_from_dataset(train_f, static_f)
print("   eps per channel:", np.round(b.eps, 5))

print("3. the eavesdropper")
pairs = make_window_pairs(train_f, T_IN, T_OUT, stride=2)
wins = np.stack([p.future for p in pairs])
labels = np.array([p.sensitive_label for p in pairs])
attacker = train_attacker(wins, labels, arch="lstm", input_len=T_OUT,
                          seed=1, epochs=40, patience=20)
print(f"   val acc {attacker.train_log['val_acc'][-1]:.3f} "
      f"on {len(wins)} windows")

print("4. the generator (short schedule for the demo)")
g = init_patn(PatnConfig(bounds=b, T_in=T_IN, T_out=T_OUT, D=6, H=64),
              seed=17)
rep = train_patn(g, make_window_pairs(train_f, T_IN, T_OUT, stride=5),
                 attacker, TrainConfig(epochs=120, seed=17),
                 HatoConfig(w=T_OUT, s=2, k=2))
print(f"   {rep.epochs_run} epochs, final loss {rep.loss_total[-1]:.3f}")

print("5. deployment on held-out streams")
deployed = [(f.values, deploy_generator(g, f.values), f.sensitive_label)
            for f in test_f]
clean = misalignment_eval(attacker,
                          [(f, np.zeros_like(f), y) for f, _, y in deployed],
                          T_OUT, T_IN, tau=0)
adv = misalignment_eval(attacker, deployed, T_OUT, T_IN, tau=0)
print(f"   attacker EER {clean.eer:.3f} -> {adv.eer:.3f}, "
      f"flip rate {adv.asr:.1f}% of correct windows")

print("6. export and reload")
out = root.parent / "bundle.bin"
size = export_generator(g, out)
g2 = load_generator(out)
probe = np.linspace(-1, 1, T_IN * 6).reshape(T_IN, 6)
same = bool((deploy_generator(g2, probe) == deploy_generator(g, probe)).all())
print(f"   {size} bytes, reload bit-identical: {same}")
