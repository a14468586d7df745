"""Command-line pipeline.

Subcommands cover the full experiment lifecycle against one run
directory: ingest, train-attacker, train-patn, baseline, evaluate,
ablate-hato, transfer, simulate, export, plot. A run directory holds the
processed dataset, a manifest of every derived quantity, model
checkpoints, and metric tables; commands read what earlier stages wrote,
so each is restartable on its own.

Exit codes: 0 success, 1 usage or bad parameter combination, 2 data
problems (unreadable, malformed, failed integrity check), 3 runtime
failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import bounds as bounds_mod
from . import data as data_mod
from . import evaluation as ev
from . import export as export_mod
from . import generator as gen_mod
from . import hato as hato_mod
from . import manifest as man_mod
from . import models as models_mod
from . import stream as stream_mod
from . import trainer as trainer_mod
from .errors import (
    ChecksumError,
    ConfigurationError,
    IngestionError,
    MetricError,
    PatnError,
    SchemaError,
    ShapeError,
    StatisticsError,
)

RUN_ROOT_ENV = "PATN_RUN_ROOT"

_USAGE_ERRORS = (ConfigurationError,)
_DATA_ERRORS = (IngestionError, SchemaError, ChecksumError, StatisticsError,
                ShapeError, MetricError)


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# Run-directory plumbing
# ---------------------------------------------------------------------------


def _run_dir(args, create=False) -> Path:
    root = Path(os.environ.get(RUN_ROOT_ENV, "."))
    run = Path(args.run)
    if not run.is_absolute():
        run = root / run
    if create:
        run.mkdir(parents=True, exist_ok=True)
    elif not run.is_dir():
        raise IngestionError(f"run directory not found: {run}")
    return run


def _save_dataset(run: Path, train, test, rate: float):
    arrays = {"rate": np.array(rate)}
    for split, seqs in (("train", train), ("test", test)):
        arrays[f"{split}_n"] = np.array(len(seqs))
        arrays[f"{split}_subject"] = np.array([s.subject_id for s in seqs])
        arrays[f"{split}_activity"] = np.array([s.activity_label for s in seqs])
        arrays[f"{split}_sensitive"] = np.array([s.sensitive_label for s in seqs])
        for i, s in enumerate(seqs):
            arrays[f"{split}{i}_v"] = s.values
    np.savez_compressed(run / "dataset.npz", **arrays)


def _load_dataset(run: Path):
    path = run / "dataset.npz"
    if not path.exists():
        raise IngestionError(f"no dataset in run directory (expected {path}); "
                             "run `ingest` first")
    z = np.load(path)
    rate = float(z["rate"])
    out = {}
    for split in ("train", "test"):
        seqs = []
        n = int(z[f"{split}_n"])
        subj = z[f"{split}_subject"]
        act = z[f"{split}_activity"]
        sens = z[f"{split}_sensitive"]
        for i in range(n):
            seqs.append(data_mod.SensorSequence(
                values=z[f"{split}{i}_v"],
                sample_rate_hz=rate,
                subject_id=str(subj[i]),
                activity_label=str(act[i]),
                sensitive_label=str(sens[i]),
            ))
        out[split] = seqs
    return out["train"], out["test"], rate


def _pipeline_params(run: Path) -> dict:
    m = man_mod.read_manifest(run / "manifest.ini")
    p = m["pipeline"]
    return dict(T_in=int(p["T_in"]), T_out=int(p["T_out"]),
                stride=int(p["stride"]), frame_sec=float(p["frame_sec"]))


def _load_bounds(run: Path) -> bounds_mod.EpsilonBounds:
    m = man_mod.read_manifest(run / "manifest.ini")
    sec = m["bounds"]
    names = data_mod.DEFAULT_CHANNELS
    eps = np.array([float(sec[f"eps_{c}"]) for c in names])
    prov = {
        "eps_data": np.array([float(sec[f"eps_data_{c}"]) for c in names]),
        "eps_natural": np.array([float(sec[f"eps_natural_{c}"]) for c in names]),
    }
    return bounds_mod.EpsilonBounds(eps=eps, provenance=prov)


def _frames(seqs, frame_sec):
    cfg = data_mod.FrameConfig(frame_sec=frame_sec)
    return [data_mod.to_frames(s, cfg) for s in seqs]


def _attacker_path(run: Path, arch: str, input_len=None) -> Path:
    stem = f"attacker_{arch}" + (f"_w{input_len}" if input_len else "")
    return run / f"{stem}.bin"


def _load_checkpointed(run: Path, stem: str) -> models_mod.ClassifierHandle:
    m = man_mod.read_manifest(run / "manifest.ini")
    if stem not in m:
        raise IngestionError(f"no [{stem}] section in manifest; train it first")
    sec = m[stem]
    h = export_mod.load_classifier(run / sec["checkpoint"], sec["arch"],
                                   classes=sec["classes"].split(","))
    return h


def _update_manifest(run: Path, section: str, values: dict):
    path = run / "manifest.ini"
    sections = dict(man_mod.read_manifest(path)) if path.exists() else {}
    sections[section] = {k: str(v) for k, v in values.items()}
    man_mod.write_manifest(path, sections)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f"{v:.9g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    run = _run_dir(args, create=True)
    root = Path(args.data_root)
    if args.synthetic and not (root / "data_subjects_info.csv").exists():
        data_mod.write_synthetic_motionsense(
            root, n_subjects=args.synthetic_subjects,
            trials_per_activity=args.synthetic_trials,
            seconds_per_trial=args.synthetic_seconds, seed=args.seed)
    train, test = data_mod.load_motionsense(root, split_ratio=args.split_ratio,
                                            seed=args.seed)
    rate = train[0].sample_rate_hz
    _save_dataset(run, train, test, rate)
    train_f = _frames(train, args.frame_sec)
    mu, sigma = data_mod.compute_channel_stats(train_f)
    static = data_mod.synthesize_static_recordings(
        args.static_recordings, args.static_seconds, seed=args.seed + 1)
    static_f = _frames(static, args.frame_sec)
    b = bounds_mod.bounds_from_dataset(train_f, static_f)
    names = data_mod.DEFAULT_CHANNELS
    _update_manifest(run, "dataset", {
        "root": root, "split_seed": args.seed, "split_ratio": args.split_ratio,
        "n_train": len(train), "n_test": len(test), "rate_hz": rate,
    })
    _update_manifest(run, "pipeline", {
        "T_in": args.t_in, "T_out": args.t_out, "stride": args.stride,
        "frame_sec": args.frame_sec,
    })
    _update_manifest(run, "stats", {
        **{f"mu_{c}": f"{mu[i]:.9g}" for i, c in enumerate(names)},
        **{f"sigma_{c}": f"{sigma[i]:.9g}" for i, c in enumerate(names)},
    })
    _update_manifest(run, "bounds", {
        **{f"eps_{c}": f"{b.eps[i]:.9g}" for i, c in enumerate(names)},
        **{f"eps_data_{c}": f"{b.provenance['eps_data'][i]:.9g}"
           for i, c in enumerate(names)},
        **{f"eps_natural_{c}": f"{b.provenance['eps_natural'][i]:.9g}"
           for i, c in enumerate(names)},
    })
    print(f"ingested {len(train)} train / {len(test)} test sequences into {run}")
    print("eps per channel:",
          " ".join(f"{c}={b.eps[i]:.5f}" for i, c in enumerate(names)))
    return 0


def _window_pairs_for(run: Path, split_seqs, params, stride=None):
    frames = _frames(split_seqs, params["frame_sec"])
    return frames, data_mod.make_window_pairs(
        frames, params["T_in"], params["T_out"],
        stride if stride is not None else params["stride"])


def cmd_train_attacker(args) -> int:
    run = _run_dir(args)
    train, _, _ = _load_dataset(run)
    params = _pipeline_params(run)
    input_len = args.input_len or params["T_out"]
    _, pairs = _window_pairs_for(run, train, params, stride=args.stride)
    if not pairs:
        raise StatisticsError("no training windows; sequences too short?")
    wins = np.stack([p.future[:input_len] if input_len <= params["T_out"]
                     else np.concatenate([p.history, p.future])[-input_len:]
                     for p in pairs])
    labels = np.array([p.sensitive_label for p in pairs])
    h = models_mod.train_attacker(wins, labels, arch=args.arch,
                                  input_len=input_len, seed=args.seed,
                                  epochs=args.epochs, patience=args.patience)
    path = _attacker_path(run, args.arch,
                          input_len if args.input_len else None)
    export_mod.export_classifier(h, path)
    section = "attacker" if not args.input_len and args.primary else \
        f"attacker_{args.arch}" + (f"_w{input_len}" if args.input_len else "")
    _update_manifest(run, section, {
        "arch": args.arch, "seed": args.seed, "epochs": args.epochs,
        "input_len": input_len, "checkpoint": path.name,
        "classes": ",".join(h.train_log["classes"]),
        "val_acc": f"{h.train_log['val_acc'][-1]:.4f}",
    })
    print(f"trained {args.arch} attacker on {len(wins)} windows "
          f"(val acc {h.train_log['val_acc'][-1]:.3f}) -> {path.name}")
    return 0


def cmd_train_patn(args) -> int:
    run = _run_dir(args)
    train, test, _ = _load_dataset(run)
    params = _pipeline_params(run)
    b = _load_bounds(run)
    attacker = _load_checkpointed(run, "attacker")
    _, pairs = _window_pairs_for(run, train, params)
    _, eval_pairs = _window_pairs_for(run, test, params,
                                      stride=params["T_out"])
    cfg = gen_mod.PatnConfig(bounds=b, T_in=params["T_in"],
                             T_out=params["T_out"], D=len(b.eps), H=args.hidden)
    g = gen_mod.init_patn(cfg, seed=args.seed)
    tcfg = trainer_mod.TrainConfig(
        lambda1=args.lambda1, lambda2=args.lambda2, lr=args.lr,
        epochs=args.epochs, lr_halving_period=args.lr_halving_period,
        batch_size=args.batch_size, seed=args.seed)
    hcfg = hato_mod.HatoConfig(w=params["T_out"], s=args.hato_stride,
                               k=args.hato_topk)
    report = trainer_mod.train_patn(g, pairs, attacker, tcfg, hcfg,
                                    eval_pairs=eval_pairs,
                                    use_hato=not args.no_hato)
    name = "patn_nohato.bin" if args.no_hato else "patn.bin"
    size = export_mod.export_generator(g, run / name)
    rows = [[e, report.loss_total[e], report.loss_adv[e], report.loss_hato[e],
             report.loss_smooth[e], report.lr_schedule[e]]
            for e in range(report.epochs_run)]
    _write_csv(run / name.replace(".bin", "_losses.csv"),
               ["epoch", "total", "adv", "hato", "smooth", "lr"], rows)
    _update_manifest(run, "patn_nohato" if args.no_hato else "patn", {
        "checkpoint": name, "seed": args.seed, "epochs": report.epochs_run,
        "hidden": args.hidden, "lambda1": args.lambda1, "lambda2": args.lambda2,
        "bundle_bytes": size,
        "asr_before": f"{report.asr_before:.2f}",
        "asr_after": f"{report.asr_after:.2f}",
    })
    print(f"trained generator ({report.epochs_run} epochs, bundle {size} bytes); "
          f"held-out aligned flip rate {report.asr_before:.1f}% -> "
          f"{report.asr_after:.1f}%")
    return 0


def cmd_baseline(args) -> int:
    run = _run_dir(args)
    if args.kind != "uap":
        print(f"baseline '{args.kind}' needs no fitting; it is applied "
              "during `evaluate`")
        return 0
    train, _, _ = _load_dataset(run)
    params = _pipeline_params(run)
    b = _load_bounds(run)
    attacker = _load_checkpointed(run, "attacker")
    _, pairs = _window_pairs_for(run, train, params)
    wins = np.stack([p.future for p in pairs])
    pattern = bl.fit_uap(attacker, wins, b, epochs=args.epochs, seed=args.seed)
    np.savez(run / "uap.npz", pattern=pattern)
    _update_manifest(run, "uap", {
        "epochs": args.epochs, "seed": args.seed,
        "linf": f"{np.abs(pattern).max():.6g}",
    })
    print(f"fitted universal pattern over {len(wins)} windows "
          f"(max |delta| {np.abs(pattern).max():.5f})")
    return 0


def _deployed_streams(g, test_frames, kind, b, attacker, uap_pattern, params,
                      seed=0):
    out = []
    for i, f in enumerate(test_frames):
        if kind == "patn":
            delta = ev.deploy_generator(g, f.values)
        else:
            delta = ev.deploy_baseline(
                kind, f.values, b, attacker=attacker, uap_pattern=uap_pattern,
                T_in=params["T_in"], T_out=params["T_out"], seed=seed + i)
        out.append((f.values, delta, f.sensitive_label))
    return out


def _ensure_har(run: Path, train, params, seed=0, epochs=40):
    m = man_mod.read_manifest(run / "manifest.ini") \
        if (run / "manifest.ini").exists() else {}
    if "har" in m:
        return _load_checkpointed(run, "har")
    frames = _frames(train, params["frame_sec"])
    pairs = data_mod.make_window_pairs(frames, params["T_in"], params["T_out"],
                                       params["stride"])
    wins = np.stack([p.future for p in pairs])
    labels = np.array([p.activity_label for p in pairs])
    h = models_mod.train_har(wins, labels, seed=seed, epochs=epochs)
    path = run / "har.bin"
    export_mod.export_classifier(h, path)
    _update_manifest(run, "har", {
        "arch": "cnn", "seed": seed, "epochs": epochs, "checkpoint": path.name,
        "classes": ",".join(h.train_log["classes"]),
        "val_acc": f"{h.train_log['val_acc'][-1]:.4f}",
    })
    return h


def cmd_evaluate(args) -> int:
    run = _run_dir(args)
    train, test, rate = _load_dataset(run)
    params = _pipeline_params(run)
    b = _load_bounds(run)
    attacker = _load_checkpointed(run, "attacker")
    g = export_mod.load_generator(run / "patn.bin") \
        if (run / "patn.bin").exists() else None
    if g is None:
        raise IngestionError("no trained generator (patn.bin); "
                             "run `train-patn` first")
    uap_pattern = None
    if (run / "uap.npz").exists():
        uap_pattern = np.load(run / "uap.npz")["pattern"]
    test_frames = _frames(test, params["frame_sec"])
    w = params["T_out"]
    kinds = ["patn", "dp", "fgsm", "pgd"] + (["uap"] if uap_pattern is not None
                                             else [])
    rows = []
    deployed_patn = None
    for kind in kinds:
        deployed = _deployed_streams(g, test_frames, kind, b, attacker,
                                     uap_pattern, params, seed=args.seed)
        if kind == "patn":
            deployed_patn = deployed
        rep = ev.misalignment_eval(attacker, deployed, w, params["T_in"], tau=0)
        rows.append([kind, rep.asr, rep.eer, rep.auc, rep.f1, rep.n_eval])
    raw = ev.misalignment_eval(
        attacker, [(f, np.zeros_like(f), lab) for f, _, lab in deployed_patn],
        w, params["T_in"], tau=0)
    rows.insert(0, ["raw", raw.asr, raw.eer, raw.auc, raw.f1, raw.n_eval])
    _write_csv(run / "privacy.csv",
               ["attack", "asr", "eer", "auc", "f1", "n"], rows)

    # Fidelity and utility at the raw sample rate, walking test data.
    spf = int(round(params["frame_sec"] * rate))
    fid_rows = []
    har = _ensure_har(run, train, params, seed=args.seed)
    clean_cat, adv_cat = [], []
    for (frames_v, delta, _), raw_seq, seq in zip(deployed_patn, test,
                                                  test_frames):
        n = frames_v.shape[0] * spf
        clean_raw = raw_seq.values[:n]
        adv_raw = clean_raw + data_mod.expand_frames(delta, spf)
        clean_cat.append((clean_raw, seq.activity_label))
        adv_cat.append(adv_raw)
    clean_all = np.concatenate([c for c, _ in clean_cat])
    adv_all = np.concatenate(adv_cat)
    fid = ev.evaluate_fidelity(clean_all, adv_all, rate)
    fid_rows.append(["patn", fid.dtw, fid.l2, fid.lf, fid.rmse])
    rng = np.random.default_rng(args.seed)
    gauss = clean_all + rng.normal(0.0, 1.0, size=clean_all.shape) * (5.0 * b.eps)
    fid_g = ev.evaluate_fidelity(clean_all, gauss, rate)
    fid_rows.append(["gauss5x", fid_g.dtw, fid_g.l2, fid_g.lf, fid_g.rmse])
    _write_csv(run / "fidelity.csv", ["attack", "dtw", "l2", "lf", "rmse"],
               fid_rows)

    walk_idx = [i for i, s in enumerate(test_frames)
                if s.activity_label in ("walking", "jogging")]
    if walk_idx:
        cw = np.concatenate([clean_cat[i][0] for i in walk_idx])
        aw = np.concatenate([adv_cat[i] for i in walk_idx])
    else:
        cw = np.concatenate([c for c, _ in clean_cat])
        aw = np.concatenate(adv_cat)
    har_cw, har_aw, har_labs = [], [], []
    for (frames_v, delta, _), seq in zip(deployed_patn, test_frames):
        c, a = ev.stream_windows(frames_v, delta, w, params["T_in"], w)
        har_cw.append(c)
        har_aw.append(a)
        har_labs.extend([seq.activity_label] * len(c))
    util = ev.evaluate_utility(har, cw, aw, rate,
                               np.concatenate(har_cw), np.concatenate(har_aw),
                               np.array(har_labs))
    _write_csv(run / "utility.csv",
               ["metric", "clean", "adv"],
               [["steps", float(util.step_count_clean),
                 float(util.step_count_adv)],
                ["step_rel_err", 0.0, util.step_rel_err],
                ["har_eer", util.har_eer_clean, util.har_eer_adv],
                ["har_auc", util.har_auc_clean, util.har_auc_adv]])
    print(run / "privacy.csv")
    for r in rows:
        print("  %-8s ASR %6.2f  EER %.4f  AUC %.4f  F1 %.4f" %
              (r[0], r[1], r[2], r[3], r[4]))
    print(f"fidelity (patn): dtw {fid.dtw:.4f} l2 {fid.l2:.4f} "
          f"lf {fid.lf:.4f} rmse {fid.rmse:.5f}")
    print(f"utility: steps {util.step_count_clean} -> {util.step_count_adv} "
          f"(rel err {util.step_rel_err:.4f}), HAR AUC "
          f"{util.har_auc_clean:.4f} -> {util.har_auc_adv:.4f}")
    return 0


def cmd_ablate_hato(args) -> int:
    run = _run_dir(args)
    _, test, _ = _load_dataset(run)
    params = _pipeline_params(run)
    b = _load_bounds(run)
    attacker = _load_checkpointed(run, "attacker")
    test_frames = _frames(test, params["frame_sec"])
    rows = []
    for name, ckpt in (("hato", "patn.bin"), ("no_hato", "patn_nohato.bin")):
        path = run / ckpt
        if not path.exists():
            raise IngestionError(f"missing {ckpt}; train both variants first "
                                 "(use --no-hato for the ablated one)")
        g = export_mod.load_generator(path)
        deployed = [(f.values, ev.deploy_generator(g, f.values),
                     f.sensitive_label) for f in test_frames]
        for tau in (0, args.tau):
            rep = ev.misalignment_eval(attacker, deployed, params["T_out"],
                                       params["T_in"], tau=tau)
            rows.append([name, tau, rep.asr, rep.eer, rep.n_eval])
    _write_csv(run / "ablation.csv",
               ["variant", "tau", "asr", "eer", "n"], rows)
    for r in rows:
        print("  %-8s tau=%-2d ASR %6.2f  EER %.4f" % (r[0], r[1], r[2], r[3]))
    return 0


def cmd_transfer(args) -> int:
    run = _run_dir(args)
    train, test, _ = _load_dataset(run)
    params = _pipeline_params(run)
    g = export_mod.load_generator(run / "patn.bin")
    test_frames = _frames(test, params["frame_sec"])
    deployed = [(f.values, ev.deploy_generator(g, f.values),
                 f.sensitive_label) for f in test_frames]
    attackers = {}
    frames = _frames(train, params["frame_sec"])
    pairs = data_mod.make_window_pairs(frames, params["T_in"], params["T_out"],
                                       params["stride"])
    for arch in args.archs.split(","):
        arch = arch.strip()
        if not arch:
            continue
        wins = np.stack([p.future for p in pairs])
        labels = np.array([p.sensitive_label for p in pairs])
        key = f"arch_{arch}"
        ck = _attacker_path(run, arch)
        if (run / "manifest.ini").exists() and \
                key in man_mod.read_manifest(run / "manifest.ini"):
            attackers[key] = _load_checkpointed(run, key)
        else:
            h = models_mod.train_attacker(wins, labels, arch=arch,
                                          seed=args.seed, epochs=args.epochs)
            export_mod.export_classifier(h, ck)
            _update_manifest(run, key, {
                "arch": arch, "seed": args.seed, "epochs": args.epochs,
                "input_len": params["T_out"], "checkpoint": ck.name,
                "classes": ",".join(h.train_log["classes"]),
            })
            attackers[key] = h
    for ln in args.lengths.split(","):
        ln = ln.strip()
        if not ln:
            continue
        w2 = int(ln)
        key = f"len_{w2}"
        ck = _attacker_path(run, args.length_arch, w2)
        if (run / "manifest.ini").exists() and \
                key in man_mod.read_manifest(run / "manifest.ini"):
            attackers[key] = _load_checkpointed(run, key)
        else:
            pool = []
            labs = []
            for f in frames:
                # half-overlapping windows: these eavesdroppers see less
                # data per stream than the deployed one, so densify
                c, _ = ev.stream_windows(f.values, np.zeros_like(f.values),
                                         w2, 0, max(1, w2 // 2))
                pool.append(c)
                labs.extend([f.sensitive_label] * len(c))
            wins2 = np.concatenate(pool)
            h = models_mod.train_attacker(wins2, np.array(labs),
                                          arch=args.length_arch, input_len=w2,
                                          seed=args.seed, epochs=args.epochs)
            export_mod.export_classifier(h, ck)
            _update_manifest(run, key, {
                "arch": args.length_arch, "seed": args.seed,
                "epochs": args.epochs, "input_len": w2, "checkpoint": ck.name,
                "classes": ",".join(h.train_log["classes"]),
            })
            attackers[key] = h
    table = ev.transfer_eval(attackers, deployed, params["T_in"])
    rows = [[k, v["raw_eer"], v["adv_eer"], v["adv_eer"] - v["raw_eer"],
             v["asr"], v["raw_acc"]] for k, v in table.items()]
    _write_csv(run / "transfer.csv",
               ["attacker", "raw_eer", "adv_eer", "eer_gain", "asr", "raw_acc"],
               rows)
    for r in rows:
        print("  %-12s raw EER %.4f  adv EER %.4f  gain %.4f  ASR %6.2f"
              % (r[0], r[1], r[2], r[3], r[4]))
    return 0


def cmd_simulate(args) -> int:
    run = _run_dir(args)
    params = _pipeline_params(run)
    g = export_mod.load_generator(run / "patn.bin")
    if args.input:
        in_path = Path(args.input)
    else:
        _, test, _ = _load_dataset(run)
        streams = run / "streams"
        streams.mkdir(exist_ok=True)
        in_path = streams / "demo.csv"
        data_mod.write_stream_csv(test[0], in_path)
    out_path = Path(args.output) if args.output else \
        in_path.with_name(in_path.stem + "_adv.csv")
    stream_mod.replay_csv(g, in_path, out_path,
                          data_mod.FrameConfig(frame_sec=params["frame_sec"]))
    lat = stream_mod.latency_stats(g, n_trials=args.latency_trials)
    print(f"wrote {out_path}")
    print(f"latency per generation: mean {lat['mean_s']*1e3:.3f} ms, "
          f"p95 {lat['p95_s']*1e3:.3f} ms, max {lat['max_s']*1e3:.3f} ms")
    return 0


def cmd_export(args) -> int:
    run = _run_dir(args)
    src = run / ("patn_nohato.bin" if args.no_hato else "patn.bin")
    g = export_mod.load_generator(src)
    out = Path(args.out)
    size = export_mod.export_generator(g, out)
    check = export_mod.load_generator(out)
    probe = np.linspace(-1, 1, g.config.T_in * g.config.D).reshape(
        g.config.T_in, g.config.D)
    same = bool((gen_mod.generate(g, probe) == gen_mod.generate(check, probe)).all())
    print(f"wrote {out} ({size} bytes); reload check "
          f"{'passed' if same else 'FAILED'}")
    return 0 if same else 3


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run = _run_dir(args)
    out = run / f"plot_{args.kind}.png"
    if args.kind == "losses":
        path = run / "patn_losses.csv"
        if not path.exists():
            raise IngestionError(f"no loss log at {path}")
        rows = [ln.split(",") for ln in
                path.read_text().strip().splitlines()[1:]]
        epochs = [int(r[0]) for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        for idx, name in ((1, "total"), (2, "adversarial"), (3, "offset"),
                          (4, "smoothness")):
            ax.plot(epochs, [float(r[idx]) for r in rows], label=name)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.legend()
    elif args.kind == "signals":
        _, test, _ = _load_dataset(run)
        params = _pipeline_params(run)
        g = export_mod.load_generator(run / "patn.bin")
        f = _frames(test[:1], params["frame_sec"])[0]
        delta = ev.deploy_generator(g, f.values)
        fig, axes = plt.subplots(3, 1, figsize=(8, 6), sharex=True)
        t = np.arange(f.values.shape[0]) / f.sample_rate_hz
        for d, ax in enumerate(axes):
            ax.plot(t, f.values[:, d], label="clean", lw=0.8)
            ax.plot(t, f.values[:, d] + delta[:, d], label="perturbed",
                    lw=0.8, alpha=0.8)
            ax.set_ylabel(f.channel_names[d])
        axes[0].legend()
        axes[-1].set_xlabel("seconds")
    elif args.kind == "roc":
        import torch as _t
        _, test, _ = _load_dataset(run)
        params = _pipeline_params(run)
        b = _load_bounds(run)
        attacker = _load_checkpointed(run, "attacker")
        g = export_mod.load_generator(run / "patn.bin")
        frames = _frames(test, params["frame_sec"])
        cw, aw, labs = [], [], []
        for f in frames:
            delta = ev.deploy_generator(g, f.values)
            c, a = ev.stream_windows(f.values, delta, params["T_out"],
                                     params["T_in"], params["T_out"])
            cw.append(c)
            aw.append(a)
            labs.extend([f.sensitive_label] * len(c))
        y = models_mod.label_codes(attacker, np.array(labs))
        fig, ax = plt.subplots(figsize=(5, 5))
        for name, X in (("clean", np.concatenate(cw)),
                        ("perturbed", np.concatenate(aw))):
            s = _t.softmax(_t.as_tensor(models_mod.logits(attacker, X)),
                           1).numpy()[:, 1]
            ths = np.unique(s)[::-1]
            tpr = [(s[y == 1] >= th).mean() for th in ths]
            fpr = [(s[y == 0] >= th).mean() for th in ths]
            ax.plot(fpr, tpr, label=name)
        ax.plot([0, 1], [0, 1], "k:", lw=0.5)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.legend()
    else:
        raise ConfigurationError(f"unknown plot kind {args.kind!r}")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="patn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--run", required=True,
                        help=f"run directory (relative to ${RUN_ROOT_ENV} "
                             "if set)")
        return sp

    sp = add("ingest", cmd_ingest, "load a dataset, derive stats and budgets")
    sp.add_argument("--data-root", required=True)
    sp.add_argument("--synthetic", action="store_true",
                    help="generate a synthetic corpus at data-root if empty")
    sp.add_argument("--synthetic-subjects", type=int, default=28)
    sp.add_argument("--synthetic-trials", type=int, default=1)
    sp.add_argument("--synthetic-seconds", type=float, default=50.0)
    sp.add_argument("--split-ratio", type=float, default=0.72)
    sp.add_argument("--frame-sec", type=float, default=0.5)
    sp.add_argument("--t-in", type=int, default=30)
    sp.add_argument("--t-out", type=int, default=10)
    sp.add_argument("--stride", type=int, default=5)
    sp.add_argument("--static-recordings", type=int, default=4)
    sp.add_argument("--static-seconds", type=float, default=30.0)
    sp.add_argument("--seed", type=int, default=data_mod.DEFAULT_SPLIT_SEED)

    sp = add("train-attacker", cmd_train_attacker,
             "train the privacy eavesdropper")
    sp.add_argument("--arch", default="lstm",
                    choices=sorted(models_mod.ARCH_CONFIG))
    sp.add_argument("--epochs", type=int, default=120)
    sp.add_argument("--patience", type=int, default=30)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--stride", type=int, default=2)
    sp.add_argument("--input-len", type=int, default=None,
                    help="window length; default: the generation block length")
    sp.add_argument("--primary", action="store_true", default=True,
                    help=argparse.SUPPRESS)

    sp = add("train-patn", cmd_train_patn, "train the perturbation generator")
    sp.add_argument("--epochs", type=int, default=600)
    sp.add_argument("--hidden", type=int, default=64)
    sp.add_argument("--lr", type=float, default=5e-4)
    sp.add_argument("--lr-halving-period", type=int, default=300)
    sp.add_argument("--batch-size", type=int, default=64)
    sp.add_argument("--lambda1", type=float, default=0.3)
    sp.add_argument("--lambda2", type=float, default=0.3)
    sp.add_argument("--hato-stride", type=int, default=2)
    sp.add_argument("--hato-topk", type=int, default=2)
    sp.add_argument("--seed", type=int, default=17)
    sp.add_argument("--no-hato", action="store_true",
                    help="ablation: drop the offset-robustness term")

    sp = add("baseline", cmd_baseline, "fit comparison attacks that need it")
    sp.add_argument("--kind", required=True,
                    choices=["dp", "uap", "fgsm", "pgd"])
    sp.add_argument("--epochs", type=int, default=8)
    sp.add_argument("--seed", type=int, default=2)

    sp = add("evaluate", cmd_evaluate,
             "privacy, fidelity, and utility tables")
    sp.add_argument("--seed", type=int, default=9)

    sp = add("ablate-hato", cmd_ablate_hato,
             "aligned vs misaligned windows, with and without the "
             "offset-robustness term")
    sp.add_argument("--tau", type=int, default=2,
                    help="misalignment in frames")

    sp = add("transfer", cmd_transfer,
             "unseen attacker architectures and window lengths")
    sp.add_argument("--archs", default="densenet,mobilenet")
    sp.add_argument("--lengths", default="12,15")
    sp.add_argument("--length-arch", default="mobilenet")
    sp.add_argument("--epochs", type=int, default=200)
    sp.add_argument("--seed", type=int, default=3)

    sp = add("simulate", cmd_simulate, "frame-at-a-time stream replay")
    sp.add_argument("--input", default=None, help="stream CSV to perturb")
    sp.add_argument("--output", default=None)
    sp.add_argument("--latency-trials", type=int, default=200)

    sp = add("export", cmd_export, "write the deployable weight bundle")
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-hato", action="store_true")

    sp = add("plot", cmd_plot, "figures from a finished run")
    sp.add_argument("--kind", required=True,
                    choices=["losses", "signals", "roc"])
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except _USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except PatnError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
