"""Generator optimization loop.

Each step pushes the attacker toward a misleading label on the perturbed
future window (adversarial term), keeps that push effective at every
window phase an eavesdropper might sample (offset-robustness term), and
penalizes mean squared perturbation so the output stays small-and-smooth
inside its box budget (smoothness term). With several attackers the three
terms are formed per attacker and summed, unweighted.

Pairs are consumed in trajectory order so each window's predecessor block
is available: the robustness term needs the perturbation already emitted
for the preceding generation block, which is recomputed under the current
weights but detached, since a deployed block cannot be revised after the
fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

from . import hato as hato_mod
from .data import WindowPair
from .errors import ConfigurationError, TrainingError
from .generator import GeneratorHandle
from .models import ClassifierHandle


@dataclass(frozen=True)
class TrainConfig:
    lambda1: float = 0.3
    lambda2: float = 0.3
    lr: float = 5e-4
    epochs: int = 600
    lr_halving_period: int = 300
    batch_size: int = 64
    seed: int = 0
    # Max gradient norm per step; 0 disables. Without it the output layer
    # overshoots into the flat tail of its squash, where float32 training
    # stalls irrecoverably.
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError(f"bad epoch/batch settings: {self}")
        if self.lr <= 0 or self.lr_halving_period < 1:
            raise ConfigurationError(f"bad learning-rate settings: {self}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigurationError(f"loss weights must be >= 0: {self}")
        if self.grad_clip < 0:
            raise ConfigurationError(f"grad_clip must be >= 0: {self}")


@dataclass
class TrainReport:
    epochs_run: int
    loss_total: list[float] = field(default_factory=list)
    loss_adv: list[float] = field(default_factory=list)
    loss_hato: list[float] = field(default_factory=list)
    loss_smooth: list[float] = field(default_factory=list)
    lr_schedule: list[float] = field(default_factory=list)
    asr_before: float | None = None
    asr_after: float | None = None


def misleading_targets(attacker: ClassifierHandle, x_clean: torch.Tensor) -> torch.Tensor:
    """Label each example should be steered toward: the flipped class when
    binary, the attacker's least-likely class otherwise."""
    with torch.no_grad():
        logits = attacker.net(x_clean.to(attacker.dtype))
    if attacker.n_classes == 2:
        return 1 - logits.argmax(dim=1)
    return logits.argmin(dim=1)


def _predecessor_index(pairs: list[WindowPair], T_out: int) -> np.ndarray:
    """prev[i] = index of the pair one generation block earlier, else -1."""
    where = {(p.source_id, p.start): i for i, p in enumerate(pairs)}
    prev = np.full(len(pairs), -1, dtype=np.int64)
    for i, p in enumerate(pairs):
        prev[i] = where.get((p.source_id, p.start - T_out), -1)
    return prev


def _quick_asr(attacker: ClassifierHandle, g: GeneratorHandle,
               pairs: list[WindowPair]) -> float:
    """Fraction of originally-correct future-window predictions flipped by
    the aligned perturbation; cheap progress metric, not the deployed one."""
    from .generator import generate
    from .models import label_codes

    hist = np.stack([p.history for p in pairs])
    fut = np.stack([p.future for p in pairs])
    y = label_codes(attacker, np.array([p.sensitive_label for p in pairs]))
    with torch.no_grad():
        clean = attacker.net(torch.as_tensor(fut, dtype=attacker.dtype)).argmax(1).numpy()
        delta = generate(g, hist)
        adv = attacker.net(torch.as_tensor(fut + delta, dtype=attacker.dtype)).argmax(1).numpy()
    correct = clean == y
    if not correct.any():
        return 0.0
    return float((adv[correct] != clean[correct]).mean() * 100.0)


def train_patn(g: GeneratorHandle, pairs: list[WindowPair],
               attackers: list[ClassifierHandle] | ClassifierHandle,
               cfg: TrainConfig, hato_cfg: hato_mod.HatoConfig | None = None,
               eval_pairs: list[WindowPair] | None = None,
               use_hato: bool = True) -> TrainReport:
    """Optimize the generator in place and report per-epoch losses.

    use_hato=False zeroes the offset-robustness term (ablation switch); the
    adversarial and smoothness terms are unaffected.
    """
    if isinstance(attackers, ClassifierHandle):
        attackers = [attackers]
    if not pairs:
        raise ConfigurationError("no training pairs supplied")
    T_in, T_out, D = g.config.T_in, g.config.T_out, g.config.D
    w = T_out
    for a in attackers:
        if a.input_len != w:
            raise ConfigurationError(
                f"attacker expects {a.input_len}-frame windows, generator emits {w}-frame blocks"
            )
        if a.n_channels != D:
            raise ConfigurationError("attacker/generator channel mismatch")
        for p in a.net.parameters():
            p.requires_grad_(False)
    if hato_cfg is None:
        hato_cfg = hato_mod.HatoConfig(w=w)
    if hato_cfg.w != w:
        raise ConfigurationError(
            f"offset sweep width {hato_cfg.w} must equal the generation block length {w}"
        )

    report = TrainReport(epochs_run=0)
    if eval_pairs:
        report.asr_before = _quick_asr(attackers[0], g, eval_pairs)

    dtype = g.dtype
    hist = torch.as_tensor(np.stack([p.history for p in pairs]), dtype=dtype)
    fut = torch.as_tensor(np.stack([p.future for p in pairs]), dtype=dtype)
    prev_idx = _predecessor_index(pairs, T_out)
    has_prev = torch.as_tensor(prev_idx >= 0)
    prev_hist = hist[np.maximum(prev_idx, 0)]
    # Two-block clean span: the block just deployed, then the one being formed.
    span = torch.cat([hist[:, T_in - w:, :], fut], dim=1)

    # Channel stats for the encoder's input standardization.
    flat = hist.reshape(-1, D)
    g.net.set_input_stats(flat.mean(dim=0), flat.std(dim=0, unbiased=False))

    torch.manual_seed(cfg.seed)
    opt = torch.optim.Adam(g.net.parameters(), lr=cfg.lr)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=cfg.lr_halving_period, gamma=0.5)
    eps_t = g.net.eps
    n = len(pairs)
    n_batches = max(1, math.ceil(n / cfg.batch_size))

    g.net.train()
    for epoch in range(cfg.epochs):
        e_tot = e_adv = e_hato = e_st = 0.0
        for b in range(n_batches):
            sl = slice(b * cfg.batch_size, min(n, (b + 1) * cfg.batch_size))
            h_b, f_b, span_b = hist[sl], fut[sl], span[sl]
            with torch.no_grad():
                d_prev = g.net(prev_hist[sl])
                d_prev = d_prev * has_prev[sl].to(dtype).view(-1, 1, 1)
            delta = g.net(h_b)
            adv = delta.new_zeros(())
            hato = delta.new_zeros(())
            st = delta.pow(2).mean()
            total = delta.new_zeros(())
            for a in attackers:
                y_t = misleading_targets(a, f_b)
                logits = a.net((f_b + delta).to(a.dtype))
                a_adv = torch.nn.functional.cross_entropy(logits, y_t)
                if use_hato:
                    a_hato = hato_mod.hato_loss(a, span_b, d_prev, delta, y_t, hato_cfg)
                else:
                    a_hato = delta.new_zeros(())
                total = total + a_adv + cfg.lambda1 * a_hato + cfg.lambda2 * st
                adv = adv + a_adv
                hato = hato + a_hato
            if not torch.isfinite(total):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} batch {b}: "
                    f"adv={float(adv.detach())} hato={float(hato.detach())} "
                    f"smooth={float(st.detach())}"
                )
            opt.zero_grad()
            total.backward()
            if cfg.grad_clip:
                torch.nn.utils.clip_grad_norm_(g.net.parameters(), cfg.grad_clip)
            opt.step()
            k = sl.stop - sl.start
            e_tot += float(total.detach()) * k
            e_adv += float(adv.detach()) * k
            e_hato += float(hato.detach()) * k
            e_st += float(st.detach()) * k
        report.loss_total.append(e_tot / n)
        report.loss_adv.append(e_adv / n)
        report.loss_hato.append(e_hato / n)
        report.loss_smooth.append(e_st / n)
        report.lr_schedule.append(opt.param_groups[0]["lr"])
        sched.step()
        report.epochs_run = epoch + 1
        with torch.no_grad():
            probe = g.net(hist[: min(64, n)])
            if (probe.abs() > eps_t).any():
                raise TrainingError(f"perturbation escaped its budget at epoch {epoch}")

    g.net.eval()
    g.train_log = {
        "loss_total": report.loss_total,
        "loss_adv": report.loss_adv,
        "loss_hato": report.loss_hato,
        "loss_smooth": report.loss_smooth,
        "use_hato": use_hato,
        "n_attackers": len(attackers),
    }
    if eval_pairs:
        report.asr_after = _quick_asr(attackers[0], g, eval_pairs)
    return report
