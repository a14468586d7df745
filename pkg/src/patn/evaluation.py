"""Privacy, fidelity, and utility metrics plus deployment harnesses.

Metric conventions, fixed so independent re-implementations agree to
numerical precision:

- Attack success rate: among windows the attacker classified correctly on
  clean input, the percentage whose prediction changes under perturbation.
- Equal error rate: scores are swept as decision thresholds (score >=
  threshold means positive). FAR falls and FRR rises with the threshold;
  the crossing of FAR - FRR is located and both rates are interpolated
  linearly between the bracketing thresholds, where they coincide.
- AUC: rank statistic (probability a positive outscores a negative, ties
  counted half), via average ranks.
- F1: at argmax predictions; class 1 is the positive class when binary,
  macro-averaged one-vs-rest otherwise.

Fidelity is computed per 10-second segment per channel at the raw sample
rate, then averaged over segments and channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from numba import njit
from scipy.signal import find_peaks

from .bounds import EpsilonBounds
from .errors import ConfigurationError, MetricError
from .generator import GeneratorHandle, generate
from .models import ClassifierHandle, label_codes, logits


@dataclass(frozen=True)
class PrivacyReport:
    asr: float
    eer: float
    auc: float
    f1: float
    n_eval: int


@dataclass(frozen=True)
class FidelityReport:
    dtw: float
    l2: float
    lf: float
    rmse: float
    segment_sec: float


@dataclass(frozen=True)
class UtilityReport:
    step_count_clean: int
    step_count_adv: int
    step_rel_err: float
    har_eer_clean: float
    har_eer_adv: float
    har_auc_clean: float
    har_auc_adv: float


# ---------------------------------------------------------------------------
# Core privacy metrics
# ---------------------------------------------------------------------------


def attack_success_rate(clean_pred: np.ndarray, adv_pred: np.ndarray,
                        labels: np.ndarray) -> float:
    """Percentage of originally-correct predictions that flip."""
    clean_pred = np.asarray(clean_pred)
    adv_pred = np.asarray(adv_pred)
    labels = np.asarray(labels)
    correct = clean_pred == labels
    if not correct.any():
        raise MetricError("attacker got nothing right on clean data; ASR undefined")
    return float((adv_pred[correct] != clean_pred[correct]).mean() * 100.0)


def equal_error_rate(scores: np.ndarray, labels: np.ndarray) -> float:
    """EER of a binary score; see module notes for the exact convention."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("EER needs both classes present")
    # Candidate thresholds: every unique score, plus one above the maximum
    # (nothing classified positive).
    ths = np.unique(scores)
    ths = np.append(ths, ths[-1] + 1.0)
    far = np.empty(len(ths))
    frr = np.empty(len(ths))
    for i, th in enumerate(ths):
        pred = scores >= th
        far[i] = (pred & ~pos).sum() / n_neg
        frr[i] = (~pred & pos).sum() / n_pos
    d = far - frr  # non-increasing, from >=0 to -1
    idx = int(np.argmax(d <= 0))
    if d[idx] == 0 or idx == 0:
        return float((far[idx] + frr[idx]) / 2.0)
    t = d[idx - 1] / (d[idx - 1] - d[idx])
    return float(far[idx - 1] + t * (far[idx] - far[idx - 1]))


def rank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """P(score_pos > score_neg) with ties counted half, via average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def f1_score(pred: np.ndarray, labels: np.ndarray, n_classes: int) -> float:
    """F1 of class 1 when binary, macro-averaged otherwise."""
    pred = np.asarray(pred)
    labels = np.asarray(labels)

    def one(c):
        tp = int(((pred == c) & (labels == c)).sum())
        fp = int(((pred == c) & (labels != c)).sum())
        fn = int(((pred != c) & (labels == c)).sum())
        denom = 2 * tp + fp + fn
        return 2 * tp / denom if denom else 0.0

    if n_classes == 2:
        return float(one(1))
    return float(np.mean([one(c) for c in range(n_classes)]))


def _binary_scores(h: ClassifierHandle, windows: np.ndarray) -> np.ndarray:
    probs = torch.softmax(torch.as_tensor(logits(h, windows)), dim=1).numpy()
    return probs[:, 1]


def evaluate_privacy(attacker: ClassifierHandle, clean_windows: np.ndarray,
                     adv_windows: np.ndarray, labels: np.ndarray) -> PrivacyReport:
    """Full privacy panel of one attacker over paired clean/perturbed windows."""
    y = label_codes(attacker, labels)
    clean_pred = logits(attacker, clean_windows).argmax(axis=1)
    adv_pred = logits(attacker, adv_windows).argmax(axis=1)
    asr = attack_success_rate(clean_pred, adv_pred, y)
    if attacker.n_classes == 2:
        s = _binary_scores(attacker, adv_windows)
        eer = equal_error_rate(s, y)
        auc = rank_auc(s, y)
    else:
        probs = torch.softmax(torch.as_tensor(logits(attacker, adv_windows)), 1).numpy()
        eers, aucs = [], []
        for c in range(attacker.n_classes):
            eers.append(equal_error_rate(probs[:, c], (y == c).astype(int)))
            aucs.append(rank_auc(probs[:, c], (y == c).astype(int)))
        eer, auc = float(np.mean(eers)), float(np.mean(aucs))
    f1 = f1_score(adv_pred, y, attacker.n_classes)
    return PrivacyReport(asr=asr, eer=eer, auc=auc, f1=f1, n_eval=len(y))


# ---------------------------------------------------------------------------
# Fidelity
# ---------------------------------------------------------------------------


@njit(cache=True)
def _dtw_1d(a, b):
    n, m = len(a), len(b)
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            c = abs(a[i - 1] - b[j - 1])
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = c + best
    return acc[n, m]


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Unconstrained dynamic-time-warping distance, absolute cost."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ConfigurationError("dtw_distance compares single channels")
    return float(_dtw_1d(a, b))


def _lf_l2(a: np.ndarray, b: np.ndarray, rate: float, cutoff_hz: float) -> float:
    fa = np.abs(np.fft.rfft(a))
    fb = np.abs(np.fft.rfft(b))
    freqs = np.fft.rfftfreq(len(a), 1.0 / rate)
    mask = freqs < cutoff_hz
    return float(np.linalg.norm(fa[mask] - fb[mask]))


def evaluate_fidelity(clean: np.ndarray, adv: np.ndarray, rate: float,
                      segment_sec: float = 10.0,
                      lf_cutoff_hz: float = 2.0) -> FidelityReport:
    """Segment-and-channel averaged distortion between two equal-shape streams."""
    clean = np.asarray(clean, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    if clean.shape != adv.shape or clean.ndim != 2:
        raise ConfigurationError(
            f"need matching (n, D) streams, got {clean.shape} vs {adv.shape}"
        )
    seg = int(round(segment_sec * rate))
    n_seg = clean.shape[0] // seg
    if n_seg == 0:
        raise ConfigurationError(
            f"stream of {clean.shape[0]} samples is shorter than one "
            f"{segment_sec}-s segment"
        )
    dtws, l2s, lfs, ses = [], [], [], []
    for s in range(n_seg):
        block = slice(s * seg, (s + 1) * seg)
        for d in range(clean.shape[1]):
            a, b = clean[block, d], adv[block, d]
            dtws.append(dtw_distance(a, b))
            l2s.append(float(np.linalg.norm(a - b)))
            lfs.append(_lf_l2(a, b, rate, lf_cutoff_hz))
            ses.append(float(np.mean((a - b) ** 2)))
    return FidelityReport(
        dtw=float(np.mean(dtws)),
        l2=float(np.mean(l2s)),
        lf=float(np.mean(lfs)),
        rmse=float(np.sqrt(np.mean(ses))),
        segment_sec=segment_sec,
    )


# ---------------------------------------------------------------------------
# Utility
# ---------------------------------------------------------------------------


def step_count(values: np.ndarray, rate: float, smooth_sec: float = 0.2,
               height_frac: float = 0.5, refractory_sec: float = 0.3) -> int:
    """Peak-counting step detector on the accelerometer magnitude.

    Magnitude of the first three channels, mean-removed (gravity),
    moving-average smoothed, peaks above height_frac of the smoothed
    signal's std with a refractory gap.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] < 3:
        raise ConfigurationError("step counting needs at least 3 accelerometer channels")
    mag = np.linalg.norm(values[:, :3], axis=1)
    mag = mag - mag.mean()
    k = max(1, int(round(smooth_sec * rate)))
    smooth = np.convolve(mag, np.ones(k) / k, mode="same")
    height = height_frac * smooth.std()
    distance = max(1, int(round(refractory_sec * rate)))
    peaks, _ = find_peaks(smooth, height=height, distance=distance)
    return int(len(peaks))


def har_panel(har: ClassifierHandle, windows: np.ndarray,
              labels: np.ndarray) -> tuple[float, float]:
    """(macro EER, macro AUC) of the activity classifier, one-vs-rest."""
    y = label_codes(har, labels)
    probs = torch.softmax(torch.as_tensor(logits(har, windows)), dim=1).numpy()
    eers, aucs = [], []
    for c in range(har.n_classes):
        yc = (y == c).astype(int)
        if yc.sum() == 0 or yc.sum() == len(yc):
            continue
        eers.append(equal_error_rate(probs[:, c], yc))
        aucs.append(rank_auc(probs[:, c], yc))
    if not eers:
        raise MetricError("no class present in both polarities")
    return float(np.mean(eers)), float(np.mean(aucs))


def evaluate_utility(har: ClassifierHandle, clean_raw: np.ndarray,
                     adv_raw: np.ndarray, rate: float,
                     clean_windows: np.ndarray, adv_windows: np.ndarray,
                     labels: np.ndarray) -> UtilityReport:
    sc = step_count(clean_raw, rate)
    sa = step_count(adv_raw, rate)
    if sc == 0:
        raise MetricError("no steps detected on clean data; relative error undefined")
    eer_c, auc_c = har_panel(har, clean_windows, labels)
    eer_a, auc_a = har_panel(har, adv_windows, labels)
    return UtilityReport(
        step_count_clean=sc,
        step_count_adv=sa,
        step_rel_err=abs(sa - sc) / sc,
        har_eer_clean=eer_c,
        har_eer_adv=eer_a,
        har_auc_clean=auc_c,
        har_auc_adv=auc_a,
    )


# ---------------------------------------------------------------------------
# Deployment over framed sequences
# ---------------------------------------------------------------------------


def deploy_generator(g: GeneratorHandle, frames: np.ndarray) -> np.ndarray:
    """Causal blockwise perturbation of one framed sequence.

    Zero during the first T_in warmup frames; from there on, each T_out
    block is produced from the clean frames immediately preceding it.
    One history per call keeps this numerically identical to the
    frame-at-a-time simulator.
    """
    frames = np.asarray(frames, dtype=np.float64)
    T_in, T_out = g.config.T_in, g.config.T_out
    delta = np.zeros_like(frames)
    t = T_in
    while t < frames.shape[0]:
        block = generate(g, frames[t - T_in:t])
        take = min(T_out, frames.shape[0] - t)
        delta[t:t + take] = block[:take]
        t += T_out
    return delta


def deploy_baseline(kind: str, frames: np.ndarray, bounds: EpsilonBounds,
                    attacker: ClassifierHandle | None = None,
                    uap_pattern: np.ndarray | None = None,
                    T_in: int = 30, T_out: int = 10, seed: int = 0,
                    pgd_steps: int = 5) -> np.ndarray:
    """Blockwise deployment of a comparison attack, same warmup and layout."""
    from . import baselines as bl

    if kind not in ("dp", "uap", "fgsm", "pgd"):
        raise ConfigurationError(f"unknown baseline kind: {kind!r}")
    frames = np.asarray(frames, dtype=np.float64)
    delta = np.zeros_like(frames)
    if kind == "dp":
        noise = bl.dp_perturb(frames[T_in:], bounds, seed=seed)
        delta[T_in:] = noise
        return delta
    t = T_in
    while t < frames.shape[0]:
        take = min(T_out, frames.shape[0] - t)
        if kind == "uap":
            if uap_pattern is None:
                raise ConfigurationError("uap deployment needs a fitted pattern")
            delta[t:t + take] = uap_pattern[:take]
        elif kind in ("fgsm", "pgd"):
            if attacker is None:
                raise ConfigurationError(f"{kind} deployment needs an attacker")
            hist = frames[t - T_in:t][None]
            if kind == "fgsm":
                block = bl.fgsm_history(attacker, hist, bounds)[0]
            else:
                block = bl.pgd_history(attacker, hist, bounds, steps=pgd_steps)[0]
            delta[t:t + take] = block[:take]
        else:
            raise ConfigurationError(f"unknown baseline kind: {kind!r}")
        t += T_out
    return delta


def stream_windows(frames: np.ndarray, delta: np.ndarray, w: int,
                   t0: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """(clean, perturbed) w-frame windows at t0, t0+stride, ... fully inside."""
    frames = np.asarray(frames)
    delta = np.asarray(delta)
    starts = list(range(t0, frames.shape[0] - w + 1, stride))
    if not starts:
        empty = np.empty((0, w, frames.shape[1]))
        return empty, empty.copy()
    clean = np.stack([frames[s:s + w] for s in starts])
    adv = clean + np.stack([delta[s:s + w] for s in starts])
    return clean, adv


def misalignment_eval(attacker: ClassifierHandle, deployed: list[tuple[np.ndarray, np.ndarray, str]],
                      w: int, T_in: int, tau: int) -> PrivacyReport:
    """Privacy panel with eavesdropper windows offset tau frames from block
    starts; tau=0 is the aligned view. `deployed` holds (frames, delta, label)
    per sequence."""
    cw, aw, labs = [], [], []
    for frames, delta, label in deployed:
        c, a = stream_windows(frames, delta, w, T_in + tau, w)
        cw.append(c)
        aw.append(a)
        labs.extend([label] * len(c))
    clean = np.concatenate(cw)
    adv = np.concatenate(aw)
    return evaluate_privacy(attacker, clean, adv, np.array(labs))


def transfer_eval(attackers: dict[str, ClassifierHandle],
                  deployed: list[tuple[np.ndarray, np.ndarray, str]],
                  T_in: int) -> dict[str, dict[str, float]]:
    """Raw/perturbed EER and ASR for eavesdroppers the generator never saw.

    Each attacker samples its own input length off the same deployed
    streams. Keys are returned sorted for stable reporting.
    """
    out = {}
    for name in sorted(attackers):
        a = attackers[name]
        cw, aw, labs = [], [], []
        for frames, delta, label in deployed:
            c, x = stream_windows(frames, delta, a.input_len, T_in, a.input_len)
            cw.append(c)
            aw.append(x)
            labs.extend([label] * len(c))
        clean = np.concatenate(cw)
        adv = np.concatenate(aw)
        labs = np.array(labs)
        y = label_codes(a, labs)
        raw = evaluate_privacy(a, clean, clean, labs)
        per = evaluate_privacy(a, clean, adv, labs)
        out[name] = {
            "raw_eer": raw.eer,
            "adv_eer": per.eer,
            "asr": per.asr,
            "raw_acc": float((logits(a, clean).argmax(1) == y).mean()),
        }
    return out
