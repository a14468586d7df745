"""History-aware temporal-offset robustness loss.

A deployed perturbation stream is a concatenation of generation blocks. An
eavesdropper sliding a window over that stream will usually straddle two
adjacent blocks rather than align with either, so training only on the
aligned view leaves every other phase unprotected. This module merges the
previous block (frozen) with the current one (live), slides attacker-sized
windows across the seam at a fixed stride, scores each window against the
misleading target, and averages the hardest few: a worst-phases objective
rather than an average-phase one.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import ConfigurationError
from .models import ClassifierHandle


@dataclass(frozen=True)
class HatoConfig:
    """Window geometry for the offset sweep.

    w: attacker input length in frames (also one block length).
    s: offset stride in frames between successive windows.
    k: number of worst windows averaged into the loss.
    """

    w: int = 10
    s: int = 2
    k: int = 2

    def __post_init__(self):
        if self.w < 1 or self.s < 1 or self.k < 1:
            raise ConfigurationError(f"w, s, k must all be >= 1, got {self}")
        n = len(enumerate_offsets(self.w, self.s, 2 * self.w))
        if self.k > n:
            raise ConfigurationError(
                f"k={self.k} exceeds the {n} windows a (w={self.w}, s={self.s}) sweep yields"
            )


def merge_blocks(delta_prev: torch.Tensor, delta_cur: torch.Tensor) -> torch.Tensor:
    """Two adjacent blocks as one (B, 2w, D) stream segment.

    delta_prev carries no gradient: it was already emitted and cannot be
    revised, so only the current block should feel this loss.
    """
    return torch.cat([delta_prev.detach(), delta_cur], dim=1)


def enumerate_offsets(w: int, s: int, total: int) -> list[int]:
    """Start indices {0, s, 2s, ...} of every full w-window inside total frames."""
    if total < w:
        return []
    return list(range(0, total - w + 1, s))


def hato_loss(attacker: ClassifierHandle, x_clean: torch.Tensor,
              delta_prev: torch.Tensor, delta_cur: torch.Tensor,
              y_target: torch.Tensor, cfg: HatoConfig) -> torch.Tensor:
    """Mean cross-entropy toward the target over the k hardest offsets.

    x_clean: (B, 2w, D) clean frames covering the two-block span.
    delta_prev/delta_cur: (B, w, D) perturbation blocks for its halves.
    y_target: (B,) misleading labels the attacker should be pushed toward.
    """
    w = cfg.w
    if x_clean.shape[1] != 2 * w:
        raise ConfigurationError(
            f"clean span must cover 2w={2 * w} frames, got {x_clean.shape[1]}"
        )
    if delta_prev.shape[1] != w or delta_cur.shape[1] != w:
        raise ConfigurationError("each perturbation block must be w frames long")
    x_adv = x_clean + merge_blocks(delta_prev, delta_cur)
    offsets = enumerate_offsets(w, cfg.s, x_adv.shape[1])
    per_offset = []
    for t0 in offsets:
        window = x_adv[:, t0:t0 + w, :]
        logits = attacker.net(window.to(attacker.dtype))
        per_offset.append(torch.nn.functional.cross_entropy(
            logits, y_target, reduction="none"))
    losses = torch.stack(per_offset, dim=1)          # (B, n_offsets)
    worst = torch.topk(losses, k=cfg.k, dim=1).values
    return worst.mean()
