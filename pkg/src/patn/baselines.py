"""Comparison perturbations sharing the generator's budget.

Four families, all confined to the same per-channel box so differences in
privacy gain come from *how* the budget is spent, not how much:

- calibrated Laplace noise (content-free, randomized)
- a universal additive pattern fit offline (content-free, optimized)
- one-step gradient sign on the most recent window (content-aware but
  backward-looking: the pattern is computed on history and pasted onto
  frames it was not optimized for)
- its iterated projected variant

The gradient attacks steer the attacker's output toward a misleading
label, i.e. they descend the cross-entropy toward that target.
"""

from __future__ import annotations

import numpy as np
import torch

from .bounds import EpsilonBounds, project_linf
from .errors import ConfigurationError
from .models import ClassifierHandle
from .trainer import misleading_targets


def dp_perturb(x: np.ndarray, bounds: EpsilonBounds, seed: int) -> np.ndarray:
    """Laplace noise, scale eps_d/3 per channel, clipped into the box.

    The scale leaves most draws inside the box so clipping rarely
    distorts the distribution, while the box keeps worst-case draws
    within the imperceptibility budget.
    """
    rng = np.random.default_rng(seed)
    noise = rng.laplace(0.0, bounds.eps / 3.0, size=np.asarray(x).shape)
    return project_linf(noise, bounds)


def fit_uap(attacker: ClassifierHandle, windows: np.ndarray,
            bounds: EpsilonBounds, epochs: int = 10, step_frac: float = 0.25,
            seed: int = 0) -> np.ndarray:
    """Fit one (w, D) additive pattern for every window.

    Iterative refinement: per pass, for each training window whose
    perturbed prediction is still the clean prediction, take a signed
    gradient step toward that example's misleading label and re-project.
    epochs=0 returns the zero pattern.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise ConfigurationError(f"expected (n, w, D) windows, got {windows.shape}")
    delta = np.zeros(windows.shape[1:], dtype=np.float64)
    if epochs == 0:
        return delta
    rng = np.random.default_rng(seed)
    x_clean = torch.as_tensor(windows, dtype=attacker.dtype)
    with torch.no_grad():
        clean_pred = attacker.net(x_clean).argmax(dim=1)
    y_target = misleading_targets(attacker, x_clean)
    step = step_frac * bounds.eps
    for _ in range(epochs):
        order = rng.permutation(len(windows))
        for i in order:
            xi = x_clean[i:i + 1] + torch.as_tensor(delta, dtype=attacker.dtype)
            with torch.no_grad():
                if attacker.net(xi).argmax(dim=1).item() != int(clean_pred[i]):
                    continue
            xi = xi.detach().requires_grad_(True)
            loss = torch.nn.functional.cross_entropy(
                attacker.net(xi), y_target[i:i + 1])
            grad = torch.autograd.grad(loss, xi)[0][0].numpy()
            delta = project_linf(delta - step * np.sign(grad), bounds)
    return delta


def _history_window(attacker: ClassifierHandle, history: np.ndarray) -> np.ndarray:
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 3:
        raise ConfigurationError(f"expected (n, T_in, D) histories, got {history.shape}")
    w = attacker.input_len
    if history.shape[1] < w:
        raise ConfigurationError(
            f"history of {history.shape[1]} frames cannot fill a {w}-frame window"
        )
    return history[:, -w:, :]


def fgsm_history(attacker: ClassifierHandle, history: np.ndarray,
                 bounds: EpsilonBounds) -> np.ndarray:
    """One signed gradient step computed on the latest history window.

    Returns (n, w, D) perturbations meant for the *next* w frames; the
    temporal mismatch with the frames they land on is inherent to any
    real-time attack without a forecaster.
    """
    return pgd_history(attacker, history, bounds, steps=1, step_frac=1.0)


def pgd_history(attacker: ClassifierHandle, history: np.ndarray,
                bounds: EpsilonBounds, steps: int = 5,
                step_frac: float = 0.4) -> np.ndarray:
    """Projected iterated variant of :func:`fgsm_history`."""
    if steps < 1:
        raise ConfigurationError(f"need at least one step, got {steps}")
    hw = _history_window(attacker, history)
    x0 = torch.as_tensor(hw, dtype=attacker.dtype)
    y_target = misleading_targets(attacker, x0)
    delta = np.zeros_like(hw)
    for _ in range(steps):
        xi = (x0 + torch.as_tensor(delta, dtype=attacker.dtype)).requires_grad_(True)
        loss = torch.nn.functional.cross_entropy(attacker.net(xi), y_target,
                                                 reduction="sum")
        grad = torch.autograd.grad(loss, xi)[0].numpy()
        delta = project_linf(delta - step_frac * bounds.eps * np.sign(grad), bounds)
    return delta
