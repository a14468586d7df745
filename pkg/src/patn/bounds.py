"""Per-channel perturbation budgets and box enforcement.

The budget for channel d is the smaller of a dataset-statistics bound
(5% of the channel's absolute mean and of its standard deviation) and the
channel's natural noise floor measured on device-at-rest recordings.
Budgets that would vanish on degenerate channels are floored so the
generator's output map stays well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SensorSequence
from .errors import ConfigurationError, StatisticsError

# Floor, in channel units, applied wherever a statistic vanishes.
EPSILON_FLOOR = 1e-4
_STAT_FRACTION = 0.05


@dataclass(frozen=True)
class EpsilonBounds:
    """Positive per-channel budgets plus the statistics they came from."""

    eps: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=np.float64)
        if eps.ndim != 1 or not np.all(eps > 0):
            raise ConfigurationError("eps must be a 1-D vector of positive budgets")
        object.__setattr__(self, "eps", eps)

    @property
    def n_channels(self) -> int:
        return self.eps.shape[0]


def epsilon_from_stats(mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Dataset-statistics budget: elementwise min of 5% |mean| and 5% std.

    The absolute value on the mean keeps channels with a negative resting
    value (the gravity axis) from producing a negative budget. Vanishing
    results are floored at :data:`EPSILON_FLOOR`.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if mu.shape != sigma.shape:
        raise ConfigurationError(f"mu shape {mu.shape} != sigma shape {sigma.shape}")
    if np.any(sigma < 0):
        raise StatisticsError("negative standard deviation")
    eps = np.minimum(_STAT_FRACTION * np.abs(mu), _STAT_FRACTION * sigma)
    return np.maximum(eps, EPSILON_FLOOR)


def measure_natural_floor(static_seqs: list[SensorSequence]) -> np.ndarray:
    """Per-channel standard deviation of device-at-rest recordings.

    Input sequences must have been recorded (or synthesized) with the
    device stationary; their spread is what a perturbation can hide in.
    """
    if not static_seqs:
        raise StatisticsError("no static recordings given")
    stacked = np.concatenate([s.values for s in static_seqs], axis=0)
    if stacked.shape[0] < 2:
        raise StatisticsError("need at least 2 static frames")
    return np.maximum(stacked.std(axis=0), EPSILON_FLOOR)


def final_epsilon(eps_data: np.ndarray, eps_natural: np.ndarray) -> EpsilonBounds:
    """Combine the statistics bound and the natural floor (elementwise min)."""
    eps_data = np.asarray(eps_data, dtype=np.float64)
    eps_natural = np.asarray(eps_natural, dtype=np.float64)
    if eps_data.shape != eps_natural.shape:
        raise ConfigurationError(
            f"length mismatch: {eps_data.shape} vs {eps_natural.shape}"
        )
    eps = np.minimum(eps_data, eps_natural)
    return EpsilonBounds(
        eps=eps,
        provenance={"eps_data": eps_data.copy(), "eps_natural": eps_natural.copy()},
    )


def bounds_from_dataset(
    seqs: list[SensorSequence], static_seqs: list[SensorSequence]
) -> EpsilonBounds:
    """Derive the full budget from framed training data and static recordings."""
    from .data import compute_channel_stats

    mu, sigma = compute_channel_stats(seqs)
    eps_data = epsilon_from_stats(mu, sigma)
    eps_natural = measure_natural_floor(static_seqs)
    result = final_epsilon(eps_data, eps_natural)
    result.provenance.update({"mu": mu, "sigma": sigma})
    return result


def project_linf(delta: np.ndarray, bounds: EpsilonBounds) -> np.ndarray:
    """Clamp every entry of a ... x D perturbation into its channel's box.

    Idempotent; the generator's squashed output already satisfies the box,
    so in the normal pipeline this is a no-op safety net.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape[-1] != bounds.n_channels:
        raise ConfigurationError(
            f"last axis {delta.shape[-1]} != {bounds.n_channels} channels"
        )
    return np.clip(delta, -bounds.eps, bounds.eps)


def serialize_bounds(bounds: EpsilonBounds, channel_names) -> list[str]:
    """One line per channel (name, eps, mu, sigma, eps_natural) for manifests."""
    prov = bounds.provenance
    mu = prov.get("mu", np.full(bounds.n_channels, np.nan))
    sigma = prov.get("sigma", np.full(bounds.n_channels, np.nan))
    nat = prov.get("eps_natural", np.full(bounds.n_channels, np.nan))
    return [
        f"{name} eps={bounds.eps[d]:.9g} mu={mu[d]:.9g} "
        f"sigma={sigma[d]:.9g} eps_natural={nat[d]:.9g}"
        for d, name in enumerate(channel_names)
    ]
