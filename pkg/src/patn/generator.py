"""Future-directed perturbation generator.

An LSTM encoder condenses the last ``T_in`` historical frames into its
final hidden and cell state; an LSTM decoder then rolls forward
autoregressively for ``T_out`` steps, each step emitting one bounded
perturbation vector. The decoder feeds back its own previous output in
budget-normalized form (zero vector at the first step, since no ground
truth exists to teach-force against).

The per-channel budget is enforced architecturally: the affine decoder
output is squashed through tanh into (-1, 1) and scaled by the budget, so
the box constraint holds for any weights, trained or not, rather than as
a training outcome. Hard clamping would satisfy the same box but kills
gradients at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .bounds import EpsilonBounds
from .errors import ConfigurationError, ShapeError


@dataclass(frozen=True)
class PatnConfig:
    """Generator dimensions plus the budget its outputs must satisfy."""

    bounds: EpsilonBounds
    T_in: int = 30
    T_out: int = 10
    D: int = 6
    H: int = 64

    def __post_init__(self):
        if not (self.T_in >= self.T_out >= 1):
            raise ConfigurationError(
                f"need T_in >= T_out >= 1, got T_in={self.T_in} T_out={self.T_out}"
            )
        if self.H < 8:
            raise ConfigurationError(f"hidden width must be >= 8, got {self.H}")
        if self.bounds.n_channels != self.D:
            raise ConfigurationError(
                f"bounds cover {self.bounds.n_channels} channels, config says D={self.D}"
            )


@dataclass(frozen=True)
class PerturbationWindow:
    """A T_out x D perturbation block valid for frames [t_start, t_start+T_out)."""

    delta: np.ndarray
    t_start: int


def _f32_floor(eps: np.ndarray) -> np.ndarray:
    """Round budgets toward zero when narrowing to f32.

    The squash-and-scale output satisfies |delta| <= eps in the arithmetic
    dtype; rounding the stored budget down keeps that inequality valid
    against the original float64 budget as well.
    """
    e32 = eps.astype(np.float32)
    too_big = e32.astype(np.float64) > eps
    e32[too_big] = np.nextafter(e32[too_big], np.float32(0.0))
    return e32


class PerturbationNet(nn.Module):
    """Encoder-decoder core; batch-size agnostic, dtype follows its weights."""

    def __init__(self, cfg: PatnConfig):
        super().__init__()
        self.T_in, self.T_out, self.D, self.H = cfg.T_in, cfg.T_out, cfg.D, cfg.H
        self.encoder = nn.LSTM(cfg.D, cfg.H, batch_first=True)
        self.decoder = nn.LSTMCell(cfg.D, cfg.H)
        self.out = nn.Linear(cfg.H, cfg.D)
        # Start the squash input near zero: the output layer otherwise lands
        # deep in tanh saturation within a few epochs of adversarial
        # training, where float32 rounds the gradient to exactly 0.
        with torch.no_grad():
            self.out.weight.mul_(0.1)
            self.out.bias.zero_()
        self.register_buffer("eps", torch.from_numpy(_f32_floor(cfg.bounds.eps)))
        # Input standardization; identity until the trainer installs stats.
        self.register_buffer("in_mu", torch.zeros(cfg.D))
        self.register_buffer("in_sigma", torch.ones(cfg.D))

    def set_input_stats(self, mu, sigma):
        dtype = self.in_mu.dtype
        self.in_mu.copy_(torch.as_tensor(mu, dtype=dtype))
        self.in_sigma.copy_(torch.as_tensor(sigma, dtype=dtype).clamp_min(1e-6))

    def forward(self, history: torch.Tensor) -> torch.Tensor:
        z = (history - self.in_mu) / self.in_sigma
        _, (hx, cx) = self.encoder(z)
        hx, cx = hx[0], cx[0]
        fed_back = torch.zeros(history.shape[0], self.D, dtype=history.dtype,
                               device=history.device)
        deltas = []
        for _ in range(self.T_out):
            hx, cx = self.decoder(fed_back, (hx, cx))
            fed_back = torch.tanh(self.out(hx))
            deltas.append(fed_back * self.eps)
        return torch.stack(deltas, dim=1)  # (B, T_out, D)


@dataclass
class GeneratorHandle:
    """An initialized (possibly trained) generator plus its configuration."""

    config: PatnConfig
    seed: int
    net: PerturbationNet
    train_log: dict = field(default_factory=dict)

    @property
    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.net.parameters())

    @property
    def approx_serialized_bytes(self) -> int:
        # f32 tensors plus buffers plus a small header; the exporter's file
        # size is the authoritative number.
        n_buf = sum(b.numel() for b in self.net.buffers())
        return 4 * (self.n_parameters + n_buf) + 512

    @property
    def dtype(self):
        return next(self.net.parameters()).dtype


def init_patn(cfg: PatnConfig, seed: int, dtype: str = "float32") -> GeneratorHandle:
    """Deterministically initialize a generator for the given config."""
    torch.manual_seed(seed)
    net = PerturbationNet(cfg)
    net = net.to(torch.float64 if dtype == "float64" else torch.float32)
    net.eval()
    return GeneratorHandle(config=cfg, seed=seed, net=net)


def generate(g: GeneratorHandle, history: np.ndarray) -> np.ndarray:
    """Perturbation blocks for a batch of histories: (B, T_in, D) -> (B, T_out, D).

    Every entry satisfies |delta[:, i, d]| <= eps_d exactly, untrained or
    trained; see the module notes on the squashed output map.
    """
    history = np.asarray(history)
    squeeze = history.ndim == 2
    if squeeze:
        history = history[None]
    cfg = g.config
    if history.ndim != 3 or history.shape[1] != cfg.T_in or history.shape[2] != cfg.D:
        raise ShapeError(
            f"expected (batch, {cfg.T_in}, {cfg.D}) history, got {history.shape}"
        )
    g.net.eval()
    with torch.no_grad():
        delta = g.net(torch.as_tensor(history, dtype=g.dtype)).numpy()
    delta = delta.astype(np.float64)
    return delta[0] if squeeze else delta


def apply(x_raw: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Adversarial block: clean future frames plus their perturbation."""
    return np.asarray(x_raw) + np.asarray(delta)
