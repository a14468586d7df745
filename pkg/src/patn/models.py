"""Privacy-inference and activity classifiers with a uniform interface.

Eight small architectures share one contract: input ``(batch, T, D)``,
logits out, differentiable w.r.t. the input. Widths live in
:data:`ARCH_CONFIG` so every experiment's model set is reproducible from
one table. All convolutional variants are length-agnostic (same-padded
convolutions plus global average pooling), which the cross-input-length
studies rely on; the declared ``input_len`` is still enforced at call
time to catch windowing bugs.

Raw channel units (g, rad/s) differ by an order of magnitude, so every
network standardizes its input with per-channel statistics frozen at
training time; gradients taken w.r.t. the raw input pass through that
affine map, keeping attacks in physical units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .errors import (
    CapabilityError,
    ConfigurationError,
    ShapeError,
    TrainingError,
)

ARCH_CONFIG = {
    "cnn": dict(widths=(24, 48, 64), kernel=5),
    "fcn": dict(widths=(32, 64, 32), kernels=(7, 5, 3)),
    "resnet": dict(width=40, stages=2),
    "densenet": dict(growth=16, stages=2, layers_per_stage=2),
    "mobilenet": dict(widths=(24, 48, 64), kernel=5),
    "xception": dict(widths=(32, 64), kernel=5),
    "rnn": dict(hidden=48),
    "lstm": dict(hidden=64),
}

MIN_INPUT_LEN = 4


class _InputNorm(nn.Module):
    """Fixed per-channel standardization, set once from training data."""

    def __init__(self, n_channels):
        super().__init__()
        self.register_buffer("mu", torch.zeros(n_channels))
        self.register_buffer("sigma", torch.ones(n_channels))

    def set_stats(self, mu, sigma):
        dtype = self.mu.dtype
        self.mu.copy_(torch.as_tensor(mu, dtype=dtype))
        self.sigma.copy_(torch.as_tensor(sigma, dtype=dtype).clamp_min(1e-6))

    def forward(self, x):  # x: (B, T, D)
        return (x - self.mu) / self.sigma


def _conv(in_ch, out_ch, kernel, groups=1):
    return nn.Conv1d(in_ch, out_ch, kernel, padding="same", groups=groups)


class _ResBlock(nn.Module):
    def __init__(self, ch):
        super().__init__()
        self.c1 = _conv(ch, ch, 5)
        self.c2 = _conv(ch, ch, 3)

    def forward(self, x):
        return torch.relu(x + self.c2(torch.relu(self.c1(x))))


class _SepConv(nn.Module):
    """Depthwise + pointwise pair, the mobile/separable building block."""

    def __init__(self, in_ch, out_ch, kernel):
        super().__init__()
        self.depth = _conv(in_ch, in_ch, kernel, groups=in_ch)
        self.point = nn.Conv1d(in_ch, out_ch, 1)

    def forward(self, x):
        return torch.relu(self.point(torch.relu(self.depth(x))))


class _ConvNet(nn.Module):
    """Shared trunk: normalization, a conv stack, global pooling, linear head."""

    def __init__(self, body, head_in, n_channels, n_classes):
        super().__init__()
        self.norm = _InputNorm(n_channels)
        self.body = body
        self.head = nn.Linear(head_in, n_classes)

    def forward(self, x):  # (B, T, D)
        z = self.norm(x).transpose(1, 2)  # (B, D, T)
        z = self.body(z)
        return self.head(z.mean(dim=2))


class _RecurrentNet(nn.Module):
    def __init__(self, cell, hidden, n_channels, n_classes):
        super().__init__()
        self.norm = _InputNorm(n_channels)
        self.cell = cell
        self.head = nn.Linear(hidden, n_classes)

    def forward(self, x):
        out, _ = self.cell(self.norm(x))
        return self.head(out[:, -1])


def _build_net(arch: str, n_channels: int, n_classes: int) -> nn.Module:
    cfg = ARCH_CONFIG[arch]
    if arch == "cnn":
        w = cfg["widths"]
        body = nn.Sequential(
            _conv(n_channels, w[0], cfg["kernel"]), nn.ReLU(),
            _conv(w[0], w[1], cfg["kernel"]), nn.ReLU(),
            _conv(w[1], w[2], 3), nn.ReLU(),
        )
        return _ConvNet(body, w[2], n_channels, n_classes)
    if arch == "fcn":
        w, ks = cfg["widths"], cfg["kernels"]
        layers = []
        prev = n_channels
        for width, k in zip(w, ks):
            layers += [_conv(prev, width, k), nn.BatchNorm1d(width), nn.ReLU()]
            prev = width
        return _ConvNet(nn.Sequential(*layers), w[-1], n_channels, n_classes)
    if arch == "resnet":
        w = cfg["width"]
        body = nn.Sequential(
            _conv(n_channels, w, 7), nn.ReLU(),
            *[_ResBlock(w) for _ in range(cfg["stages"])],
        )
        return _ConvNet(body, w, n_channels, n_classes)
    if arch == "densenet":
        layers = []
        ch = cfg["growth"]
        layers += [_conv(n_channels, ch, 5), nn.ReLU()]
        body_layers = [nn.Sequential(*layers)]
        for _ in range(cfg["stages"] * cfg["layers_per_stage"]):
            body_layers.append(_DenseLayer(ch, cfg["growth"]))
            ch += cfg["growth"]
        return _ConvNet(nn.Sequential(*body_layers), ch, n_channels, n_classes)
    if arch == "mobilenet":
        w = cfg["widths"]
        body = nn.Sequential(
            _conv(n_channels, w[0], 3), nn.ReLU(),
            _SepConv(w[0], w[1], cfg["kernel"]),
            _SepConv(w[1], w[2], cfg["kernel"]),
        )
        return _ConvNet(body, w[2], n_channels, n_classes)
    if arch == "xception":
        w = cfg["widths"]
        body = nn.Sequential(
            _conv(n_channels, w[0], 3), nn.ReLU(),
            _XceptionBlock(w[0], cfg["kernel"]),
            _SepConv(w[0], w[1], cfg["kernel"]),
        )
        return _ConvNet(body, w[1], n_channels, n_classes)
    if arch == "rnn":
        h = cfg["hidden"]
        return _RecurrentNet(
            nn.RNN(n_channels, h, batch_first=True), h, n_channels, n_classes
        )
    if arch == "lstm":
        h = cfg["hidden"]
        return _RecurrentNet(
            nn.LSTM(n_channels, h, batch_first=True), h, n_channels, n_classes
        )
    raise ConfigurationError(f"unknown architecture {arch!r}")


class _DenseLayer(nn.Module):
    def __init__(self, in_ch, growth):
        super().__init__()
        self.conv = _conv(in_ch, growth, 3)

    def forward(self, x):
        return torch.cat([x, torch.relu(self.conv(x))], dim=1)


class _XceptionBlock(nn.Module):
    def __init__(self, ch, kernel):
        super().__init__()
        self.sep1 = _SepConv(ch, ch, kernel)
        self.sep2 = _SepConv(ch, ch, kernel)

    def forward(self, x):
        return torch.relu(x + self.sep2(self.sep1(x)))


@dataclass
class ClassifierHandle:
    """A trainable scoring model: logits, class scores, input gradients."""

    arch: str
    input_len: int
    n_channels: int
    n_classes: int
    seed: int
    net: nn.Module
    train_log: dict = field(default_factory=lambda: {"loss": [], "acc": [], "val_acc": []})
    differentiable: bool = True

    @property
    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.net.parameters())

    @property
    def dtype(self):
        return next(self.net.parameters()).dtype


@dataclass
class ScoreReport:
    """Per-example class probabilities plus argmax predictions and labels."""

    per_example_scores: np.ndarray
    predictions: np.ndarray
    labels: np.ndarray


def build_classifier(
    arch: str,
    input_len: int,
    n_channels: int,
    n_classes: int,
    seed: int,
    dtype: str = "float32",
) -> ClassifierHandle:
    """Deterministically initialize a classifier of the named architecture.

    ``dtype`` may be ``float64`` for numerically tight gradient checks.
    """
    if arch not in ARCH_CONFIG:
        raise ConfigurationError(f"unknown architecture {arch!r}")
    if input_len < MIN_INPUT_LEN:
        raise ConfigurationError(f"input_len must be >= {MIN_INPUT_LEN}, got {input_len}")
    if n_classes < 2:
        raise ConfigurationError("need at least 2 classes")
    torch.manual_seed(seed)
    net = _build_net(arch, n_channels, n_classes)
    net = net.to(torch.float64 if dtype == "float64" else torch.float32)
    net.eval()
    return ClassifierHandle(
        arch=arch,
        input_len=input_len,
        n_channels=n_channels,
        n_classes=n_classes,
        seed=seed,
        net=net,
    )


def _check_input(h: ClassifierHandle, x: np.ndarray) -> torch.Tensor:
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[1] != h.input_len or x.shape[2] != h.n_channels:
        raise ShapeError(
            f"expected (batch, {h.input_len}, {h.n_channels}), got {x.shape}"
        )
    return torch.as_tensor(x, dtype=h.dtype)


def logits(h: ClassifierHandle, x: np.ndarray) -> np.ndarray:
    """Raw class scores for a batch of windows; deterministic in eval mode."""
    x = np.asarray(x)
    if x.shape[0] == 0:
        return np.zeros((0, h.n_classes))
    t = _check_input(h, x)
    h.net.eval()
    with torch.no_grad():
        return h.net(t).numpy()


def scores(h: ClassifierHandle, x: np.ndarray, labels=None) -> ScoreReport:
    """Softmax class probabilities and argmax predictions."""
    z = logits(h, x)
    z = z - z.max(axis=1, keepdims=True) if len(z) else z
    p = np.exp(z)
    p = p / p.sum(axis=1, keepdims=True) if len(p) else p
    preds = p.argmax(axis=1) if len(p) else np.zeros(0, dtype=int)
    labels = np.asarray(labels) if labels is not None else np.full(len(p), -1)
    return ScoreReport(per_example_scores=p, predictions=preds, labels=labels)


def input_gradient(h: ClassifierHandle, x: np.ndarray, target) -> np.ndarray:
    """Gradient of the summed cross-entropy toward ``target`` w.r.t. ``x``.

    The sum (not mean) reduction keeps each row's gradient independent of
    the batch it rides in.
    """
    if not h.differentiable:
        raise CapabilityError(f"{h.arch} handle does not support differentiation")
    t = _check_input(h, x).requires_grad_(True)
    y = torch.as_tensor(np.asarray(target), dtype=torch.long)
    h.net.eval()
    loss = nn.functional.cross_entropy(h.net(t), y, reduction="sum")
    (grad,) = torch.autograd.grad(loss, t)
    return grad.numpy()


def train_classifier(
    h: ClassifierHandle,
    windows: np.ndarray,
    labels: np.ndarray,
    epochs: int = 40,
    lr: float = 1e-3,
    batch_size: int = 64,
    val_fraction: float = 0.15,
    patience: int = 12,
) -> ClassifierHandle:
    """Fit the handle in place with Adam, early-stopped on validation accuracy.

    Zero epochs leaves the handle untouched. Raises
    :class:`TrainingError` when fewer than two classes are present.
    """
    windows = np.asarray(windows)
    labels = np.asarray(labels, dtype=np.int64)
    if epochs == 0:
        return h
    if len(np.unique(labels)) < 2:
        raise TrainingError("training data contains a single class")
    if windows.shape[0] != labels.shape[0]:
        raise ShapeError("windows and labels disagree on batch size")

    gen = torch.Generator().manual_seed(h.seed * 9973 + 17)
    n = windows.shape[0]
    order = torch.randperm(n, generator=gen).numpy()
    n_val = max(1, int(round(val_fraction * n))) if n > 10 else 0
    val_idx, train_idx = order[:n_val], order[n_val:]

    x_all = torch.as_tensor(windows, dtype=h.dtype)
    y_all = torch.as_tensor(labels)
    h.net.norm.set_stats(
        windows.reshape(-1, h.n_channels).mean(axis=0),
        windows.reshape(-1, h.n_channels).std(axis=0),
    )

    opt = torch.optim.Adam(h.net.parameters(), lr=lr)
    best_val, best_state, since_best = -1.0, None, 0
    for epoch in range(epochs):
        h.net.train()
        perm = train_idx[torch.randperm(len(train_idx), generator=gen).numpy()]
        total_loss, total_correct = 0.0, 0
        for i in range(0, len(perm), batch_size):
            idx = perm[i : i + batch_size]
            xb, yb = x_all[idx], y_all[idx]
            opt.zero_grad()
            out = h.net(xb)
            loss = nn.functional.cross_entropy(out, yb)
            loss.backward()
            opt.step()
            total_loss += loss.item() * len(idx)
            total_correct += (out.argmax(dim=1) == yb).sum().item()
        h.net.eval()
        train_acc = total_correct / max(1, len(perm))
        h.train_log["loss"].append(total_loss / max(1, len(perm)))
        h.train_log["acc"].append(train_acc)
        if n_val:
            with torch.no_grad():
                val_out = h.net(x_all[val_idx])
            val_acc = (val_out.argmax(dim=1) == y_all[val_idx]).float().mean().item()
        else:
            val_acc = train_acc
        h.train_log["val_acc"].append(val_acc)
        if val_acc > best_val:
            best_val, since_best = val_acc, 0
            best_state = {k: v.clone() for k, v in h.net.state_dict().items()}
        else:
            since_best += 1
            if since_best >= patience:
                break
    if best_state is not None:
        h.net.load_state_dict(best_state)
    h.net.eval()
    return h


def train_attacker(
    windows: np.ndarray,
    sensitive_labels: np.ndarray,
    arch: str = "lstm",
    input_len: int | None = None,
    seed: int = 0,
    **train_kwargs,
) -> ClassifierHandle:
    """Train an eavesdropper on labeled windows.

    Maps string labels to class codes and records the class order in
    train_log["classes"] so downstream metrics can translate back.
    """
    windows = np.asarray(windows)
    classes = np.unique(sensitive_labels)
    if len(classes) < 2:
        raise TrainingError("need at least two sensitive classes")
    h = build_classifier(
        arch,
        input_len or windows.shape[1],
        windows.shape[2],
        len(classes),
        seed,
    )
    codes = np.searchsorted(classes, sensitive_labels)
    h.train_log["classes"] = [str(c) for c in classes]
    return train_classifier(h, windows, codes, **train_kwargs)


def label_codes(h: ClassifierHandle, labels: np.ndarray) -> np.ndarray:
    """Translate string labels into the class codes a trained handle uses."""
    classes = h.train_log.get("classes")
    if classes is None:
        return np.asarray(labels, dtype=np.int64)
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([lookup[str(v)] for v in labels], dtype=np.int64)
    except KeyError as exc:
        raise ShapeError(f"label {exc} was not seen at training time") from None


def train_har(
    windows: np.ndarray,
    activity_labels: np.ndarray,
    input_len: int | None = None,
    arch: str = "cnn",
    seed: int = 0,
    **train_kwargs,
) -> ClassifierHandle:
    """Train the multi-class activity classifier used for utility checks."""
    windows = np.asarray(windows)
    classes = np.unique(activity_labels)
    if len(classes) < 2:
        raise TrainingError("need at least two activity classes")
    h = build_classifier(
        arch,
        input_len or windows.shape[1],
        windows.shape[2],
        len(classes),
        seed,
    )
    codes = np.searchsorted(classes, activity_labels)
    h.train_log["classes"] = [str(c) for c in classes]
    return train_classifier(h, windows, codes, **train_kwargs)
