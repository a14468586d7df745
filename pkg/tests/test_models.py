"""Classifier zoo: shapes, determinism, gradients, training."""

import numpy as np
import pytest
import torch

from patn.errors import ConfigurationError, ShapeError, TrainingError
from patn.models import (
    ARCH_CONFIG,
    MIN_INPUT_LEN,
    build_classifier,
    input_gradient,
    label_codes,
    logits,
    scores,
    train_attacker,
    train_classifier,
)

ALL_ARCHS = sorted(ARCH_CONFIG)


@pytest.mark.parametrize("arch", ALL_ARCHS)
def test_build_and_logits_shape(arch):
    h = build_classifier(arch, input_len=10, n_channels=6, n_classes=3, seed=0)
    x = np.random.default_rng(0).normal(size=(5, 10, 6))
    z = logits(h, x)
    assert z.shape == (5, 3)
    assert np.all(np.isfinite(z))


@pytest.mark.parametrize("arch", ALL_ARCHS)
def test_seed_determinism(arch):
    x = np.random.default_rng(1).normal(size=(3, 8, 6))
    a = build_classifier(arch, 8, 6, 2, seed=7)
    b = build_classifier(arch, 8, 6, 2, seed=7)
    np.testing.assert_array_equal(logits(a, x), logits(b, x))
    c = build_classifier(arch, 8, 6, 2, seed=8)
    assert not np.array_equal(logits(a, x), logits(c, x))


@pytest.mark.parametrize("arch", ["cnn", "fcn", "resnet", "densenet",
                                  "mobilenet", "xception"])
def test_conv_archs_accept_other_lengths(arch):
    """Global pooling makes the conv trunks length-agnostic; a handle built
    for one length still computes on another when rebuilt for it."""
    h6 = build_classifier(arch, 6, 6, 2, seed=0)
    h20 = build_classifier(arch, 20, 6, 2, seed=0)
    x20 = np.random.default_rng(0).normal(size=(2, 20, 6))
    assert logits(h20, x20).shape == (2, 2)
    # same weights, declared length enforced:
    with pytest.raises(ShapeError):
        logits(h6, x20)


def test_input_len_floor():
    with pytest.raises(ConfigurationError):
        build_classifier("cnn", MIN_INPUT_LEN - 1, 6, 2, seed=0)


def test_unknown_arch():
    with pytest.raises(ConfigurationError):
        build_classifier("transformer9000", 10, 6, 2, seed=0)


def test_single_class_rejected():
    with pytest.raises(ConfigurationError):
        build_classifier("cnn", 10, 6, 1, seed=0)


def test_wrong_input_shape():
    h = build_classifier("cnn", 10, 6, 2, seed=0)
    with pytest.raises(ShapeError):
        logits(h, np.zeros((4, 9, 6)))
    with pytest.raises(ShapeError):
        logits(h, np.zeros((4, 10, 5)))


def test_scores_normalize():
    h = build_classifier("lstm", 10, 6, 4, seed=0)
    x = np.random.default_rng(2).normal(size=(7, 10, 6))
    rep = scores(h, x)
    np.testing.assert_allclose(rep.per_example_scores.sum(axis=1), 1.0,
                               atol=1e-6)
    np.testing.assert_array_equal(
        rep.predictions, rep.per_example_scores.argmax(axis=1))


@pytest.mark.parametrize("arch", ["cnn", "lstm", "rnn", "resnet"])
def test_input_gradient_matches_finite_differences(arch):
    """Float64 analytic input gradient vs central differences, elementwise."""
    h = build_classifier(arch, 6, 3, 2, seed=3, dtype="float64")
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 6, 3))
    y = np.array([0, 1])
    g = input_gradient(h, x, y)
    assert g.shape == x.shape

    def ce(xa):
        z = torch.as_tensor(logits(h, xa))
        return float(torch.nn.functional.cross_entropy(
            z, torch.as_tensor(y), reduction="sum"))

    step = 1e-6
    check = rng.choice(x.size, size=12, replace=False)
    flat = x.reshape(-1)
    for idx in check:
        up, down = flat.copy(), flat.copy()
        up[idx] += step
        down[idx] -= step
        fd = (ce(up.reshape(x.shape)) - ce(down.reshape(x.shape))) / (2 * step)
        rel = abs(fd - g.reshape(-1)[idx]) / max(1e-8, abs(fd), abs(g.reshape(-1)[idx]))
        assert rel < 1e-4, f"{arch} idx {idx}: analytic {g.reshape(-1)[idx]} vs fd {fd}"


def test_gradient_sum_reduction_row_independence():
    h = build_classifier("cnn", 8, 6, 2, seed=0, dtype="float64")
    rng = np.random.default_rng(5)
    x = rng.normal(size=(3, 8, 6))
    y = np.array([0, 1, 0])
    g_all = input_gradient(h, x, y)
    g_solo = input_gradient(h, x[1:2], y[1:2])
    np.testing.assert_allclose(g_all[1], g_solo[0], atol=1e-12)


class TestTraining:
    def _toy(self, n=400, t=8, d=6, seed=0):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, n)
        x = rng.normal(size=(n, t, d)) * 0.3
        x[y == 1, :, 0] += 1.0  # cleanly separable on channel 0 mean
        return x, y

    def test_learns_separable_toy(self):
        x, y = self._toy()
        h = build_classifier("cnn", 8, 6, 2, seed=0)
        train_classifier(h, x, y, epochs=25)
        acc = (logits(h, x).argmax(1) == y).mean()
        assert acc > 0.95

    def test_zero_epochs_noop(self):
        x, y = self._toy(n=50)
        h = build_classifier("cnn", 8, 6, 2, seed=0)
        before = logits(h, x)
        train_classifier(h, x, y, epochs=0)
        np.testing.assert_array_equal(before, logits(h, x))

    def test_single_class_data_rejected(self):
        x, _ = self._toy(n=40)
        with pytest.raises(TrainingError):
            train_classifier(build_classifier("cnn", 8, 6, 2, seed=0),
                             x, np.zeros(40, dtype=int), epochs=3)

    def test_mismatched_labels_rejected(self):
        x, y = self._toy(n=40)
        with pytest.raises(ShapeError):
            train_classifier(build_classifier("cnn", 8, 6, 2, seed=0),
                             x, y[:-3], epochs=3)

    def test_train_attacker_records_classes(self):
        x, y = self._toy(n=200)
        labels = np.where(y == 1, "female", "male")
        h = train_attacker(x, labels, arch="cnn", input_len=8, seed=0,
                           epochs=10)
        assert h.train_log["classes"] == ["female", "male"]
        codes = label_codes(h, np.array(["male", "female"]))
        np.testing.assert_array_equal(codes, [1, 0])

    def test_label_codes_unseen_label(self):
        x, y = self._toy(n=120)
        labels = np.where(y == 1, "female", "male")
        h = train_attacker(x, labels, arch="cnn", input_len=8, seed=0, epochs=3)
        with pytest.raises(ShapeError):
            label_codes(h, np.array(["robot"]))
