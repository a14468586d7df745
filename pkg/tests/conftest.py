"""Shared fixtures: a small synthetic corpus and cheap trained models.

Session-scoped so the expensive pieces (corpus synthesis, short training
runs) happen once. Sizes here are chosen for speed; the acceptance suite
uses its own desk-scale configuration.
"""

import numpy as np
import pytest

from patn import bounds as bounds_mod
from patn import data as data_mod
from patn import generator as gen_mod
from patn import models as models_mod


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    data_mod.write_synthetic_motionsense(
        root, n_subjects=8, trials_per_activity=1, seconds_per_trial=30.0,
        seed=123)
    return root


@pytest.fixture(scope="session")
def splits(corpus_root):
    return data_mod.load_motionsense(corpus_root, split_ratio=0.75, seed=3)


@pytest.fixture(scope="session")
def framed_train(splits):
    cfg = data_mod.FrameConfig(frame_sec=0.5)
    return [data_mod.to_frames(s, cfg) for s in splits[0]]


@pytest.fixture(scope="session")
def framed_test(splits):
    cfg = data_mod.FrameConfig(frame_sec=0.5)
    return [data_mod.to_frames(s, cfg) for s in splits[1]]


@pytest.fixture(scope="session")
def small_bounds(framed_train):
    static = data_mod.synthesize_static_recordings(3, 20.0, seed=9)
    cfg = data_mod.FrameConfig(frame_sec=0.5)
    static_f = [data_mod.to_frames(s, cfg) for s in static]
    return bounds_mod.bounds_from_dataset(framed_train, static_f)


@pytest.fixture(scope="session")
def train_pairs(framed_train):
    return data_mod.make_window_pairs(framed_train, 30, 10, 5)


@pytest.fixture(scope="session")
def toy_attacker(train_pairs):
    """A deliberately under-trained eavesdropper; fast, good enough for
    plumbing tests that only need a working classifier."""
    wins = np.stack([p.future for p in train_pairs])
    labels = np.array([p.sensitive_label for p in train_pairs])
    return models_mod.train_attacker(wins, labels, arch="lstm", seed=0,
                                     epochs=12, patience=12)


@pytest.fixture()
def small_generator(small_bounds):
    cfg = gen_mod.PatnConfig(bounds=small_bounds, T_in=30, T_out=10, D=6, H=16)
    return gen_mod.init_patn(cfg, seed=0)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
