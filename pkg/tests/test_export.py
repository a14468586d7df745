"""Binary weight bundles: layout, integrity, roundtrips."""

import numpy as np
import pytest
import zlib

from patn.bounds import EpsilonBounds
from patn.errors import ChecksumError, SchemaError
from patn.export import (
    MAGIC,
    bundle_bytes,
    classifier_bytes,
    export_classifier,
    export_generator,
    generator_bytes,
    load_classifier,
    load_generator,
    parse_bundle,
)
from patn.generator import PatnConfig, generate, init_patn
from patn.models import build_classifier, logits, train_attacker


def _gen(seed=0, H=8):
    cfg = PatnConfig(bounds=EpsilonBounds(eps=np.array([0.05, 0.01, 0.3])),
                     T_in=10, T_out=4, D=3, H=H)
    return init_patn(cfg, seed=seed)


class TestBundleFormat:
    def test_roundtrip_arbitrary_payload(self):
        config = {"alpha": 3, "Z": 2**31}
        eps = np.array([0.1, 0.25], dtype=np.float32)
        tensors = {"w": np.arange(6, dtype=np.float32).reshape(2, 3),
                   "b": np.zeros(2, dtype=np.float32)}
        blob = bundle_bytes(config, eps, tensors)
        c2, e2, t2 = parse_bundle(blob)
        assert c2 == config
        np.testing.assert_array_equal(e2, eps)
        assert set(t2) == {"w", "b"}
        np.testing.assert_array_equal(t2["w"], tensors["w"])

    def test_magic_bytes_lead(self):
        blob = bundle_bytes({}, np.zeros(0), {})
        assert blob[:4] == MAGIC

    def test_every_corrupted_byte_detected(self):
        blob = bytearray(bundle_bytes({"k": 1}, np.array([0.5], np.float32),
                                      {"t": np.ones(3, np.float32)}))
        baseline = parse_bundle(bytes(blob))
        for i in range(len(blob)):
            mutated = bytearray(blob)
            mutated[i] ^= 0xFF
            with pytest.raises((ChecksumError, SchemaError)):
                parse_bundle(bytes(mutated))

    def test_truncation_rejected(self):
        blob = bundle_bytes({"k": 1}, np.zeros(2, np.float32), {})
        for cut in (0, 3, 10, len(blob) - 1):
            with pytest.raises((ChecksumError, SchemaError)):
                parse_bundle(blob[:cut])

    def test_trailing_garbage_rejected(self):
        blob = bundle_bytes({}, np.zeros(0), {})
        with pytest.raises((ChecksumError, SchemaError)):
            parse_bundle(blob + b"\x00")

    def test_checksum_error_is_schema_error(self):
        assert issubclass(ChecksumError, SchemaError)

    def test_crc_is_of_all_preceding_bytes(self):
        blob = bundle_bytes({"x": 7}, np.zeros(1, np.float32), {})
        import struct
        stored = struct.unpack("<I", blob[-4:])[0]
        assert stored == (zlib.crc32(blob[:-4]) & 0xFFFFFFFF)


class TestGeneratorBundle:
    def test_reload_bit_identical(self, tmp_path):
        g = _gen(seed=3)
        path = tmp_path / "g.bin"
        size = export_generator(g, path)
        assert path.stat().st_size == size
        g2 = load_generator(path)
        x = np.random.default_rng(0).normal(size=(4, 10, 3))
        np.testing.assert_array_equal(generate(g, x), generate(g2, x))
        assert g2.config.T_in == 10 and g2.config.H == 8

    def test_bundle_small(self):
        g = _gen(H=32)
        assert len(generator_bytes(g)) < 2 * 1024 * 1024

    def test_eps_survives_roundtrip_exactly(self):
        g = _gen()
        g2 = load_generator(generator_bytes(g))
        np.testing.assert_array_equal(g2.net.eps.numpy(), g.net.eps.numpy())

    def test_input_stats_survive(self):
        g = _gen()
        g.net.set_input_stats(np.array([1.0, -2.0, 3.0]),
                              np.array([0.5, 2.0, 1.5]))
        g2 = load_generator(generator_bytes(g))
        x = np.random.default_rng(1).normal(size=(2, 10, 3))
        np.testing.assert_array_equal(generate(g, x), generate(g2, x))

    def test_missing_tensor_rejected(self):
        blob = generator_bytes(_gen())
        config, eps, tensors = parse_bundle(blob)
        del tensors["out.w"]
        broken = bundle_bytes(config, eps, tensors)
        with pytest.raises(SchemaError):
            load_generator(broken)


class TestClassifierBundle:
    def test_reload_same_logits(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(300, 6, 6)) * 0.4
        y = rng.integers(0, 2, 300)
        x[y == 1, :, 0] += 1.0
        h = train_attacker(x, np.where(y == 1, "f", "m"), arch="cnn",
                           input_len=6, seed=0, epochs=6)
        path = tmp_path / "c.bin"
        export_classifier(h, path)
        h2 = load_classifier(path, "cnn", classes=["f", "m"])
        np.testing.assert_array_equal(logits(h, x), logits(h2, x))
        assert h2.train_log["classes"] == ["f", "m"]

    def test_arch_mismatch_rejected(self):
        h = build_classifier("cnn", 6, 6, 2, seed=0)
        blob = classifier_bytes(h)
        with pytest.raises(SchemaError):
            load_classifier(blob, "lstm")

    def test_norm_buffers_roundtrip(self):
        h = build_classifier("lstm", 6, 6, 2, seed=0)
        h.net.norm.set_stats(np.arange(6.0), np.arange(1.0, 7.0))
        h2 = load_classifier(classifier_bytes(h), "lstm")
        x = np.random.default_rng(2).normal(size=(3, 6, 6))
        np.testing.assert_array_equal(logits(h, x), logits(h2, x))
