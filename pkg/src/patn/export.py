"""Compact self-checking binary weight bundles.

Layout, all little-endian:

    magic   4 bytes  "PATN"
    version u16      currently 1
    config  u16 count, then per entry: u8 key length, ASCII key, u32 value
    eps     u32 count, then that many f32
    tensors u32 count, then per tensor:
            u8 name length, ASCII name, u8 ndim, u32 per dim, f32 data
            (row-major)
    crc     u32      CRC-32 of every preceding byte

Weights travel as f32; loading a bundle written from an f32 model
reproduces it bit for bit. The same container carries classifier
checkpoints (tensor names are the state-dict keys); string metadata such
as architecture names or class labels lives in a sidecar manifest, since
the binary config block holds integers only.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np
import torch

from .bounds import EpsilonBounds
from .errors import ChecksumError, SchemaError
from .generator import GeneratorHandle, PatnConfig, init_patn
from .models import ClassifierHandle, build_classifier

MAGIC = b"PATN"
VERSION = 1


def bundle_bytes(config: dict[str, int], eps: np.ndarray,
                 tensors: dict[str, np.ndarray]) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out += struct.pack("<H", len(config))
    for key in config:
        kb = key.encode("ascii")
        if not 1 <= len(kb) <= 255:
            raise SchemaError(f"config key length out of range: {key!r}")
        out += struct.pack("<B", len(kb)) + kb
        out += struct.pack("<I", int(config[key]))
    eps32 = np.asarray(eps, dtype="<f4")
    out += struct.pack("<I", eps32.size)
    out += eps32.tobytes()
    out += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        nb = name.encode("ascii")
        if not 1 <= len(nb) <= 255:
            raise SchemaError(f"tensor name length out of range: {name!r}")
        a = np.ascontiguousarray(arr, dtype="<f4")
        out += struct.pack("<B", len(nb)) + nb
        out += struct.pack("<B", a.ndim)
        for d in a.shape:
            out += struct.pack("<I", d)
        out += a.tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise SchemaError(
                f"truncated bundle: wanted {n} bytes at offset {self.pos}, "
                f"have {len(self.data) - self.pos}"
            )
        b = self.data[self.pos:self.pos + n]
        self.pos += n
        return b

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def parse_bundle(data: bytes) -> tuple[dict[str, int], np.ndarray, dict[str, np.ndarray]]:
    if len(data) < 14:
        raise SchemaError(f"bundle of {len(data)} bytes is too short to be valid")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ChecksumError(
            f"bundle checksum mismatch: stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x}"
        )
    r = _Reader(data[:-4])
    if r.take(4) != MAGIC:
        raise SchemaError("bad magic: not a weight bundle")
    version = r.u16()
    if version != VERSION:
        raise SchemaError(f"unsupported bundle version {version}")
    config = {}
    for _ in range(r.u16()):
        key = r.take(r.u8()).decode("ascii")
        config[key] = r.u32()
    n_eps = r.u32()
    eps = np.frombuffer(r.take(4 * n_eps), dtype="<f4").astype(np.float64)
    tensors = {}
    for _ in range(r.u32()):
        name = r.take(r.u8()).decode("ascii")
        ndim = r.u8()
        shape = tuple(r.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape)
        tensors[name] = arr.copy()
    if r.pos != len(r.data):
        raise SchemaError(f"{len(r.data) - r.pos} trailing bytes after tensor table")
    return config, eps, tensors


# ---------------------------------------------------------------------------
# Generator bundles
# ---------------------------------------------------------------------------

_GEN_TENSOR_MAP = {
    "enc.w_ih": "encoder.weight_ih_l0",
    "enc.w_hh": "encoder.weight_hh_l0",
    "enc.b_ih": "encoder.bias_ih_l0",
    "enc.b_hh": "encoder.bias_hh_l0",
    "dec.w_ih": "decoder.weight_ih",
    "dec.w_hh": "decoder.weight_hh",
    "dec.b_ih": "decoder.bias_ih",
    "dec.b_hh": "decoder.bias_hh",
    "out.w": "out.weight",
    "out.b": "out.bias",
    "norm.mu": "in_mu",
    "norm.sigma": "in_sigma",
}


def generator_bytes(g: GeneratorHandle) -> bytes:
    cfg = g.config
    state = g.net.state_dict()
    tensors = {pub: state[prv].numpy() for pub, prv in _GEN_TENSOR_MAP.items()}
    config = {"T_in": cfg.T_in, "T_out": cfg.T_out, "D": cfg.D, "H": cfg.H,
              "seed": g.seed}
    return bundle_bytes(config, state["eps"].numpy(), tensors)


def export_generator(g: GeneratorHandle, path) -> int:
    """Write the generator bundle; returns its size in bytes."""
    blob = generator_bytes(g)
    Path(path).write_bytes(blob)
    return len(blob)


def load_generator(path_or_bytes) -> GeneratorHandle:
    data = path_or_bytes if isinstance(path_or_bytes, (bytes, bytearray)) \
        else Path(path_or_bytes).read_bytes()
    config, eps, tensors = parse_bundle(bytes(data))
    for key in ("T_in", "T_out", "D", "H"):
        if key not in config:
            raise SchemaError(f"generator bundle lacks config entry {key!r}")
    missing = set(_GEN_TENSOR_MAP) - set(tensors)
    if missing:
        raise SchemaError(f"generator bundle lacks tensors: {sorted(missing)}")
    bounds = EpsilonBounds(eps=eps, provenance={"source": "bundle"})
    cfg = PatnConfig(bounds=bounds, T_in=config["T_in"], T_out=config["T_out"],
                     D=config["D"], H=config["H"])
    g = init_patn(cfg, seed=config.get("seed", 0))
    state = g.net.state_dict()
    with torch.no_grad():
        for pub, prv in _GEN_TENSOR_MAP.items():
            arr = tensors[pub]
            if tuple(state[prv].shape) != arr.shape:
                raise SchemaError(
                    f"tensor {pub} has shape {arr.shape}, expected "
                    f"{tuple(state[prv].shape)}"
                )
            state[prv].copy_(torch.from_numpy(arr.copy()))
    g.net.load_state_dict(state)
    g.net.eval()
    return g


# ---------------------------------------------------------------------------
# Classifier checkpoints (same container, state-dict tensor names)
# ---------------------------------------------------------------------------


def classifier_bytes(h: ClassifierHandle) -> bytes:
    tensors = {k: v.numpy() for k, v in h.net.state_dict().items()}
    config = {
        "input_len": h.input_len,
        "n_channels": h.n_channels,
        "n_classes": h.n_classes,
        "seed": h.seed,
    }
    return bundle_bytes(config, np.empty(0), tensors)


def export_classifier(h: ClassifierHandle, path) -> int:
    blob = classifier_bytes(h)
    Path(path).write_bytes(blob)
    return len(blob)


def load_classifier(path_or_bytes, arch: str,
                    classes: list[str] | None = None) -> ClassifierHandle:
    """Rebuild a checkpointed classifier; arch and class names come from the
    caller (normally a sidecar manifest)."""
    data = path_or_bytes if isinstance(path_or_bytes, (bytes, bytearray)) \
        else Path(path_or_bytes).read_bytes()
    config, _, tensors = parse_bundle(bytes(data))
    h = build_classifier(arch, config["input_len"], config["n_channels"],
                         config["n_classes"], config.get("seed", 0))
    state = h.net.state_dict()
    unknown = set(tensors) - set(state)
    missing = set(state) - set(tensors)
    if unknown or missing:
        raise SchemaError(
            f"checkpoint does not fit a {arch!r} model "
            f"(missing {sorted(missing)}, unknown {sorted(unknown)})"
        )
    with torch.no_grad():
        for name, arr in tensors.items():
            if tuple(state[name].shape) != arr.shape:
                raise SchemaError(
                    f"tensor {name} has shape {arr.shape}, expected "
                    f"{tuple(state[name].shape)}"
                )
            state[name].copy_(torch.from_numpy(arr.copy()).to(state[name].dtype))
    h.net.load_state_dict(state)
    h.net.eval()
    if classes is not None:
        h.train_log["classes"] = list(classes)
    return h
