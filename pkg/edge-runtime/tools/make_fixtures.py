#!/usr/bin/env python3
"""Regenerate the edge runtime's test fixtures from the Python package.

Produces, under edge-runtime/fixtures/:
  model.bin            a seeded generator bundle (outputs span the full
                       tanh range, including saturation)
  corrupt.bin          model.bin with one payload byte flipped
  truncated.bin        model.bin cut short mid-tensor
  shortpayload.bin     cut payload with a recomputed (valid) trailer, so
                       the structural check fires instead of the checksum
  badversion.bin       version field patched to 2, trailer recomputed
  meta.txt             dims, parameter count and budgets as plain key/value
  streams/NNN.csv      100 input streams of varied length
  golden/NNN.csv       the reference runtime's output for each stream
  empty.csv            zero-byte input
  malformed.csv        a non-numeric cell on line 5

Run from anywhere: python3 tools/make_fixtures.py
"""

import struct
import zlib
from pathlib import Path

import numpy as np
import torch

from patn.bounds import EpsilonBounds
from patn.data import SensorSequence, write_stream_csv, read_stream_csv
from patn.export import export_generator, load_generator
from patn.generator import PatnConfig, init_patn
from patn.stream import StreamSimulator

HERE = Path(__file__).resolve().parent.parent
FIX = HERE / "fixtures"

T_IN, T_OUT, D, H = 30, 10, 6, 64
EPS = np.array([0.02, 0.025, 0.03, 0.2, 0.25, 0.3])
N_STREAMS = 100


def build_model() -> Path:
    cfg = PatnConfig(bounds=EpsilonBounds(eps=EPS, provenance={"source": "fixture"}),
                     T_in=T_IN, T_out=T_OUT, D=D, H=H)
    g = init_patn(cfg, seed=42)
    with torch.no_grad():
        # push the squash input well past +-1 so some outputs saturate
        g.net.out.weight.mul_(60.0)
        g.net.out.bias.uniform_(-0.5, 0.5, generator=torch.Generator().manual_seed(7))
        g.net.in_mu.copy_(torch.tensor([0.01, -0.02, 0.98, 0.0, 0.05, -0.05]))
        g.net.in_sigma.copy_(torch.tensor([0.41, 0.39, 0.44, 0.52, 0.48, 0.55]))
    path = FIX / "model.bin"
    n = export_generator(g, path)
    print(f"model.bin: {n} bytes")
    return path


def variants(path: Path):
    blob = bytearray(path.read_bytes())

    bad = bytearray(blob)
    bad[len(bad) // 2] ^= 0x40
    (FIX / "corrupt.bin").write_bytes(bad)

    (FIX / "truncated.bin").write_bytes(blob[: len(blob) - 17])

    short = bytearray(blob[: len(blob) - 21])
    short += struct.pack("<I", zlib.crc32(bytes(short)))
    (FIX / "shortpayload.bin").write_bytes(short)

    patched = bytearray(blob[:-4])
    patched[4:6] = struct.pack("<H", 2)
    patched += struct.pack("<I", zlib.crc32(bytes(patched)))
    (FIX / "badversion.bin").write_bytes(patched)


def write_meta(path: Path):
    from patn.export import _GEN_TENSOR_MAP

    g = load_generator(path)
    state = g.net.state_dict()
    n_values = sum(state[prv].numel() for prv in _GEN_TENSOR_MAP.values())
    lines = [
        f"t_in {T_IN}",
        f"t_out {T_OUT}",
        f"d {D}",
        f"h {H}",
        f"n_values {n_values}",
        f"bundle_bytes {path.stat().st_size}",
    ]
    eps32 = g.net.eps.numpy()
    names = ("acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z")
    for name, e in zip(names, eps32):
        lines.append(f"eps_{name} {float(e)!r}")
    (FIX / "meta.txt").write_text("\n".join(lines) + "\n")


def synth_stream(rng: np.random.Generator, n: int) -> np.ndarray:
    t = np.arange(n)[:, None] / 50.0
    freq = rng.uniform(0.4, 3.0, size=(1, D))
    phase = rng.uniform(0, 2 * np.pi, size=(1, D))
    amp = rng.uniform(0.2, 1.2, size=(1, D))
    base = amp * np.sin(2 * np.pi * freq * t + phase)
    noise = rng.normal(0.0, 0.35, size=(n, D))
    spikes = (rng.random((n, D)) < 0.01) * rng.normal(0, 2.0, size=(n, D))
    out = base + noise + spikes
    out[:, 2] += 0.98  # resting gravity on the vertical accelerometer
    return out


def streams_and_golden(model: Path):
    g = load_generator(model)
    rng = np.random.default_rng(2024)
    lengths = [5, 17, 29, 30, 31, 39, 40, 41]
    while len(lengths) < N_STREAMS:
        lengths.append(int(rng.integers(45, 220)))
    (FIX / "streams").mkdir(exist_ok=True)
    (FIX / "golden").mkdir(exist_ok=True)
    for i, n in enumerate(lengths):
        raw = synth_stream(rng, n)
        in_path = FIX / "streams" / f"{i:03d}.csv"
        write_stream_csv(SensorSequence(values=raw, sample_rate_hz=50.0), in_path)
        # golden from the file's own quantized values, so both runtimes
        # start from identical inputs
        frames = read_stream_csv(in_path).values
        adv, _ = StreamSimulator(g).process(frames)
        write_stream_csv(SensorSequence(values=adv, sample_rate_hz=50.0),
                         FIX / "golden" / f"{i:03d}.csv")
    print(f"{N_STREAMS} stream/golden pairs")


def edge_cases():
    (FIX / "empty.csv").write_bytes(b"")
    rows = ["time,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z"]
    rows += [f"{i/50.0},0.1,0.2,0.98,0.0,0.01,-0.01" for i in range(3)]
    rows.append("0.06,0.1,oops,0.98,0.0,0.01,-0.01")
    rows.append("0.08,0.1,0.2,0.98,0.0,0.01,-0.01")
    (FIX / "malformed.csv").write_text("\n".join(rows) + "\n")


def main():
    FIX.mkdir(exist_ok=True)
    model = build_model()
    variants(model)
    write_meta(model)
    streams_and_golden(model)
    edge_cases()
    print("done")


if __name__ == "__main__":
    main()
