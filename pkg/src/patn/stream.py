"""Frame-at-a-time deployment simulator.

Timing model: one frame arrives per tick. During the first T_in ticks the
output passes through unperturbed (nothing to condition on yet). From then
on a T_out-frame perturbation block is produced at every block boundary
from the T_in clean frames already seen, never the current or any later
frame, and its rows are consumed one tick each. Generation happens inside
the tick that starts a block, so perturbed frames leave with zero added
latency as long as one generation fits in a frame interval.

The ring buffer stores clean frames: the generator conditions on what the
sensor actually measured, not on its own past output.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import SensorSequence, read_stream_csv, write_stream_csv
from .errors import ShapeError
from .generator import GeneratorHandle, generate


@dataclass
class StreamState:
    ring: np.ndarray
    write_idx: int = 0
    frames_seen: int = 0
    pending: list = field(default_factory=list)
    gen_seconds: list = field(default_factory=list)


class StreamSimulator:
    """Causal frame-in, frame-out wrapper around a generator."""

    def __init__(self, g: GeneratorHandle):
        self.g = g
        self.T_in = g.config.T_in
        self.T_out = g.config.T_out
        self.D = g.config.D
        self.state = StreamState(ring=np.zeros((self.T_in, self.D)))

    def reset(self):
        self.state = StreamState(ring=np.zeros((self.T_in, self.D)))

    def _history(self) -> np.ndarray:
        st = self.state
        return np.concatenate([st.ring[st.write_idx:], st.ring[:st.write_idx]])

    def push_frame(self, frame: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Feed one clean frame, get (perturbed frame, its delta row)."""
        frame = np.asarray(frame, dtype=np.float64)
        if frame.shape != (self.D,):
            raise ShapeError(f"expected a ({self.D},) frame, got {frame.shape}")
        st = self.state
        t = st.frames_seen
        if t < self.T_in:
            delta_row = np.zeros(self.D)
        else:
            if not st.pending:
                t0 = time.perf_counter()
                block = generate(self.g, self._history())
                st.gen_seconds.append(time.perf_counter() - t0)
                st.pending = list(block)
            delta_row = st.pending.pop(0)
        st.ring[st.write_idx] = frame
        st.write_idx = (st.write_idx + 1) % self.T_in
        st.frames_seen += 1
        return frame + delta_row, delta_row

    def process(self, frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Run a whole framed sequence; returns (perturbed, delta) arrays."""
        frames = np.asarray(frames, dtype=np.float64)
        adv = np.empty_like(frames)
        delta = np.empty_like(frames)
        for i, f in enumerate(frames):
            adv[i], delta[i] = self.push_frame(f)
        return adv, delta


def latency_stats(g: GeneratorHandle, n_trials: int = 200, seed: int = 0) -> dict:
    """Seconds per generation call over random histories (after one warmup)."""
    rng = np.random.default_rng(seed)
    cfg = g.config
    hist = rng.normal(0.0, 1.0, size=(cfg.T_in, cfg.D))
    generate(g, hist)  # warmup: lazy allocations, thread pools
    times = []
    for _ in range(n_trials):
        hist = rng.normal(0.0, 1.0, size=(cfg.T_in, cfg.D))
        t0 = time.perf_counter()
        generate(g, hist)
        times.append(time.perf_counter() - t0)
    times = np.array(times)
    return {
        "mean_s": float(times.mean()),
        "p95_s": float(np.quantile(times, 0.95)),
        "max_s": float(times.max()),
        "n": n_trials,
    }


def replay_csv(g: GeneratorHandle, in_path, out_path, frame_cfg=None) -> SensorSequence:
    """Perturb a recorded stream file frame by frame; writes the result."""
    from .data import FrameConfig, to_frames

    seq = read_stream_csv(in_path)
    frame_cfg = frame_cfg or FrameConfig()
    framed = to_frames(seq, frame_cfg)
    sim = StreamSimulator(g)
    adv, _ = sim.process(framed.values)
    out = SensorSequence(
        values=adv,
        sample_rate_hz=framed.sample_rate_hz,
        channel_names=framed.channel_names,
        subject_id=framed.subject_id,
        activity_label=framed.activity_label,
        sensitive_label=framed.sensitive_label,
    )
    write_stream_csv(out, out_path)
    return out
