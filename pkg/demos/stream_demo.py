"""Frame-at-a-time streaming: what the device-side loop looks like.

Trains nothing; uses an untrained generator to show the mechanics and the
per-generation latency budget.
"""

import time

import numpy as np

from patn import EpsilonBounds, PatnConfig, StreamSimulator, init_patn
from patn.stream import latency_stats

T_IN, T_OUT, D = 30, 10, 6

g = init_patn(PatnConfig(bounds=EpsilonBounds(eps=np.full(D, 0.02)),
                         T_in=T_IN, T_out=T_OUT, D=D, H=64), seed=0)
sim = StreamSimulator(g)

rng = np.random.default_rng(3)
print(f"feeding 120 frames one at a time (warmup {T_IN}, "
      f"one generation per {T_OUT} frames)")
n_gen = 0
for t in range(120):
    frame = rng.normal(size=D) * 0.3
    t0 = time.perf_counter()
    adv_frame, delta = sim.push_frame(frame)
    dt = (time.perf_counter() - t0) * 1e3
    if t in (0, T_IN - 1, T_IN, T_IN + T_OUT) or dt > 1.0:
        tag = "warmup" if t < T_IN else "live"
        print(f"  t={t:3d} [{tag}] |delta| {np.abs(delta).max():.5f} "
              f"({dt:.2f} ms)")
    n_gen += int(t >= T_IN and (t - T_IN) % T_OUT == 0)
print(f"generations run: {n_gen}")

lat = latency_stats(g, n_trials=300)
print(f"latency: mean {lat['mean_s']*1e3:.2f} ms, p95 {lat['p95_s']*1e3:.2f} ms,"
      f" max {lat['max_s']*1e3:.2f} ms per generation"
      f" (frame budget at 2 Hz frames: 500 ms; at 60 fps: 16.7 ms)")
