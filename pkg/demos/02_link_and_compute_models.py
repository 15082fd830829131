"""
The two clocks of a worker: wireless link and shifted-exponential CPU
=====================================================================

A result row travels over a Shannon-capacity link whose rate falls with
distance (log-distance path loss plus lognormal shadowing), and is
produced by a CPU whose runtime for l rows is alpha l plus an exponential
tail with rate beta / l.  A straggler multiplies its computation by
(1 + slowdown).
"""

import math

import numpy as np

from macc.envmodels import (
    CommConfig,
    ComputeProfile,
    StragglerPlan,
    apply_straggler,
    channel_capacity,
    comm_time,
    comp_time_sample,
)
from macc.numerics import RngStream

cfg = CommConfig()
rng = RngStream(7)

# ----------------------------------------------------------------------
# 1. Capacity falls ~20 dB per distance decade
# ----------------------------------------------------------------------
print("distance   capacity        one 200x1 result")
for d in (1, 2, 5, 10, 50, 100):
    c = channel_capacity(d, 0.0, cfg)
    t = 200 * cfg.bits_per_element / c
    print(f"{d:>5} m   {c:>11.0f} b/s   {t * 1e3:8.2f} ms")

# shadowing makes each transmission's rate a draw, not a constant
times = [comm_time(200, 1, 10.0, rng.substream("tx", k), cfg) for k in range(2000)]
print(f"\n200 rows at 10 m with shadowing: mean {np.mean(times) * 1e3:.2f} ms, "
      f"spread {np.std(times) * 1e3:.2f} ms")

# ----------------------------------------------------------------------
# 2. Computation: floor alpha*l, exponential tail l/beta
# ----------------------------------------------------------------------
profile = ComputeProfile(alpha=1e-4, beta=1e4)
load = 100
draws = np.array([comp_time_sample(load, profile, rng.substream("cpu", k))
                  for k in range(20000)])
floor = profile.alpha * load
mean_expect = floor + load / profile.beta
print(f"\n{load} rows on (alpha {profile.alpha}, beta {profile.beta:.0f}):")
print(f"  floor {floor * 1e3:.1f} ms, expected mean {mean_expect * 1e3:.1f} ms, "
      f"empirical {draws.mean() * 1e3:.2f} ms")
print(f"  min draw {draws.min() * 1e3:.2f} ms (never below the floor)")
print(f"  P(t <= mean) = {np.mean(draws <= mean_expect):.3f} "
      f"(memoryless tail gives 1 - 1/e = {1 - 1 / math.e:.3f})")

# ----------------------------------------------------------------------
# 3. A straggler is the same worker, eleven times slower
# ----------------------------------------------------------------------
plan = StragglerPlan(enabled=True, victim=0, slowdown_factor=10.0)
t = draws[0]
print(f"\nsampled computation {t * 1e3:.2f} ms -> "
      f"victim pays {apply_straggler(t, 0, plan) * 1e3:.2f} ms, "
      f"others still {apply_straggler(t, 1, plan) * 1e3:.2f} ms")
