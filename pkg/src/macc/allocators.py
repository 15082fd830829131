"""Baseline load allocation schemes and the trained-policy adapter.

Three baselines: uniform (equal split of exactly p rows), load-balanced
(split of exactly p rows proportional to beta / (alpha beta + 1)), and HCMM
(per-worker loads p / (h lambda_i) with redundancy, lambda_i solving
e^(beta lambda) = e^(alpha beta) (beta lambda + 1)).  The policy adapter
turns trained actor outputs in [0, 1] into integer loads.
"""

import math
from dataclasses import dataclass

import numpy as np

from .simcore import LoadAllocation


@dataclass(frozen=True)
class HcmmSolution:
    lam: tuple
    h: float
    loads: tuple


def uniform_alloc(p, n_workers):
    """Split exactly p rows as evenly as possible (first p mod N get one extra)."""
    if n_workers < 1:
        raise ValueError(f"need at least one worker, got {n_workers}")
    base, extra = divmod(int(p), int(n_workers))
    loads = tuple(base + 1 if i < extra else base for i in range(n_workers))
    return LoadAllocation(loads)


def load_balanced_alloc(p, profiles):
    """Split exactly p rows proportionally to w_i = beta_i / (alpha_i beta_i + 1).

    Real-valued shares are rounded by largest remainder so the sum stays
    exactly p.
    """
    w = np.array([prof.beta / (prof.alpha * prof.beta + 1.0) for prof in profiles])
    shares = p * w / w.sum()
    loads = np.floor(shares).astype(int)
    short = int(p - loads.sum())
    order = np.argsort(-(shares - loads), kind="stable")
    for i in order[:short]:
        loads[i] += 1
    return LoadAllocation(tuple(int(l) for l in loads))


def solve_hcmm_lambda(profile, tol=1.0e-12):
    """Positive solution lambda of e^(beta lambda) = e^(alpha beta) (beta lambda + 1).

    Solved by bisection in the substituted variable z = beta lambda on
    g(z) = z - alpha beta - ln(1 + z), which is negative at 0+ and grows
    without bound; the bracket is doubled until g flips sign.
    """
    ab = profile.alpha * profile.beta

    def g(z):
        return z - ab - math.log1p(z)

    hi = max(2.0 * ab, 1.0)
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1.0e18:
            raise ArithmeticError(f"failed to bracket the HCMM root for alpha beta = {ab}")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol:
            return mid / profile.beta
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) / profile.beta


def hcmm_alloc(p, profiles):
    """HCMM loads: l_i = ceil(p / (h lambda_i)), capped at p.

    h = sum_i beta_i / (1 + beta_i lambda_i).  The ceiling keeps the sum at
    or above p; should rounding ever break that, the largest load is bumped.
    Returns an HcmmSolution (the LoadAllocation is in .loads).
    """
    lam = [solve_hcmm_lambda(prof) for prof in profiles]
    h = sum(prof.beta / (1.0 + prof.beta * l) for prof, l in zip(profiles, lam))
    loads = [min(int(math.ceil(p / (h * l))), int(p)) for l in lam]
    while sum(loads) < p:  # unreachable in practice, see ceiling above
        loads[loads.index(max(loads))] = min(max(loads) + 1, int(p))
        if all(l == p for l in loads):
            break
    return HcmmSolution(lam=tuple(lam), h=h, loads=tuple(loads))


def policy_alloc(actors, joint_state, p):
    """Turn per-agent actor outputs in [0, 1] into integer loads in [0, p].

    actors is one callable per worker mapping its (normalized) state vector
    to a scalar action; loads are round(p * action) clamped to [0, p].
    """
    if len(actors) != len(joint_state):
        raise ValueError(
            f"have {len(actors)} actors but {len(joint_state)} agent states"
        )
    loads = []
    for actor, s in zip(actors, joint_state):
        a = float(actor(s))
        loads.append(int(min(max(round(p * a), 0), p)))
    return LoadAllocation(tuple(loads))
