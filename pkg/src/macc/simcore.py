"""Discrete-event engine for the master/worker batch-processing protocol.

One task: the master broadcasts x to every loaded worker over dedicated
links, each worker computes its assigned encoded rows batch by batch
(CPU never idles between batches), and streams each finished batch back
over its link.  A batch transmission begins when both the batch is computed
and the link is free of the previous result; the link distance is evaluated
at that instant, with all nodes drifting at constant velocity.  The master
counts received rows and the task completes at the arrival that first
reaches p cumulative rows; results still in flight are ignored
(acknowledgment semantics).

All times inside a TaskRecord are measured from the task dispatch; the
world clock accumulates completion times across the K tasks of an episode,
since task j+1 is dispatched only once task j completed.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .coding import generate_encoding_matrix, encode, plan_batches, decode
from .envmodels import (
    ComputeProfile,
    KinematicState,
    StragglerPlan,
    advance,
    channel_capacity,
)
from .numerics import mat_vec


class DegenerateTaskError(ValueError):
    """An all-zero allocation dispatches no work at all."""


@dataclass(frozen=True)
class WorldState:
    """Master and worker kinematics plus compute profiles at a clock time."""

    master: object
    workers: tuple  # of (KinematicState, ComputeProfile)
    clock: float = 0.0

    @property
    def n_workers(self):
        return len(self.workers)


@dataclass(frozen=True)
class LoadAllocation:
    loads: tuple

    def __post_init__(self):
        if len(self.loads) < 1:
            raise ValueError("allocation must cover at least one worker")
        if any(int(l) != l or l < 0 for l in self.loads):
            raise ValueError(f"loads must be non-negative integers, got {self.loads}")

    @property
    def total(self):
        return int(sum(self.loads))

    def is_feasible(self, p):
        return self.total >= p


@dataclass(frozen=True)
class TaskRecord:
    index: int
    dispatch_time: float
    t_complete: float              # T_j, seconds since dispatch
    receipt_log: tuple             # (worker, rows, arrival) in completion order
    rows_received_at_completion: int
    feasible: bool
    loads: tuple
    clamped: bool = False
    decoded: object = None         # recovered A x in verification mode


@dataclass(frozen=True)
class EpisodeRecord:
    tasks: tuple
    states: tuple                  # per task: (N, 3N+2) raw state matrix
    actions: tuple                 # per task: loads
    rewards: tuple                 # per task scalar (identical across agents)
    total_time: float
    betas: tuple
    victim: int
    straggler_enabled: bool

    @property
    def infeasible_count(self):
        return sum(1 for t in self.tasks if not t.feasible)


def run_task(world, alloc, batch_size, enc, x, straggler, rng, cfg, index=0, encoded=None):
    """Simulate one task; returns (TaskRecord, advanced WorldState).

    batch_size None means one batch per worker (no batching).  encoded, when
    given, carries the materialized A_hat so the received rows are decoded
    and the result stored on the record (verification mode).
    """
    loads = tuple(int(l) for l in alloc.loads)
    n = len(loads)
    if n != world.n_workers or n != enc.n_workers:
        raise ValueError(
            f"allocation covers {n} workers, world has {world.n_workers}, code has {enc.n_workers}"
        )
    p = enc.p
    if any(l > p for l in loads):
        raise ValueError(f"loads may not exceed p={p}, got {loads}")
    if all(l == 0 for l in loads):
        raise DegenerateTaskError("all-zero allocation: no worker receives any rows")

    m = len(x)
    u_bits = cfg.bits_per_element
    sigma = cfg.noise_std_db
    min_d = cfg.min_distance_m
    mx, my = world.master.position
    mvx, mvy = world.master.velocity

    receipts = []  # (arrival, worker, batch index, rows, first row index)
    for i, load in enumerate(loads):
        if load == 0:
            continue
        kin, prof = world.workers[i]
        plan = plan_batches(load, load if batch_size is None else min(batch_size, load))
        nb = plan.count
        wrng = rng.substream("worker", i)
        if sigma > 0:
            omegas = wrng.gen.normal(0.0, sigma, nb + 1)
        else:
            omegas = np.zeros(nb + 1)
        us = wrng.gen.random(nb)

        px, py = kin.position
        vx, vy = kin.velocity
        d0 = max(math.hypot(px - mx, py - my), min_d)
        bc = m * u_bits / channel_capacity(d0, omegas[0], cfg)

        slow = 1.0
        if straggler.enabled and straggler.victim == i:
            slow = 1.0 + straggler.slowdown_factor
        alpha, beta = prof.alpha, prof.beta

        t_cpu = bc
        link_free = bc
        row_offset = i * p
        for k in range(nb):
            rows = plan.sizes[k]
            t_cpu += (alpha * rows - (rows / beta) * math.log1p(-us[k])) * slow
            begin = t_cpu if t_cpu > link_free else link_free
            dx = (px + vx * begin) - (mx + mvx * begin)
            dy = (py + vy * begin) - (my + mvy * begin)
            d = max(math.hypot(dx, dy), min_d)
            arrival = begin + rows * u_bits / channel_capacity(d, omegas[k + 1], cfg)
            link_free = arrival
            receipts.append((arrival, i, k, rows, row_offset))
            row_offset += rows

    receipts.sort(key=lambda r: (r[0], r[1], r[2]))
    total_rows = sum(loads)
    feasible = total_rows >= p
    if feasible:
        cum = 0
        for cut, (arrival, _, _, rows, _) in enumerate(receipts):
            cum += rows
            if cum >= p:
                t_done = arrival
                received = cum
                kept = receipts[: cut + 1]
                break
    else:
        t_done = receipts[-1][0]
        received = total_rows
        kept = receipts

    decoded = None
    if encoded is not None and feasible:
        idx = np.concatenate([np.arange(r0, r0 + rows) for _, _, _, rows, r0 in kept])
        decoded = decode(enc.g[idx, :], mat_vec(encoded.a_hat[idx, :], x))

    record = TaskRecord(
        index=index,
        dispatch_time=world.clock,
        t_complete=t_done,
        receipt_log=tuple((i, rows, arrival) for arrival, i, _, rows, _ in kept),
        rows_received_at_completion=received,
        feasible=feasible,
        loads=loads,
        decoded=decoded,
    )
    new_world = WorldState(
        master=advance(world.master, t_done),
        workers=tuple((advance(k, t_done), prof) for k, prof in world.workers),
        clock=world.clock + t_done,
    )
    return record, new_world


def rows_received_curve(rec):
    """Cumulative received rows R_j(t) as step samples (times, rows)."""
    times = np.array([a for _, _, a in rec.receipt_log])
    rows = np.cumsum([r for _, r, _ in rec.receipt_log])
    return times, rows


def sample_world(scenario, rng):
    """Draw the initial world for an episode from the scenario ranges.

    Returns (WorldState, betas, victim).  The straggler victim index is
    always drawn, so the environment is identical with and without
    straggler injection (paired comparisons).
    """
    n = scenario.n_workers
    gen = rng.gen
    betas = gen.uniform(scenario.beta_range[0], scenario.beta_range[1], n)
    pos = gen.uniform(scenario.pos_range[0], scenario.pos_range[1], (n + 1, 2))
    vel = gen.uniform(scenario.vel_range[0], scenario.vel_range[1], (n + 1, 2))
    victim = int(gen.integers(n))
    master = KinematicState(position=tuple(pos[0]), velocity=tuple(vel[0]))
    workers = tuple(
        (
            KinematicState(position=tuple(pos[i + 1]), velocity=tuple(vel[i + 1])),
            ComputeProfile(alpha=1.0 / betas[i], beta=float(betas[i])),
        )
        for i in range(n)
    )
    return WorldState(master=master, workers=workers, clock=0.0), tuple(betas), victim


def run_episode(
    scenario,
    allocator,
    rng,
    straggler_enabled=None,
    batch_size="scenario",
    penalty=200.0,
    penalty_boundary="lt",
    materialize=False,
):
    """Run K sequential tasks under one sampled environment.

    allocator is a callable (world, task_index) -> iterable of N loads;
    out-of-range loads are clamped to [0, p] and flagged.  batch_size is
    the scenario's unless overridden here (None = single batch per worker).
    Same (scenario, allocator, rng) reproduces the record bit for bit.
    """
    from . import marl  # deferred: marl trains on top of this module

    if straggler_enabled is None:
        straggler_enabled = scenario.straggler_enabled
    if batch_size == "scenario":
        batch_size = scenario.batch_size

    p = scenario.p_rows
    world, betas, victim = sample_world(scenario, rng.substream("env"))
    plan = StragglerPlan(
        enabled=straggler_enabled,
        victim=victim,
        slowdown_factor=scenario.straggler_slowdown,
    )
    enc = generate_encoding_matrix(
        p, scenario.n_workers, rng.substream("code"), materialize=materialize
    )
    encoded = None
    if materialize:
        a = rng.substream("taskmatrix").gen.standard_normal((p, scenario.m_cols))
        encoded = encode(enc, a)

    tasks, states_all, actions, rewards = [], [], [], []
    for j in range(scenario.k_tasks):
        states = np.stack([marl.build_state(world, i) for i in range(scenario.n_workers)])
        raw = allocator(world, j)
        loads, clamped = [], False
        for v in raw:
            li = int(round(v))
            if li < 0 or li > p:
                clamped = True
                li = min(max(li, 0), p)
            loads.append(li)
        alloc = LoadAllocation(tuple(loads))

        if materialize:
            x = rng.substream("payload", j).gen.standard_normal(scenario.m_cols)
        else:
            x = np.zeros(scenario.m_cols)  # payload values never affect timing

        try:
            rec, world = run_task(
                world, alloc, batch_size, enc, x, plan,
                rng.substream("task", j), scenario.comm, index=j, encoded=encoded,
            )
            if clamped:
                rec = TaskRecord(
                    index=rec.index, dispatch_time=rec.dispatch_time,
                    t_complete=rec.t_complete, receipt_log=rec.receipt_log,
                    rows_received_at_completion=rec.rows_received_at_completion,
                    feasible=rec.feasible, loads=rec.loads, clamped=True,
                    decoded=rec.decoded,
                )
        except DegenerateTaskError:
            # nothing dispatched: the task takes no time and completes nothing
            rec = TaskRecord(
                index=j, dispatch_time=world.clock, t_complete=0.0,
                receipt_log=(), rows_received_at_completion=0,
                feasible=False, loads=alloc.loads, clamped=clamped,
            )

        r = marl.reward(rec.t_complete, alloc, p, c=penalty, boundary=penalty_boundary)
        tasks.append(rec)
        states_all.append(states)
        actions.append(alloc.loads)
        rewards.append(r)

    return EpisodeRecord(
        tasks=tuple(tasks),
        states=tuple(states_all),
        actions=tuple(actions),
        rewards=tuple(rewards),
        total_time=float(sum(t.t_complete for t in tasks)),
        betas=betas,
        victim=victim,
        straggler_enabled=straggler_enabled,
    )


def episode_to_json(rec):
    """One JSON line per episode for downstream analysis."""
    payload = {
        "total_time_s": rec.total_time,
        "betas": list(rec.betas),
        "victim": rec.victim,
        "straggler": rec.straggler_enabled,
        "rewards": list(rec.rewards),
        "tasks": [
            {
                "index": t.index,
                "t_complete_s": t.t_complete,
                "loads": list(t.loads),
                "rows_at_completion": t.rows_received_at_completion,
                "feasible": t.feasible,
                "clamped": t.clamped,
            }
            for t in rec.tasks
        ],
    }
    return json.dumps(payload, separators=(",", ":"))
