"""Experiment drivers: paired-seed evaluation, scheme comparison, batch sweeps.

Episode e of any run draws from RngStream(seed).substream("episode", e),
which depends only on (seed, e); schemes evaluated at the same seed
therefore see identical environments (same betas, positions, velocities,
straggler victim) and differ only in their allocation decisions.

Baselines dispatch each task as a single batch per worker (the classical
one-shot protocol); the learned scheme streams results with the scenario
batch size.  Batch sweeps override the batch size for whichever scheme
they run.

All CSV output starts with a "# config=... seed=..." metadata comment and
formats floats with repr(), so a rerun with the same config and seed is
byte-identical.
"""

import numpy as np

from . import marl
from .allocators import hcmm_alloc, load_balanced_alloc, uniform_alloc
from .config import config_digest
from .numerics import RngStream
from .simcore import episode_to_json, run_episode

SCHEMES = ("uniform", "load-balanced", "hcmm", "marl")

METRICS_COLUMNS = (
    "scenario", "scheme", "seed", "episode",
    "total_time_s", "mean_task_time_s", "infeasible_count",
)


def make_allocator(scheme, scenario, agents=None):
    """Allocator callable for run_episode; reads profiles off the world."""
    p = scenario.p_rows
    n = scenario.n_workers
    if scheme == "uniform":
        loads = uniform_alloc(p, n).loads
        return lambda world, j: loads
    if scheme == "load-balanced":
        return lambda world, j: load_balanced_alloc(
            p, [prof for _, prof in world.workers]
        ).loads
    if scheme == "hcmm":
        return lambda world, j: hcmm_alloc(p, [prof for _, prof in world.workers]).loads
    if scheme == "marl":
        if agents is None:
            raise ValueError("the marl scheme needs trained agents (checkpoint)")
        return marl.policy_allocator(agents, scenario)
    raise ValueError(f"unknown scheme '{scheme}' (have {', '.join(SCHEMES)})")


def default_batch_size(scheme, scenario):
    """Single batch per worker for baselines, scenario batching for marl."""
    return scenario.batch_size if scheme == "marl" else None


def evaluate_scheme(
    scenario, scheme, episodes, seed,
    agents=None, straggler=None, batch_size="default",
):
    """Run paired-seed episodes under one scheme; returns EpisodeRecords."""
    if batch_size == "default":
        batch_size = default_batch_size(scheme, scenario)
    allocator = make_allocator(scheme, scenario, agents=agents)
    root = RngStream(seed)
    records = []
    for e in range(episodes):
        records.append(
            run_episode(
                scenario,
                allocator,
                root.substream("episode", e),
                straggler_enabled=straggler,
                batch_size=batch_size,
            )
        )
    return records


def total_times(records):
    return np.array([r.total_time for r in records])


def summarize(records):
    """(mean, sample std, 95% normal-approximation halfwidth) of total times."""
    t = total_times(records)
    mean = float(t.mean())
    std = float(t.std(ddof=1)) if len(t) > 1 else 0.0
    half = 1.96 * std / float(np.sqrt(len(t))) if len(t) > 1 else 0.0
    return mean, std, half


def compare_schemes(scenario, schemes, episodes, seed, agents=None, straggler=None):
    """Evaluate several schemes against identical per-episode environments."""
    if len(schemes) < 2:
        raise ValueError("compare needs at least two schemes")
    return {
        scheme: evaluate_scheme(
            scenario, scheme, episodes, seed, agents=agents, straggler=straggler
        )
        for scheme in schemes
    }


def sweep_batch(scenario, scheme, batch_sizes, episodes, seed, agents=None, straggler=None):
    """Evaluate one scheme at several batch sizes with paired seeds."""
    if any(b < 1 for b in batch_sizes):
        raise ValueError(f"batch sizes must be >= 1, got {batch_sizes}")
    out = {}
    for b in batch_sizes:
        out[int(b)] = evaluate_scheme(
            scenario, scheme, episodes, seed,
            agents=agents, straggler=straggler, batch_size=int(b),
        )
    return out


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows, digest, seed):
    """CSV with a metadata comment line; floats via repr for byte stability."""
    lines = [f"# config={digest} seed={seed}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def metrics_rows(scenario, scheme, seed, records):
    rows = []
    for e, rec in enumerate(records):
        rows.append((
            scenario.name, scheme, seed, e,
            rec.total_time,
            rec.total_time / scenario.k_tasks,
            rec.infeasible_count,
        ))
    return rows


def write_metrics_csv(path, scenario, scheme, seed, records, digest):
    write_csv(path, METRICS_COLUMNS, metrics_rows(scenario, scheme, seed, records), digest, seed)


def write_summary_csv(path, scenario, scheme, seed, records, digest):
    mean, std, half = summarize(records)
    header = ("scenario", "scheme", "seed", "episodes",
              "mean_total_time_s", "std_total_time_s", "ci95_halfwidth_s")
    rows = [(scenario.name, scheme, seed, len(records), mean, std, half)]
    write_csv(path, header, rows, digest, seed)


def write_comparison_csv(path, scenario, seed, results, digest):
    header = ("scenario", "scheme", "seed", "episodes",
              "mean_total_time_s", "std_total_time_s", "ci95_halfwidth_s")
    rows = []
    for scheme, records in results.items():
        mean, std, half = summarize(records)
        rows.append((scenario.name, scheme, seed, len(records), mean, std, half))
    write_csv(path, header, rows, digest, seed)


def write_plotdata_csv(path, results, digest, seed):
    header = ("scheme", "mean_total_time_s")
    rows = [(scheme, summarize(records)[0]) for scheme, records in results.items()]
    write_csv(path, header, rows, digest, seed)


def write_sweep_csv(path, scenario, scheme, seed, sweep, digest):
    header = ("scenario", "scheme", "seed", "batch_size", "episodes",
              "mean_total_time_s", "std_total_time_s")
    rows = []
    for b, records in sweep.items():
        mean, std, _ = summarize(records)
        rows.append((scenario.name, scheme, seed, b, len(records), mean, std))
    write_csv(path, header, rows, digest, seed)


def write_curve_csv(path, curve, digest, seed):
    header = ("iteration", "mean_total_reward")
    rows = [(i, v) for i, v in enumerate(curve)]
    write_csv(path, header, rows, digest, seed)


def write_episodes_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(episode_to_json(rec) + "\n")


def run_digest(scenario, train=None):
    return config_digest(scenario, train)
