"""Gaussian encoding of the task matrix, batch partitioning, and decoding.

The task owner encodes A (p x m) as A_hat = G A where G is a tall Gaussian
matrix.  Any p rows of G are full rank with probability 1, so the product
A x is recoverable by least squares from any p encoded result rows,
whichever workers they came from.

One G of q_max = N p rows is generated per run; worker i owns the block of
rows [i p, (i+1) p) and a load of l rows means the first l rows of that
block.  This fixed superset is equivalent to re-encoding with q = sum(l)
rows per task and avoids repeating the encoding cost.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import as_matrix, as_vector, least_squares_solve, mat_vec


class InsufficientRowsError(ValueError):
    """Fewer than p encoded rows received: the task result is undecodable."""


@dataclass(frozen=True)
class EncodingMatrix:
    """Encoding matrix handle.

    g is the (q_max, p) Gaussian matrix, or None when the run only needs
    event timing and never touches the numerics (see generate_encoding_matrix).
    """

    g: object
    p: int
    n_workers: int

    @property
    def block_size(self):
        return self.p

    @property
    def q_max(self):
        return self.n_workers * self.p


@dataclass(frozen=True)
class EncodedTaskMatrix:
    """A_hat = G A together with its provenance."""

    a_hat: np.ndarray
    enc: EncodingMatrix
    a: np.ndarray


@dataclass(frozen=True)
class BatchPlan:
    """Split of a load of l rows into ceil(l / b) batches of at most b rows."""

    load: int
    batch_size: int
    sizes: tuple

    @property
    def count(self):
        return len(self.sizes)


def generate_encoding_matrix(p, n_workers, rng, materialize=True):
    """Draw the (N p, p) i.i.d. standard Gaussian encoding matrix.

    With materialize=False only the handle is built (g is None); timing-only
    simulations track row counts and never multiply, which matters at full
    scale where G would hold N p^2 doubles.
    """
    p = int(p)
    n_workers = int(n_workers)
    if p < 1 or n_workers < 1:
        raise ValueError(f"dimensions must be positive, got p={p}, n_workers={n_workers}")
    g = None
    if materialize:
        g = rng.gen.standard_normal((n_workers * p, p))
    return EncodingMatrix(g=g, p=p, n_workers=n_workers)


def encode(enc, a):
    """A_hat = G A."""
    if enc.g is None:
        raise ValueError("encoding matrix was generated with materialize=False")
    a = as_matrix(a)
    if a.shape[0] != enc.p:
        raise ValueError(f"dimension mismatch: A has {a.shape[0]} rows, code expects {enc.p}")
    return EncodedTaskMatrix(a_hat=enc.g @ a, enc=enc, a=a)


def worker_rows(enc, worker_id, load):
    """Row indices of A_hat assigned to a worker: the first `load` rows of its block."""
    if not 0 <= worker_id < enc.n_workers:
        raise ValueError(f"worker_id {worker_id} out of range [0, {enc.n_workers})")
    load = int(load)
    if load < 0:
        raise ValueError(f"negative load: {load}")
    if load > enc.block_size:
        raise ValueError(f"load {load} exceeds the per-worker block of {enc.block_size} rows")
    start = worker_id * enc.p
    return range(start, start + load)


def plan_batches(load, batch_size):
    """Partition a load of l rows into w = ceil(l / b) batches.

    All batches have b rows except possibly the last, which has
    l - (w - 1) b.
    """
    load = int(load)
    batch_size = int(batch_size)
    if load < 1 or batch_size < 1:
        raise ValueError(f"load and batch size must be >= 1, got ({load}, {batch_size})")
    w = -(-load // batch_size)
    sizes = [batch_size] * (w - 1)
    sizes.append(load - (w - 1) * batch_size)
    return BatchPlan(load=load, batch_size=batch_size, sizes=tuple(sizes))


def decode(g_received, y_received):
    """Recover A x from >= p received encoded rows by least squares.

    g_received holds the encoding rows matching y_received in order.  The
    system is consistent by construction, so the least-squares solution is
    exact up to floating error.
    """
    g_received = as_matrix(g_received)
    y_received = as_vector(y_received)
    q, p = g_received.shape
    if q < p:
        raise InsufficientRowsError(f"received {q} rows, need at least {p} to decode")
    return least_squares_solve(g_received, y_received)


def decode_from_receipts(encoded, x, receipts, p):
    """Materialized end-to-end check: encoded rows -> worker results -> decode.

    receipts is an iterable of (worker_id, row_indices) in arrival order.
    Takes the first rows reaching a cumulative count of p and decodes them.
    Used by verification-mode tests; the timing engine never calls this.
    """
    x = as_vector(x)
    rows = []
    for _, idx in receipts:
        rows.extend(idx)
        if len(rows) >= p:
            break
    if len(rows) < p:
        raise InsufficientRowsError(f"received {len(rows)} rows, need at least {p} to decode")
    g_sub = encoded.enc.g[rows, :]
    y_sub = mat_vec(encoded.a_hat[rows, :], x)
    return decode(g_sub, y_sub)
