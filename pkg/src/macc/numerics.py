"""Dense linear algebra and seeded random sampling used by every other module.

Matrices and vectors are plain numpy arrays (row-major, float64). The only
nontrivial pieces are the least-squares solver used for decoding and the
splittable RngStream that gives each stochastic event in the simulator its
own reproducible substream.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


class SingularSystemError(ValueError):
    """Raised when a least-squares system is too ill-conditioned to trust.

    Carries the condition estimate of the normal-equation matrix in
    ``condition``.
    """

    def __init__(self, condition):
        self.condition = condition
        super().__init__(
            "least-squares system is numerically singular "
            f"(cond(G^T G) ~ {condition:.3e})"
        )


def as_matrix(a):
    """Coerce to a 2-d float64 array and check every entry is finite."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


def as_vector(x):
    """Coerce to a 1-d float64 array and check every entry is finite."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got ndim={arr.ndim}")
    if arr.size < 1:
        raise ValueError("vector must have positive length")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite entries")
    return arr


def mat_vec(a, x):
    """Product A x for A (p, m) and x (m,)."""
    a = as_matrix(a)
    x = as_vector(x)
    if a.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: A is {a.shape}, x has length {x.shape[0]}")
    return a @ x


def least_squares_solve(g, y, cond_cap=1.0e12):
    """Solve min_z ||G z - y||_2 for a tall, well-conditioned G.

    This is the decoding primitive (G^T G)^{-1} G^T y, computed through a
    QR-based least-squares routine rather than the normal equations.  The
    condition number of G^T G (estimated as cond(G)^2) must stay below
    ``cond_cap``, otherwise SingularSystemError is raised.
    """
    g = as_matrix(g)
    y = as_vector(y)
    q, p = g.shape
    if y.shape[0] != q:
        raise ValueError(f"dimension mismatch: G is {g.shape}, y has length {y.shape[0]}")
    if q < p:
        raise ValueError(f"underdetermined system: {q} rows < {p} unknowns")
    cond_g = np.linalg.cond(g)
    cond_gram = cond_g * cond_g
    if not np.isfinite(cond_gram) or cond_gram > cond_cap:
        raise SingularSystemError(cond_gram)
    z, _, _, _ = np.linalg.lstsq(g, y, rcond=None)
    return z


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def _token_to_u64(token):
    if isinstance(token, (bool, float)):
        raise TypeError(f"substream tokens must be int or str, got {type(token).__name__}")
    if isinstance(token, (int, np.integer)):
        return int(token) & _MASK64
    if isinstance(token, str):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"substream tokens must be int or str, got {type(token).__name__}")


class RngStream:
    """Counter-based random stream keyed by (seed, stream id).

    Identical (seed, stream) pairs reproduce identical draw sequences on any
    platform (Philox4x64 underneath).  ``substream`` derives an independent
    child stream from a path of tokens, so each (worker, task, batch) event
    in the simulator can own its noise without coordination:

        rng = RngStream(seed)
        env = rng.substream("env")
        w3 = rng.substream("task", 7, "worker", 3)

    Substream derivation is pure: it depends only on (seed, stream, tokens),
    never on how many draws were consumed.
    """

    __slots__ = ("seed", "stream", "gen")

    def __init__(self, seed, stream=0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = (self.stream << 64) | self.seed
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, *tokens):
        if not tokens:
            raise ValueError("substream requires at least one token")
        s = self.stream
        for token in tokens:
            s = _splitmix64(s ^ _token_to_u64(token))
        return RngStream(self.seed, s)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def sample_uniform(lo, hi, rng, size=None):
    """Uniform draw(s) from [lo, hi]."""
    if lo > hi:
        raise ValueError(f"empty range: lo={lo} > hi={hi}")
    if lo == hi:
        return float(lo) if size is None else np.full(size, float(lo))
    out = rng.gen.uniform(lo, hi, size=size)
    return float(out) if size is None else out


def sample_gaussian(mean, std, rng, size=None):
    """Gaussian draw(s) with the given mean and standard deviation."""
    if std < 0:
        raise ValueError(f"negative standard deviation: {std}")
    if std == 0:
        return float(mean) if size is None else np.full(size, float(mean))
    out = rng.gen.normal(mean, std, size=size)
    return float(out) if size is None else out
