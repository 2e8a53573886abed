"""Priority vectors and inconsistency measures for numeric reciprocal matrices."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

RECIPROCITY_RTOL = 1e-12
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1000

# Upper-triangle values of a random reciprocal matrix.
RANDOM_ENTRY_VALUES = np.array([1.0 / k for k in range(9, 1, -1)] + [float(k) for k in range(1, 10)])
RI_CHUNK = 20_000


class InvalidMatrixError(ValueError):
    pass


class NonConvergenceError(ArithmeticError):
    def __init__(self, message, last_iterate, iterations):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


def check_reciprocal(a):
    """Coerce ``a`` to a float array and verify it is a positive reciprocal matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidMatrixError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise InvalidMatrixError("entries must be positive and finite")
    if np.any(np.diag(a) != 1.0):
        raise InvalidMatrixError("diagonal entries must equal 1")
    prod = a * a.T
    if not np.allclose(prod, 1.0, rtol=0.0, atol=RECIPROCITY_RTOL):
        i, j = np.unravel_index(np.argmax(np.abs(prod - 1.0)), prod.shape)
        raise InvalidMatrixError(f"a[{i},{j}] * a[{j},{i}] = {prod[i, j]!r} != 1")
    return a


def _mean_rayleigh_ratio(a, w):
    return float(np.mean((a @ w) / w))


def eigen_priority(a, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Principal right eigenvector by power iteration from the uniform vector.

    Iterates are normalized to sum 1; iteration stops once two successive
    iterates differ by less than ``tol`` in max norm.  ``lambda_max`` is the
    mean of the component-wise ratios ``(A w)_i / w_i``.

    Returns ``(weights, lambda_max, iterations)``.
    """
    a = check_reciprocal(a)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = a.shape[0]
    w = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        nxt = a @ w
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - w)) < tol:
            return nxt, _mean_rayleigh_ratio(a, nxt), it
        w = nxt
    raise NonConvergenceError(
        f"power iteration did not converge in {max_iter} steps", w, max_iter
    )


def geomean_priority(a):
    """Row geometric means, normalized to sum 1."""
    a = check_reciprocal(a)
    g = np.exp(np.log(a).mean(axis=1))
    return g / g.sum()


def is_consistent(a, rtol=1e-9):
    """True when a_ij * a_jk == a_ik for every triple (within ``rtol``)."""
    a = np.asarray(a, dtype=float)
    implied = a[:, :, None] * a[None, :, :]
    return bool(np.allclose(implied, a[:, None, :], rtol=rtol, atol=0.0))


@dataclass(frozen=True)
class RandomIndexTable:
    ri: dict
    samples: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "ri", {int(k): float(v) for k, v in self.ri.items()})

    def __getitem__(self, n):
        try:
            return self.ri[n]
        except KeyError:
            raise KeyError(f"no random index for n={n} (table covers {sorted(self.ri)})") from None

    def to_json(self):
        return json.dumps(
            {"seed": self.seed, "samples": self.samples,
             "ri": {str(k): self.ri[k] for k in sorted(self.ri)}},
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(doc["ri"], int(doc["samples"]), int(doc["seed"]))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


_DEFAULT_RI = None


def default_ri_table():
    """The shipped table (seed 42, 500000 samples, n = 3..15)."""
    global _DEFAULT_RI
    if _DEFAULT_RI is None:
        text = resources.files("bagins").joinpath("data/ri_table.json").read_text("utf-8")
        _DEFAULT_RI = RandomIndexTable.from_json(text)
    return _DEFAULT_RI


@dataclass(frozen=True)
class ConsistencyReport:
    lambda_max: float
    ci: float
    cr: float
    method: str
    iterations: int
    weights: tuple = ()


def consistency_index(lambda_max, n):
    if n < 2:
        return 0.0
    return max(0.0, (lambda_max - n) / (n - 1))


def consistency_ratio(ci, n, ri):
    if ci == 0.0 or n < 3:
        return 0.0
    return ci / ri[n]


def consistency(a, ri=None, method="eigenvector", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Priorities plus lambda_max, CI and CR of ``a``.

    With ``method="geometric_mean"`` lambda_max is the mean Rayleigh ratio at
    the geometric-mean weights.  CR is 0 whenever CI is 0, and for n < 3.
    """
    a = check_reciprocal(a)
    n = a.shape[0]
    if method == "eigenvector":
        w, lam, iters = eigen_priority(a, tol, max_iter)
    elif method == "geometric_mean":
        w, iters = geomean_priority(a), 0
        lam = _mean_rayleigh_ratio(a, w)
    else:
        raise ValueError(f"unknown method {method!r}")
    ci = consistency_index(lam, n)
    if ri is None and n >= 3 and ci > 0:
        ri = default_ri_table()
    cr = consistency_ratio(ci, n, ri)
    return ConsistencyReport(lam, ci, cr, method, iters, tuple(float(x) for x in w))


def random_reciprocal(rng, n, size):
    """``size`` random reciprocal matrices with upper entries drawn from the 17 scale values."""
    iu = np.triu_indices(n, 1)
    upper = rng.choice(RANDOM_ENTRY_VALUES, size=(size, len(iu[0])))
    m = np.ones((size, n, n))
    m[:, iu[0], iu[1]] = upper
    m[:, iu[1], iu[0]] = 1.0 / upper
    return m


def batch_lambda_max(mats):
    """Perron root of each matrix in a stack (LAPACK eigenvalues)."""
    return np.linalg.eigvals(mats).real.max(axis=-1)


def derive_random_index(n, samples, seed):
    """Mean CI of ``samples`` random reciprocal matrices of dimension ``n``.

    Samples are drawn in fixed-size chunks, each from its own spawned
    substream, so the result depends only on ``(n, samples, seed)``.
    """
    if n < 3:
        raise ValueError("random index is defined for n >= 3")
    if samples < 10_000:
        raise ValueError("samples must be >= 10000")
    n_chunks = math.ceil(samples / RI_CHUNK)
    streams = np.random.SeedSequence([seed, n]).spawn(n_chunks)
    sums = []
    for k, ss in enumerate(streams):
        size = min(RI_CHUNK, samples - k * RI_CHUNK)
        lam = batch_lambda_max(random_reciprocal(np.random.default_rng(ss), n, size))
        sums.append(math.fsum((lam - n) / (n - 1)))
    return math.fsum(sums) / samples


def build_ri_table(dims=range(3, 16), samples=500_000, seed=42):
    return RandomIndexTable({n: derive_random_index(n, samples, seed) for n in dims}, samples, seed)
