"""Benchmark problem suite: objectives, gradients, Lipschitz data, Pareto maps.

All problems are smooth convex vector objectives F: R^n -> R^m.  A
:class:`ProblemInstance` bundles the evaluators with metadata the solvers
need: a gradient-Lipschitz constant (for constant step sizes), an axis-aligned
box for sampling starting points, and, where known, a parametrization of the
Pareto set used as ground truth in tests.

Gradients are returned as an (n, m) matrix whose columns are the per-objective
gradients, the layout the simplex QPs consume directly.

JOS1, SD and TOI4 follow their standard forms from the benchmark literature:

* JOS1 (Jin, Olhofer, Sendhoff, GECCO 2001):
  f1 = (1/n) sum x_i^2, f2 = (1/n) sum (x_i - 2)^2.
* SD, the four-variable truss design problem (Stadler & Dauer 1992):
  f1 = 2 x1 + sqrt(2) x2 + sqrt(2) x3 + x4,
  f2 = 2/x1 + 2 sqrt(2)/x2 + 2 sqrt(2)/x3 + 2/x4,
  sampled on the classical box [1,3] x [sqrt(2),3]^2 x [1,3] where f2 is
  smooth and convex; the stored Lipschitz constant is valid on that box.
* TOI4 (after Ph. Toint's quadratic test set, in its common bi-objective
  adaptation): f1 = x1^2 + x2^2 + 1, f2 = 0.5 (x1 - x2)^2 + 0.5 (x3 - x4)^2 + 1.

The two seeded tri-objective families draw their data from named Philox
streams so the same (n, p, delta, seed) always yields bit-identical problems:
stream 2j holds the matrix of objective j, stream 2j+1 its offset vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .simplex_qp import min_norm_in_hull

Array = np.ndarray


class InvalidConfig(ValueError):
    """Raised for out-of-range problem parameters or unknown registry keys."""


@dataclass(frozen=True)
class ProblemInstance:
    """A smooth convex multiobjective problem with gradient oracles.

    Attributes:
        name: registry key echoing the full parametrization.
        n, m: decision dimension and number of objectives.
        objectives: x -> F(x), shape (m,).
        gradient_columns: x -> (n, m) matrix of per-objective gradients.
        init_box: (low, high) arrays bounding the start-point sampling box.
        lipschitz: max over objectives of a gradient Lipschitz constant, or
            None when no global constant is available.
        pareto_param: optional map lambda in [0, 1] -> point on the Pareto
            set; every emitted point must be Pareto critical.
        objectives_batch: optional vectorized evaluator X (N, n) -> (N, m);
            used by grid-based verification oracles.
        merit_supported: False when the merit function's inner problem is not
            level-bounded (then merit evaluation refuses to run).
    """

    name: str
    n: int
    m: int
    objectives: Callable[[Array], Array]
    gradient_columns: Callable[[Array], Array]
    init_box: tuple[Array, Array]
    lipschitz: Optional[float] = None
    pareto_param: Optional[Callable[[float], Array]] = None
    objectives_batch: Optional[Callable[[Array], Array]] = None
    merit_supported: bool = True


def kkt_residual(prob, x, tol=1e-10):
    """Norm of the minimum-norm element of the gradient hull at ``x``.

    Zero exactly at Pareto-critical points (up to the QP tolerance).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (prob.n,):
        raise ValueError(f"expected a point of dimension {prob.n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point contains NaN or Inf")
    sol = min_norm_in_hull(prob.gradient_columns(x), tol)
    return float(np.linalg.norm(sol.point))


def finite_difference_gradients(prob, x, step=1e-6):
    """Central-difference Jacobian columns, shape (n, m), for gradient checks."""
    x = np.asarray(x, dtype=float)
    cols = np.zeros((prob.n, prob.m))
    for i in range(prob.n):
        h = step * max(1.0, abs(x[i]))
        e = np.zeros(prob.n)
        e[i] = h
        cols[i, :] = (prob.objectives(x + e) - prob.objectives(x - e)) / (2.0 * h)
    return cols


# ---------------------------------------------------------------------------
# shared machinery


def _box(lo, hi, n):
    return (np.full(n, float(lo)), np.full(n, float(hi)))


def _stream(seed, index):
    """Named Philox substream: reproducible across platforms and runs."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def spectral_norm(A, iters=100):
    """Largest singular value via power iteration on A^T A (fixed start)."""
    A = np.asarray(A, dtype=float)
    v = np.ones(A.shape[1]) / math.sqrt(A.shape[1])
    for _ in range(iters):
        w = A.T @ (A @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(np.linalg.norm(A @ v))


def _logsumexp_and_softmax(z):
    zmax = np.max(z)
    e = np.exp(z - zmax)
    total = e.sum()
    return float(zmax + np.log(total)), e / total


def logsumexp_family(name, mats, offs, delta, init_box, lipschitz=None, **kwargs):
    """Objectives f_j = delta/2 ||x||^2 + log sum_i exp(<a_i^j, x> - b_i^j)."""
    mats = [np.asarray(A, dtype=float) for A in mats]
    offs = [np.asarray(b, dtype=float) for b in offs]
    m = len(mats)
    n = mats[0].shape[1]
    if lipschitz is None:
        lipschitz = delta + max(spectral_norm(A) ** 2 for A in mats)

    def objectives(x):
        reg = 0.5 * delta * float(x @ x)
        return np.array(
            [reg + _logsumexp_and_softmax(A @ x - b)[0] for A, b in zip(mats, offs)]
        )

    def gradient_columns(x):
        cols = np.empty((n, m))
        for j, (A, b) in enumerate(zip(mats, offs)):
            _, sigma = _logsumexp_and_softmax(A @ x - b)
            cols[:, j] = delta * x + A.T @ sigma
        return cols

    def objectives_batch(X):
        out = np.empty((X.shape[0], m))
        reg = 0.5 * delta * np.einsum("ij,ij->i", X, X)
        for j, (A, b) in enumerate(zip(mats, offs)):
            Z = X @ A.T - b
            zmax = Z.max(axis=1)
            out[:, j] = reg + zmax + np.log(np.exp(Z - zmax[:, None]).sum(axis=1))
        return out

    return ProblemInstance(
        name=name,
        n=n,
        m=m,
        objectives=objectives,
        gradient_columns=gradient_columns,
        init_box=init_box,
        lipschitz=float(lipschitz),
        objectives_batch=objectives_batch,
        **kwargs,
    )


def least_squares_family(name, mats, offs, delta, init_box, **kwargs):
    """Objectives f_j = delta/2 ||x||^2 + 1/2 ||A^j x - b^j||^2."""
    mats = [np.asarray(A, dtype=float) for A in mats]
    offs = [np.asarray(b, dtype=float) for b in offs]
    m = len(mats)
    n = mats[0].shape[1]
    lipschitz = delta + max(spectral_norm(A) ** 2 for A in mats)

    def objectives(x):
        reg = 0.5 * delta * float(x @ x)
        return np.array(
            [reg + 0.5 * float(np.sum((A @ x - b) ** 2)) for A, b in zip(mats, offs)]
        )

    def gradient_columns(x):
        cols = np.empty((n, m))
        for j, (A, b) in enumerate(zip(mats, offs)):
            cols[:, j] = delta * x + A.T @ (A @ x - b)
        return cols

    return ProblemInstance(
        name=name,
        n=n,
        m=m,
        objectives=objectives,
        gradient_columns=gradient_columns,
        init_box=init_box,
        lipschitz=float(lipschitz),
        **kwargs,
    )


# ---------------------------------------------------------------------------
# bi-objective problems


def quadratic_pair():
    """Two shifted convex quadratics on R^2 with a known Pareto segment.

    f1 = (x1 - 1)^2 + x2^2 / 2 and f2 = x1^2 / 2 + (x2 - 1)^2; the Pareto set
    is parametrized by lambda -> (2 lambda / (1 + lambda),
    2 (1 - lambda) / (2 - lambda)) on [0, 1].
    """

    def objectives(x):
        return np.array(
            [(x[0] - 1.0) ** 2 + 0.5 * x[1] ** 2, 0.5 * x[0] ** 2 + (x[1] - 1.0) ** 2]
        )

    def gradient_columns(x):
        return np.array(
            [[2.0 * (x[0] - 1.0), x[0]], [x[1], 2.0 * (x[1] - 1.0)]]
        )

    def pareto_param(lam):
        return np.array([2.0 * lam / (1.0 + lam), 2.0 * (1.0 - lam) / (2.0 - lam)])

    def objectives_batch(X):
        f1 = (X[:, 0] - 1.0) ** 2 + 0.5 * X[:, 1] ** 2
        f2 = 0.5 * X[:, 0] ** 2 + (X[:, 1] - 1.0) ** 2
        return np.stack([f1, f2], axis=1)

    return ProblemInstance(
        name="quad2",
        n=2,
        m=2,
        objectives=objectives,
        gradient_columns=gradient_columns,
        init_box=_box(-2.0, 2.0, 2),
        lipschitz=2.0,
        pareto_param=pareto_param,
        objectives_batch=objectives_batch,
    )


_LSE2_A = np.array([[10.0, 10.0], [10.0, -10.0], [-10.0, -10.0], [-10.0, 10.0]])
_LSE2_B = np.array([0.0, -20.0, 0.0, 20.0])


def logsumexp_pair():
    """Mirrored log-sum-exp pair on R^2.

    f1 = lse(A x - b) and f2 = lse(A x + b) with the fixed 4 x 2 matrix A and
    offsets b = (0, -20, 0, 20); the Pareto set is the segment
    lambda -> (-1 + 2 lambda, 1 - 2 lambda).  Swapping the objectives equals
    negating x: f1(-x) = f2(x).
    """
    prob = logsumexp_family(
        "lse2",
        [_LSE2_A, _LSE2_A],
        [_LSE2_B, -_LSE2_B],
        delta=0.0,
        init_box=_box(-3.0, 3.0, 2),
        pareto_param=lambda lam: np.array([-1.0 + 2.0 * lam, 1.0 - 2.0 * lam]),
    )
    return prob


def jos1(n=2):
    """JOS1 with f1 = ||x||^2 / n and f2 = ||x - 2||^2 / n (Jin et al. 2001)."""
    if n < 2:
        raise InvalidConfig("jos1 requires n >= 2")

    def objectives(x):
        return np.array(
            [float(x @ x) / n, float((x - 2.0) @ (x - 2.0)) / n]
        )

    def gradient_columns(x):
        return np.stack([2.0 * x / n, 2.0 * (x - 2.0) / n], axis=1)

    def objectives_batch(X):
        f1 = np.einsum("ij,ij->i", X, X) / n
        D = X - 2.0
        f2 = np.einsum("ij,ij->i", D, D) / n
        return np.stack([f1, f2], axis=1)

    return ProblemInstance(
        name="jos1" if n == 2 else f"jos1:n={n}",
        n=n,
        m=2,
        objectives=objectives,
        gradient_columns=gradient_columns,
        init_box=_box(-2.0, 2.0, n),
        lipschitz=2.0 / n,
        pareto_param=lambda lam: np.full(n, 2.0 * lam),
        objectives_batch=objectives_batch,
    )


_SD_LINEAR = np.array([2.0, math.sqrt(2.0), math.sqrt(2.0), 1.0])
_SD_RECIP = np.array([2.0, 2.0 * math.sqrt(2.0), 2.0 * math.sqrt(2.0), 2.0])


def sd():
    """Four-bar truss problem of Stadler & Dauer (1992), smooth form.

    Linear volume objective against a sum of reciprocals; convex for x > 0.
    Start points are sampled from the classical design box, on which the
    reciprocal objective has gradient Lipschitz constant 4.
    """
    lo = np.array([1.0, math.sqrt(2.0), math.sqrt(2.0), 1.0])
    hi = np.full(4, 3.0)

    def objectives(x):
        if np.any(x <= 0.0):
            # extended-value form: line searches treat the orthant boundary
            # as an infinite barrier and backtrack instead of crashing
            return np.array([float(_SD_LINEAR @ x), np.inf])
        return np.array([float(_SD_LINEAR @ x), float(np.sum(_SD_RECIP / x))])

    def gradient_columns(x):
        if np.any(x <= 0.0):
            raise ValueError("sd gradients are defined on the positive orthant")
        return np.stack([_SD_LINEAR, -_SD_RECIP / (x * x)], axis=1)

    def pareto_param(lam):
        # Critical points balance 2 theta = (1 - theta) * 2 / x1^2 and the
        # analogous per-coordinate conditions, giving x = c (1, r, r, r)
        # with r = sqrt(2); c in [1, 3] stays inside the smooth region.
        c = 1.0 + 2.0 * lam
        r = math.sqrt(2.0)
        return np.array([c, r * c, r * c, r * c])

    return ProblemInstance(
        name="sd",
        n=4,
        m=2,
        objectives=objectives,
        gradient_columns=gradient_columns,
        init_box=(lo, hi),
        lipschitz=4.0,
        pareto_param=pareto_param,
    )


def toi4():
    """TOI4: two convex quadratics on R^4 (Toint test-set adaptation)."""

    def objectives(x):
        return np.array(
            [
                x[0] ** 2 + x[1] ** 2 + 1.0,
                0.5 * ((x[0] - x[1]) ** 2 + (x[2] - x[3]) ** 2) + 1.0,
            ]
        )

    def gradient_columns(x):
        d12 = x[0] - x[1]
        d34 = x[2] - x[3]
        return np.array(
            [
                [2.0 * x[0], d12],
                [2.0 * x[1], -d12],
                [0.0, d34],
                [0.0, -d34],
            ]
        )

    return ProblemInstance(
        name="toi4",
        n=4,
        m=2,
        objectives=objectives,
        gradient_columns=gradient_columns,
        init_box=_box(-2.0, 5.0, 4),
        lipschitz=2.0,
        pareto_param=lambda lam: np.array([0.0, 0.0, -1.0 + 2.0 * lam, -1.0 + 2.0 * lam]),
    )


# ---------------------------------------------------------------------------
# seeded tri-objective families


def _check_family_args(n, p, delta):
    if n < 1 or p < 1:
        raise InvalidConfig("n and p must be positive")
    if delta < 0:
        raise InvalidConfig("delta must be nonnegative")


def regularized_logsumexp_triple(n=200, p=100, delta=0.05, seed=0):
    """Three ridge-regularized log-sum-exp objectives with uniform[-1,1] data.

    Each f_j is delta-strongly convex for delta > 0.  With delta == 0 the
    objectives are unbounded below in some directions' complement sets, the
    merit function's inner problem loses level boundedness, and merit
    evaluation is disabled.
    """
    _check_family_args(n, p, delta)
    mats, offs = [], []
    for j in range(3):
        mats.append(_stream(seed, 2 * j).uniform(-1.0, 1.0, size=(p, n)))
        offs.append(_stream(seed, 2 * j + 1).uniform(-1.0, 1.0, size=p))
    return logsumexp_family(
        f"ex1:n={n},p={p},delta={delta:g},seed={seed}",
        mats,
        offs,
        delta=float(delta),
        init_box=_box(-2.0, 2.0, n),
        merit_supported=delta > 0.0,
    )


def regularized_least_squares_triple(n=100, p=100, delta=0.05, seed=0):
    """Three ridge-regularized least-squares objectives with uniform[0,1] data."""
    _check_family_args(n, p, delta)
    mats, offs = [], []
    for j in range(3):
        mats.append(_stream(seed, 2 * j).uniform(0.0, 1.0, size=(p, n)))
        offs.append(_stream(seed, 2 * j + 1).uniform(0.0, 1.0, size=p))
    return least_squares_family(
        f"ex2:n={n},p={p},delta={delta:g},seed={seed}",
        mats,
        offs,
        delta=float(delta),
        init_box=_box(-2.0, 2.0, n),
    )


# ---------------------------------------------------------------------------
# registry

_FACTORIES = {
    "quad2": (quadratic_pair, ()),
    "lse2": (logsumexp_pair, ()),
    "jos1": (jos1, ("n",)),
    "sd": (sd, ()),
    "toi4": (toi4, ()),
    "ex1": (regularized_logsumexp_triple, ("n", "p", "delta", "seed")),
    "ex2": (regularized_least_squares_triple, ("n", "p", "delta", "seed")),
}

_INT_PARAMS = {"n", "p", "seed"}


def available_problems():
    """Registry names with their optional key parameters."""
    return {name: params for name, (_, params) in sorted(_FACTORIES.items())}


def get_problem(key):
    """Build a problem from a registry key like ``ex1:n=20,p=10,seed=3``.

    Parameters omitted from the key take the factory defaults; unknown names
    or parameters raise :class:`InvalidConfig`.
    """
    name, _, spec = key.partition(":")
    name = name.strip()
    if name not in _FACTORIES:
        raise InvalidConfig(
            f"unknown problem {name!r}; available: {', '.join(sorted(_FACTORIES))}"
        )
    factory, allowed = _FACTORIES[name]
    kwargs = {}
    if spec:
        for item in spec.split(","):
            pname, eq, raw = item.partition("=")
            pname = pname.strip()
            if not eq or pname not in allowed:
                raise InvalidConfig(f"problem {name!r} does not take parameter {item!r}")
            kwargs[pname] = int(raw) if pname in _INT_PARAMS else float(raw)
    return factory(**kwargs)
