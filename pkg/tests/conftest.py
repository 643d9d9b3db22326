"""Shared test fixtures and independent verification oracles.

The oracles here deliberately avoid the library's solution paths: simplex
QPs are checked against dense lattice enumeration, gradients against central
differences, and fronts against dense samplings of the known parametrized
Pareto sets.
"""

from functools import lru_cache

import numpy as np
import pytest

from mograd.problems import ProblemInstance


@lru_cache(maxsize=8)
def _simplex_lattice(m, resolution):
    """All simplex points with coordinates on the grid {0, 1/K, ..., 1}."""
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        t = np.arange(resolution + 1) / resolution
        return np.stack([t, 1.0 - t], axis=1)
    if m == 3:
        i, j = np.meshgrid(
            np.arange(resolution + 1), np.arange(resolution + 1), indexing="ij"
        )
        keep = i + j <= resolution
        t1 = i[keep] / resolution
        t2 = j[keep] / resolution
        return np.stack([t1, t2, 1.0 - t1 - t2], axis=1)
    raise NotImplementedError("lattice oracle covers m <= 3")


def grid_min_hull_objective(G, scale, v, resolution=1000):
    """Lattice minimum of q(theta) = 0.5 ||scale * G theta - v||^2.

    Pure enumeration over the simplex grid; independent of the projected
    gradient solver under test.
    """
    G = np.asarray(G, dtype=float)
    v = np.asarray(v, dtype=float)
    lattice = _simplex_lattice(G.shape[1], resolution)
    S = scale * G
    H = S.T @ S
    c = S.T @ v
    M = lattice @ H
    quad = 0.5 * np.einsum("ij,ij->i", M, lattice)
    return float(np.min(quad - lattice @ c) + 0.5 * (v @ v))


def grid_min_hull_objective_pair(G, v, resolution=1000):
    """Lattice minima of 0.5||G theta||^2 and 0.5||G theta - v||^2 together.

    Both objectives share the Gram quadratic, so one lattice pass serves the
    min-norm check and the projection check of the same instance.
    """
    G = np.asarray(G, dtype=float)
    v = np.asarray(v, dtype=float)
    lattice = _simplex_lattice(G.shape[1], resolution)
    M = lattice @ (G.T @ G)
    quad = 0.5 * np.einsum("ij,ij->i", M, lattice)
    min_norm = float(np.min(quad))
    projected = float(np.min(quad - lattice @ (G.T @ v)) + 0.5 * (v @ v))
    return min_norm, projected


def grid_min_simplex_distance(w, resolution=1000):
    """Lattice minimum of ||theta - w||^2 over the simplex."""
    w = np.asarray(w, dtype=float)
    lattice = _simplex_lattice(w.size, resolution)
    D = lattice - w
    return float(np.min(np.einsum("ij,ij->i", D, D)))


def single_objective_problem(fun, grad, n, name="single", lipschitz=None):
    """Wrap a scalar objective as a one-objective ProblemInstance."""
    return ProblemInstance(
        name=name,
        n=n,
        m=1,
        objectives=lambda x: np.array([fun(x)]),
        gradient_columns=lambda x: np.asarray(grad(x), dtype=float).reshape(-1, 1),
        init_box=(np.full(n, -1.0), np.full(n, 1.0)),
        lipschitz=lipschitz,
    )


def spd_quadratic_problem(seed=42, n=5):
    """Random SPD quadratic 0.5 x^T Q x as a single-objective instance."""
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    Q = M @ M.T + n * np.eye(n)
    prob = single_objective_problem(
        lambda x: 0.5 * float(x @ Q @ x),
        lambda x: Q @ x,
        n,
        name="spd_quadratic",
        lipschitz=float(np.linalg.eigvalsh(Q)[-1]),
    )
    return prob, Q


def dense_front_distance(prob, f_point, samples=20001):
    """Objective-space distance from f_point to the parametrized front."""
    lams = np.linspace(0.0, 1.0, samples)
    front = np.array([prob.objectives(prob.pareto_param(lam)) for lam in lams])
    return float(np.min(np.linalg.norm(front - np.asarray(f_point), axis=1)))


def pareto_segment_distance(prob, x, samples=20001):
    """Decision-space distance from x to the parametrized Pareto set."""
    lams = np.linspace(0.0, 1.0, samples)
    seg = np.array([prob.pareto_param(lam) for lam in lams])
    return float(np.min(np.linalg.norm(seg - np.asarray(x), axis=1)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240831)
