"""Simplex-constrained quadratic subproblems over gradient hulls.

Every solver and flow integrator in this package repeatedly solves one of two
small quadratic programs over the unit simplex.  Given a matrix ``G`` whose
columns ``g_1, ..., g_m`` are per-objective gradients at a point, the hull
``C = conv{g_1, ..., g_m}`` plays the role the gradient plays in the
single-objective case:

* ``min_norm_in_hull`` computes the projection of the origin onto ``C``,
  i.e. it minimizes ``0.5 * ||G @ theta||^2`` over the simplex.  Its norm is
  the KKT residual; its negation is the common descent direction.
* ``project_onto_scaled_hull`` computes the nearest point of ``scale * C``
  to an arbitrary vector ``v``, i.e. it minimizes
  ``0.5 * ||scale * G @ theta - v||^2`` over the simplex.

Both are solved by accelerated projected gradient over the simplex with a
function-value restart, using the exact sort-and-threshold Euclidean
projection.  Termination is certified by the Frank-Wolfe gap

    gap(theta) = max_i <p - v, p - scale * g_i>,   p = scale * G @ theta,

which upper-bounds the objective suboptimality, so a returned gap below the
tolerance is a genuine optimality certificate.  For ``m == 1`` and ``m == 2``
closed forms replace the iteration (bi-objective problems dominate the
benchmark suite).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10

# Relative safeguard: with gradient data of magnitude ~Z the Frank-Wolfe gap
# carries rounding noise of order eps * Z^2, so a purely absolute tolerance is
# unreachable for large-scale data.  The effective tolerance is
# max(tol, _REL_TOL * quadratic_scale).
_REL_TOL = 1e-12


class NonFiniteInput(ValueError):
    """Raised when a gradient matrix or target vector contains NaN/Inf."""


@dataclass(frozen=True)
class HullSolution:
    """Result of a simplex QP over a (scaled) gradient hull.

    Attributes:
        weights: simplex vector theta, nonnegative with sum 1.
        point: the hull element ``scale * G @ weights``.
        gap: Frank-Wolfe optimality gap at termination (certified bound on
            the objective suboptimality; nonnegative).
        converged: whether the gap met the effective tolerance.  When False
            the best iterate found is returned and ``gap`` reports its gap.
        iterations: projected-gradient iterations used (0 for closed forms).
    """

    weights: np.ndarray
    point: np.ndarray
    gap: float
    converged: bool
    iterations: int


def simplex_project(w):
    """Euclidean projection of ``w`` onto the unit simplex.

    Sort-and-threshold rule: with u the descending sort of w, find the largest
    j with u_j - (cumsum(u)_j - 1)/j > 0 and clip at that threshold.  The
    result is exactly nonnegative and renormalized to unit sum.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("expected a nonempty 1-D weight vector")
    if not np.all(np.isfinite(w)):
        raise NonFiniteInput("cannot project a non-finite vector")
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, w.size + 1)
    positive = np.nonzero(u - css / j > 0)[0]
    if positive.size == 0:
        # u_1 - (u_1 - 1) = 1 > 0 always holds exactly; reaching here means
        # the subtraction cancelled at ~1e16 magnitudes, where the projection
        # is the dominant vertex.
        out = np.zeros(w.size)
        out[int(np.argmax(w))] = 1.0
        return out
    rho = positive[-1]
    tau = css[rho] / (rho + 1.0)
    out = np.maximum(w - tau, 0.0)
    # w - tau cancels at large |w|, leaving the sum off by ~eps * |w|;
    # renormalizing pins it back to 1 within a few ulp
    return out / out.sum()


def _validate_columns(G):
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] < 1 or G.shape[1] < 1:
        raise ValueError("gradient matrix must be 2-D with columns per objective")
    if not np.all(np.isfinite(G)):
        raise NonFiniteInput("gradient matrix contains NaN or Inf")
    return G


def _fw_gap(S, v, theta):
    """Frank-Wolfe gap max_i <p - v, p - s_i> for p = S @ theta, columns s_i."""
    p = S @ theta
    slack = (p - v) @ p - np.min((p - v) @ S)
    return p, max(float(slack), 0.0)


def project_onto_scaled_hull(G, scale, v, tol=DEFAULT_TOL):
    """Nearest point of ``scale * conv{columns of G}`` to ``v``.

    Minimizes ``0.5 * ||scale * G @ theta - v||^2`` over the simplex and
    certifies the result by the Frank-Wolfe gap.  On hitting the iteration
    cap the best iterate is returned with ``converged=False`` instead of
    raising; degenerate hulls (equal columns) are fine because only the point
    is unique, not the weights.
    """
    G = _validate_columns(G)
    if not (scale > 0):
        raise ValueError("scale must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.asarray(v, dtype=float)
    if v.shape != (G.shape[0],):
        raise ValueError("target vector shape does not match gradient columns")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("target vector contains NaN or Inf")

    n, m = G.shape
    S = scale * G
    col_sq = np.einsum("ij,ij->j", S, S)
    q_scale = max(1.0, float(np.max(col_sq)), float(v @ v))
    tol_eff = max(tol, _REL_TOL * q_scale)

    if m == 1:
        theta = np.ones(1)
        point, gap = _fw_gap(S, v, theta)
        return HullSolution(theta, point, gap, gap <= tol_eff, 0)

    if m == 2:
        # 1-D projection of v onto the segment [s_2, s_1].
        d = S[:, 0] - S[:, 1]
        denom = d @ d
        if denom > 0.0:
            t = float(np.clip((v - S[:, 1]) @ d / denom, 0.0, 1.0))
        else:
            t = 1.0
        theta = np.array([t, 1.0 - t])
        point, gap = _fw_gap(S, v, theta)
        return HullSolution(theta, point, gap, gap <= tol_eff, 0)

    # Accelerated projected gradient on q(theta) = 0.5||S theta - v||^2 with a
    # monotone restart: an extrapolated step that increases q is replaced by a
    # plain projected-gradient step from the last accepted iterate.  Once the
    # support looks settled, an equality-constrained solve on that face snaps
    # the iterate to the exact optimum, which is what makes 1e-10 gap
    # certificates affordable even when the Gram matrix is rank deficient.
    H = S.T @ S
    c = S.T @ v
    diag = np.diag(H)
    dmax = float(np.max(diag))
    if dmax <= 0.0:
        # All columns are zero: the hull is {0}.
        theta = np.full(m, 1.0 / m)
        point, gap = _fw_gap(S, v, theta)
        return HullSolution(theta, point, gap, gap <= tol_eff, 0)
    L = float(np.linalg.eigvalsh(H)[-1])
    if L <= 0.0:
        L = dmax
    kappa = dmax / max(float(np.min(diag)), dmax * 1e-16)
    max_iter = 1000 + int(10 * m * min(np.sqrt(kappa), 1e4))

    def q_val(th):
        r = S @ th - v
        return 0.5 * float(r @ r)

    def gap_at(th):
        p = S @ th
        return max(float((p - v) @ p - np.min((p - v) @ S)), 0.0)

    def polish(th):
        support = np.nonzero(th > 1e-12)[0]
        if support.size == 0:
            return None
        A = S[:, support]
        k = support.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = A.T @ A
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        rhs = np.concatenate([A.T @ v, [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        if np.min(sol) < -1e-9:
            return None
        clipped = np.maximum(sol, 0.0)
        total = clipped.sum()
        if not total > 0.0:
            return None
        cand = np.zeros(m)
        cand[support] = clipped / total
        return cand

    theta = np.full(m, 1.0 / m)
    y = theta
    t_mom = 1.0
    q_prev = q_val(theta)
    best_theta, best_gap = theta, gap_at(theta)
    stagnant = 0
    its = 0
    for its in range(1, max_iter + 1):
        grad = H @ y - c
        cand = simplex_project(y - grad / L)
        q_cand = q_val(cand)
        if q_cand > q_prev:
            t_mom = 1.0
            cand = simplex_project(theta - (H @ theta - c) / L)
            q_cand = q_val(cand)
        gap = gap_at(cand)
        if gap < 0.99 * best_gap:
            stagnant = 0
        else:
            stagnant += 1
        if gap < best_gap:
            best_theta, best_gap = cand, gap
        if gap <= tol_eff:
            theta = cand
            break
        if stagnant >= 200:
            # progress has hit the float floor; the best certificate found
            # is all this data admits
            theta = best_theta
            break
        if gap <= 1e-4 * q_scale or its % 25 == 0:
            refined = polish(cand)
            if refined is not None:
                rgap = gap_at(refined)
                if rgap < best_gap:
                    best_theta, best_gap = refined, rgap
                if rgap <= tol_eff:
                    theta = refined
                    break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
        y = cand + ((t_mom - 1.0) / t_next) * (cand - theta)
        theta, q_prev, t_mom = cand, q_cand, t_next
    else:
        theta = best_theta

    point, gap = _fw_gap(S, v, theta)
    return HullSolution(theta, point, gap, gap <= tol_eff, its)


def min_norm_in_hull(G, tol=DEFAULT_TOL):
    """Projection of the origin onto ``conv{columns of G}``.

    Specialization of :func:`project_onto_scaled_hull` with unit scale and a
    zero target.  The norm of the returned point is the KKT residual: it
    vanishes exactly at Pareto-critical points.
    """
    G = _validate_columns(G)
    return project_onto_scaled_hull(G, 1.0, np.zeros(G.shape[0]), tol)
