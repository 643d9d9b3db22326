"""Merit function: the largest uniform objective improvement available.

    phi(x) = sup_z min_i [f_i(x) - f_i(z)]

phi is nonnegative everywhere and zero exactly at weak Pareto points, which
makes it the multiobjective stand-in for the optimality gap f(x) - f(x*).
Evaluating it means globally minimizing the convex max-function

    h(z) = max_i [f_i(z) - f_i(x)],        phi(x) = -min_z h(z).

The inner solve runs steepest descent on h: at each iterate the descent
direction is the negated minimum-norm point of the hull of gradients of the
nearly-active objectives, with backtracking on h itself.  Starting from
z = x (where h = 0) and only accepting descent steps keeps the returned phi
nonnegative by construction; a warm start is used only when it is already
below that baseline.

``merit_grid_oracle`` is an independent check for two-dimensional problems:
it maximizes min_i [f_i(x) - f_i(z)] over a dense rectangular grid, a lower
bound on phi that converges as the grid refines.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .simplex_qp import min_norm_in_hull


class DimensionUnsupported(ValueError):
    """The grid oracle only handles two-dimensional decision spaces."""


class MeritUnavailable(ValueError):
    """Inner problem is not level bounded for this problem instance."""


@dataclass(frozen=True)
class MeritConfig:
    """Inner-solve controls.

    ``inner_tol`` is the stationarity target: the minimum-norm point of the
    active-gradient hull must fall below it.  ``activity_band`` is the
    relative band deciding which objectives count as active at the current
    inner iterate.
    """

    inner_tol: float = 1e-8
    inner_max_iter: int = 5000
    activity_band: float = 1e-8

    def __post_init__(self):
        if not self.inner_tol > 0.0:
            raise ValueError("inner_tol must be positive")


@dataclass(frozen=True)
class MeritResult:
    """Merit value with its certificate.

    ``phi`` is a lower bound on the true merit value, accurate to roughly
    ``residual**2`` divided by the inner problem's convexity modulus.
    ``tol_used`` is the stationarity tolerance actually enforced: the
    configured ``inner_tol``, widened to the float64 floor
    sqrt(eps |h| L) below which objective differences are pure rounding.
    ``converged`` is False only when the iteration budget ran out with the
    residual still above that tolerance.
    """

    phi: float
    z: np.ndarray
    residual: float
    converged: bool
    iterations: int
    tol_used: float = 0.0


def _bisect_to_kink(eval_parts, i0, i1, t_lo, t_hi, tol, max_bisect=80):
    """Bisect for the step where objectives i0 and i1 tie, within ``tol``.

    The difference parts[i0] - parts[i1] is positive at t_lo and negative at
    t_hi; returns (t, parts, h) at the located tie.
    """
    for _ in range(max_bisect):
        mid = 0.5 * (t_lo + t_hi)
        parts = eval_parts(mid)
        delta = parts[i0] - parts[i1]
        if abs(delta) <= tol or t_hi - t_lo <= 1e-15 * max(t_hi, 1.0):
            return mid, parts, float(np.max(parts))
        if delta > 0.0:
            t_lo = mid
        else:
            t_hi = mid
    parts = eval_parts(t_hi)
    return t_hi, parts, float(np.max(parts))


def _kink_seeking_step(eval_parts, parts, h, d_trial, band):
    """From a partially-active iterate, step onto the nearest activity tie.

    Grows the trial step while h keeps decreasing and no inactive objective
    overtakes; once one does, bisects onto the tie so that the next direction
    sees both gradients.  Returns (t, parts, h) or None when no crossing is
    reachable while descending (plain backtracking applies then).
    """
    i0 = int(np.argmax(parts))
    t_lo, parts_lo = 0.0, parts
    t = d_trial
    for _ in range(60):
        cand_parts = eval_parts(t)
        cand_h = float(np.max(cand_parts))
        i1 = int(np.argmax(cand_parts))
        if i1 != i0:
            t_kink, k_parts, k_h = _bisect_to_kink(
                eval_parts, i0, i1, t_lo, t, band
            )
            if k_h < h:
                return t_kink, k_parts, k_h
            return None
        if cand_h >= h:
            return None
        t_lo, parts_lo = t, cand_parts
        t *= 2.0
    return None


def merit_value(prob, x, cfg=None, warm_start=None):
    """Evaluate phi at ``x`` by solving the inner min-max problem."""
    if not prob.merit_supported:
        raise MeritUnavailable(
            f"{prob.name}: inner problem is not level bounded; merit disabled"
        )
    cfg = cfg or MeritConfig()
    x = np.asarray(x, dtype=float)
    fx = prob.objectives(x)

    z = x.copy()
    parts = np.zeros(prob.m)
    h = 0.0
    if warm_start is not None:
        cand = np.asarray(warm_start, dtype=float)
        cand_parts = prob.objectives(cand) - fx
        cand_h = float(np.max(cand_parts))
        if cand_h < h:
            z, parts, h = cand.copy(), cand_parts, cand_h

    residual = np.inf
    converged = False
    trial_step = 1.0
    tol_used = cfg.inner_tol
    curvature = 0.0
    prev_grads = None
    prev_z = None
    its = 0
    for its in range(1, cfg.inner_max_iter + 1):
        grads = prob.gradient_columns(z)
        if prev_grads is not None:
            dz = float(np.linalg.norm(z - prev_z))
            if dz > 0.0:
                curvature = max(
                    curvature, float(np.linalg.norm(grads - prev_grads)) / dz
                )
        prev_grads, prev_z = grads, z
        band = cfg.activity_band * (1.0 + abs(h))
        active = parts >= h - band
        hull = min_norm_in_hull(grads[:, active], cfg.inner_tol * 1e-3)
        residual = float(np.linalg.norm(hull.point))
        float_floor = 8.0 * np.sqrt(
            np.finfo(float).eps * (1.0 + abs(h)) * max(curvature, 1e-8)
        )
        tol_used = max(cfg.inner_tol, float_floor)
        if residual <= tol_used:
            converged = True
            break

        # Direction from an anticipatory activity band sized to the upcoming
        # trial step: objectives that will overtake the max during the step
        # already contribute their gradient, which is what permits long steps
        # along the max-function's kinks.  Shrink the band if it collapses
        # the direction while the stationarity residual is still large.
        gmax = float(np.max(np.linalg.norm(grads, axis=0)))
        band_dir = max(band, 4.0 * trial_step * gmax * residual)
        d = -hull.point
        dir_res = residual
        for _ in range(12):
            wide = parts >= h - band_dir
            if int(np.sum(wide)) == int(np.sum(active)) or band_dir <= band:
                break
            hull_dir = min_norm_in_hull(grads[:, wide], cfg.inner_tol * 1e-3)
            dir_res = float(np.linalg.norm(hull_dir.point))
            if dir_res >= 1e-2 * residual:
                d = -hull_dir.point
                break
            band_dir = max(band, 0.125 * band_dir)
        else:
            dir_res = residual

        if int(np.sum(parts >= h - band_dir)) < prob.m:
            def eval_parts(t, _z=z, _d=d):
                return prob.objectives(_z + t * _d) - fx

            kink = _kink_seeking_step(eval_parts, parts, h, trial_step, band)
            if kink is not None:
                t, parts, h = kink
                z = z + t * d
                trial_step = max(t, 1e-14)
                continue

        # Backtracking on h; the hull direction guarantees a local decrease
        # rate of at least ||d||^2.
        t = trial_step * 4.0
        accepted = False
        for _ in range(60):
            cand = z + t * d
            cand_parts = prob.objectives(cand) - fx
            cand_h = float(np.max(cand_parts))
            if cand_h <= h - 1e-4 * t * dir_res * dir_res:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        z, parts, h = cand, cand_parts, cand_h
        trial_step = t

    return MeritResult(
        phi=-h,
        z=z,
        residual=residual,
        converged=converged,
        iterations=its,
        tol_used=tol_used,
    )


def merit_grid_oracle(prob, x, box, resolution=801):
    """Grid lower bound for phi on 2-D problems.

    ``box`` is ((x1_lo, x1_hi), (x2_lo, x2_hi)) and must contain the level
    set L(F, F(x)), where the inner maximizer lives.  Returns the maximum of
    min_i [f_i(x) - f_i(z)] over the resolution x resolution lattice.
    """
    if prob.n != 2:
        raise DimensionUnsupported("grid oracle requires a 2-D decision space")
    x = np.asarray(x, dtype=float)
    (lo1, hi1), (lo2, hi2) = box
    g1 = np.linspace(lo1, hi1, resolution)
    g2 = np.linspace(lo2, hi2, resolution)
    Z = np.stack(
        [np.repeat(g1, resolution), np.tile(g2, resolution)], axis=1
    )
    fx = prob.objectives(x)
    if prob.objectives_batch is not None:
        fz = prob.objectives_batch(Z)
    else:
        fz = np.array([prob.objectives(z) for z in Z])
    return float(np.max(np.min(fx - fz, axis=1)))
