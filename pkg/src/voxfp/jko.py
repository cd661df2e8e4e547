"""1D minimizing-movement scheme in quantile coordinates.

Densities on the unit interval are represented by M samples of the inverse
CDF at midpoint levels s_j = (j + 1/2)/M. In these coordinates the squared
Wasserstein-2 distance is the mean squared quantile difference, and each
time step minimizes

    (1/(2 dt M)) sum_j (X_j - X_j^prev)^2 + E(X)

over monotone X inside the box, where E is the free energy transformed to
quantile variables (entropy and quadratic terms become functions of the
forward gaps). The objective is smooth and convex on the monotone cone, so
a damped Newton method with an active set for the box faces converges to
machine-level stationarity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import DensityField, Grid, normalize
from .fv import MacroModel, NumericalError

GAP_FLOOR = 1e-12


@dataclass(frozen=True)
class QuantileField:
    """Inverse-CDF samples at levels (j + 1/2)/M, nondecreasing in j."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        if x.ndim != 1 or len(x) < 2:
            raise ValueError("need a 1d quantile vector with at least 2 entries")
        if np.any(np.diff(x) < -1e-14):
            raise ValueError("quantiles must be nondecreasing")
        if x.min() < -0.5 - 1e-12 or x.max() > 0.5 + 1e-12:
            raise ValueError("quantiles must lie in the unit box")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def m(self) -> int:
        return len(self.x)

    @property
    def levels(self) -> np.ndarray:
        m = self.m
        return (np.arange(m) + 0.5) / m


@dataclass(frozen=True)
class JkoStepReport:
    objective: float
    w2_squared: float
    energy: float
    kkt_residual: float
    iterations: int


def quantiles_from_density(p: DensityField, m: int) -> QuantileField:
    """Invert the piecewise-linear CDF of a cellwise-constant density."""
    if p.grid.dim != 1:
        raise ValueError("quantile representation is one-dimensional")
    p = normalize(p)
    edges = p.grid.axis_edges()
    cdf = np.concatenate([[0.0], np.cumsum(p.values * p.grid.spacing)])
    cdf /= cdf[-1]
    s = (np.arange(m) + 0.5) / m
    # np.interp on a nondecreasing cdf: flat (empty) cells are skipped
    x = np.interp(s, cdf, edges)
    return QuantileField(x)


def density_from_quantiles(q: QuantileField, grid: Grid) -> DensityField:
    """Push the quantile field to cell averages via its piecewise-linear CDF."""
    if grid.dim != 1:
        raise ValueError("quantile representation is one-dimensional")
    x = q.x
    s = q.levels
    # extend to the full box so the CDF runs from 0 to 1
    xs = np.concatenate([[-0.5 - 1e-15], x, [0.5 + 1e-15]])
    ss = np.concatenate([[0.0], s, [1.0]])
    # strictly increasing abscissae for interpolation
    xs = np.maximum.accumulate(xs + np.arange(len(xs)) * 1e-18)
    edges = grid.axis_edges()
    cdf_at_edges = np.interp(edges, xs, ss)
    cdf_at_edges[0], cdf_at_edges[-1] = 0.0, 1.0
    vals = np.diff(cdf_at_edges) / grid.spacing
    return DensityField(grid, np.clip(vals, 0.0, None))


def w2_distance_1d(p: QuantileField, q: QuantileField) -> float:
    if p.m != q.m:
        raise ValueError("quantile resolutions differ")
    return float(np.sqrt(np.mean((p.x - q.x) ** 2)))


def _energy_terms(model: MacroModel, x: np.ndarray):
    """Energy, gradient and Hessian bands of E in quantile coordinates.

    The level interval [0, 1] is covered by M+1 gaps: the two box-face gaps
    g_0 = X_0 + 1/2 and g_M = 1/2 - X_{M-1} carry the half-levels below s_0
    and above s_{M-1} (weight 1/(2M)), interior gaps g_j = X_j - X_{j-1}
    carry weight 1/M. With the local density w_j / g_j,

        E(X) = -sum w_j log(g_j / w_j) + (beta/2) sum w_j^2 / g_j
               + (1/M) sum V(X_j).

    The uniform density (g_j = w_j everywhere) is exactly stationary, and
    the face gaps act as a log barrier keeping quantiles inside the box.
    """
    m = len(x)
    gaps = np.concatenate([[x[0] + 0.5], np.diff(x), [0.5 - x[-1]]])
    floored = gaps < GAP_FLOOR
    g = np.maximum(gaps, GAP_FLOOR)
    beta = model.beta
    w = np.full(m + 1, 1.0 / m)
    w[0] = w[-1] = 0.5 / m
    pts = x[:, None]
    vvals = model.external.value(pts)
    energy = float(
        -(w * np.log(g / w)).sum()
        + 0.5 * beta * (w**2 / g).sum()
        + vvals.sum() / m
    )

    # d/dg of the per-gap terms
    dEdg = -w / g - 0.5 * beta * w**2 / g**2
    d2Edg2 = w / g**2 + beta * w**2 / g**3

    # gap j has right endpoint x_j (j < m) and left endpoint x_{j-1}
    grad = dEdg[:-1] - dEdg[1:]
    # V gradient via the analytic external gradient
    gv = model.external.gradient(pts)[:, 0]
    grad += gv / m

    # tridiagonal Hessian: diag and off-diag from the gap terms
    diag = d2Edg2[:-1] + d2Edg2[1:]
    off = -d2Edg2[1:-1]
    # numerical second derivative of V along x (exact for quadratic V)
    hstep = 1e-5
    v_pp = (
        model.external.value(pts + hstep)
        + model.external.value(pts - hstep)
        - 2.0 * vvals
    ) / hstep**2
    diag = diag + v_pp / m
    return float(energy), grad, diag, off, bool(floored.any())


def quantile_energy(model: MacroModel, q: QuantileField) -> float:
    return _energy_terms(model, q.x)[0]


def _objective(model, x, x_prev, dt):
    m = len(x)
    e, grad_e, diag, off, floored = _energy_terms(model, x)
    w2sq = float(np.mean((x - x_prev) ** 2))
    obj = 0.5 * w2sq / dt + e
    grad = (x - x_prev) / (dt * m) + grad_e
    diag = diag + 1.0 / (dt * m)
    return obj, grad, diag, off, e, w2sq


def jko_step(
    model: MacroModel,
    p_prev: QuantileField,
    dt: float,
    tol: float = 1e-9,
    max_iter: int = 500,
) -> tuple:
    """One minimizing-movement step; returns (QuantileField, JkoStepReport)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x_prev = p_prev.x
    m = p_prev.m
    x = x_prev.copy()
    # start from a strictly monotone configuration
    x = _make_strictly_monotone(x)

    last_res = np.inf
    stall_tol = max(tol, 1e-7)  # accept a stalled iterate if still this good
    best = None
    for it in range(1, max_iter + 1):
        obj, grad, diag, off, e, w2sq = _objective(model, x, x_prev, dt)
        low_active = (x <= -0.5 + 1e-14) & (grad > 0)
        high_active = (x >= 0.5 - 1e-14) & (grad < 0)
        active = low_active | high_active
        pg = np.where(active, 0.0, grad)
        # stationarity in physical units: displacement/dt + grad_x xi
        last_res = float(np.abs(m * pg).max())
        if best is None or last_res < best[1]:
            best = ((x, obj, e, w2sq), last_res, it - 1)
        if last_res <= tol:
            return QuantileField(np.clip(x, -0.5, 0.5)), JkoStepReport(
                objective=obj,
                w2_squared=w2sq,
                energy=e,
                kkt_residual=last_res,
                iterations=it - 1,
            )

        dx = _newton_direction(pg, diag, off, active)
        # keep gaps positive and stay inside the box
        step_len = _max_feasible(x, dx)
        t = min(1.0, 0.99 * step_len)
        ok = False
        for _ in range(60):
            cand = np.clip(x + t * dx, -0.5, 0.5)
            cand_obj, cand_grad = _objective(model, cand, x_prev, dt)[:2]
            cand_res = float(np.abs(m * np.where(active, 0.0, cand_grad)).max())
            # descent, or (near round-off) a residual contraction
            if cand_obj <= obj + 1e-4 * t * float(pg @ dx) or cand_res <= 0.5 * last_res:
                ok = True
                break
            t *= 0.5
        if not ok:
            # gradient fallback
            dx = -pg
            t = min(1.0, 0.99 * _max_feasible(x, dx))
            for _ in range(60):
                cand = np.clip(x + t * dx, -0.5, 0.5)
                if _objective(model, cand, x_prev, dt)[0] < obj:
                    ok = True
                    break
                t *= 0.5
            if not ok:
                break
        x = cand
    # round-off stall: return the best iterate if it is already stationary
    # to well below the reporting tolerance
    if best is not None and best[1] <= stall_tol:
        (bx, bobj, be, bw2), bres, bit = best
        return QuantileField(np.clip(bx, -0.5, 0.5)), JkoStepReport(
            objective=bobj,
            w2_squared=bw2,
            energy=be,
            kkt_residual=bres,
            iterations=bit,
        )
    raise NumericalError(
        f"minimizing-movement step did not converge: residual {last_res:.3g}"
    )


def _make_strictly_monotone(x: np.ndarray) -> np.ndarray:
    gaps = np.diff(x)
    if gaps.min() > GAP_FLOOR:
        return x
    m = len(x)
    span = x[-1] - x[0]
    if span < m * 10 * GAP_FLOOR:
        return np.linspace(max(x[0], -0.5), min(x[-1] + 1e-6, 0.5), m)
    g = np.maximum(gaps, 10 * GAP_FLOOR)
    y = np.concatenate([[x[0]], x[0] + np.cumsum(g)])
    return np.clip(y, -0.5, 0.5)


def _newton_direction(grad, diag, off, active):
    m = len(grad)
    ab = np.zeros((3, m))
    d = diag.copy()
    up = np.concatenate([[0.0], off])
    lo = np.concatenate([off, [0.0]])
    # freeze active (box-clamped) coordinates
    idx = np.where(active)[0]
    d[idx] = 1.0
    for i in idx:
        if i > 0:
            lo[i - 1] = 0.0  # A[i, i-1]
            up[i] = 0.0  # A[i-1, i]
        if i < m - 1:
            up[i + 1] = 0.0  # A[i, i+1]
            lo[i] = 0.0  # A[i+1, i]
    ab[0] = up
    ab[1] = d
    ab[2] = lo
    try:
        dx = solve_banded((1, 1), ab, -grad)
    except np.linalg.LinAlgError:
        return -grad
    if not np.all(np.isfinite(dx)):
        return -grad
    return dx


def _max_feasible(x, dx):
    """Largest step keeping all gaps (box faces included) above the floor."""
    gaps = np.concatenate([[x[0] + 0.5], np.diff(x), [0.5 - x[-1]]])
    dgaps = np.concatenate([[dx[0]], np.diff(dx), [-dx[-1]]])
    shrink = dgaps < 0
    if not shrink.any():
        return np.inf
    return float(np.min((gaps[shrink] - GAP_FLOOR) / (-dgaps[shrink])))


def kkt_residual(
    model: MacroModel, p_prev: QuantileField, p_new: QuantileField, dt: float
) -> float:
    """Max-norm stationarity defect: displacement/dt plus the spatial gradient
    of the variational derivative at the new iterate, box-active quantiles
    excluded."""
    x, x_prev = p_new.x, p_prev.x
    m = p_new.m
    _, grad, _, _, _ = _energy_terms(model, x)
    res = (x - x_prev) / dt + m * grad
    interior = (x > -0.5 + 1e-12) & (x < 0.5 - 1e-12)
    if not interior.any():
        return 0.0
    return float(np.abs(res[interior]).max())


def jko_solve(
    model: MacroModel,
    p0: DensityField,
    dt: float,
    t_end: float,
    m: int = 1024,
):
    """Iterate the scheme from a density; snapshots on the grid of p0.

    Returns [(t, DensityField, JkoStepReport), ...] for k = 1, 2, ...
    """
    grid = p0.grid
    q = quantiles_from_density(p0, m)
    out = []
    n_full = int(np.floor(t_end / dt + 1e-9))
    remainder = t_end - n_full * dt
    for k in range(1, n_full + 1):
        q, report = jko_step(model, q, dt)
        out.append((k * dt, density_from_quantiles(q, grid), report))
    if remainder > 1e-12 * dt:
        # land exactly on t_end with a short final step
        q, report = jko_step(model, q, remainder)
        out.append((t_end, density_from_quantiles(q, grid), report))
    return out
