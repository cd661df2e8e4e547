"""Relative-entropy curves, exponential decay fits and density comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import DensityField
from .fv import MacroModel, free_energy

DE_FLOOR = 1e-16


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    window: tuple
    r_squared: float


def relative_energy(model: MacroModel, snapshots, p_inf: DensityField):
    """[(t, E(p(t)) - E(p_inf)), ...] for (t, field) snapshots."""
    e_inf = free_energy(model, p_inf)
    return [(t, free_energy(model, p) - e_inf) for t, p in snapshots]


def default_window(curve) -> tuple:
    """Last 60% of the time range where the curve is meaningfully positive."""
    ts = np.array([t for t, _ in curve])
    de = np.array([v for _, v in curve])
    usable = ts[de > 1e-10]
    if len(usable) == 0:
        raise ValueError("not in exponential regime")
    t0, t1 = usable[0], usable[-1]
    return (t1 - 0.6 * (t1 - t0), t1)


def fit_decay_rate(curve, window: tuple | None = None) -> DecayFit:
    """Least-squares line through (t, log dE) on the window; rate = -slope."""
    if window is None:
        window = default_window(curve)
    ts = np.array([t for t, _ in curve])
    de = np.array([v for _, v in curve])
    mask = (ts >= window[0] - 1e-12) & (ts <= window[1] + 1e-12)
    ts, de = ts[mask], de[mask]
    if len(ts) < 2:
        raise ValueError("fit window contains fewer than two points")
    if np.any(de <= 0):
        raise ValueError("not in exponential regime")
    res = stats.linregress(ts, np.log(np.maximum(de, DE_FLOOR)))
    return DecayFit(
        rate=-res.slope,
        intercept=res.intercept,
        window=(float(window[0]), float(window[1])),
        r_squared=float(res.rvalue**2),
    )


def compare_densities(a: DensityField, b: DensityField) -> tuple:
    """(L1, Linf) distance between two fields on the same grid."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    diff = np.abs(a.values - b.values)
    return float(diff.sum() * a.grid.cell_volume), float(diff.max())
