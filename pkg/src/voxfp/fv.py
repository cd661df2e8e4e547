"""Finite-volume solver for the nonlinear Fokker-Planck equation

    dp/dt = div( (1 + beta p) grad p + p grad V ),    beta = alpha (N-1) eps^d,

with no-flux boundaries on the unit box. Entropic diffusion is discretized
with central differences and the drift -grad(beta p + V) with upwind face
fluxes, so the scheme is conservative and positivity preserving under the
reported time-step bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import DensityField, Grid, normalize
from .potentials import ExternalPotential, Zero


class NumericalError(RuntimeError):
    """Solver failure (stability violation, non-convergence)."""


@dataclass(frozen=True)
class MacroModel:
    """Macroscopic model parameters; beta = alpha (N-1) eps^d."""

    d: int
    n_particles: int
    epsilon: float
    alpha: float
    external: ExternalPotential = field(default_factory=Zero)

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        vol_frac = self.n_particles * self.epsilon**self.d
        if vol_frac > 0.1:
            warnings.warn(
                f"volume fraction N eps^d = {vol_frac:.3g} above the dilute regime"
            )

    @property
    def beta(self) -> float:
        return self.alpha * (self.n_particles - 1) * self.epsilon**self.d

    @classmethod
    def linear(cls, d: int, external: ExternalPotential | None = None) -> "MacroModel":
        return cls(d=d, n_particles=1, epsilon=0.0, alpha=0.0, external=external or Zero())


@dataclass(frozen=True)
class EnergyReport:
    time: float
    energy: float
    relative_energy: float


_VPOT_CACHE: dict = {}


def _vpot(model: MacroModel, grid: Grid) -> np.ndarray:
    """External potential sampled at cell centers, cached per (V, grid)."""
    key = (id(model.external), grid)
    hit = _VPOT_CACHE.get(key)
    if hit is None:
        hit = model.external.value(grid.centers())
        if len(_VPOT_CACHE) > 64:
            _VPOT_CACHE.clear()
        _VPOT_CACHE[key] = hit
    return hit


def _xlogx(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


def free_energy(model: MacroModel, p: DensityField) -> float:
    """E(p) = int [ p log p + (beta/2) p^2 + V p ]; empty cells contribute no
    entropy (x log x -> 0)."""
    v = p.values
    if np.any(v < 0):
        raise ValueError("density not admissible")
    vpot = _vpot(model, p.grid)
    integrand = _xlogx(v) + 0.5 * model.beta * v**2 + vpot * v
    return float(integrand.sum() * p.grid.cell_volume)


def variational_derivative(model: MacroModel, p: DensityField) -> np.ndarray:
    """xi = log p + beta p + V per cell (delta E / delta p)."""
    v = p.values
    if np.any(v < 1e-300):
        warnings.warn("clipping empty cells at 1e-300 in log")
    v = np.clip(v, 1e-300, None)
    vpot = _vpot(model, p.grid)
    return np.log(v) + model.beta * p.values + vpot


def suggest_dt(model: MacroModel, p: DensityField) -> float:
    """Stable explicit step: diffusive bound plus the drift CFL contribution."""
    h = p.grid.spacing
    pmax = float(p.values.max())
    diff = 2 * model.d * (1.0 + model.beta * pmax) / h**2
    drift = sum(float(np.abs(v).max()) for v in _face_velocities(model, p)) / h
    return 0.45 / (diff + drift)


def _face_velocities(model: MacroModel, p: DensityField):
    """Drift velocity -d(beta p + V)/dx at interior faces, per axis."""
    h = p.grid.spacing
    psi = model.beta * p.values + _vpot(model, p.grid)
    vels = []
    for ax in range(model.d):
        dpsi = np.diff(psi, axis=ax)
        vels.append(-dpsi / h)
    return vels


def _logmean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Logarithmic mean (b-a)/(log b - log a), continuously extended.

    Equal arguments give the common value; a zero argument gives the limit 0.
    Near-equal pairs use the arithmetic mean to avoid cancellation (the two
    agree to second order in the relative gap).
    """
    hi = np.maximum(a, b)
    near = np.abs(b - a) <= 1e-8 * hi
    safe_a = np.where(near | (a <= 0) | (b <= 0), 1.0, a)
    safe_b = np.where(near | (a <= 0) | (b <= 0), 2.0, b)
    lm = (safe_b - safe_a) / (np.log(safe_b) - np.log(safe_a))
    lm = np.where(near, 0.5 * (a + b), lm)
    return np.where((a <= 0) | (b <= 0), 0.0, lm)


def step(model: MacroModel, p: DensityField, dt: float) -> DensityField:
    """One explicit conservative update with no-flux boundary faces."""
    new, _ = _step_raw(model, p, dt=dt)
    return DensityField(p.grid, new)


def _step_raw(model: MacroModel, p: DensityField, dt=None, cap=None):
    """Update the cell values; dt=None picks the largest stable step <= cap."""
    h = p.grid.spacing
    vels = _face_velocities(model, p)
    diff = 2 * model.d * (1.0 + model.beta * float(p.values.max())) / h**2
    drift = sum(float(np.abs(u).max()) for u in vels) / h
    dt_stable = 0.45 / (diff + drift)
    if dt is None:
        dt = dt_stable if cap is None else min(dt_stable, cap)
    elif dt > dt_stable * (1.0 + 1e-9):
        raise NumericalError("CFL violation")
    v = p.values
    psi = model.beta * v + _vpot(model, p.grid)
    new = v.copy()
    for ax in range(model.d):
        dpv = np.diff(v, axis=ax)
        dpsi = np.diff(psi, axis=ax)
        left = _slice(v, ax, slice(None, -1))
        right = _slice(v, ax, slice(1, None))
        # flux = -logmean(p) * d(xi)/dx with the entropy part contracted to
        # an exact density difference: logmean * d(log p) = dp identically,
        # so constant-xi states carry zero flux and energy dissipates exactly
        flux = -(dpv + _logmean(left, right) * dpsi) / h
        # divergence with zero flux on the boundary faces
        div = np.zeros_like(v)
        div_lo = _slice(div, ax, slice(None, -1))
        div_hi = _slice(div, ax, slice(1, None))
        div_lo += flux / h
        div_hi -= flux / h
        new -= dt * div
    if new.min() < 0:
        if new.min() < -1e-14:
            warnings.warn(f"clipping negative cell {new.min():.3g} after step")
        new = np.clip(new, 0.0, None)
        new /= new.sum() * p.grid.cell_volume
    return new, dt


def _slice(a: np.ndarray, axis: int, sl: slice) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = sl
    return a[tuple(idx)]


def solve(
    model: MacroModel,
    p0: DensityField,
    t_end: float,
    output_times=None,
    p_inf: DensityField | None = None,
    monitor=None,
):
    """March to t_end with an adaptive stable dt, landing exactly on every
    requested output time. Returns [(t, DensityField, EnergyReport), ...].

    `monitor(t, p)` is called after every internal step when given.
    """
    if abs(p0.mass - 1.0) > 1e-10:
        p0 = normalize(p0)
    if output_times is None:
        output_times = [t_end]
    output_times = sorted(set(float(t) for t in output_times) | {t_end})
    if p_inf is None:
        p_inf = steady_state(model, p0.grid)
    e_inf = free_energy(model, p_inf)

    out = []
    t, p = 0.0, p0
    remaining = [ot for ot in output_times if ot > 1e-15]
    if any(abs(ot) < 1e-15 for ot in output_times):
        e = free_energy(model, p)
        out.append((0.0, p, EnergyReport(0.0, e, e - e_inf)))
    for target in remaining:
        while t < target - 1e-14:
            vals, dt = _step_raw(model, p, cap=target - t)
            p = DensityField(p.grid, vals)
            t += dt
            if monitor is not None:
                monitor(t, p)
        t = target
        e = free_energy(model, p)
        out.append((t, p, EnergyReport(t, e, e - e_inf)))
    return out


def steady_state(model: MacroModel, grid: Grid) -> DensityField:
    """Unit-mass solution of log p + beta p + V = c.

    Per-cell the equation log p + beta p = c - V is strictly monotone in p;
    the constant c is fixed by the mass constraint.
    """
    vpot = _vpot(model, grid)
    beta = model.beta

    def p_of_c(c):
        rhs = c - vpot
        # Newton on g(p) = log p + beta p - rhs, monotone increasing
        p = np.exp(np.minimum(rhs, 30.0)) / (1.0 + beta)
        p = np.clip(p, 1e-12, None)
        for _ in range(100):
            g = np.log(p) + beta * p - rhs
            dg = 1.0 / p + beta
            dp = -g / dg
            # keep p positive
            p = np.where(p + dp <= 0, 0.5 * p, p + dp)
            if np.max(np.abs(g)) < 1e-13:
                break
        return p

    def mass_of_c(c):
        return p_of_c(c).sum() * grid.cell_volume - 1.0

    lo, hi = -1.0, 1.0
    while mass_of_c(lo) > 0:
        lo -= 2.0
    while mass_of_c(hi) < 0:
        hi += 2.0
    c = brentq(mass_of_c, lo, hi, xtol=1e-15, rtol=8.9e-16)
    p = p_of_c(c)
    p = p / (p.sum() * grid.cell_volume)
    return DensityField(grid, p)


def linearized_rate(model: MacroModel) -> float:
    """Energy decay rate of the linearization around p = 1 on the unit box:
    (1 + beta) * 2 pi^2."""
    if not model.external.is_zero:
        raise ValueError("linearized rate implemented for V = 0 only")
    return (1.0 + model.beta) * 2.0 * math.pi**2
