"""External and interaction potentials, excluded-volume coefficients.

The interaction coefficient alpha is the integral of 1 - exp(-u) over R^d,
computed here as S_{d-1} * int_0^inf (1 - e^{-u(r)}) r^{d-1} dr for radial u.
For hard spheres it equals the unit-ball volume exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import Grid

_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def unit_ball_volume(d: int) -> float:
    return _BALL_VOLUME[d]


# ---------------------------------------------------------------------------
# External potentials V(x) on the unit box.


class ExternalPotential:
    """Base: V and grad V evaluable at every point of the box."""

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False


class Zero(ExternalPotential):
    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def is_zero(self):
        return True


class Quadratic(ExternalPotential):
    """V = a * x^2 in the first coordinate."""

    def __init__(self, stiffness: float):
        self.stiffness = float(stiffness)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.stiffness * x[..., 0] ** 2

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., 0] = 2.0 * self.stiffness * x[..., 0]
        return g


class VolcanoX(ExternalPotential):
    """V = -a1*exp(-x^2/s^2) - a2*exp(-x^2/(2 s^2)), x the first coordinate."""

    def __init__(self, a1: float, a2: float, s: float):
        self.a1, self.a2, self.s = float(a1), float(a2), float(s)

    def value(self, x):
        x0 = np.asarray(x, dtype=float)[..., 0]
        s2 = self.s**2
        return -self.a1 * np.exp(-(x0**2) / s2) - self.a2 * np.exp(-(x0**2) / (2 * s2))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        x0 = x[..., 0]
        s2 = self.s**2
        dv = self.a1 * (2 * x0 / s2) * np.exp(-(x0**2) / s2) + self.a2 * (
            x0 / s2
        ) * np.exp(-(x0**2) / (2 * s2))
        g = np.zeros_like(x)
        g[..., 0] = dv
        return g


class VolcanoRadial(ExternalPotential):
    """V = -a1*exp(-2 s |x|^2) + a2*exp(-s |x|^2)."""

    def __init__(self, a1: float, a2: float, s: float):
        self.a1, self.a2, self.s = float(a1), float(a2), float(s)

    def value(self, x):
        r2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
        return -self.a1 * np.exp(-2 * self.s * r2) + self.a2 * np.exp(-self.s * r2)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x**2, axis=-1)
        dvdr2 = 2 * self.a1 * self.s * np.exp(-2 * self.s * r2) - self.a2 * self.s * np.exp(
            -self.s * r2
        )
        return 2.0 * x * dvdr2[..., None]


class TabulatedExternal(ExternalPotential):
    """Grid samples with multilinear interpolation; one-sided differences at
    the boundary for the gradient."""

    def __init__(self, grid: Grid, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.shape != grid.shape:
            raise ValueError("sample shape does not match grid")
        self.grid = grid
        self.samples = samples

    def _interp_axis(self, x):
        # clamp to the outermost cell centers
        c = self.grid.axis_centers()
        xi = np.clip((x - c[0]) / self.grid.spacing, 0.0, len(c) - 1.0)
        i0 = np.clip(np.floor(xi).astype(int), 0, len(c) - 2)
        w = xi - i0
        return i0, w

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.grid.dim == 1:
            i0, w = self._interp_axis(x[..., 0])
            s = self.samples
            return (1 - w) * s[i0] + w * s[i0 + 1]
        i0, wx = self._interp_axis(x[..., 0])
        j0, wy = self._interp_axis(x[..., 1])
        s = self.samples
        return (
            (1 - wx) * (1 - wy) * s[i0, j0]
            + wx * (1 - wy) * s[i0 + 1, j0]
            + (1 - wx) * wy * s[i0, j0 + 1]
            + wx * wy * s[i0 + 1, j0 + 1]
        )

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        h = self.grid.spacing
        g = np.zeros_like(x)
        for ax in range(self.grid.dim):
            lo = x.copy()
            hi = x.copy()
            # one-sided at the box boundary, central inside
            hi[..., ax] = np.minimum(x[..., ax] + 0.5 * h, 0.5)
            lo[..., ax] = np.maximum(x[..., ax] - 0.5 * h, -0.5)
            g[..., ax] = (self.value(hi) - self.value(lo)) / (hi[..., ax] - lo[..., ax])
        return g


# ---------------------------------------------------------------------------
# Radial interaction potentials u(r), r in units of the range epsilon.


class InteractionPotential:
    """Radial, nonnegative, nonincreasing u with u(r) -> 0 as r -> inf."""

    hard = False

    def u(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def u_prime(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cutoff(self, tol: float = 1e-6) -> float:
        """Radius beyond which u < tol (in units of the range)."""
        raise NotImplementedError

    def tail_exponent(self) -> float:
        """u = O(r^-q) as r -> inf; q = inf for faster-than-algebraic decay."""
        raise NotImplementedError


class HardSphere(InteractionPotential):
    hard = True

    def u(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 1.0, np.inf, 0.0)

    def u_prime(self, r):
        raise ValueError("hard core has no smooth force; use overlap resolution")

    def cutoff(self, tol=1e-6):
        return 1.0

    def tail_exponent(self):
        return math.inf


class Yukawa(InteractionPotential):
    """u(r) = exp(-r)/r."""

    def u(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(-r) / r

    def u_prime(self, r):
        r = np.asarray(r, dtype=float)
        return -np.exp(-r) * (1.0 + r) / r**2

    def cutoff(self, tol=1e-6):
        from scipy.optimize import brentq

        return brentq(lambda r: self.u(r) - tol, 1e-12, 1e3)

    def tail_exponent(self):
        return math.inf


class PowerLaw(InteractionPotential):
    """u(r) = r^-n."""

    def __init__(self, exponent: float):
        if exponent <= 0:
            raise ValueError("power-law exponent must be positive")
        self.exponent = float(exponent)

    def u(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return r ** (-self.exponent)

    def u_prime(self, r):
        r = np.asarray(r, dtype=float)
        return -self.exponent * r ** (-self.exponent - 1.0)

    def cutoff(self, tol=1e-6):
        return tol ** (-1.0 / self.exponent)

    def tail_exponent(self):
        return self.exponent


class TabulatedInteraction(InteractionPotential):
    """Radial samples (r_i, u_i) with a declared far-field decay exponent.

    Linear interpolation between samples; beyond the last sample the declared
    algebraic tail u ~ u_last * (r/r_last)^-q is used.
    """

    def __init__(self, r_samples, u_samples, tail_exponent: float):
        r = np.asarray(r_samples, dtype=float)
        u = np.asarray(u_samples, dtype=float)
        if r.ndim != 1 or r.shape != u.shape or len(r) < 2:
            raise ValueError("need matching 1d r,u sample arrays")
        if np.any(np.diff(r) <= 0):
            raise ValueError("r samples must be strictly increasing")
        if np.any(u < 0) or np.any(np.diff(u) > 1e-12):
            raise ValueError("u must be nonnegative and nonincreasing")
        self.r_samples = r
        self.u_samples = u
        self._tail_exponent = float(tail_exponent)

    def u(self, r):
        r = np.asarray(r, dtype=float)
        inside = np.interp(r, self.r_samples, self.u_samples)
        r_last, u_last = self.r_samples[-1], self.u_samples[-1]
        with np.errstate(divide="ignore", over="ignore"):
            tail = u_last * (r / r_last) ** (-self._tail_exponent)
        out = np.where(r > r_last, tail, inside)
        # below the first sample: hold the first value (head handled in quadrature)
        return np.where(r < self.r_samples[0], self.u_samples[0], out)

    def u_prime(self, r):
        r = np.asarray(r, dtype=float)
        dr = 1e-6 * max(self.r_samples[-1], 1.0)
        return (self.u(r + dr) - self.u(np.maximum(r - dr, 1e-300))) / (2 * dr)

    def cutoff(self, tol=1e-6):
        above = self.u_samples > tol
        if not above.any():
            return self.r_samples[0]
        r_last, u_last = self.r_samples[-1], self.u_samples[-1]
        if u_last <= tol:
            return self.r_samples[np.argmax(~above)]
        return r_last * (u_last / tol) ** (1.0 / self._tail_exponent)

    def tail_exponent(self):
        return self._tail_exponent


@dataclass(frozen=True)
class AlphaResult:
    value: float
    estimated_quadrature_error: float


def eval_u(pot: InteractionPotential, r: float) -> float:
    if r <= 0:
        raise ValueError("undefined at origin")
    return float(pot.u(r))


def eval_force(pot: InteractionPotential, displacement, epsilon: float = 1.0):
    """Force -grad_x u(x/eps) on the particle at +displacement from its partner.

    Repulsive for nonincreasing u: points along +displacement.
    """
    if pot.hard:
        raise ValueError("hard core has no smooth force; use overlap resolution")
    x = np.asarray(displacement, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r <= 0):
        raise ValueError("undefined at origin")
    mag = -pot.u_prime(r / epsilon) / epsilon
    return mag[..., None] * x / r[..., None] if x.ndim > 1 else mag * x / r


def alpha_u(pot: InteractionPotential, d: int) -> AlphaResult:
    """Excluded-volume coefficient: integral of (1 - e^{-u}) over R^d."""
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    if pot.hard:
        return AlphaResult(unit_ball_volume(d), 0.0)
    q = pot.tail_exponent()
    if q <= d:
        raise ValueError("alpha undefined: interaction tail decays too slowly")

    def integrand(r):
        with np.errstate(over="ignore"):
            return -np.expm1(-pot.u(np.asarray(r))) * np.asarray(r) ** (d - 1)

    # closed-form head: 1 - e^{-u} ~= 1 for r below r0 when u(r0) is huge;
    # otherwise quadrature handles the head too.
    r0 = 1e-4
    if float(pot.u(r0)) > 50.0:
        head, head_err = r0**d / d, 0.0
    else:
        head, head_err = integrate.quad(integrand, 0.0, r0, limit=200, epsabs=1e-12, epsrel=1e-10)
    mid, mid_err = integrate.quad(integrand, r0, 1.0, limit=200, epsabs=1e-12, epsrel=1e-10)

    # tail via r = 1/t so the infinite range maps to (0, 1]
    def tail_integrand(t):
        return integrand(1.0 / t) / t**2

    tail, tail_err = integrate.quad(tail_integrand, 0.0, 1.0, limit=200, epsabs=1e-12, epsrel=1e-10)

    radial = head + mid + tail
    err = head_err + mid_err + tail_err
    area = _SPHERE_AREA[d]
    return AlphaResult(area * radial, area * err)


def effective_diameter(pot: InteractionPotential, d: int) -> float:
    """Relative hard-sphere diameter eps_u with alpha * eps_u^d = V_d(1)."""
    a = alpha_u(pot, d).value
    if a <= 0:
        raise ValueError("no excluded volume")
    return (unit_ball_volume(d) / a) ** (1.0 / d)


def external_from_config(cfg: dict) -> ExternalPotential:
    from .core import ConfigError, config_get

    kind = cfg.get("external.kind", "zero").lower()
    if kind == "zero":
        return Zero()
    if kind == "quadratic":
        return Quadratic(config_get(cfg, "external.stiffness", float))
    if kind == "volcano_x":
        return VolcanoX(
            config_get(cfg, "external.a1", float, 1.5),
            config_get(cfg, "external.a2", float, 1.0),
            config_get(cfg, "external.s", float, 0.1),
        )
    if kind == "volcano_radial":
        return VolcanoRadial(
            config_get(cfg, "external.a1", float, 4.5),
            config_get(cfg, "external.a2", float, 3.5),
            config_get(cfg, "external.s", float, 25.0),
        )
    raise ConfigError(f"unknown external potential '{kind}'")


def interaction_from_config(cfg: dict):
    """Returns (potential or None for ideal particles)."""
    from .core import ConfigError, config_get

    kind = cfg.get("potential.kind", "none").lower()
    if kind == "none":
        return None
    if kind == "hardsphere":
        return HardSphere()
    if kind == "yukawa":
        return Yukawa()
    if kind == "powerlaw":
        return PowerLaw(config_get(cfg, "potential.exponent", float))
    if kind == "tabulated":
        path = cfg.get("potential.file")
        if not path:
            raise ConfigError("tabulated potential needs 'potential.file'")
        data = np.loadtxt(path, delimiter=",")
        return TabulatedInteraction(data[:, 0], data[:, 1], tail_exponent=6.0)
    raise ConfigError(f"unknown interaction potential '{kind}'")
