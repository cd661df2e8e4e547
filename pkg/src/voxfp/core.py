"""Grids, density fields, RNG streams, config parsing and CSV field I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-12


class ConfigError(ValueError):
    """Bad or unknown configuration input."""


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on the unit box [-1/2, 1/2]^dim."""

    dim: int
    cells_per_dim: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("grid dim must be 1 or 2")
        if self.cells_per_dim < 8:
            raise ValueError("need at least 8 cells per dimension")

    @property
    def spacing(self) -> float:
        return 1.0 / self.cells_per_dim

    @property
    def shape(self) -> tuple:
        return (self.cells_per_dim,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_centers(self) -> np.ndarray:
        n = self.cells_per_dim
        return -0.5 + (np.arange(n) + 0.5) * self.spacing

    def centers(self) -> np.ndarray:
        """Cell-center coordinates, shape (*grid.shape, dim)."""
        c = self.axis_centers()
        if self.dim == 1:
            return c[:, None]
        x, y = np.meshgrid(c, c, indexing="ij")
        return np.stack([x, y], axis=-1)

    def axis_edges(self) -> np.ndarray:
        return -0.5 + np.arange(self.cells_per_dim + 1) * self.spacing


@dataclass(frozen=True)
class DensityField:
    """Nonnegative cell values of a probability density on a Grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)


@dataclass(frozen=True)
class RngPlan:
    """Seed bookkeeping: one independent stream per realization."""

    base_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.base_seed, self.stream_index])


def integrate_field(f: DensityField) -> float:
    """Midpoint-rule integral of the field over the unit box."""
    return f.mass


def normalize(f: DensityField) -> DensityField:
    """Rescale to unit mass. Raises on zero-mass input."""
    m = f.mass
    if m <= 0:
        raise ValueError("degenerate density")
    return DensityField(f.grid, f.values / m)


def write_field_csv(f: DensityField, path) -> None:
    g = f.grid
    with open(path, "w") as fh:
        fh.write(f"# grid d={g.dim} n={g.cells_per_dim}\n")
        pts = g.centers().reshape(-1, g.dim)
        vals = f.values.reshape(-1)
        for pt, v in zip(pts, vals):
            coords = ",".join(f"{c:.17g}" for c in pt)
            fh.write(f"{coords},{v:.17g}\n")


def read_field_csv(path) -> DensityField:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# grid"):
            raise ValueError(f"not a field csv: {path}")
        parts = dict(tok.split("=") for tok in header[len("# grid") :].split())
        grid = Grid(dim=int(parts["d"]), cells_per_dim=int(parts["n"]))
        vals = np.array([float(line.rsplit(",", 1)[1]) for line in fh if line.strip()])
    return DensityField(grid, vals.reshape(grid.shape))


# Documented flat config keys; anything else is rejected by name.
KNOWN_CONFIG_KEYS = {
    "dim",
    "cells",
    "N",
    "epsilon",
    "realizations",
    "seed",
    "dt",
    "t_end",
    "potential.kind",
    "potential.exponent",
    "potential.file",
    "external.kind",
    "external.stiffness",
    "external.a1",
    "external.a2",
    "external.s",
    "initial.kind",
    "initial.lo",
    "initial.hi",
    "initial.means",
    "initial.sigmas",
    "initial.weights",
    "initial.mu",
    "initial.sigma",
    "initial.amplitude",
    "output.times",
    "jko.quantiles",
}


def parse_config(path) -> dict:
    """Parse a flat `key = value` config file, rejecting unknown keys."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in KNOWN_CONFIG_KEYS:
                raise ConfigError(f"unknown config key '{key}'")
            if key in cfg:
                raise ConfigError(f"duplicate config key '{key}'")
            cfg[key] = val
    return cfg


def config_get(cfg: dict, key: str, cast, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing config key '{key}'")
        return default
    try:
        return cast(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"config key '{key}': {exc}") from exc


def parse_float_list(s: str) -> list:
    return [float(tok) for tok in s.split(",") if tok.strip()]
