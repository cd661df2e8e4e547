"""Brownian dynamics of N interacting particles in the unit box.

Euler-Maruyama with soft pair forces gathered through a cell list, or
hard-sphere contact handling by symmetric pairwise projection after each
step. Realizations carry isolated RNG streams, so ensembles are
deterministic regardless of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DensityField, Grid, RngPlan
from .fv import MacroModel, NumericalError, free_energy
from .potentials import InteractionPotential


@dataclass
class ParticleState:
    """Positions of one realization, shape (N, d), all inside the box."""

    positions: np.ndarray
    time: float = 0.0
    rng: np.random.Generator | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2:
            raise ValueError("positions must have shape (N, d)")
        if np.abs(self.positions).max() > 0.5 + 1e-12:
            raise ValueError("positions must lie in the unit box")


@dataclass
class ParticleEnsemble:
    """Snapshots of R realizations: time -> array of shape (R, N, d)."""

    snapshot_times: list
    snapshots: dict = field(default_factory=dict)

    def positions_at(self, t: float) -> np.ndarray:
        return self.snapshots[min(self.snapshots, key=lambda s: abs(s - t))]


class EnsembleConfig:
    """Run parameters for an ensemble of realizations."""

    def __init__(
        self,
        n_particles,
        realizations,
        dt,
        snapshot_times,
        seed,
        dim=2,
        hard_sphere=False,
        initial_sampler=None,
    ):
        self.n_particles = int(n_particles)
        self.realizations = int(realizations)
        self.dt = float(dt)
        self.snapshot_times = sorted(float(t) for t in snapshot_times)
        self.seed = int(seed)
        self.dim = int(dim)
        self.hard_sphere = bool(hard_sphere)
        self.initial_sampler = initial_sampler or sample_uniform


# ---------------------------------------------------------------------------
# Cell list


def _ranges_concat(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenate arange(start, start+count) for all rows."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    reps = np.repeat(np.cumsum(counts) - counts, counts)
    return np.arange(total, dtype=np.int64) - reps + np.repeat(starts, counts)


class CellList:
    """Bucket grid for neighbor search; bucket side >= cutoff.

    Supports an optional batch index so many independent realizations can be
    searched in one pass (pairs never cross batch boundaries).
    """

    def __init__(self, positions: np.ndarray, cutoff: float, batch=None):
        pos = np.asarray(positions, dtype=float)
        if pos.ndim != 2:
            raise ValueError("positions must be (n, d)")
        n, d = pos.shape
        if not 0 < cutoff:
            raise ValueError("cutoff must be positive")
        self.positions = pos
        self.cutoff = float(cutoff)
        self.dim = d
        nb = max(1, int(math.floor(1.0 / cutoff)))
        self.buckets_per_dim = nb
        coords = np.clip(((pos + 0.5) * nb).astype(np.int64), 0, nb - 1)
        flat = coords[:, 0]
        for ax in range(1, d):
            flat = flat * nb + coords[:, ax]
        if batch is not None:
            flat = np.asarray(batch, dtype=np.int64) * nb**d + flat
        self.order = np.argsort(flat, kind="stable")
        self.sorted_flat = flat[self.order]
        self._coords = coords
        self._batch = batch
        self._nb = nb

    def candidate_pairs(self) -> tuple:
        """All (i, j), i < j in sort order, from own plus neighbor buckets."""
        nb, d = self._nb, self.dim
        coords = self._coords[self.order]
        flat_sorted = self.sorted_flat
        n = len(flat_sorted)
        out_i, out_j = [], []

        # half-shell of bucket offsets: (0,...,0) handled separately
        offsets = []
        for off in np.ndindex(*(3,) * d):
            off = tuple(o - 1 for o in off)
            if off > (0,) * d:
                offsets.append(off)

        # same-bucket pairs: each particle with later particles in its run
        ends = np.searchsorted(flat_sorted, flat_sorted, side="right")
        idx = np.arange(n)
        counts = ends - idx - 1
        out_i.append(np.repeat(idx, counts))
        out_j.append(_ranges_concat(idx + 1, counts))

        base = flat_sorted
        for off in offsets:
            shifted_coords = coords + np.array(off, dtype=np.int64)
            valid = np.all((shifted_coords >= 0) & (shifted_coords < nb), axis=1)
            target = shifted_coords[:, 0]
            for ax in range(1, d):
                target = target * nb + shifted_coords[:, ax]
            if self._batch is not None:
                target = target + (base // nb**d) * nb**d
            target = target[valid]
            src = idx[valid]
            s = np.searchsorted(flat_sorted, target, side="left")
            e = np.searchsorted(flat_sorted, target, side="right")
            counts = e - s
            out_i.append(np.repeat(src, counts))
            out_j.append(_ranges_concat(s, counts))

        i = np.concatenate(out_i)
        j = np.concatenate(out_j)
        return self.order[i], self.order[j]

    def pairs_within(self, r: float | None = None) -> tuple:
        """Pairs at distance < r (default: the cutoff), plus their distances
        and displacement vectors i - j."""
        if r is None:
            r = self.cutoff
        if r > self.cutoff + 1e-15:
            raise ValueError("query radius exceeds cell-list cutoff")
        i, j = self.candidate_pairs()
        disp = self.positions[i] - self.positions[j]
        dist = np.linalg.norm(disp, axis=1)
        keep = dist < r
        return i[keep], j[keep], dist[keep], disp[keep]


def brute_force_pairs(positions: np.ndarray, cutoff: float) -> set:
    """O(N^2) reference pair set at distance < cutoff."""
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    i, j = np.where((dist < cutoff) & (np.arange(n)[:, None] < np.arange(n)[None, :]))
    return set(zip(i.tolist(), j.tolist()))


# ---------------------------------------------------------------------------
# Stepping


def reflect_into_box(x: np.ndarray) -> np.ndarray:
    """Coordinate-wise mirror reflection into [-1/2, 1/2]."""
    t = np.mod(x + 0.5, 2.0)
    return 1.0 - np.abs(1.0 - t) - 0.5


def _pair_drift(
    positions: np.ndarray,
    pot: InteractionPotential,
    epsilon: float,
    batch=None,
) -> np.ndarray:
    """Sum of soft pair forces -grad_x u((x_i - x_j)/eps) on each particle."""
    cutoff = min(pot.cutoff(1e-6) * epsilon, 0.49)
    cl = CellList(positions, cutoff, batch=batch)
    i, j, dist, disp = cl.pairs_within()
    drift = np.zeros_like(positions)
    if len(i) == 0:
        return drift
    dist = np.maximum(dist, 1e-14)
    mag = -pot.u_prime(dist / epsilon) / epsilon
    f = mag[:, None] * disp / dist[:, None]
    np.add.at(drift, i, f)
    np.add.at(drift, j, -f)
    return drift


def resolve_hard_overlaps(
    state: ParticleState, epsilon: float, max_sweeps: int = 500
) -> ParticleState:
    pos = _resolve_overlaps_array(state.positions[None, :, :], epsilon, max_sweeps)
    return ParticleState(pos[0], time=state.time, rng=state.rng)


def _resolve_overlaps_array(pos: np.ndarray, epsilon: float, max_sweeps: int = 500):
    """Push every overlapping pair symmetrically to contact; pos is (R, N, d).

    Termination tolerates a 1e-12 contact defect; each push overshoots by the
    same margin so isolated pairs clear it in one sweep.
    """
    R, N, d = pos.shape
    flat = pos.reshape(R * N, d).copy()
    batch = np.repeat(np.arange(R), N)
    tol = 1e-12
    # The candidate set is built once with a skin margin and reused while no
    # particle has moved more than skin/2 since the build; that keeps every
    # pair closer than epsilon inside the candidate set.
    skin = 0.5 * epsilon
    cand_i = cand_j = ref = None
    for sweep in range(max_sweeps):
        if ref is None or np.sum((flat - ref) ** 2, axis=1).max() > (0.5 * skin) ** 2:
            cl = CellList(flat, min(epsilon + skin, 0.999), batch=batch)
            cand_i, cand_j = cl.candidate_pairs()
            ref = flat.copy()
        disp = flat[cand_i] - flat[cand_j]
        dist = np.linalg.norm(disp, axis=1)
        keep = dist < epsilon - tol
        if not keep.any():
            return flat.reshape(R, N, d)
        i, j = cand_i[keep], cand_j[keep]
        dist = np.maximum(dist[keep], 1e-14)
        disp = disp[keep]
        # first sweep moves pairs exactly to contact; later sweeps over-relax,
        # which breaks up clustered overlaps far faster than plain Jacobi
        omega = 1.0 if sweep == 0 else 1.6
        push = omega * 0.5 * (epsilon - dist) + tol
        corr = push[:, None] * disp / dist[:, None]
        np.add.at(flat, i, corr)
        np.add.at(flat, j, -corr)
        flat = reflect_into_box(flat)
    raise NumericalError("jammed configuration: overlap resolution did not converge")


def em_step(
    state: ParticleState,
    model: MacroModel,
    pot: InteractionPotential | None,
    dt: float,
    zero_noise: bool = False,
) -> ParticleState:
    """One Euler-Maruyama step with mirror reflection at the box boundary."""
    pos = _em_step_array(
        state.positions[None, :, :],
        model,
        pot,
        dt,
        None if zero_noise else [state.rng],
    )
    return ParticleState(pos[0], time=state.time + dt, rng=state.rng)


def _em_step_array(pos, model, pot, dt, rngs):
    R, N, d = pos.shape
    drift = -model.external.gradient(pos)
    if pot is not None and not pot.hard:
        flat = pos.reshape(R * N, d)
        batch = np.repeat(np.arange(R), N)
        drift += _pair_drift(flat, pot, model.epsilon, batch=batch).reshape(R, N, d)
    move = drift * dt
    if np.abs(move).max() > 1.0:
        raise NumericalError("step too large: drift crosses the domain")
    new = pos + move
    if rngs is not None:
        scale = math.sqrt(2.0 * dt)
        noise = np.stack([rng.standard_normal((N, d)) for rng in rngs])
        new = new + scale * noise
    new = reflect_into_box(new)
    if pot is not None and pot.hard:
        new = _resolve_overlaps_array(new, model.epsilon)
    return new


# ---------------------------------------------------------------------------
# Initial samplers: rng, n, dim -> (n, dim) positions


def sample_uniform(rng, n, dim):
    return rng.uniform(-0.5, 0.5, size=(n, dim))


def make_indicator_sampler(lo: float, hi: float):
    """x uniform on [lo, hi], remaining coordinates uniform on the box."""

    def sampler(rng, n, dim):
        pos = rng.uniform(-0.5, 0.5, size=(n, dim))
        pos[:, 0] = rng.uniform(lo, hi, size=n)
        return pos

    return sampler


def make_x_profile_sampler(profile: DensityField):
    """Inverse-CDF sampling of a 1D marginal; other coordinates uniform."""
    if profile.grid.dim != 1:
        raise ValueError("profile must be one-dimensional")
    edges = profile.grid.axis_edges()
    cdf = np.concatenate([[0.0], np.cumsum(profile.values * profile.grid.spacing)])
    cdf /= cdf[-1]

    def sampler(rng, n, dim):
        pos = rng.uniform(-0.5, 0.5, size=(n, dim))
        u = rng.uniform(0.0, 1.0, size=n)
        pos[:, 0] = np.interp(u, cdf, edges)
        return pos

    return sampler


def make_radial_sine_sampler(mu=0.3, sigma=0.05, amplitude=0.6):
    """Rejection sampler for C (1 + a sin(theta)) exp(-(r - mu)^2 / (2 sigma^2))."""

    def density(xy):
        r = np.linalg.norm(xy, axis=-1)
        theta = np.arctan2(xy[..., 1], xy[..., 0])
        return (1.0 + amplitude * np.sin(theta)) * np.exp(-((r - mu) ** 2) / (2 * sigma**2))

    bound = 1.0 + amplitude

    def sampler(rng, n, dim):
        if dim != 2:
            raise ValueError("radial sampler is two-dimensional")
        out = np.empty((n, 2))
        have = 0
        while have < n:
            cand = rng.uniform(-0.5, 0.5, size=(2 * (n - have) + 16, 2))
            acc = rng.uniform(0.0, bound, size=len(cand)) < density(cand)
            take = cand[acc][: n - have]
            out[have : have + len(take)] = take
            have += len(take)
        return out

    return sampler


# ---------------------------------------------------------------------------
# Ensembles


def run_ensemble(
    config: EnsembleConfig,
    model: MacroModel,
    pot: InteractionPotential | None,
) -> ParticleEnsemble:
    """R realizations with per-stream RNG; snapshots at the requested times.

    All realizations advance in lockstep so hard-sphere searches batch into a
    single cell-list pass; results are identical to independent runs.
    """
    R, N, d = config.realizations, config.n_particles, config.dim
    rngs = [RngPlan(config.seed, r).generator() for r in range(R)]
    pos = np.stack([config.initial_sampler(rng, N, d) for rng in rngs])
    pos = reflect_into_box(pos)
    if pot is not None and pot.hard:
        # dense initial data may need far more sweeps than the per-step cap
        pos = _resolve_overlaps_array(pos, model.epsilon, max_sweeps=5000)

    ens = ParticleEnsemble(snapshot_times=list(config.snapshot_times))
    t = 0.0
    dt = config.dt
    for target in config.snapshot_times:
        if target <= 1e-15:
            ens.snapshots[0.0] = pos.copy()
            continue
        n_steps = int(round((target - t) / dt))
        n_steps = max(n_steps, 0)
        for _ in range(n_steps):
            pos = _em_step_array(pos, model, pot, dt, rngs)
        t += n_steps * dt
        ens.snapshots[target] = pos.copy()
    return ens


def histogram_density(positions: np.ndarray, grid: Grid) -> DensityField:
    """Bin counts scaled to a unit-mass density; positions is (..., d)."""
    pts = np.asarray(positions, dtype=float).reshape(-1, grid.dim)
    edges = [grid.axis_edges()] * grid.dim
    counts, _ = np.histogramdd(pts, bins=edges)
    vals = counts / (len(pts) * grid.cell_volume)
    return DensityField(grid, vals.reshape(grid.shape))


def histogram_x_marginal(positions: np.ndarray, grid: Grid) -> DensityField:
    """1D histogram of the first coordinate on a 1D grid."""
    if grid.dim != 1:
        raise ValueError("marginal grid must be 1d")
    pts = np.asarray(positions, dtype=float)
    x = pts.reshape(-1, pts.shape[-1])[:, 0]
    counts, _ = np.histogram(x, bins=grid.axis_edges())
    return DensityField(grid, counts / (len(x) * grid.spacing))


def ensemble_free_energy(model: MacroModel, hist: DensityField) -> float:
    """Macroscopic free energy evaluated on a histogram density."""
    return free_energy(model, hist)


@dataclass(frozen=True)
class PairCorrelation:
    r: np.ndarray
    g: np.ndarray
    counts: np.ndarray
    reliable: np.ndarray  # False where a bin has < 50 pairs


def pair_correlation(
    snapshots,
    r_edges: np.ndarray,
    dim: int,
    normalization_samples: int = 2_000_000,
    normalization_seed: int = 12345,
) -> PairCorrelation:
    """g(r) from pairwise distances in `snapshots` (iterable of (N, d) arrays).

    Normalized against uniform independent points in the same box, estimated
    by Monte Carlo, so finite-box edge effects cancel.
    """
    r_edges = np.asarray(r_edges, dtype=float)
    counts = np.zeros(len(r_edges) - 1)
    n_pairs = 0
    for pos in snapshots:
        pos = np.asarray(pos, dtype=float).reshape(-1, dim)
        n = len(pos)
        if n < 2:
            continue
        if n <= 64:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.linalg.norm(diff, axis=-1)
            iu = np.triu_indices(n, k=1)
            d = dist[iu]
        else:
            cl = CellList(pos, float(r_edges[-1]))
            _, _, d, _ = cl.pairs_within()
        counts += np.histogram(d, bins=r_edges)[0]
        n_pairs += n * (n - 1) // 2

    rng = np.random.default_rng(normalization_seed)
    ref = np.zeros_like(counts)
    m = normalization_samples
    a = rng.uniform(-0.5, 0.5, size=(m, dim))
    b = rng.uniform(-0.5, 0.5, size=(m, dim))
    ref = np.histogram(np.linalg.norm(a - b, axis=1), bins=r_edges)[0] / m

    with np.errstate(divide="ignore", invalid="ignore"):
        g = counts / (n_pairs * ref)
    g[~np.isfinite(g)] = 0.0
    centers = 0.5 * (r_edges[:-1] + r_edges[1:])
    return PairCorrelation(centers, g, counts, counts >= 50)
