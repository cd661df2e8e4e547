"""particles: cell list, EM stepping, hard spheres, histograms, g(r)."""

import numpy as np
import pytest

from voxfp import fv, particles
from voxfp.core import DensityField, Grid
from voxfp.potentials import HardSphere, PowerLaw, Quadratic, Yukawa


def make_model(d=1, external=None, epsilon=0.0):
    if external is None:
        return fv.MacroModel(d=d, n_particles=1, epsilon=epsilon, alpha=0.0)
    return fv.MacroModel(
        d=d, n_particles=1, epsilon=epsilon, alpha=0.0, external=external
    )


# ---------------------------------------------------------------------------
# Cell list


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_cell_list_matches_brute_force(dim):
    rng = np.random.default_rng(100 + dim)
    for trial in range(15):
        n = int(rng.integers(2, 500))
        cutoff = float(rng.uniform(0.02, 0.3))
        pos = rng.uniform(-0.5, 0.5, size=(n, dim))
        cl = particles.CellList(pos, cutoff)
        i, j, dist, _ = cl.pairs_within()
        got = set(zip(*np.sort(np.stack([i, j]), axis=0).tolist()))
        assert got == particles.brute_force_pairs(pos, cutoff)
        assert np.all(dist < cutoff)


def test_cell_list_batches_do_not_mix():
    rng = np.random.default_rng(7)
    pos = np.tile(rng.uniform(-0.5, 0.5, size=(40, 2)), (2, 1))
    batch = np.repeat([0, 1], 40)
    cl = particles.CellList(pos, 0.2, batch=batch)
    i, j, _, _ = cl.pairs_within()
    assert np.all((i < 40) == (j < 40))  # duplicated coordinates never pair up


def test_cell_list_rejects_bad_input():
    with pytest.raises(ValueError, match="cutoff"):
        particles.CellList(np.zeros((3, 2)), 0.0)
    with pytest.raises(ValueError, match="query radius"):
        particles.CellList(np.zeros((3, 2)), 0.1).pairs_within(0.2)


# ---------------------------------------------------------------------------
# Stepping


def test_reflection_containment():
    rng = np.random.default_rng(8)
    x = rng.uniform(-3, 3, size=(1000, 2))
    r = particles.reflect_into_box(x)
    assert np.abs(r).max() <= 0.5
    inside = rng.uniform(-0.5, 0.5, size=(100, 2))
    assert np.allclose(particles.reflect_into_box(inside), inside)


def test_zero_noise_gradient_step():
    # u = 0, V = 5x^2: X' = X (1 - 10 dt)
    x0 = np.array([[0.1], [-0.3], [0.42]])
    state = particles.ParticleState(x0)
    model = make_model(d=1, external=Quadratic(5.0))
    dt = 1e-3
    out = particles.em_step(state, model, None, dt, zero_noise=True)
    assert np.allclose(out.positions, x0 * (1 - 10 * dt), atol=1e-15)
    assert out.time == pytest.approx(dt)


def test_step_too_large():
    state = particles.ParticleState(np.array([[0.4]]))
    model = make_model(d=1, external=Quadratic(5.0))
    with pytest.raises(fv.NumericalError, match="step too large"):
        particles.em_step(state, model, None, dt=10.0, zero_noise=True)


def test_repulsive_pair_separates():
    # two particles, zero noise, PowerLaw(4), separation 0.05 = 0.5 eps
    pos = np.array([[0.025, 0.0], [-0.025, 0.0]])
    state = particles.ParticleState(pos)
    model = make_model(d=2, epsilon=0.1)
    out = particles.em_step(state, model, PowerLaw(4), 1e-6, zero_noise=True)
    sep = np.linalg.norm(out.positions[0] - out.positions[1])
    assert sep > 0.05


def test_containment_after_noisy_steps():
    rng = np.random.default_rng(9)
    state = particles.ParticleState(
        rng.uniform(-0.5, 0.5, size=(200, 2)), rng=np.random.default_rng(1)
    )
    model = make_model(d=2, external=Quadratic(5.0))
    for _ in range(20):
        state = particles.em_step(state, model, None, 1e-3)
        assert np.abs(state.positions).max() <= 0.5


def test_boltzmann_ks_distance():
    # u = 0, V = 5x^2, 1e5 independent particles: empirical CDF vs quadrature
    from scipy.integrate import quad
    from scipy.stats import ks_1samp

    n = 100_000
    cfg = particles.EnsembleConfig(
        n_particles=n, realizations=1, dt=2.5e-4, snapshot_times=[1.0],
        seed=123, dim=1,
    )
    model = make_model(d=1, external=Quadratic(5.0))
    ens = particles.run_ensemble(cfg, model, None)
    x = ens.snapshots[1.0].ravel()
    z = quad(lambda s: np.exp(-5 * s**2), -0.5, 0.5)[0]

    def cdf(t):
        t = np.atleast_1d(t)
        return np.array(
            [quad(lambda s: np.exp(-5 * s**2), -0.5, ti)[0] / z for ti in t]
        )

    assert ks_1samp(x, cdf).statistic <= 0.02


# ---------------------------------------------------------------------------
# Hard spheres


def test_resolve_symmetric_pair():
    eps = 0.01
    pos = np.array([[0.004, 0.0], [-0.004, 0.0]])  # distance 0.8 eps
    state = particles.ParticleState(pos)
    out = particles.resolve_hard_overlaps(state, eps)
    d = np.linalg.norm(out.positions[0] - out.positions[1])
    assert d == pytest.approx(eps, abs=1e-9)
    # symmetric push: midpoint unchanged
    assert np.allclose(out.positions.mean(axis=0), pos.mean(axis=0), atol=1e-15)


def test_resolve_identity_without_overlap():
    pos = np.array([[0.2, 0.1], [-0.3, 0.0], [0.0, -0.4]])
    out = particles.resolve_hard_overlaps(particles.ParticleState(pos), 0.01)
    assert np.array_equal(out.positions, pos)


def test_resolve_three_colinear():
    eps = 0.1
    pos = np.array([[-0.06, 0.0], [0.0, 0.0], [0.06, 0.0]])
    out = particles.resolve_hard_overlaps(particles.ParticleState(pos), eps)
    p = out.positions
    for a in range(3):
        for b in range(a + 1, 3):
            assert np.linalg.norm(p[a] - p[b]) >= eps - 1e-12


def test_resolve_jammed_raises():
    # far more unit-diameter spheres than the box can hold
    rng = np.random.default_rng(3)
    pos = rng.uniform(-0.5, 0.5, size=(20, 2))
    with pytest.raises(fv.NumericalError, match="jammed configuration"):
        particles.resolve_hard_overlaps(
            particles.ParticleState(pos), 0.9, max_sweeps=50
        )


def test_hard_sphere_invariant_after_steps():
    eps = 0.02
    cfg = particles.EnsembleConfig(
        n_particles=100, realizations=2, dt=1e-5, snapshot_times=[5e-4, 1e-3],
        seed=11, dim=2, hard_sphere=True,
    )
    model = fv.MacroModel(d=2, n_particles=100, epsilon=eps, alpha=np.pi)
    ens = particles.run_ensemble(cfg, model, HardSphere())
    for t, snap in ens.snapshots.items():
        for r in range(2):
            d = np.linalg.norm(
                snap[r][:, None, :] - snap[r][None, :, :], axis=-1
            )
            np.fill_diagonal(d, 1.0)
            assert d.min() >= eps - 1e-12
        assert np.abs(snap).max() <= 0.5


# ---------------------------------------------------------------------------
# Ensembles


def test_ensemble_determinism():
    cfg = dict(
        n_particles=50, realizations=2, dt=1e-3, snapshot_times=[0.0, 0.01],
        seed=42, dim=2,
    )
    model = make_model(d=2, external=Quadratic(5.0))
    a = particles.run_ensemble(particles.EnsembleConfig(**cfg), model, None)
    b = particles.run_ensemble(particles.EnsembleConfig(**cfg), model, None)
    for t in a.snapshots:
        assert np.array_equal(a.snapshots[t], b.snapshots[t])


def test_snapshot_at_zero_is_initial_condition():
    cfg = particles.EnsembleConfig(
        n_particles=30, realizations=3, dt=1e-3, snapshot_times=[0.0],
        seed=5, dim=1, initial_sampler=particles.make_indicator_sampler(0.1, 0.3),
    )
    ens = particles.run_ensemble(cfg, make_model(d=1), None)
    snap = ens.snapshots[0.0]
    assert snap.shape == (3, 30, 1)
    assert snap[..., 0].min() >= 0.1 and snap[..., 0].max() <= 0.3
    # streams differ between realizations
    assert not np.array_equal(snap[0], snap[1])


def test_ideal_marginal_matches_linear_fv():
    # zero interaction: x-marginal within 3 standard errors of the FV solution
    g = Grid(dim=1, cells_per_dim=50)
    cfg = particles.EnsembleConfig(
        n_particles=50_000, realizations=1, dt=2.5e-4, snapshot_times=[0.05],
        seed=21, dim=1, initial_sampler=particles.make_indicator_sampler(0.1, 0.3),
    )
    model = make_model(d=1, external=Quadratic(5.0))
    ens = particles.run_ensemble(cfg, model, None)
    hist = particles.histogram_x_marginal(ens.snapshots[0.05], g)

    x = g.axis_centers()
    p0 = DensityField(g, np.where((x > 0.1) & (x < 0.3), 5.0, 0.0))
    ref = fv.solve(model, p0, 0.05, output_times=[0.05])[-1][1]
    l1 = np.abs(hist.values - ref.values).sum() * g.spacing
    n = 50_000
    se_l1 = np.sum(np.sqrt(ref.values * g.spacing * (1 + 0 * x) / n))
    assert l1 <= 3 * se_l1


# ---------------------------------------------------------------------------
# Histograms and free energy


def test_histogram_single_sample():
    g = Grid(dim=2, cells_per_dim=10)
    center = np.array([[g.axis_centers()[3], g.axis_centers()[7]]])
    h = particles.histogram_density(center, g)
    assert h.values[3, 7] == pytest.approx(1.0 / g.cell_volume, rel=1e-12)
    assert np.count_nonzero(h.values) == 1


def test_histogram_uniform_error_bars():
    g = Grid(dim=1, cells_per_dim=64)
    rng = np.random.default_rng(17)
    n = 1_000_000
    h = particles.histogram_density(rng.uniform(-0.5, 0.5, size=(n, 1)), g)
    se = np.sqrt((1 / g.spacing) / n)  # binomial per-bin standard error
    assert np.abs(h.values - 1.0).max() <= 3.5 * se
    assert h.mass == pytest.approx(1.0, abs=1e-12)


def test_histogram_mass_exact():
    g = Grid(dim=2, cells_per_dim=8)
    rng = np.random.default_rng(2)
    h = particles.histogram_density(rng.uniform(-0.5, 0.5, size=(777, 2)), g)
    assert h.mass == pytest.approx(1.0, abs=1e-13)


def test_ensemble_free_energy_delegates():
    g = Grid(dim=1, cells_per_dim=32)
    rng = np.random.default_rng(4)
    h = particles.histogram_density(rng.uniform(-0.5, 0.5, size=(5000, 1)), g)
    model = fv.MacroModel(
        d=1, n_particles=100, epsilon=0.0015, alpha=2.0, external=Quadratic(5.0)
    )
    assert particles.ensemble_free_energy(model, h) == fv.free_energy(model, h)


def test_ensemble_free_energy_uniform_limit():
    g = Grid(dim=1, cells_per_dim=32)
    rng = np.random.default_rng(4)
    n = 500_000
    h = particles.histogram_density(rng.uniform(-0.5, 0.5, size=(n, 1)), g)
    model = fv.MacroModel(
        d=1, n_particles=100, epsilon=0.0015, alpha=2.0, external=Quadratic(5.0)
    )
    assert particles.ensemble_free_energy(model, h) == pytest.approx(
        0.297 / 2 + 5 / 12, abs=2e-3
    )


# ---------------------------------------------------------------------------
# Pair correlation


def test_pair_correlation_ideal_gas():
    rng = np.random.default_rng(6)
    snaps = [rng.uniform(-0.5, 0.5, size=(400, 2)) for _ in range(40)]
    r_edges = np.linspace(0.02, 0.3, 15)
    pc = particles.pair_correlation(snaps, r_edges, dim=2)
    assert np.all(pc.reliable)
    assert np.abs(pc.g - 1.0).max() <= 0.05


def test_pair_correlation_hard_core_empty():
    eps = 0.05
    cfg = particles.EnsembleConfig(
        n_particles=80, realizations=4, dt=2e-5, snapshot_times=[2e-3, 4e-3],
        seed=33, dim=2, hard_sphere=True,
    )
    model = fv.MacroModel(d=2, n_particles=80, epsilon=eps, alpha=np.pi)
    ens = particles.run_ensemble(cfg, model, HardSphere())
    snaps = [snap[r] for snap in ens.snapshots.values() for r in range(4)]
    r_edges = np.linspace(0.5 * eps, 2 * eps, 7)
    pc = particles.pair_correlation(snaps, r_edges, dim=2)
    inside = pc.r < eps - 0.25 * eps / 2
    assert np.all(pc.g[inside] == 0.0)


def test_pair_correlation_flags_sparse_bins():
    snaps = [np.array([[0.0, 0.0], [0.1, 0.0]])]
    pc = particles.pair_correlation(snaps, np.linspace(0.05, 0.2, 4), dim=2)
    assert not pc.reliable.any()
