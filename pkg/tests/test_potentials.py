"""potentials: u(r), forces, alpha_u quadrature and effective diameters."""

import numpy as np
import pytest

from voxfp.potentials import (
    HardSphere,
    PowerLaw,
    Quadratic,
    TabulatedInteraction,
    VolcanoRadial,
    VolcanoX,
    Yukawa,
    Zero,
    alpha_u,
    effective_diameter,
    eval_force,
    eval_u,
    unit_ball_volume,
)


def test_eval_u_closed_forms():
    assert eval_u(Yukawa(), 1.0) == pytest.approx(np.exp(-1), rel=1e-12)
    assert eval_u(PowerLaw(4), 2.0) == pytest.approx(0.0625, rel=1e-12)
    assert eval_u(HardSphere(), 0.5) == np.inf
    assert eval_u(HardSphere(), 1.5) == 0.0


def test_eval_u_origin_rejected():
    with pytest.raises(ValueError, match="undefined at origin"):
        eval_u(Yukawa(), 0.0)


def test_force_powerlaw_magnitude_and_direction():
    f = eval_force(PowerLaw(4), np.array([2.0, 0.0]), epsilon=1.0)
    assert f[0] == pytest.approx(4 * 2.0**-5, rel=1e-12)  # repulsive, +x
    assert f[1] == 0.0


def test_force_yukawa_magnitude():
    f = eval_force(Yukawa(), np.array([1.0, 0.0]), epsilon=1.0)
    assert f[0] == pytest.approx(2 * np.exp(-1), rel=1e-12)


def test_force_antisymmetric():
    for pot in (Yukawa(), PowerLaw(4)):
        x = np.array([0.3, -0.2])
        assert np.allclose(
            eval_force(pot, x, 0.5), -eval_force(pot, -x, 0.5), atol=1e-14
        )


def test_force_hard_sphere_rejected():
    with pytest.raises(ValueError, match="overlap resolution"):
        eval_force(HardSphere(), np.array([0.5, 0.0]))


def test_alpha_hard_sphere_exact():
    assert alpha_u(HardSphere(), 1).value == 2.0
    assert alpha_u(HardSphere(), 2).value == np.pi
    assert alpha_u(HardSphere(), 3).value == 4 * np.pi / 3


def test_alpha_yukawa_2d():
    res = alpha_u(Yukawa(), 2)
    assert res.value == pytest.approx(3.926, abs=1e-3)
    assert res.estimated_quadrature_error <= 1e-8 * (1 + abs(res.value))


def test_alpha_powerlaw4_2d_analytic():
    res = alpha_u(PowerLaw(4), 2)
    assert res.value == pytest.approx(np.pi**1.5, rel=1e-9)
    assert res.value == pytest.approx(5.568, abs=1e-3)


def test_alpha_zero_potential():
    zeros = TabulatedInteraction(
        np.linspace(0.1, 10, 50), np.zeros(50), tail_exponent=6.0
    )
    assert alpha_u(zeros, 2).value == pytest.approx(0.0, abs=1e-12)


def test_alpha_divergent_tail_rejected():
    with pytest.raises(ValueError, match="alpha undefined"):
        alpha_u(PowerLaw(2), 2)


@pytest.mark.parametrize(
    "pot,d",
    [
        (Yukawa(), 1),
        (Yukawa(), 2),
        (Yukawa(), 3),
        (PowerLaw(4.0), 1),
        (PowerLaw(4.0), 2),
        (PowerLaw(6.0), 2),
        (PowerLaw(6.0), 3),
    ],
)
def test_alpha_riemann_sum_oracle(pot, d):
    # brute-force composite sum on (r0, R]; closed-form head (integrand -> 1
    # as r -> 0) and an algebraic tail estimate bring the oracle below 1e-7
    r0, r_max = 1e-6, 60.0
    r = np.linspace(r0, r_max, 4_000_000)
    surf = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}[d]
    riemann = surf * np.trapezoid((1 - np.exp(-pot.u(r))) * r ** (d - 1), r)
    riemann += surf * r0**d / d
    q = pot.tail_exponent()
    if np.isfinite(q):
        riemann += surf * r_max ** (d - q) / (q - d)
    assert alpha_u(pot, d).value == pytest.approx(riemann, rel=1e-6)


def test_alpha_monotone_in_potential():
    # u1 >= u2 pointwise => alpha1 >= alpha2
    weak, strong = PowerLaw(4), PowerLaw(4)
    a_weak = alpha_u(TabulatedInteraction(
        np.linspace(0.05, 30, 400), 0.5 * weak.u(np.linspace(0.05, 30, 400)),
        tail_exponent=4.0), 2).value
    a_strong = alpha_u(strong, 2).value
    assert a_strong >= a_weak


def test_effective_diameter_identity():
    for d in (1, 2, 3):
        assert effective_diameter(HardSphere(), d) == pytest.approx(1.0, abs=1e-12)
    for pot in (Yukawa(), PowerLaw(4)):
        for d in (1, 2):
            eu = effective_diameter(pot, d)
            assert alpha_u(pot, d).value * eu**d == pytest.approx(
                unit_ball_volume(d), rel=1e-10
            )


def test_effective_diameter_values():
    assert effective_diameter(PowerLaw(4), 2) == pytest.approx(
        np.pi**-0.25, rel=1e-6
    )
    assert effective_diameter(Yukawa(), 2) == pytest.approx(
        np.sqrt(np.pi / 3.9262374), rel=1e-5
    )


def test_effective_diameter_zero_alpha_rejected():
    zeros = TabulatedInteraction(
        np.linspace(0.1, 10, 50), np.zeros(50), tail_exponent=6.0
    )
    with pytest.raises(ValueError, match="no excluded volume"):
        effective_diameter(zeros, 2)


def test_external_potentials_gradient_consistency():
    pots = [
        Zero(),
        Quadratic(5.0),
        VolcanoX(1.5, 1.0, 0.1),
        VolcanoRadial(4.5, 3.5, 25.0),
    ]
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.45, 0.45, size=(40, 2))
    h = 1e-6
    for pot in pots:
        grad = pot.gradient(pts)
        for axis in range(2):
            dp = pts.copy()
            dm = pts.copy()
            dp[:, axis] += h
            dm[:, axis] -= h
            fd = (pot.value(dp) - pot.value(dm)) / (2 * h)
            assert np.allclose(grad[:, axis], fd, atol=1e-6), type(pot).__name__


def test_volcano_x_shape():
    pot = VolcanoX(1.5, 1.0, 0.1)
    v0 = pot.value(np.array([[0.0, 0.0]]))[0]
    assert v0 == pytest.approx(-2.5, rel=1e-12)


def test_tabulated_interaction_interpolates():
    r = np.linspace(0.05, 20, 2000)
    tab = TabulatedInteraction(r, Yukawa().u(r), tail_exponent=6.0)
    assert eval_u(tab, 1.0) == pytest.approx(np.exp(-1), rel=1e-4)
    assert alpha_u(tab, 2).value == pytest.approx(3.926, abs=5e-3)
