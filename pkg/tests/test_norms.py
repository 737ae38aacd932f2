import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kptools.multipliers import project_Pplus, project_Q
from kptools.norms import (
    NormSpec,
    TrajectoryField,
    evaluate,
    h2_norm,
    l2_norm,
    lattice_maximal_norm,
    mixed_norm,
    weighted_sobolev_norm,
    x_norm,
    y0_exponents,
    y0_norm,
    y_norm_set,
    z0_exponents,
    z0_norm,
)
from kptools.spectral import PhysicalField, forward_transform, inverse_transform, make_grid, single_mode

from conftest import random_physical


@pytest.fixture
def g():
    return make_grid(4 * np.pi, 4 * np.pi, 64, 64)


def constant_traj(grid, c, times):
    return TrajectoryField.constant(PhysicalField(grid, np.full(grid.shape, c)), times)


@pytest.mark.parametrize("order", [("t", "x", "y"), ("x", "t", "y"), ("y", "x", "t")])
def test_constant_field_l2(g, order):
    times = np.linspace(0.0, 0.5, 9)
    u = constant_traj(g, -3.0, times)
    V = 4 * g.Lx * g.Ly
    assert mixed_norm(u, NormSpec("mixed_lebesgue", order, (2, 2, 2))) == pytest.approx(3.0 * np.sqrt(V * 0.5), rel=1e-13)


def test_constant_field_inner_infinity(g):
    times = np.linspace(0.0, 2.0, 5)
    u = constant_traj(g, 2.0, times)
    # L2_t L2_x Linf_y: |c| * (2 Lx)^{1/2} * T^{1/2}
    got = mixed_norm(u, NormSpec("mixed_lebesgue", ("t", "x", "y"), (2, 2, np.inf)))
    assert got == pytest.approx(2.0 * np.sqrt(2 * g.Lx * 2.0), rel=1e-13)


def test_single_column_sup(g, rng):
    times = np.linspace(0.0, 1.0, 11)
    vals = np.zeros((times.size,) + g.shape)
    col = rng.standard_normal((times.size, g.Ny))
    vals[:, 7, :] = col
    u = TrajectoryField(g, times, vals)
    w = np.full(times.size, times[1])
    w[[0, -1]] *= 0.5
    expect = np.sqrt(np.sum(w[:, None] * col**2) * g.dy)
    got = mixed_norm(u, NormSpec("mixed_lebesgue", ("x", "t", "y"), (np.inf, 2, 2)))
    assert got == pytest.approx(expect, rel=1e-13)


def test_zero_trajectory(g):
    u = constant_traj(g, 0.0, np.linspace(0, 1, 3))
    assert mixed_norm(u, NormSpec("mixed_lebesgue")) == 0.0
    for i in range(1, 13):
        assert x_norm(u, i) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.sampled_from([1.0, 2.0, 4.0, np.inf]), st.sampled_from([1.0, 2.0, 3.0]))
def test_mixed_norm_is_homogeneous(c, p, q):
    grid = make_grid(np.pi, np.pi, 8, 8)
    rng = np.random.default_rng(5)
    u = TrajectoryField(grid, np.linspace(0, 1, 4), rng.standard_normal((4, 8, 8)))
    spec = NormSpec("mixed_lebesgue", ("y", "t", "x"), (p, q, 2.0))
    assert mixed_norm(u.scaled(c), spec) == pytest.approx(abs(c) * mixed_norm(u, spec), rel=1e-12, abs=1e-300)


def test_sobolev_zero_orders_is_l2(g, rng):
    f = random_physical(g, rng)
    assert weighted_sobolev_norm(f) == pytest.approx(l2_norm(f), rel=1e-13)
    assert l2_norm(f) == pytest.approx(np.sqrt(g.cell_area) * np.linalg.norm(f.values), rel=1e-13)


def test_sobolev_dotted_derivative_on_cosine():
    grid = make_grid(np.pi, np.pi, 16, 16)
    f = single_mode(grid, 2, 0)
    assert weighted_sobolev_norm(f, 1.0, dotted_x=True) == pytest.approx(2 * l2_norm(f), rel=1e-13)


def test_weight_barely_changes_centered_bump():
    grid = make_grid(2 * np.pi, 2 * np.pi, 128, 128)
    X, Y = grid.physical_mesh()
    s = 0.4
    f = PhysicalField(grid, np.exp(-(X**2 + Y**2) / (2 * s**2)))
    ratio = weighted_sobolev_norm(f, alpha=1.0) / weighted_sobolev_norm(f)
    # Gaussian second moment: |f|^2 ~ exp(-y^2/s^2) has <y^2> = s^2 / 2
    assert ratio == pytest.approx(np.sqrt(1 + s**2 / 2), rel=1e-6)
    assert ratio < 1.1


def test_z0_zero_field(g):
    res = z0_norm(PhysicalField(g, np.zeros(g.shape)))
    assert res.value == 0.0
    assert all(v == 0.0 for v in res.components.values())


def test_z0_high_field_has_no_low_parts(g, rng):
    F = project_Q(forward_transform(random_physical(g, rng, zero_x_mean=True)))
    res = z0_norm(F)
    assert res.value > 0
    for key in ("low_w_sigma0_gamma0", "low_w_sigma1_gamma1", "low_sigma2_gamma2"):
        assert res.components[key] == 0.0


def test_z0_exponent_table():
    e = z0_exponents(0.05)
    assert e["sigma2"] == pytest.approx(0.8)
    assert e["gamma2"] == pytest.approx(1.55)


def test_z0_refuses_nonzero_x_mean(g, rng):
    with pytest.raises(ValueError):
        z0_norm(random_physical(g, rng))


def test_x1_on_time_constant_is_h2(g, rng):
    f = random_physical(g, rng)
    u = TrajectoryField.constant(f, np.linspace(0, 1, 5))
    assert x_norm(u, 1) == pytest.approx(h2_norm(f), rel=1e-13)


def test_x7_vanishes_on_pplus_field(g, rng):
    F = project_Pplus(project_Q(forward_transform(random_physical(g, rng, zero_x_mean=True))))
    u = TrajectoryField.constant(inverse_transform(F), np.linspace(0, 1, 5))
    assert x_norm(u, 5) > 0
    assert x_norm(u, 7) == pytest.approx(0.0, abs=1e-12 * x_norm(u, 5))


def test_x_norm_support_checks(g, rng):
    u = TrajectoryField.constant(random_physical(g, rng, zero_x_mean=True), np.linspace(0, 1, 3))
    with pytest.raises(ValueError):
        x_norm(u, 5)
    with pytest.raises(ValueError):
        y_norm_set(u)
    with pytest.raises(ValueError):
        x_norm(u, 13)


def test_y0_zero_on_high_field(g, rng):
    F = project_Q(forward_transform(random_physical(g, rng, zero_x_mean=True)))
    val, comps = y0_norm(F)
    assert val == 0.0 and all(v == 0.0 for v in comps.values())
    assert y0_norm(PhysicalField(g, np.zeros(g.shape)))[0] == 0.0


def test_y0_exponent_list():
    got = [(round(a, 12), round(b, 12), w) for a, b, w in y0_exponents(0.05)]
    assert got == [(-0.3, 1.05, True), (-0.55, 0.55, True), (-0.8, 1.55, False)]


def test_maximal_single_cell(g):
    vals = np.zeros(g.shape)
    iy = np.flatnonzero((g.y >= 2.0) & (g.y < 3.0))
    vals[10, iy[1]] = -4.5
    vals[20, iy[0]] = 1.0
    u = TrajectoryField(g, np.zeros(1), vals[None])
    assert lattice_maximal_norm(u) == pytest.approx(4.5)


def test_maximal_constant_in_y():
    grid = make_grid(np.pi, 4.0, 16, 64)
    u = TrajectoryField(grid, np.zeros(1), np.full((1,) + grid.shape, 0.7))
    assert lattice_maximal_norm(u) == pytest.approx(0.7 * np.sqrt(2 * grid.Ly), rel=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_maximal_weight_monotone(seed):
    grid = make_grid(4.0, 4.0, 16, 16)
    u = TrajectoryField(grid, np.linspace(0, 1, 3), np.random.default_rng(seed).standard_normal((3, 16, 16)))
    assert lattice_maximal_norm(u, weight_alpha=0.55) >= lattice_maximal_norm(u)


def test_evaluate_records(g, rng):
    f = random_physical(g, rng, zero_x_mean=True)
    rec = evaluate(NormSpec("z0"), f)
    assert rec.value == pytest.approx(z0_norm(f).value)
    assert set(rec.components) == set(z0_norm(f).components)
    with pytest.raises(ValueError):
        NormSpec("bogus")
