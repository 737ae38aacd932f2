import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kptools.multipliers import (
    BumpProfile,
    DyadicIndex,
    FracDerivSpec,
    antideriv_x,
    block_Tkj,
    dx_frac,
    frac_deriv,
    partial_x,
    partial_y,
    plus,
    project_low,
    project_Pminus,
    project_Pplus,
    project_Q,
    project_Qtilde_ratio,
    project_Qtilde_y,
    theta_kj,
    weight_values,
    weight_y,
)
from kptools.spectral import PhysicalField, SpectralField, forward_transform, inverse_transform, make_grid, single_mode

from conftest import random_physical


@pytest.fixture
def half_grid():
    # xi spacing 1/4 so that sub-unit x-frequencies exist
    return make_grid(4 * np.pi, 4 * np.pi, 64, 64)


def mode_coeffs(grid, xi, lam):
    """Exact Hermitian pair at (xi, lam) and (-xi, -lam)."""
    m = int(round(xi * grid.Lx / np.pi))
    n = int(round(lam * grid.Ly / np.pi))
    c = np.zeros(grid.shape, complex)
    c[m, n] = c[-m, -n] = 1.0
    return SpectralField(grid, c)


def test_plus_adds_eps():
    assert plus(0.75, 0.05) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        plus(1.0, 0.0)


def test_Q_removes_low_mode(half_grid):
    F = mode_coeffs(half_grid, 0.5, 1.0)
    assert not np.any(project_Q(F).coeffs)


def test_Q_keeps_high_mode(half_grid):
    F = mode_coeffs(half_grid, 2.0, 1.0)
    assert np.array_equal(project_Q(F).coeffs, F.coeffs)


def test_Q_idempotent_and_complement(half_grid, rng):
    F = forward_transform(random_physical(half_grid, rng))
    QF = project_Q(F)
    assert np.array_equal(project_Q(QF).coeffs, QF.coeffs)
    assert np.array_equal(np.asarray(QF.coeffs) + np.asarray(project_low(F).coeffs), np.asarray(F.coeffs))


def test_Pplus_and_Pminus_membership(half_grid):
    F = mode_coeffs(half_grid, 2.0, 1.0)
    assert np.array_equal(project_Pplus(F).coeffs, F.coeffs)
    G = mode_coeffs(half_grid, 1.0, 3.0)
    assert np.array_equal(project_Pminus(G).coeffs, G.coeffs)
    assert not np.any(project_Pplus(G).coeffs)


def test_P_split_is_exact_and_orthogonal(half_grid, rng):
    F = forward_transform(random_physical(half_grid, rng))
    G = forward_transform(random_physical(half_grid, rng))
    p, m = np.asarray(project_Pplus(F).coeffs), np.asarray(project_Pminus(F).coeffs)
    assert np.array_equal(p + m, np.asarray(F.coeffs))
    assert np.vdot(project_Pplus(F).coeffs, project_Pminus(G).coeffs) == 0


def test_two_Qtilde_variants_differ(half_grid):
    # |lam| = 2, |lam/xi| = 1/2: kept by the lam cutoff, removed by the ratio cutoff
    F = mode_coeffs(half_grid, 4.0, 2.0)
    assert np.array_equal(project_Qtilde_y(F).coeffs, F.coeffs)
    assert not np.any(project_Qtilde_ratio(F).coeffs)


def test_bump_peak_and_support():
    psi = BumpProfile()
    assert psi(1.0) == 1.0
    assert psi(0.5) == 0.0 and psi(2.0) == 0.0
    assert theta_kj(1.0, 1.0, DyadicIndex(0, 0)) == psi(1.0) * psi(1.0)


@pytest.mark.parametrize("kind", ["smooth", "cosine"])
def test_bump_square_partition(kind):
    psi = BumpProfile(kind)
    r = np.geomspace(1e-3, 1e3, 997)
    assert np.max(np.abs(psi.partition_sum(r) - 1.0)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 2.0, exclude_max=True))
def test_neighbouring_bumps_are_sine_cosine_pair(r):
    psi = BumpProfile()
    assert psi(r) ** 2 + psi(r / 2) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_block_support_arithmetic():
    live = {(k, j) for k in range(-2, 7) for j in range(-2, 8)
            if theta_kj(4.0, 64.0, DyadicIndex(k, j)) != 0}
    assert live
    assert all(k in (1, 2, 3) and j in (3, 4, 5) for k, j in live)


def test_square_blocks_resum_to_identity(rng):
    g = make_grid(4 * np.pi, 4 * np.pi, 64, 64)
    c = np.asarray(forward_transform(random_physical(g, rng, zero_x_mean=True)).coeffs).copy()
    c[:, 0] = 0.0  # lam = 0 has no dyadic ratio address
    F = SpectralField(g, c)
    # |xi| in [1/4, 8], |lam/xi| in [1/32, 32]: two blocks of slack each way
    total = np.zeros_like(c)
    for k in range(-5, 6):
        for j in range(-8, 8):
            idx = DyadicIndex(k, j)
            total += np.asarray(block_Tkj(block_Tkj(F, idx), idx).coeffs)
    assert np.max(np.abs(total - c)) <= 1e-10 * np.max(np.abs(c))


def test_dx_one_on_cosine_keeps_amplitude():
    g = make_grid(np.pi, np.pi, 16, 16)
    f = single_mode(g, 1, 0)
    out = inverse_transform(dx_frac(forward_transform(f), 1.0))
    assert np.max(np.abs(out.values - f.values)) < 1e-13


def test_half_derivative_composes(half_grid, rng):
    F = project_Q(forward_transform(random_physical(half_grid, rng)))
    twice = dx_frac(dx_frac(F, 0.5), 0.5)
    once = dx_frac(F, 1.0)
    assert np.max(np.abs(np.asarray(twice.coeffs) - once.coeffs)) <= 1e-13 * np.max(np.abs(once.coeffs))


def test_inhomogeneous_zero_order_is_identity(half_grid, rng):
    F = forward_transform(random_physical(half_grid, rng))
    out = frac_deriv(F, FracDerivSpec("y", 0.0, "inhomogeneous"))
    assert np.array_equal(out.coeffs, F.coeffs)


def test_negative_order_refuses_zero_line(half_grid, rng):
    F = forward_transform(random_physical(half_grid, rng))
    with pytest.raises(ValueError):
        dx_frac(F, -0.5)


def test_antiderivative_inverts_derivative():
    g = make_grid(np.pi, np.pi, 16, 16)
    F = forward_transform(single_mode(g, 1, 1))
    back = antideriv_x(partial_x(F))
    assert np.max(np.abs(np.asarray(back.coeffs) - F.coeffs)) <= 1e-12 * np.max(np.abs(F.coeffs))


def test_antiderivative_needs_zero_mean(half_grid, rng):
    with pytest.raises(ValueError):
        antideriv_x(forward_transform(random_physical(half_grid, rng)))


def test_nonlocal_term_modulus():
    g = make_grid(np.pi, np.pi, 16, 16)
    F = forward_transform(single_mode(g, 1, 2))
    out = antideriv_x(partial_y(partial_y(F)))
    c, o = np.asarray(F.coeffs), np.asarray(out.coeffs)
    live = np.abs(c) > 1e-12
    assert np.allclose(np.abs(o[live]) / np.abs(c[live]), 4.0, rtol=1e-14)


def test_weight_values():
    assert weight_values(np.array([0.0]), 0.7)[0] == 1.0
    assert weight_values(np.array([np.sqrt(3.0)]), 1.0)[0] == pytest.approx(2.0, rel=1e-15)


def test_weight_zero_exponent_is_identity(half_grid, rng):
    f = random_physical(half_grid, rng)
    assert np.array_equal(weight_y(f, 0.0).values, f.values)


def test_weight_rejects_large_exponent(half_grid):
    with pytest.raises(ValueError):
        weight_y(PhysicalField(half_grid, np.zeros(half_grid.shape)), 2.5)
