import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kptools.spectral import (
    DispersionSign,
    GridError,
    PhysicalField,
    SpectralField,
    apply_multiplier,
    dispersion_phi,
    forward_transform,
    inverse_transform,
    jacobian_check,
    make_grid,
    single_mode,
)

from conftest import random_physical


def test_grid_integer_lattice():
    g = make_grid(np.pi, np.pi, 8, 8)
    assert sorted(g.xi.tolist()) == list(range(-4, 4))


def test_grid_spacing():
    g = make_grid(2 * np.pi, np.pi, 16, 8)
    assert np.allclose(np.diff(np.sort(g.xi)), 0.5)
    assert np.allclose(np.diff(np.sort(g.lam)), 1.0)


@pytest.mark.parametrize("args", [(np.pi, np.pi, 7, 8), (np.pi, np.pi, 8, 6), (-1.0, np.pi, 8, 8),
                                  (np.pi, np.inf, 8, 8), (np.pi, np.pi, 8.5, 8)])
def test_grid_rejects(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_grid_error_names_field():
    with pytest.raises(GridError, match="grid.Nx"):
        make_grid(np.pi, np.pi, 7, 8)


def test_zero_field_transforms_to_zero(small_grid):
    F = forward_transform(PhysicalField(small_grid, np.zeros(small_grid.shape)))
    assert not np.any(F.coeffs)
    assert not np.any(inverse_transform(F).values)


def test_single_cosine_has_two_coefficients():
    g = make_grid(np.pi, np.pi, 16, 16)
    c = np.asarray(forward_transform(single_mode(g, 1, 1)).coeffs)
    # unitary transform: the modulus is sqrt(N) / 2 per partner, 1/2 after undoing sqrt(N)
    c = c / np.sqrt(g.Nx * g.Ny)
    nz = np.argwhere(np.abs(c) > 1e-12)
    assert len(nz) == 2
    got = {(int(g.xi[i]), int(g.lam[j])) for i, j in nz}
    assert got == {(1, 1), (-1, -1)}
    assert np.allclose(np.abs(c[np.abs(c) > 1e-12]), 0.5, atol=1e-14)


def test_delta_pair_inverts_to_cosine():
    g = make_grid(np.pi, np.pi, 16, 16)
    c = np.zeros(g.shape, complex)
    c[1, 0] = c[-1, 0] = 1.0
    f = inverse_transform(SpectralField(g, c))
    X, _ = g.physical_mesh()
    # lattice index 0 sits at x = -Lx, so the mode carries the phase xi * Lx
    expect = 2 * np.cos(X + g.Lx) / np.sqrt(g.Nx * g.Ny) * np.ones(g.shape)
    assert np.max(np.abs(f.values - expect)) < 1e-14


def test_parseval(grid, rng):
    f = random_physical(grid, rng)
    F = forward_transform(f)
    assert abs(np.linalg.norm(f.values) - np.linalg.norm(F.coeffs)) <= 1e-12 * np.linalg.norm(f.values)


def test_roundtrip_hundred_fields(rng):
    g = make_grid(4 * np.pi, 4 * np.pi, 32, 32)
    worst = 0.0
    for _ in range(100):
        f = random_physical(g, rng)
        back = inverse_transform(forward_transform(f))
        worst = max(worst, np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values))
    assert worst < 1e-12


@pytest.mark.parametrize("xi,lam,sign,expect", [
    (1, 1, DispersionSign.KP_I, 2.0),
    (2, 1, DispersionSign.KP_I, 8.5),
    (-1, 1, DispersionSign.KP_I, -2.0),
    (1, 1, DispersionSign.KP_II, 0.0),
])
def test_dispersion_values(xi, lam, sign, expect):
    assert dispersion_phi(xi, lam, sign) == pytest.approx(expect, abs=1e-15)


def test_dispersion_zero_column_is_zero():
    assert dispersion_phi(0.0, 3.0) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 50), st.floats(-50, 50))
def test_dispersion_is_odd(xi, lam):
    assert dispersion_phi(-xi, -lam) == pytest.approx(-dispersion_phi(xi, lam), rel=1e-14)


def test_multiplier_identity_and_zero(small_grid, rng):
    F = forward_transform(random_physical(small_grid, rng))
    assert np.array_equal(apply_multiplier(F, lambda xi, lam: np.ones_like(xi * lam)).coeffs, F.coeffs)
    assert not np.any(apply_multiplier(F, lambda xi, lam: 0 * xi * lam).coeffs)


def test_multiplier_composition(grid, rng):
    F = forward_transform(random_physical(grid, rng))
    twice = apply_multiplier(apply_multiplier(F, lambda xi, lam: 1j * xi + 0 * lam),
                             lambda xi, lam: 1j * xi + 0 * lam)
    once = apply_multiplier(F, lambda xi, lam: -xi**2 + 0 * lam)
    scale = np.linalg.norm(once.coeffs)
    assert np.linalg.norm(np.asarray(twice.coeffs) - np.asarray(once.coeffs)) <= 1e-13 * scale


def test_multiplier_output_stays_real(small_grid, rng):
    F = forward_transform(random_physical(small_grid, rng))
    out = inverse_transform(apply_multiplier(F, lambda xi, lam: np.abs(xi) ** 0.5 + 0 * lam))
    assert np.all(np.isfinite(out.values))


def test_jacobian_bound_on_region():
    rep = jacobian_check(make_grid(8 * np.pi, 8 * np.pi, 128, 128))
    assert rep.n_checked > 0
    assert rep.min_ratio >= 11 / 4 - 1e-12


@pytest.mark.parametrize("xi,lam,value", [(2.0, 1.0, 11.75), (1.0, 0.0, 3.0)])
def test_jacobian_pointwise(xi, lam, value):
    # derivative of xi^3 + lam^2/xi in xi, in absolute value
    assert abs(3 * xi**2 - lam**2 / xi**2) == pytest.approx(value)
    assert value >= 11 / 4 * xi**2 - 1e-12


def test_jacobian_skips_outside_region():
    rep = jacobian_check(make_grid(np.pi, np.pi, 8, 8))
    g = make_grid(np.pi, np.pi, 8, 8)
    live = (g.Nx - 1) * (g.Ny - 1) - (g.Ny - 1)
    assert rep.n_checked + rep.n_skipped == live
    assert rep.n_skipped > 0
