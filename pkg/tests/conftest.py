import numpy as np
import pytest

from kptools.spectral import PhysicalField, forward_transform, make_grid


def random_physical(grid, rng, zero_x_mean=False):
    """Random real Nyquist-free field; optionally with the xi = 0 column removed."""
    # the transform pair drops the Nyquist lines, so draw inside that subspace
    c = np.fft.fft2(rng.standard_normal(grid.shape))
    c[grid.Nx // 2, :] = 0.0
    c[:, grid.Ny // 2] = 0.0
    if zero_x_mean:
        c[0, :] = 0.0
    return PhysicalField(grid, np.fft.ifft2(c).real)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[(64, 64), (128, 128)], ids=["64", "128"])
def grid(request):
    nx, ny = request.param
    return make_grid(4 * np.pi, 4 * np.pi, nx, ny)


@pytest.fixture
def small_grid():
    return make_grid(np.pi, np.pi, 16, 16)


def coeffs_of(f):
    return np.asarray(forward_transform(f).coeffs)
