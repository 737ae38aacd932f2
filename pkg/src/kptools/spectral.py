"""Periodic grids, unitary 2-D transforms, the KP dispersion relation and
generic Fourier multipliers.

Conventions
-----------
The domain is the torus ``[-Lx, Lx) x [-Ly, Ly)`` sampled at ``Nx x Ny``
points.  Physical sample ``(p, q)`` sits at ``x_p = -Lx + p*dx``.  Spectral
coefficients use numpy's FFT ordering, so index ``m`` in ``[0, Nx)`` maps to
the signed wavenumber ``xi_m = pi * m_signed / Lx``.  Transforms use the
unitary normalisation (``norm="ortho"``), hence the coefficient vector and the
sample vector have equal Euclidean norms.  The Nyquist row and column are
always zero in a ``SpectralField``.

Forward transform sign: ``u_hat(xi) = sum u(x) exp(-i xi x)``; the linear KP
flow is then ``u_hat(t) = exp(i t phi) u_hat(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "DispersionSign",
    "Grid2D",
    "GridError",
    "PhysicalField",
    "SpectralField",
    "JacobianReport",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "inverse_complex",
    "dispersion_phi",
    "apply_multiplier",
    "jacobian_check",
    "single_mode",
    "spectral_energy",
]

Multiplier = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GridError(ValueError):
    """Invalid grid parameters.  The message starts with the offending field."""


class DispersionSign(IntEnum):
    """Sign ``gamma`` in front of the transverse term; -1 is KP-I."""

    KP_I = -1
    KP_II = 1


@dataclass(frozen=True)
class Grid2D:
    Lx: float
    Ly: float
    Nx: int
    Ny: int

    def __post_init__(self) -> None:
        for name in ("Lx", "Ly"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise GridError(f"grid.{name} must be a positive finite number, got {val!r}")
        for name in ("Nx", "Ny"):
            val = getattr(self, name)
            if int(val) != val:
                raise GridError(f"grid.{name} must be an integer, got {val!r}")
            if val < 8:
                raise GridError(f"grid.{name} must be at least 8, got {val}")
            if val % 2:
                raise GridError(f"grid.{name} must be even, got {val}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def dx(self) -> float:
        return 2.0 * self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return 2.0 * self.Ly / self.Ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return 4.0 * self.Lx * self.Ly

    @cached_property
    def x(self) -> np.ndarray:
        return -self.Lx + self.dx * np.arange(self.Nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -self.Ly + self.dy * np.arange(self.Ny)

    @cached_property
    def m(self) -> np.ndarray:
        """Signed integer wavenumbers along x in FFT order."""
        return np.rint(sfft.fftfreq(self.Nx, 1.0 / self.Nx)).astype(int)

    @cached_property
    def n(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.Ny, 1.0 / self.Ny)).astype(int)

    @cached_property
    def xi(self) -> np.ndarray:
        return np.pi * self.m / self.Lx

    @cached_property
    def lam(self) -> np.ndarray:
        return np.pi * self.n / self.Ly

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(xi, lam)`` pair of shapes (Nx, 1) and (1, Ny)."""
        return self.xi[:, None], self.lam[None, :]

    def physical_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x[:, None], self.y[None, :]

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.Nx // 2, :] = True
        mask[:, self.Ny // 2] = True
        return mask

    def reflect_index(self, arr: np.ndarray) -> np.ndarray:
        """Return ``arr[-m, -n]`` for an array in FFT order."""
        return np.roll(arr[::-1, ::-1], shift=(1, 1), axis=(0, 1))

    def refined(self, factor: int = 2) -> "Grid2D":
        return Grid2D(self.Lx, self.Ly, self.Nx * factor, self.Ny * factor)


def make_grid(Lx: float, Ly: float, Nx: int, Ny: int) -> Grid2D:
    def as_int(v):
        return int(v) if isinstance(v, (int, float, np.integer)) and float(v).is_integer() else v

    return Grid2D(float(Lx), float(Ly), as_int(Nx), as_int(Ny))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if np.iscomplexobj(vals):
            raise TypeError("PhysicalField holds real samples")
        if not np.all(np.isfinite(vals)):
            raise ValueError("PhysicalField values must be finite")
        object.__setattr__(self, "values", _readonly(vals.astype(float)))

    def __add__(self, other: "PhysicalField") -> "PhysicalField":
        _same_grid(self.grid, other.grid)
        return PhysicalField(self.grid, self.values + other.values)

    def __sub__(self, other: "PhysicalField") -> "PhysicalField":
        _same_grid(self.grid, other.grid)
        return PhysicalField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "PhysicalField":
        return PhysicalField(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def l2(self) -> float:
        """Plain Euclidean norm of the samples (no quadrature weight)."""
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid2D
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {c.shape} does not match grid {self.grid.shape}")
        c = np.where(self.grid.nyquist_mask, 0.0, c)
        object.__setattr__(self, "coeffs", _readonly(c))

    def _combine(self, other: "SpectralField", sign: float) -> "SpectralField":
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + sign * other.coeffs, self.real and other.real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self._combine(other, 1.0)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self._combine(other, -1.0)

    def __mul__(self, c: complex) -> "SpectralField":
        keeps_real = self.real and np.isreal(c)
        return SpectralField(self.grid, self.coeffs * c, bool(keeps_real))

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        scale = max(float(np.max(np.abs(c))), 1e-300)
        return bool(np.max(np.abs(self.grid.reflect_index(c) - np.conj(c))) <= rtol * scale)

    def amplitudes(self) -> np.ndarray:
        """Coefficients rescaled so that ``cos(xi x + lam y)`` has two entries of 1/2."""
        return self.coeffs / np.sqrt(self.grid.Nx * self.grid.Ny)


def _same_grid(a: Grid2D, b: Grid2D) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def forward_transform(f: PhysicalField) -> SpectralField:
    coeffs = sfft.fft2(f.values, norm="ortho")
    return SpectralField(f.grid, coeffs, real=True)


def inverse_transform(F: SpectralField) -> PhysicalField:
    vals = sfft.ifft2(F.coeffs, norm="ortho")
    if not F.real:
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        if float(np.max(np.abs(vals.imag))) > 1e-12 * scale:
            raise ValueError("spectral field does not represent a real function")
    return PhysicalField(F.grid, vals.real)


def inverse_complex(F: SpectralField) -> np.ndarray:
    """Complex samples of a possibly non-real spectral field."""
    return sfft.ifft2(F.coeffs, norm="ortho")


def dispersion_phi(xi, lam, sign: DispersionSign | int = DispersionSign.KP_I):
    """``xi**3 - sign * lam**2 / xi``, defined as 0 on the line ``xi == 0``."""
    g = int(sign)
    if g not in (-1, 1):
        raise ValueError("dispersion sign must be -1 (KP-I) or +1 (KP-II)")
    xi = np.asarray(xi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    xi_b, lam_b = np.broadcast_arrays(xi, lam)
    safe = np.where(xi_b == 0.0, 1.0, xi_b)
    phi = np.where(xi_b == 0.0, 0.0, xi_b**3 - g * lam_b**2 / safe)
    return phi[()] if phi.ndim == 0 else phi


def apply_multiplier(F: SpectralField, m: Multiplier) -> SpectralField:
    """Multiply each coefficient by ``m(xi, lam)`` evaluated on the lattice."""
    XI, LAM = F.grid.mesh()
    vals = np.broadcast_to(np.asarray(m(XI, LAM)), F.grid.shape)
    live = ~F.grid.nyquist_mask
    if not np.all(np.isfinite(vals[live])):
        raise ValueError("multiplier is not finite on the frequency lattice")
    vals = np.where(live, vals, 0.0)
    real = F.real
    if real:
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        mismatch = np.max(np.abs(F.grid.reflect_index(vals) - np.conj(vals)))
        real = bool(mismatch <= 1e-12 * scale)
    return SpectralField(F.grid, F.coeffs * vals, real=real)


def single_mode(grid: Grid2D, m: int, n: int, amplitude: float = 1.0,
                phase: float = 0.0) -> PhysicalField:
    """Samples of ``amplitude * cos(xi_m x + lam_n y + phase)``."""
    X, Y = grid.physical_mesh()
    xi = np.pi * m / grid.Lx
    lam = np.pi * n / grid.Ly
    return PhysicalField(grid, amplitude * np.cos(xi * X + lam * Y + phase))


def spectral_energy(F: SpectralField, mask: np.ndarray | None = None) -> float:
    c = F.coeffs if mask is None else F.coeffs[mask]
    return float(np.sum(np.abs(c) ** 2))


@dataclass(frozen=True)
class JacobianReport:
    min_ratio: float
    n_checked: int
    n_skipped: int
    bound: float = 11.0 / 4.0

    @property
    def holds(self) -> bool:
        return self.n_checked == 0 or self.min_ratio >= self.bound - 1e-12


def jacobian_check(grid: Grid2D) -> JacobianReport:
    """Check ``|3 xi^2 - lam^2/xi^2| >= (11/4) xi^2`` where ``|xi| >= max(1, 2|lam|/|xi|)``."""
    XI, LAM = np.meshgrid(grid.xi, grid.lam, indexing="ij")
    live = ~grid.nyquist_mask & (XI != 0)
    safe = np.where(XI == 0, 1.0, XI)
    region = live & (np.abs(XI) >= np.maximum(1.0, 2.0 * np.abs(LAM) / np.abs(safe)))
    if not np.any(region):
        return JacobianReport(float("inf"), 0, int(np.sum(live)))
    xi = XI[region]
    lam = LAM[region]
    ratio = np.abs(3 * xi**2 - lam**2 / xi**2) / xi**2
    return JacobianReport(float(ratio.min()), int(region.sum()), int(np.sum(live & ~region)))
