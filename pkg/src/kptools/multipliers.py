"""Frequency projections, dyadic blocks, fractional derivatives and the
transverse weight.

Sharp projections (``Q``, ``P+``, ``P-`` and the two ``Q~`` variants) are
indicator multipliers.  Dyadic blocks use a smooth bump ``psi`` supported in
``[1/2, 2]`` whose squares form an exact partition of unity over dyadic
dilations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .spectral import PhysicalField, SpectralField, apply_multiplier, spectral_energy

EPS = 0.05

__all__ = [
    "EPS",
    "plus",
    "BumpProfile",
    "DyadicIndex",
    "FracDerivSpec",
    "project_Q",
    "project_low",
    "project_Pplus",
    "project_Pminus",
    "project_Qtilde_ratio",
    "project_Qtilde_y",
    "theta_kj",
    "block_Tkj",
    "block_Pkj",
    "frac_deriv",
    "dx_frac",
    "dy_frac",
    "partial_x",
    "partial_y",
    "antideriv_x",
    "weight_y",
    "weight_values",
    "q_mask",
    "pplus_mask",
]


def plus(a: float, eps: float = EPS) -> float:
    """Realise an exponent written ``a+`` as ``a + eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return a + eps


# ---------------------------------------------------------------- masks ---

def _safe_ratio(xi: np.ndarray, lam: np.ndarray) -> np.ndarray:
    xi_b, lam_b = np.broadcast_arrays(xi, lam)
    safe = np.where(xi_b == 0, 1.0, xi_b)
    return np.where(xi_b == 0, np.inf, np.abs(lam_b) / np.abs(safe))


def q_mask(xi, lam):
    xi_b, _ = np.broadcast_arrays(xi, lam)
    return np.abs(xi_b) >= 1.0


def pplus_mask(xi, lam):
    xi_b, lam_b = np.broadcast_arrays(xi, lam)
    return (xi_b**2 >= np.abs(lam_b)) & (xi_b != 0)


def project_Q(F: SpectralField) -> SpectralField:
    """Keep ``|xi| >= 1``."""
    return apply_multiplier(F, lambda xi, lam: q_mask(xi, lam).astype(float))


def project_low(F: SpectralField) -> SpectralField:
    """``Id - Q``: keep ``|xi| < 1``."""
    return apply_multiplier(F, lambda xi, lam: (~q_mask(xi, lam)).astype(float))


def project_Pplus(F: SpectralField) -> SpectralField:
    """Keep ``xi**2 >= |lam|``, the region where ``|xi| >= |lam/xi|``."""
    return apply_multiplier(F, lambda xi, lam: pplus_mask(xi, lam).astype(float))


def project_Pminus(F: SpectralField) -> SpectralField:
    return apply_multiplier(F, lambda xi, lam: (~pplus_mask(xi, lam)).astype(float))


def project_Qtilde_ratio(F: SpectralField) -> SpectralField:
    """Keep ``|lam/xi| >= 1`` (the ratio cutoff)."""
    return apply_multiplier(F, lambda xi, lam: (_safe_ratio(xi, lam) >= 1.0).astype(float))


def project_Qtilde_y(F: SpectralField) -> SpectralField:
    """Keep ``|lam| >= 1`` (the transverse-frequency cutoff)."""
    return apply_multiplier(
        F, lambda xi, lam: (np.abs(np.broadcast_arrays(xi, lam)[1]) >= 1.0).astype(float)
    )


# --------------------------------------------------------------- bumps ---

def _smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step on [0, 1] with ``b(s) + b(1 - s) = 1``."""
    s = np.clip(s, 0.0, 1.0)

    def g(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    a = g(s)
    c = g(1.0 - s)
    return a / (a + c)


@dataclass(frozen=True)
class BumpProfile:
    """Even bump ``psi`` supported in ``(1/2, 2)`` with ``sum_k psi(2^-k r)^2 = 1``.

    ``kind="smooth"`` uses ``cos(pi/2 * b(|log2 r|))`` with a C-infinity step
    ``b``; ``kind="cosine"`` uses ``b(s) = s``, which is only Lipschitz at the
    support edges.
    """

    kind: Literal["smooth", "cosine"] = "smooth"

    def __post_init__(self) -> None:
        if self.kind not in ("smooth", "cosine"):
            raise ValueError(f"unknown bump kind {self.kind!r}")

    def __call__(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros(r.shape)
        inside = (r > 0.5) & (r < 2.0)
        s = np.abs(np.log2(r[inside]))
        b = _smooth_step(s) if self.kind == "smooth" else np.clip(s, 0.0, 1.0)
        out[inside] = np.cos(0.5 * np.pi * b)
        return out[()] if out.ndim == 0 else out

    def partition_sum(self, r, kmin: int = -60, kmax: int = 60) -> np.ndarray:
        """``sum_k psi(2^-k r)^2`` over ``kmin <= k <= kmax``."""
        r = np.asarray(r, dtype=float)
        total = np.zeros(r.shape)
        for k in range(kmin, kmax + 1):
            total += self(np.ldexp(r, -k)) ** 2
        return total


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """Block with ``|xi| ~ 2^k`` and ``|lam/xi| ~ 2^j``."""

    k: int
    j: int

    def __post_init__(self) -> None:
        for name in ("k", "j"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"dyadic index {name} must be an integer")
            object.__setattr__(self, name, int(v))


def theta_kj(xi, lam, idx: DyadicIndex, bump: BumpProfile = BumpProfile()) -> np.ndarray:
    """``psi(2^-k |xi|) * psi(2^-j |lam/xi|)``, zero on ``xi == 0``."""
    xi_b, lam_b = np.broadcast_arrays(np.asarray(xi, float), np.asarray(lam, float))
    ratio = _safe_ratio(xi_b, lam_b)
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    val = bump(np.ldexp(np.abs(xi_b), -idx.k)) * bump(np.ldexp(ratio, -idx.j))
    return np.where(xi_b == 0, 0.0, val)


def block_Tkj(F: SpectralField, idx: DyadicIndex, bump: BumpProfile = BumpProfile()) -> SpectralField:
    return apply_multiplier(F, lambda xi, lam: theta_kj(xi, lam, idx, bump))


def block_Pkj(F: SpectralField, idx: DyadicIndex, bump: BumpProfile = BumpProfile()) -> SpectralField:
    """Rectangular block ``psi(2^-k |xi|) psi(2^-j |lam|)``."""
    return apply_multiplier(
        F,
        lambda xi, lam: bump(np.ldexp(np.abs(np.broadcast_arrays(xi, lam)[0]), -idx.k))
        * bump(np.ldexp(np.abs(np.broadcast_arrays(xi, lam)[1]), -idx.j)),
    )


# --------------------------------------------------------- derivatives ---

@dataclass(frozen=True)
class FracDerivSpec:
    axis: Literal["x", "y"]
    order: float
    kind: Literal["homogeneous", "inhomogeneous"] = "homogeneous"

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', got {self.axis!r}")
        if self.kind not in ("homogeneous", "inhomogeneous"):
            raise ValueError(f"unknown derivative kind {self.kind!r}")
        if not np.isfinite(self.order) or self.order < -2:
            raise ValueError("derivative order must be finite and >= -2")


ZERO_LINE_TOL = 1e-13


def frac_deriv(F: SpectralField, spec: FracDerivSpec, zero_tol: float = ZERO_LINE_TOL) -> SpectralField:
    """Apply ``D^s`` (``|xi|^s`` or ``|lam|^s``) or ``(1 + D)^s``."""
    if spec.order == 0 and spec.kind == "inhomogeneous":
        return F
    axis = 0 if spec.axis == "x" else 1
    if spec.kind == "homogeneous" and spec.order < 0:
        freqs = F.grid.xi if axis == 0 else F.grid.lam
        line = np.zeros(F.grid.shape, dtype=bool)
        if axis == 0:
            line[freqs == 0, :] = True
        else:
            line[:, freqs == 0] = True
        total = spectral_energy(F)
        if total > 0 and spectral_energy(F, line) > zero_tol * total:
            raise ValueError(
                f"negative homogeneous order on {spec.axis}: the zero-frequency line carries energy"
            )
    s = spec.order
    homog = spec.kind == "homogeneous"

    def mult(xi, lam):
        v = np.abs(np.broadcast_arrays(xi, lam)[axis])
        if not homog:
            return (1.0 + v) ** s
        if s == 0:
            return np.ones_like(v)
        with np.errstate(divide="ignore"):
            out = v**s
        return np.where(v == 0, 0.0, out)

    return apply_multiplier(F, mult)


def dx_frac(F: SpectralField, order: float, homogeneous: bool = True) -> SpectralField:
    return frac_deriv(F, FracDerivSpec("x", order, "homogeneous" if homogeneous else "inhomogeneous"))


def dy_frac(F: SpectralField, order: float, homogeneous: bool = True) -> SpectralField:
    return frac_deriv(F, FracDerivSpec("y", order, "homogeneous" if homogeneous else "inhomogeneous"))


def partial_x(F: SpectralField) -> SpectralField:
    return apply_multiplier(F, lambda xi, lam: 1j * np.broadcast_arrays(xi, lam)[0])


def partial_y(F: SpectralField) -> SpectralField:
    return apply_multiplier(F, lambda xi, lam: 1j * np.broadcast_arrays(xi, lam)[1])


def antideriv_x(F: SpectralField, zero_tol: float = ZERO_LINE_TOL) -> SpectralField:
    """Multiply by ``1/(i xi)``; the ``xi = 0`` column must be empty."""
    line = np.zeros(F.grid.shape, dtype=bool)
    line[F.grid.xi == 0, :] = True
    total = spectral_energy(F)
    if total > 0 and spectral_energy(F, line) > zero_tol * total:
        raise ValueError("antiderivative needs a zero x-mean field (xi = 0 column is not empty)")

    def mult(xi, lam):
        xi_b = np.broadcast_arrays(xi, lam)[0]
        safe = np.where(xi_b == 0, 1.0, xi_b)
        return np.where(xi_b == 0, 0.0, 1.0 / (1j * safe))

    return apply_multiplier(F, mult)


# -------------------------------------------------------------- weight ---

def weight_values(y: np.ndarray, alpha: float, kind: Literal["bracket", "abs"] = "bracket") -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if kind == "bracket":
        return (1.0 + y**2) ** (0.5 * alpha)
    if kind == "abs":
        return np.abs(y) ** alpha
    raise ValueError(f"unknown weight kind {kind!r}")


def weight_y(f: PhysicalField, alpha: float, kind: Literal["bracket", "abs"] = "bracket") -> PhysicalField:
    """Multiply by ``<y>^alpha = (1 + y^2)^(alpha/2)`` (or ``|y|^alpha``)."""
    if kind == "bracket" and not 0.0 <= alpha <= 2.0:
        raise ValueError(f"weight exponent must lie in [0, 2], got {alpha}")
    if kind == "abs" and alpha < 0:
        raise ValueError("weight exponent must be nonnegative")
    w = weight_values(f.grid.y, alpha, kind)
    return PhysicalField(f.grid, f.values * w[None, :])
