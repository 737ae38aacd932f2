"""Empirical checks of the linear and appendix inequalities on random ensembles.

Every inequality is an estimate ``LHS <~ RHS`` with an unspecified constant,
so a check records ``LHS / RHS`` over an ensemble of random data on two grids
of the same domain (``N`` and ``2N`` points per axis).  Coefficients are drawn
once on a master lattice and truncated, so the fine grid only adds tail
modes.  A check passes when the largest ratio is finite and grows by less
than 20% under refinement.
"""

from __future__ import annotations

import csv
import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .evolution import cumulative_duhamel, phi_array, rescale_field
from .multipliers import DyadicIndex, pplus_mask, q_mask, theta_kj, weight_values
from .norms import (
    TrajectoryField,
    deriv_symbol,
    l2_norm,
    lattice_maximal_norm,
    mixed_lebesgue,
    multiplier_norm,
    weighted_sobolev_norm,
)
from .spectral import (
    Grid2D,
    PhysicalField,
    SpectralField,
    forward_transform,
    inverse_transform,
    make_grid,
    single_mode,
)

__all__ = [
    "SUPPORTS",
    "SpectrumSpec",
    "derive_seed",
    "random_coeffs",
    "random_field",
    "EstimateReport",
    "EstimateSpec",
    "CATALOG",
    "DEFAULT_PROFILES",
    "run_estimate_check",
    "leibniz_check_1d",
    "leibniz_commutator_1d",
    "weight_commutator_check_1d",
    "scaling_exponents",
    "sweep_and_report",
]

SUPPORTS = ("full", "Q_only", "lowfreq_only", "Pplus_only", "Pminus_only", "QPplus", "QPminus",
            "single_block")
DEFAULT_PROFILES: tuple[tuple[float, float], ...] = ((2.0, 2.0), (3.0, 1.5), (1.5, 3.0))
EPS = 0.05
GROWTH_LIMIT = 0.2


# -------------------------------------------------------------- fields ---

@dataclass(frozen=True)
class SpectrumSpec:
    """Law of a random real field: ``|coeff| ~ <xi>^-a <lam>^-b`` times Gaussians.

    ``a = b = inf`` selects the single cosine mode ``mode`` instead.
    Coefficients are drawn on a ``master x master`` lattice so that grids of
    the same domain share their common modes.
    """

    a: float = 2.0
    b: float = 2.0
    support: str = "full"
    block: tuple[int, int] | None = None
    amplitude: float = 1.0
    seed: int = 0
    mode: tuple[int, int] = (1, 1)
    master: int = 128

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0:
            raise ValueError("decay exponents must be nonnegative")
        if self.support not in SUPPORTS:
            raise ValueError(f"unknown support {self.support!r}; choose from {SUPPORTS}")
        if self.support == "single_block" and self.block is None:
            raise ValueError("single_block support needs a (k, j) block")
        if self.master < 8 or self.master % 2:
            raise ValueError("master lattice size must be even and >= 8")


def derive_seed(master_seed: int, estimate_id: str, sample: int) -> int:
    """Independent stream per (master seed, estimate, sample)."""
    ss = np.random.SeedSequence([int(master_seed), zlib.crc32(estimate_id.encode()), int(sample)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _support_mask(spec: SpectrumSpec, grid: Grid2D) -> np.ndarray:
    XI, LAM = grid.mesh()
    XI, LAM = np.broadcast_arrays(XI, LAM)
    s = spec.support
    if s == "full":
        return np.ones(grid.shape, bool)
    if s == "Q_only":
        return q_mask(XI, LAM)
    if s == "lowfreq_only":
        return ~q_mask(XI, LAM)
    if s == "Pplus_only":
        return pplus_mask(XI, LAM)
    if s == "Pminus_only":
        return ~pplus_mask(XI, LAM)
    if s == "QPplus":
        return q_mask(XI, LAM) & pplus_mask(XI, LAM)
    if s == "QPminus":
        return q_mask(XI, LAM) & ~pplus_mask(XI, LAM)
    return theta_kj(XI, LAM, DyadicIndex(*spec.block)) > 0


def _master_amplitudes(spec: SpectrumSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    M = spec.master
    z = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    zr = np.roll(np.flip(z, axis=(0, 1)), 1, axis=(0, 1))
    return 0.5 * (z + np.conj(zr))


def random_coeffs(spec: SpectrumSpec, grid: Grid2D) -> SpectralField:
    """Spectral coefficients of :func:`random_field` (unitary normalisation)."""
    if math.isinf(spec.a) and math.isinf(spec.b):
        return forward_transform(single_mode(grid, *spec.mode, amplitude=spec.amplitude))
    if grid.Nx > spec.master or grid.Ny > spec.master:
        raise ValueError(f"grid {grid.Nx}x{grid.Ny} exceeds the master lattice {spec.master}")
    A = _master_amplitudes(spec)
    mi = np.mod(grid.m, spec.master)
    ni = np.mod(grid.n, spec.master)
    amp = A[np.ix_(mi, ni)]
    XI, LAM = grid.mesh()
    shape = (1.0 + XI**2) ** (-0.5 * spec.a) * (1.0 + LAM**2) ** (-0.5 * spec.b)
    mask = _support_mask(spec, grid)
    mask[grid.m == 0, :] = False
    c = spec.amplitude * amp * shape * mask * math.sqrt(grid.Nx * grid.Ny)
    return SpectralField(grid, c)


def random_field(spec: SpectrumSpec, grid: Grid2D) -> PhysicalField:
    """Real random field; bit-identical for a fixed seed."""
    return inverse_transform(random_coeffs(spec, grid))


# ------------------------------------------------------------- reports ---

@dataclass
class EstimateReport:
    """Outcome of one inequality check over an ensemble."""

    estimate_id: str
    ratios: np.ndarray
    ratios_fine: np.ndarray | None
    resolved: bool
    passed: bool
    rows: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def samples(self) -> int:
        return int(self.ratios.size)

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else float("nan")

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios)) if self.ratios.size else float("nan")

    @property
    def max_ratio_fine(self) -> float | None:
        return None if self.ratios_fine is None else float(np.max(self.ratios_fine))

    @property
    def growth(self) -> float | None:
        """Relative change of the max ratio from the coarse to the fine grid."""
        if self.ratios_fine is None:
            return None
        return self.max_ratio_fine / self.max_ratio - 1.0 if self.max_ratio > 0 else float("nan")

    @classmethod
    def build(cls, estimate_id: str, ratios, ratios_fine=None, resolved: bool = True,
              rows: list[dict] | None = None, details: dict | None = None,
              growth_limit: float = GROWTH_LIMIT) -> "EstimateReport":
        r = np.asarray(ratios, dtype=float)
        rf = None if ratios_fine is None else np.asarray(ratios_fine, dtype=float)
        finite = r.size > 0 and bool(np.all(np.isfinite(r))) and bool(np.all(r >= 0))
        if rf is not None:
            finite = finite and bool(np.all(np.isfinite(rf))) and bool(np.all(rf >= 0))
            with np.errstate(divide="ignore", invalid="ignore"):
                change = np.where(r > 0, np.abs(rf / r - 1.0), np.where(rf > 0, np.inf, 0.0))
            resolved = resolved and finite and bool(np.all(change <= growth_limit))
        rep = cls(estimate_id, r, rf, resolved, False, rows or [], details or {})
        ok = finite and resolved
        if rf is not None and ok:
            g = rep.growth
            ok = g is not None and np.isfinite(g) and g < growth_limit
        rep.passed = bool(ok)
        return rep

    def summary(self) -> dict:
        return {
            "estimate": self.estimate_id,
            "samples": self.samples,
            "max_ratio": self.max_ratio,
            "median_ratio": self.median_ratio,
            "max_ratio_fine": self.max_ratio_fine,
            "refinement_growth": self.growth,
            "resolved": self.resolved,
            "pass": self.passed,
            "details": self.details,
        }


# ----------------------------------------------------------- utilities ---

def _physical(grid: Grid2D, coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifft2(coeffs, axes=(-2, -1), norm="ortho").real


def _flow(grid: Grid2D, c: np.ndarray, times: np.ndarray, symbol: np.ndarray | None = None) -> np.ndarray:
    """Physical samples of ``m(D) U(t) f`` for every time, shape (nt, Nx, Ny)."""
    phi = phi_array(grid)
    base = c if symbol is None else c * symbol
    return _physical(grid, np.exp(1j * times[:, None, None] * phi[None]) * base[None])


def _masks(grid: Grid2D) -> dict[str, np.ndarray]:
    XI, LAM = np.broadcast_arrays(*grid.mesh())
    q = q_mask(XI, LAM)
    pp = pplus_mask(XI, LAM)
    return {"Q": q, "low": ~q, "QP+": q & pp, "QP-": q & ~pp}


def _sob(c_grid: tuple[Grid2D, np.ndarray], sigma=0.0, gamma=0.0, alpha=0.0, dx=False, dy=False) -> float:
    grid, c = c_grid
    return float(weighted_sobolev_norm(SpectralField(grid, c), sigma, gamma, alpha, dotted_x=dx, dotted_y=dy))


def _times(window: str, nt: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, nt) if window == "sym" else np.linspace(0.0, 1.0, nt)


# ------------------------------------------------------------- catalog ---

@dataclass(frozen=True)
class _Params:
    eps: float = EPS

    @property
    def sigma(self) -> float:  # x-order of the high-frequency maximal estimates
        return 0.75 + self.eps

    @property
    def sigma_low(self) -> float:
        return 0.25 + self.eps

    @property
    def gamma(self) -> float:
        return 0.5 + self.eps

    @property
    def theta(self) -> float:
        return 1.0 + self.eps

    @property
    def alpha(self) -> float:
        return 0.5 + self.eps


Side = Callable[[Grid2D, np.ndarray, np.ndarray, dict, _Params], float]


@dataclass(frozen=True)
class CatalogEntry:
    """One displayed inequality: LHS and RHS recipes, support and times."""

    estimate_id: str
    support: str
    window: str
    lhs: Side
    rhs: Side
    description: str
    needs_forcing: bool = False


def _lhs_smoothing_plus(grid, c, t, extra, P):
    m = _masks(grid)["QP+"]
    XI, _ = np.broadcast_arrays(*grid.mesh())
    vals = _flow(grid, c * m, t, 1j * XI)
    return mixed_lebesgue(vals, grid, t, ("x", "t", "y"), (np.inf, 2, 2))


def _lhs_smoothing_minus(grid, c, t, extra, P):
    m = _masks(grid)["QP-"]
    vals = _flow(grid, c * m, t, deriv_symbol(grid, "x", 0.5, True))
    return mixed_lebesgue(vals, grid, t, ("y", "t", "x"), (np.inf, 2, 2))


def _forcing_coeffs(grid: Grid2D, extra: dict, t: np.ndarray) -> np.ndarray:
    g1, g2, w1, w2, p1, p2 = (extra[k] for k in ("g1", "g2", "w1", "w2", "p1", "p2"))
    return (np.cos(w1 * t + p1)[:, None, None] * g1[None] + np.cos(w2 * t + p2)[:, None, None] * g2[None])


def _lhs_smoothing_inhomog(grid, c, t, extra, P):
    m = _masks(grid)["QP-"]
    f = _forcing_coeffs(grid, extra, t) * m[None]
    d = cumulative_duhamel(f, t, phi_array(grid))
    XI, _ = np.broadcast_arrays(*grid.mesh())
    vals = _physical(grid, d * (1j * XI)[None])
    return mixed_lebesgue(vals, grid, t, ("y", "t", "x"), (np.inf, 2, 2))


def _rhs_smoothing_inhomog(grid, c, t, extra, P):
    vals = _physical(grid, _forcing_coeffs(grid, extra, t))
    return mixed_lebesgue(vals, grid, t, ("y", "x", "t"), (1, 2, 2))


def _rhs_l2(grid, c, t, extra, P):
    return l2_norm(SpectralField(grid, c))


def _maximal(mask_key: str, direction: str, weighted: bool) -> Side:
    def lhs(grid, c, t, extra, P):
        vals = _flow(grid, c * _masks(grid)[mask_key], t)
        traj = TrajectoryField(grid, t, vals)
        # sup of <y>^alpha |u|^2 is sup of |<y>^(alpha/2) u|^2
        return lattice_maximal_norm(traj, direction, P.alpha / 2 if weighted else 0.0)
    return lhs


def _rhs_max_x_high(grid, c, t, extra, P):
    return _sob((grid, c * _masks(grid)["Q"]), P.sigma, P.gamma)


def _rhs_max_y_high(grid, c, t, extra, P):
    cq = (grid, c * _masks(grid)["Q"])
    return _sob(cq, P.sigma, P.gamma) + _sob(cq, 0.0, P.theta)


def _rhs_max_x_low(grid, c, t, extra, P):
    return _sob((grid, c * _masks(grid)["low"]), -P.gamma, P.gamma, dx=True)


def _rhs_max_y_low(grid, c, t, extra, P):
    return _sob((grid, c * _masks(grid)["low"]), -P.sigma_low, P.theta, dx=True)


def _rhs_wmax_x(grid, c, t, extra, P):
    return _sob((grid, c), P.sigma, P.gamma, P.alpha) + _sob((grid, c), P.sigma - 0.5, P.gamma + 0.5)


def _rhs_wmax_low(grid, c, t, extra, P):
    return (_sob((grid, c), -P.gamma, P.gamma, P.alpha, dx=True)
            + _sob((grid, c), -P.theta, P.sigma_low, dx=True))


def _group(mask_key: str) -> Side:
    def lhs(grid, c, t, extra, P):
        vals = _flow(grid, c * _masks(grid)[mask_key], t)
        w = weight_values(grid.y, P.alpha)[None, None, :]
        per_t = np.sqrt(grid.cell_area * np.sum((vals * w) ** 2, axis=(1, 2)))
        return float(per_t.max())
    return lhs


def _rhs_group(grid, c, t, extra, P):
    return _sob((grid, c), 0.0, 0.0, P.alpha) + _sob((grid, c), -P.alpha, P.alpha)


def _rhs_group_low(grid, c, t, extra, P):
    return _sob((grid, c), 0.0, 0.0, P.alpha) + _sob((grid, c), -P.alpha - P.eps, P.alpha, dx=True)


STRICHARTZ_PAIRS = ((4.0, 4.0), (8.0 / 3.0, 8.0))


def strichartz_lhs(grid: Grid2D, c: np.ndarray, t: np.ndarray, q: float, p: float) -> float:
    """``|| U(t) f ||_{L^q_t L^p_{xy}}`` over the sampled times."""
    return mixed_lebesgue(_flow(grid, c, t), grid, t, ("t", "x", "y"), (q, p, p))


def _lhs_strichartz(grid, c, t, extra, P):
    rhs = l2_norm(SpectralField(grid, c))
    return max(strichartz_lhs(grid, c, t, q, p) / rhs for q, p in STRICHARTZ_PAIRS) * rhs


def _linfty(mask_key: str) -> Side:
    def lhs(grid, c, t, extra, P):
        vals = _flow(grid, c * _masks(grid)[mask_key], t) * weight_values(grid.y, P.alpha)[None, None, :]
        return mixed_lebesgue(vals, grid, t, ("t", "x", "y"), (2, np.inf, np.inf))
    return lhs


def _rhs_linfty(grid, c, t, extra, P):
    cq = c * _masks(grid)["Q"]
    sym = deriv_symbol(grid, "x", P.eps, False) + deriv_symbol(grid, "y", P.eps, False)
    return (float(multiplier_norm(SpectralField(grid, cq), sym, P.alpha))
            + _sob((grid, cq), 0.0, P.alpha + P.eps))


def _rhs_linfty_low(grid, c, t, extra, P):
    cl = c * _masks(grid)["low"]
    return (_sob((grid, c), 0.0, P.eps, P.alpha)
            + _sob((grid, cl), -P.alpha - P.eps, P.alpha + 2 * P.eps, dx=True))


SCALING_RHOS = (0.5, 0.25, 0.125, 0.0625)


def _scaling_norms(u: PhysicalField, P: _Params) -> dict[str, tuple[float, float]]:
    """Norms used in the scaling checks with their exact exponents."""
    a = P.alpha
    return {
        "Dx^1": (float(weighted_sobolev_norm(u, 1.0, 0.0, dotted_x=True, dotted_y=True)), 1.5),
        "Dy^1": (float(weighted_sobolev_norm(u, 0.0, 1.0, dotted_x=True, dotted_y=True)), 2.5),
        "|y|^a Dx^1": (float(weighted_sobolev_norm(u, 1.0, 0.0, a, True, True, weight_kind="abs")),
                       0.5 + 1.0 - 2 * a),
        "|y|^a Dy^1.5": (float(weighted_sobolev_norm(u, 0.0, 1.5, a, True, True, weight_kind="abs")),
                         0.5 + 3.0 - 2 * a),
    }


def _lhs_scaling(grid, c, t, extra, P):
    u = inverse_transform(SpectralField(grid, c))
    base = _scaling_norms(u, P)
    # the last estimate has <y>^a on its right-hand side
    base_rhs = dict(base)
    base_rhs["|y|^a Dy^1.5"] = (float(weighted_sobolev_norm(u, 0.0, 1.5, P.alpha, True, True)),
                                base["|y|^a Dy^1.5"][1])
    worst = 0.0
    for rho in SCALING_RHOS:
        scaled = _scaling_norms(rescale_field(u, rho), P)
        for key, (val, e) in scaled.items():
            worst = max(worst, val / (rho**e * base_rhs[key][0]))
    return worst


def _rhs_one(grid, c, t, extra, P):
    return 1.0


CATALOG: dict[str, CatalogEntry] = {e.estimate_id: e for e in (
    CatalogEntry("smoothing-plus", "QPplus", "sym", _lhs_smoothing_plus, _rhs_l2,
                 "||dx U(t) P+ Q u0||_{Linf_x L2_{t,y}} <~ ||u0||_2"),
    CatalogEntry("smoothing-minus", "QPminus", "sym", _lhs_smoothing_minus, _rhs_l2,
                 "||Dx^(1/2) U(t) P- Q u0||_{Linf_y L2_{t,x}} <~ ||u0||_2"),
    CatalogEntry("smoothing-inhomog", "QPminus", "pos", _lhs_smoothing_inhomog, _rhs_smoothing_inhomog,
                 "||dx int_0^t U(t-s) P- Q f(s) ds||_{Linf_y L2_{t,x}} <~ ||f||_{L1_y L2_{x,t}}",
                 needs_forcing=True),
    CatalogEntry("maximal-x-high", "Q_only", "sym", _maximal("Q", "y_outer", False), _rhs_max_x_high,
                 "(sum_s sup |Q U(t) u0|^2)^(1/2) <~ ||(1+Dx)^s (1+Dy)^g Q u0||"),
    CatalogEntry("maximal-y-high", "Q_only", "sym", _maximal("Q", "x_outer", False), _rhs_max_y_high,
                 "(sum_r sup |Q U(t) u0|^2)^(1/2) <~ ||(1+Dx)^s (1+Dy)^g Q u0|| + ||(1+Dy)^th Q u0||"),
    CatalogEntry("maximal-x-low", "lowfreq_only", "sym", _maximal("low", "y_outer", False), _rhs_max_x_low,
                 "(sum_s sup |(1-Q) U(t) u0|^2)^(1/2) <~ ||Dx^-g (1+Dy)^g (1-Q) u0||"),
    CatalogEntry("maximal-y-low", "lowfreq_only", "sym", _maximal("low", "x_outer", False), _rhs_max_y_low,
                 "(sum_r sup |(1-Q) U(t) u0|^2)^(1/2) <~ ||Dx^-s (1+Dy)^th (1-Q) u0||"),
    CatalogEntry("weighted-maximal-x", "Q_only", "sym", _maximal("Q", "y_outer", True), _rhs_wmax_x,
                 "(sum_s sup <y>^a |Q U(t) u0|^2)^(1/2) <~ ||<y>^a (1+Dx)^s (1+Dy)^g u0||"
                 " + ||(1+Dx)^(s-1/2) (1+Dy)^(g+1/2) u0||"),
    CatalogEntry("weighted-maximal-low", "lowfreq_only", "sym", _maximal("low", "y_outer", True), _rhs_wmax_low,
                 "(sum_s sup <y>^a |(1-Q) U(t) u0|^2)^(1/2) <~ ||<y>^a Dx^-g (1+Dy)^g u0||"
                 " + ||Dx^-th (1+Dy)^s u0||"),
    CatalogEntry("group-weighted", "Q_only", "sym", _group("Q"), _rhs_group,
                 "||<y>^a U(t) Q g|| <= ||<y>^a g|| + ||(1+Dy)^a (1+Dx)^-a g||"),
    CatalogEntry("group-weighted-low", "lowfreq_only", "sym", _group("low"), _rhs_group_low,
                 "||<y>^a U(t) (1-Q) g|| <= ||<y>^a g|| + ||(1+Dy)^a Dx^(-a-e) g||"),
    CatalogEntry("strichartz", "full", "sym", _lhs_strichartz, _rhs_l2,
                 "||U(t) u0||_{L^q_t L^p_xy} <~ ||u0||_2 at (q,p) = (4,4), (8/3,8)"),
    CatalogEntry("weighted-Linfty", "Q_only", "pos", _linfty("Q"), _rhs_linfty,
                 "||<y>^a Q U(t) u0||_{L2_t Linf_xy} <~ ||<y>^a ((1+Dx)^e + (1+Dy)^e) Q u0||"
                 " + ||(1+Dy)^(a+e) Q u0||"),
    CatalogEntry("weighted-Linfty-low", "lowfreq_only", "pos", _linfty("low"), _rhs_linfty_low,
                 "||<y>^a (1-Q) U(t) u0||_{L2_t Linf_xy} <~ ||<y>^a (1+Dy)^e u0||"
                 " + ||Dx^(-a-e) (1+Dy)^(a+2e) (1-Q) u0||"),
    CatalogEntry("scaling", "full", "sym", _lhs_scaling, _rhs_one,
                 "max over rho and norms of ||N u_rho|| / (rho^e ||N u||)"),
)}

ONE_D_IDS = ("frac-leibniz-1d", "weight-commutator-1d")
ALL_IDS = tuple(CATALOG) + ONE_D_IDS


@dataclass(frozen=True)
class EstimateSpec:
    """Ensemble run of one catalog entry."""

    estimate_id: str
    samples: int = 50
    profiles: tuple[tuple[float, float], ...] = DEFAULT_PROFILES
    grid_sizes: tuple[int, int] = (64, 128)
    L: float = 8.0
    seed: int = 0
    nt: int = 129
    eps: float = EPS

    def __post_init__(self) -> None:
        if self.estimate_id not in ALL_IDS:
            raise KeyError(f"unknown estimate {self.estimate_id!r}; catalog: {', '.join(ALL_IDS)}")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.nt < 65:
            raise ValueError("at least 65 time samples (64 intervals) are required")
        if len(self.grid_sizes) != 2 or self.grid_sizes[1] != 2 * self.grid_sizes[0]:
            raise ValueError("grid_sizes must be (N, 2N)")
        if 2 * self.L < 16:
            raise ValueError("the domain must hold at least 16 unit cells per axis")

    def spectrum(self, sample: int) -> SpectrumSpec:
        a, b = self.profiles[sample % len(self.profiles)]
        entry = CATALOG.get(self.estimate_id)
        support = entry.support if entry else "full"
        return SpectrumSpec(a, b, support, seed=derive_seed(self.seed, self.estimate_id, sample),
                            master=max(self.grid_sizes))


def _forcing_extra(spec: EstimateSpec, sample: int, grids: Sequence[Grid2D]) -> list[dict]:
    base = spec.spectrum(sample)
    s1 = SpectrumSpec(base.a, base.b, base.support, seed=derive_seed(base.seed, "forcing-1", sample),
                      master=base.master)
    s2 = SpectrumSpec(base.a, base.b, base.support, seed=derive_seed(base.seed, "forcing-2", sample),
                      master=base.master)
    rng = np.random.default_rng(derive_seed(base.seed, "forcing-time", sample))
    w1, w2, p1, p2 = rng.uniform(0, 2 * np.pi, 4)
    return [{"g1": np.asarray(random_coeffs(s1, g).coeffs), "g2": np.asarray(random_coeffs(s2, g).coeffs),
             "w1": w1, "w2": w2, "p1": p1, "p2": p2} for g in grids]


def _check_support(spec: SpectrumSpec, grid: Grid2D, c: np.ndarray) -> None:
    outside = ~_support_mask(spec, grid)
    total = float(np.sum(np.abs(c) ** 2))
    if total > 0 and float(np.sum(np.abs(c[outside]) ** 2)) > 1e-26 * total:
        raise AssertionError(f"sample violates the {spec.support} support of its estimate")


def _run_sample(spec: EstimateSpec, sample: int, grids: Sequence[Grid2D]) -> list[dict]:
    entry = CATALOG[spec.estimate_id]
    sspec = spec.spectrum(sample)
    params = _Params(spec.eps)
    t = _times(entry.window, spec.nt)
    extras = _forcing_extra(spec, sample, grids) if entry.needs_forcing else [{} for _ in grids]
    out = []
    for grid, extra in zip(grids, extras):
        c = np.asarray(random_coeffs(sspec, grid).coeffs)
        _check_support(sspec, grid, c)
        lhs = entry.lhs(grid, c, t, extra, params)
        rhs = entry.rhs(grid, c, t, extra, params)
        out.append({"sample": sample, "seed": sspec.seed, "grid": f"{grid.Nx}x{grid.Ny}",
                    "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else float("nan")})
    return out


def _map(fn, items, threads: int | None):
    threads = threads or 1
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_estimate_check(spec: EstimateSpec, threads: int | None = 1) -> EstimateReport:
    """Evaluate one catalog entry on its ensemble at both grid sizes."""
    if spec.estimate_id == "frac-leibniz-1d":
        return leibniz_check_1d(0.5, 2, spec.samples, spec.seed, spec.grid_sizes, spec.L, threads)
    if spec.estimate_id == "weight-commutator-1d":
        return weight_commutator_check_1d(spec.eps + 0.5, 0.5, spec.samples, spec.seed, spec.grid_sizes,
                                          spec.L, threads)
    n0, n1 = spec.grid_sizes
    grids = (make_grid(spec.L, spec.L, n0, n0), make_grid(spec.L, spec.L, n1, n1))
    per = _map(lambda s: _run_sample(spec, s, grids), range(spec.samples), threads)
    rows = [r for pair in per for r in pair]
    coarse = np.array([pair[0]["ratio"] for pair in per])
    fine = np.array([pair[1]["ratio"] for pair in per])
    return EstimateReport.build(spec.estimate_id, coarse, fine, rows=rows,
                                details={"description": CATALOG[spec.estimate_id].description})


# ------------------------------------------------------ one-dimensional ---

def _random_1d(rng: np.random.Generator, master: int, n: int, L: float, a: float) -> np.ndarray:
    """Unitary coefficients of a real random 1-D field on ``n`` points."""
    z = rng.standard_normal(master) + 1j * rng.standard_normal(master)
    z = 0.5 * (z + np.conj(np.roll(z[::-1], 1)))
    m = np.fft.fftfreq(n, 1.0 / n).astype(int)
    xi = np.pi * m / L
    c = z[np.mod(m, master)] * (1.0 + xi**2) ** (-0.5 * a) * math.sqrt(n)
    c[n // 2] = 0.0
    return c


def _pad(c: np.ndarray, n_out: int) -> np.ndarray:
    """Zero-pad unitary coefficients to ``n_out`` points (same function)."""
    n = c.size
    out = np.zeros(n_out, dtype=complex)
    m = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out[np.mod(m, n_out)] = c
    return out * math.sqrt(n_out / n)


def _dsig(c: np.ndarray, L: float, sigma: float) -> np.ndarray:
    n = c.size
    xi = np.abs(np.pi * np.fft.fftfreq(n, 1.0 / n) / L)
    return c * np.where(xi == 0, 0.0, xi**sigma)


def _l2_1d(c: np.ndarray, L: float) -> float:
    return float(math.sqrt(2 * L / c.size) * np.linalg.norm(c))


def leibniz_commutator_1d(cf: np.ndarray, cg: np.ndarray, L: float, sigma: float) -> tuple[float, float]:
    """``(||D^s(fg) - f D^s g - g D^s f||_2, ||g||_inf ||D^s f||_2)`` without aliasing.

    Products are formed on a grid twice as fine, where they are represented
    exactly.
    """
    n2 = 2 * cf.size
    f, g = (np.fft.ifft(_pad(c, n2), norm="ortho").real for c in (cf, cg))
    dsf = np.fft.ifft(_pad(_dsig(cf, L, sigma), n2), norm="ortho").real
    dsg = np.fft.ifft(_pad(_dsig(cg, L, sigma), n2), norm="ortho").real
    prod = np.fft.fft(f * g, norm="ortho")
    comm = _dsig(prod, L, sigma) - np.fft.fft(f * dsg + g * dsf, norm="ortho")
    lhs = _l2_1d(comm, L)
    rhs = float(np.max(np.abs(g))) * _l2_1d(_dsig(cf, L, sigma), L)
    return lhs, rhs


def leibniz_check_1d(sigma: float = 0.5, p: int = 2, samples: int = 50, seed: int = 0,
                     grid_sizes: tuple[int, int] = (64, 128), L: float = 8.0,
                     threads: int | None = 1,
                     profiles: Sequence[float] = (2.0, 3.0, 1.5)) -> EstimateReport:
    """Fractional Leibniz commutator ratio on a 1-D periodic grid."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if p != 2:
        raise ValueError("only p = 2 is supported")
    master = max(grid_sizes)

    def one(s):
        sd = derive_seed(seed, "frac-leibniz-1d", s)
        a = profiles[s % len(profiles)]
        rows = []
        for n in grid_sizes:
            rng = np.random.default_rng(sd)
            cf = _random_1d(rng, master, n, L, a)
            cg = _random_1d(rng, master, n, L, a)
            lhs, rhs = leibniz_commutator_1d(cf, cg, L, sigma)
            rows.append({"sample": s, "seed": sd, "grid": str(n),
                         "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs})
        return rows

    per = _map(one, range(samples), threads)
    return EstimateReport.build("frac-leibniz-1d", [r[0]["ratio"] for r in per], [r[1]["ratio"] for r in per],
                                rows=[r for pair in per for r in pair], details={"sigma": sigma, "p": p})


def _bessel_1d(c: np.ndarray, L: float, gamma: float) -> np.ndarray:
    n = c.size
    xi = np.abs(np.pi * np.fft.fftfreq(n, 1.0 / n) / L)
    return c * (1.0 + xi) ** gamma


def weight_commutator_check_1d(alpha: float = 0.55, gamma: float = 0.5, samples: int = 50, seed: int = 0,
                               grid_sizes: tuple[int, int] = (64, 128), L: float = 8.0,
                               threads: int | None = 1,
                               profiles: Sequence[float] = (2.0, 3.0, 1.5)) -> EstimateReport:
    """``||[<y>^a, (1+D)^g] f||_2 / ||<y>^a f||_2`` on a 1-D periodic grid.

    The row data also carry the difference of the two norms compared by the
    weight-derivative identity.
    """
    if not 0 <= alpha <= 1 or not 0 < gamma < 1:
        raise ValueError("need 0 <= alpha <= 1 and 0 < gamma < 1")
    master = max(grid_sizes)

    def one(s):
        sd = derive_seed(seed, "weight-commutator-1d", s)
        a = profiles[s % len(profiles)]
        rows = []
        for n in grid_sizes:
            c = _random_1d(np.random.default_rng(sd), master, n, L, a)
            y = -L + 2 * L * np.arange(n) / n
            w = weight_values(y, alpha)
            f = np.fft.ifft(c, norm="ortho").real
            wf = np.fft.fft(w * f, norm="ortho")
            a1 = w * np.fft.ifft(_bessel_1d(c, L, gamma), norm="ortho").real
            a2 = np.fft.ifft(_bessel_1d(wf, L, gamma), norm="ortho").real
            dy = 2 * L / n
            comm = math.sqrt(dy) * float(np.linalg.norm(a1 - a2))
            rhs = math.sqrt(dy) * float(np.linalg.norm(w * f))
            diff = abs(math.sqrt(dy) * float(np.linalg.norm(a1)) - math.sqrt(dy) * float(np.linalg.norm(a2)))
            rows.append({"sample": s, "seed": sd, "grid": str(n), "lhs": comm, "rhs": rhs,
                         "ratio": comm / rhs, "norm_difference": diff})
        return rows

    per = _map(one, range(samples), threads)
    return EstimateReport.build("weight-commutator-1d", [r[0]["ratio"] for r in per], [r[1]["ratio"] for r in per],
                                rows=[r for pair in per for r in pair], details={"alpha": alpha, "gamma": gamma})


# ------------------------------------------------------------- scaling ---

def scaling_exponents(u: PhysicalField, rhos: Sequence[float] = SCALING_RHOS,
                      sigmas: Sequence[float] = (0.5, 1.0, 2.0), gammas: Sequence[float] = (0.5, 1.0),
                      alpha: float = 0.55, weight_sigma: float = 1.0) -> dict:
    """Fit log-log slopes of rescaled norms against ``rho``.

    Returns ``{name: {"slope", "target", "deviation"}}``.  Homogeneous
    derivatives and the ``|y|^alpha`` weight scale exactly.
    """
    from .kernels import fit_slope

    rhos = tuple(rhos)
    if any(not 0 < r <= 1 for r in rhos) or len(rhos) < 2:
        raise ValueError("need at least two rho values in (0, 1]")
    fields = [rescale_field(u, r) for r in rhos]
    norms: dict[str, tuple[Callable[[PhysicalField], float], float]] = {
        "L2": (lambda f: l2_norm(f), 0.5)}
    for s in sigmas:
        norms[f"Dx^{s:g}"] = (lambda f, s=s: float(weighted_sobolev_norm(f, s, 0.0, dotted_x=True, dotted_y=True)),
                             0.5 + s)
    for g in gammas:
        norms[f"Dy^{g:g}"] = (lambda f, g=g: float(weighted_sobolev_norm(f, 0.0, g, dotted_x=True, dotted_y=True)),
                             0.5 + 2 * g)
    norms[f"|y|^{alpha:g} Dx^{weight_sigma:g}"] = (
        lambda f: float(weighted_sobolev_norm(f, weight_sigma, 0.0, alpha, True, True, weight_kind="abs")),
        0.5 + weight_sigma - 2 * alpha)
    out = {}
    logr = [math.log(r) for r in rhos]
    for name, (fn, target) in norms.items():
        vals = [math.log(fn(f)) for f in fields]
        slope = fit_slope(logr, vals)
        out[name] = {"slope": slope, "target": target, "deviation": abs(slope - target)}
    return out


# --------------------------------------------------------------- sweep ---

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report_csv(report: EstimateReport, path: str | os.PathLike) -> None:
    cols = ["sample", "seed", "grid", "lhs", "rhs", "ratio"]
    extra = sorted({k for r in report.rows for k in r} - set(cols))
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols + extra)
            for r in report.rows:
                w.writerow([_fmt(r.get(k, "")) for k in cols + extra])
    except OSError as exc:
        raise OSError(f"cannot write estimate CSV {path}: {exc}") from exc


def write_json(obj, path: str | os.PathLike) -> None:
    """JSON with full-precision floats (Python's shortest round-trip repr)."""
    try:
        with open(path, "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON {path}: {exc}") from exc


def sweep_and_report(specs: Sequence[EstimateSpec], outdir: str | os.PathLike,
                     threads: int | None = 1) -> dict:
    """Run every spec, write ``<id>.csv`` per estimate and ``summary.json``."""
    os.makedirs(outdir, exist_ok=True)
    reports = [run_estimate_check(s, threads) for s in specs]
    for rep in reports:
        write_report_csv(rep, os.path.join(outdir, f"{rep.estimate_id}.csv"))
    summary = {
        "schema": "kp-estimates v1",
        "estimates": [rep.summary() for rep in reports],
        "all_pass": all(rep.passed for rep in reports),
        "config": [asdict(s) for s in specs],
    }
    write_json(summary, os.path.join(outdir, "summary.json"))
    return summary
