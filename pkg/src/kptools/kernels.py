"""Dyadic oscillatory kernels of the linear KP flow and their decay exponents.

The kernel of block ``(k, j)`` is

    I^t_{k,j}(x, y) = integral of exp(i (t phi + x xi + y lam)) theta_{k,j}(xi, lam)

with ``theta_{k,j}`` the dyadic cutoff of :mod:`kptools.multipliers`.  Two
evaluators are provided:

* :func:`eval_kernel`: tensor Gauss-Legendre in ``(xi, r = lam/xi)`` per sign
  quadrant, for single points.  It refuses when the phase is under-resolved.
* :func:`sweep_block`: the trapezoid rule on a uniform ``(xi, lam)`` lattice,
  evaluated at every point of a window through FFTs.  By Poisson summation the
  trapezoid value is the kernel plus its periodic images, so the only error is
  aliasing from images one period away.  Halving the lattice spacing removes
  every odd image; the sweep does exactly that (four half-shifted lattices) and
  reports the change as the self-convergence measure.

The kernel is real (``theta`` is even, ``phi`` odd) and even in ``y``; the
sweep exploits both symmetries and obtains negative times from
``I^{-t}(x, y) = I^t(-x, y)``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .multipliers import BumpProfile, DyadicIndex
from .spectral import DispersionSign, dispersion_phi

__all__ = [
    "exponent_alpha",
    "exponent_delta",
    "exponent_beta",
    "exponent_delta_alt",
    "delta_case",
    "ExponentTable",
    "KernelEvalSpec",
    "UnderResolvedError",
    "eval_kernel",
    "phase_cycles",
    "SweepConfig",
    "BlockSweep",
    "sweep_block",
    "kernel_sweep",
    "fit_slope",
    "fit_plane",
    "sweep_summary",
    "write_sweep_csv",
    "verify_kernel_bound",
]


# ------------------------------------------------------------ exponents ---

def _frac(v) -> Fraction:
    if isinstance(v, bool) or int(v) != v:
        raise ValueError(f"dyadic indices must be integers, got {v!r}")
    return Fraction(int(v))


def exponent_alpha(k, j) -> Fraction:
    """``5k/2 + j`` for ``k >= 0`` and ``j`` for ``k <= 0``."""
    k, j = _frac(k), _frac(j)
    return Fraction(5, 2) * k + j if k >= 0 else j


def delta_case(k, j) -> int:
    """Index (1, 2 or 3) of the first branch of the delta table that applies."""
    k, j = _frac(k), _frac(j)
    if k >= max(0, j):
        return 1
    if (j >= k >= 0) or (k < 0 and k >= 2 * j):
        return 2
    if k < min(0, 2 * j):
        return 3
    raise AssertionError(f"delta table does not cover ({k}, {j})")


def exponent_delta(k, j) -> Fraction:
    k, j = _frac(k), _frac(j)
    case = delta_case(k, j)
    if case == 1:
        return Fraction(5, 2) * k + j
    if case == 2:
        return Fraction(3, 2) * k + 2 * j
    return 2 * k + j


def exponent_delta_alt(k, j) -> Fraction:
    """Alternative bound ``max(2k+j, -2j [j>=0], 5k/2+j [j>=0])``.

    Reported next to :func:`exponent_delta` by the sweep; never asserted.
    """
    k, j = _frac(k), _frac(j)
    cands = [2 * k + j]
    if j >= 0:
        cands += [-2 * j, Fraction(5, 2) * k + j]
    return max(cands)


def exponent_beta(k, j) -> Fraction:
    """``k/2 + j`` for ``k >= j``, else ``3k/2``."""
    k, j = _frac(k), _frac(j)
    return k / 2 + j if k >= j else Fraction(3, 2) * k


@dataclass(frozen=True)
class ExponentTable:
    """Exponents of one dyadic block."""

    alpha: Fraction
    delta: Fraction
    beta: Fraction
    delta_case: int

    @classmethod
    def of(cls, idx: DyadicIndex) -> "ExponentTable":
        return cls(exponent_alpha(idx.k, idx.j), exponent_delta(idx.k, idx.j),
                   exponent_beta(idx.k, idx.j), delta_case(idx.k, idx.j))


# ------------------------------------------------------ point evaluator ---

class UnderResolvedError(ValueError):
    """The quadrature budget cannot resolve the phase oscillation."""


@dataclass(frozen=True)
class KernelEvalSpec:
    idx: DyadicIndex
    t: float = 0.0
    points: int = 64
    s_max: int = 8
    r_max: int = 8
    sign: DispersionSign = DispersionSign.KP_I
    bump: BumpProfile = BumpProfile()

    def __post_init__(self) -> None:
        if not -1.0 <= self.t <= 1.0:
            raise ValueError(f"kernel time must lie in [-1, 1], got {self.t}")
        if self.points < 16:
            raise ValueError("quadrature needs at least 16 points per axis")
        if self.s_max < 8 or self.r_max < 8:
            raise ValueError("lattice extents must be at least 8")


def _intervals(idx: DyadicIndex) -> tuple[tuple[float, float], tuple[float, float]]:
    return (math.ldexp(0.5, idx.k), math.ldexp(2.0, idx.k)), (math.ldexp(0.5, idx.j), math.ldexp(2.0, idx.j))


def _phase(spec: KernelEvalSpec, xi, r, x, y):
    lam = xi * r
    return spec.t * dispersion_phi(xi, lam, spec.sign) + x * xi + y * lam


def phase_cycles(spec: KernelEvalSpec, x: float, y: float, probe: int = 257) -> float:
    """Largest number of phase cycles along a coordinate line of the block."""
    (a, b), (c, d) = _intervals(spec.idx)
    worst = 0.0
    for sx in (1.0, -1.0):
        for sr in (1.0, -1.0):
            xi = sx * np.linspace(a, b, probe)[:, None]
            r = sr * np.linspace(c, d, probe)[None, :]
            ph = _phase(spec, xi, r, x, y)
            along_xi = np.abs(np.diff(ph, axis=0)).sum(axis=0).max()
            along_r = np.abs(np.diff(ph, axis=1)).sum(axis=1).max()
            worst = max(worst, along_xi, along_r)
    return worst / (2 * np.pi)


def eval_kernel(spec: KernelEvalSpec, x: float, y: float) -> complex:
    """Gauss-Legendre value of ``I^t_{k,j}(x, y)``.

    Integrates in ``(xi, r)`` with ``lam = xi r`` (Jacobian ``|xi|``) over the
    four sign quadrants.
    """
    cycles = phase_cycles(spec, x, y)
    if spec.points < 8 * cycles:
        raise UnderResolvedError(
            f"block ({spec.idx.k},{spec.idx.j}) at t={spec.t}, x={x}, y={y}: "
            f"{cycles:.1f} phase cycles need {math.ceil(8 * cycles)} points, have {spec.points}"
        )
    (a, b), (c, d) = _intervals(spec.idx)
    nodes, weights = np.polynomial.legendre.leggauss(spec.points)
    xi = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    wx = 0.5 * (b - a) * weights
    r = 0.5 * (d - c) * nodes + 0.5 * (d + c)
    wr = 0.5 * (d - c) * weights
    amp = (spec.bump(np.ldexp(xi, -spec.idx.k)) * xi * wx)[:, None] * (spec.bump(np.ldexp(r, -spec.idx.j)) * wr)[None, :]
    total = 0j
    for sx in (1.0, -1.0):
        for sr in (1.0, -1.0):
            ph = _phase(spec, sx * xi[:, None], sr * r[None, :], x, y)
            total += np.sum(amp * np.exp(1j * ph))
    return complex(total)


# ------------------------------------------------------------ FFT sweep ---

@dataclass(frozen=True)
class SweepConfig:
    """Settings of the lattice sweep.

    ``margin`` is the decay allowance (in unit cells, at unit frequency
    scale) added around the stationary region; it shrinks like ``2^-k`` in
    ``x`` and ``2^-(k+j)`` in ``y``.  Blocks whose lattice or output would
    exceed the budgets are skipped and counted.
    """

    t_samples: tuple[float, ...] = tuple(np.round(np.linspace(-1.0, 1.0, 33), 12))
    samples_per_unit: int = 8
    margin: float = 160.0
    min_extent: int = 8
    tol: float = 1e-4
    sign: DispersionSign = DispersionSign.KP_I
    bump: BumpProfile = BumpProfile()
    max_nodes: int = 24_000_000
    max_outputs: int = 12_000_000

    def __post_init__(self) -> None:
        ts = tuple(float(t) for t in self.t_samples)
        if not ts or any(abs(t) > 1.0 for t in ts):
            raise ValueError("kernel sweep times must lie in [-1, 1]")
        object.__setattr__(self, "t_samples", ts)
        if self.samples_per_unit < 1:
            raise ValueError("samples_per_unit must be positive")
        if self.min_extent < 8:
            raise ValueError("lattice extents must be at least 8")
        if self.margin <= 0 or self.tol <= 0:
            raise ValueError("margin and tol must be positive")


@dataclass(frozen=True)
class _Window:
    x_lo: int
    x_hi: int
    y_hi: int
    spu: int

    @property
    def period_x(self) -> int:
        return self.x_hi - self.x_lo

    @property
    def period_y(self) -> int:
        return 2 * self.y_hi

    @property
    def nx(self) -> int:
        return self.period_x * self.spu

    @property
    def ny(self) -> int:
        return self.period_y * self.spu


def _window(idx: DyadicIndex, cfg: SweepConfig) -> _Window:
    (a, b), (c, d) = _intervals(idx)
    g = float(int(cfg.sign))
    # d phi / d xi = 3 xi^2 + g r^2 and d phi / d lam = -2 g r with r = lam / xi
    gr = (g * c * c, g * d * d)
    d_lo, d_hi = 3 * a * a + min(gr), 3 * b * b + max(gr)
    tmax = max(abs(t) for t in cfg.t_samples)
    # negative times are recovered by mirroring, so only t >= 0 is covered
    x_left = -tmax * max(d_hi, 0.0)
    x_right = -tmax * min(d_lo, 0.0)
    mx = max(cfg.min_extent, cfg.margin * 2.0 ** (-idx.k))
    my = max(cfg.min_extent, cfg.margin * 2.0 ** (-(idx.k + idx.j)))
    x_lo = math.floor(min(x_left - mx, -cfg.min_extent))
    x_hi = math.ceil(max(x_right + mx, cfg.min_extent))
    y_hi = math.ceil(max(tmax * 2 * d + my, cfg.min_extent))
    return _Window(x_lo, x_hi, y_hi, cfg.samples_per_unit)


@dataclass
class _Lattice:
    """Quadrant nodes (xi > 0, lam > 0) of one shifted trapezoid lattice."""

    weight: np.ndarray
    phi: np.ndarray
    phase0: np.ndarray
    lin: np.ndarray
    rows: np.ndarray
    shift: tuple[float, float]


def _count_nodes(idx: DyadicIndex, win: _Window) -> float:
    (a, b), (c, d) = _intervals(idx)
    hx, hy = 2 * np.pi / win.period_x, 2 * np.pi / win.period_y
    return (b * b - a * a) / 2 * (d - c) / (hx * hy)


def _build_lattice(idx: DyadicIndex, win: _Window, cfg: SweepConfig, shift: tuple[float, float]) -> _Lattice:
    (a, b), (c, d) = _intervals(idx)
    hx, hy = 2 * np.pi / win.period_x, 2 * np.pi / win.period_y
    sx, sy = shift
    n = np.arange(math.ceil(a / hx - sx), math.floor(b / hx - sx) + 1)
    xi_rows = (n + sx) * hx
    m_lo = np.ceil(xi_rows * c / hy - sy).astype(np.int64)
    m_hi = np.floor(xi_rows * d / hy - sy).astype(np.int64)
    counts = np.maximum(m_hi - m_lo + 1, 0)
    row_of = np.repeat(np.arange(n.size), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    m = np.repeat(m_lo, counts) + (np.arange(row_of.size) - starts)
    xi = xi_rows[row_of]
    lam = (m + sy) * hy
    w = (cfg.bump(np.ldexp(xi, -idx.k)) * cfg.bump(np.ldexp(lam / xi, -idx.j))) * (hx * hy)
    keep = w > 0
    xi, lam, w, m, row_of = xi[keep], lam[keep], w[keep], m[keep], row_of[keep]
    folded_rows = np.mod(n, win.nx)
    rows, row_ids = np.unique(folded_rows[row_of], return_inverse=True)
    lin = row_ids.astype(np.int64) * win.ny + np.mod(m, win.ny)
    return _Lattice(
        weight=w,
        phi=dispersion_phi(xi, lam, cfg.sign),
        phase0=win.x_lo * xi - win.y_hi * lam,
        lin=lin,
        rows=rows,
        shift=shift,
    )


def _kernel_on_window(lat: _Lattice, win: _Window, t: float) -> np.ndarray:
    """Trapezoid kernel at ``x = x_lo + p/spu`` (all p) and ``y = q/spu >= 0``."""
    vals = lat.weight * np.exp(1j * (t * lat.phi + lat.phase0))
    size = lat.rows.size * win.ny
    g = np.bincount(lat.lin, weights=vals.real, minlength=size) + 1j * np.bincount(
        lat.lin, weights=vals.imag, minlength=size)
    g = g.reshape(lat.rows.size, win.ny)
    q = np.arange(win.ny)
    h = np.fft.ifft(g, axis=1) * win.ny * np.exp(2j * np.pi * q * lat.shift[1] / win.ny)[None, :]
    q0 = win.y_hi * win.spu
    qpos = np.arange(q0, win.ny)
    e = h[:, qpos] + h[:, np.mod(win.ny - qpos, win.ny)]
    full = np.zeros((win.nx, qpos.size), dtype=complex)
    full[lat.rows] = e
    p = np.arange(win.nx)
    out = np.fft.ifft(full, axis=0) * win.nx * np.exp(2j * np.pi * p * lat.shift[0] / win.nx)[:, None]
    return 2.0 * out.real


def _closed_cells(profile: np.ndarray, spu: int) -> np.ndarray:
    """Max of ``profile`` over closed unit cells (samples ``i*spu .. (i+1)*spu``)."""
    ncell = (profile.size - 1) // spu + (1 if (profile.size - 1) % spu else 0)
    ncell = max(ncell, 1)
    pad = np.full(ncell * spu + 1, -np.inf)
    pad[: profile.size] = profile
    body = pad[:-1].reshape(ncell, spu).max(axis=1)
    right = pad[spu::spu]
    return np.maximum(body, right)


@dataclass
class _TimeCells:
    cells_y: np.ndarray  # closed cells [s, s+1], s >= 0
    cells_x: np.ndarray  # closed cells [r, r+1], r = x_lo + index
    sup: float


def _time_cells(vals: np.ndarray, win: _Window) -> _TimeCells:
    a = np.abs(vals)
    return _TimeCells(_closed_cells(a.max(axis=0), win.spu), _closed_cells(a.max(axis=1), win.spu), float(a.max()))


def _mirror_x(cells: np.ndarray, start: int) -> tuple[np.ndarray, int]:
    """Cells of the time-reversed kernel: cell ``[r, r+1]`` takes the value of ``[-r-1, -r]``."""
    return cells[::-1], -start - cells.size


def _union_max(parts: Sequence[tuple[np.ndarray, int]]) -> tuple[np.ndarray, int]:
    lo = min(st for _, st in parts)
    hi = max(st + c.size for c, st in parts)
    out = np.zeros(hi - lo)
    for c, st in parts:
        seg = out[st - lo: st - lo + c.size]
        np.maximum(seg, c, out=seg)
    return out, lo


@dataclass
class BlockSweep:
    """Cell sums of one block, per time sample and aggregated over time."""

    idx: DyadicIndex
    times: np.ndarray
    S_y_t: np.ndarray
    S_x_t: np.ndarray
    sup_t: np.ndarray
    rel_change: np.ndarray
    S_y: float
    S_x: float
    rel_change_total: float
    tol: float
    window: tuple[int, int, int] = (0, 0, 0)
    nodes: int = 0
    skipped: str = ""
    exponents: ExponentTable = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.exponents is None:
            self.exponents = ExponentTable.of(self.idx)

    @property
    def resolved_t(self) -> np.ndarray:
        return self.rel_change < self.tol

    @property
    def resolved_fraction(self) -> float:
        if self.skipped or self.times.size == 0:
            return 0.0
        return float(np.mean(self.resolved_t))

    @property
    def resolved(self) -> bool:
        return not self.skipped and bool(np.all(self.resolved_t)) and self.rel_change_total < self.tol

    def sup_at(self, t: float) -> float:
        hit = np.flatnonzero(np.isclose(self.times, t))
        return float(self.sup_t[hit[0]]) if hit.size else float("nan")


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - b)) / scale)


def _sums(cy: np.ndarray, cx: np.ndarray) -> tuple[float, float]:
    # y-cells come in mirror pairs [s, s+1] and [-s-1, -s]
    return 2.0 * float(cy.sum()), float(cx.sum())


def sweep_block(idx: DyadicIndex, cfg: SweepConfig = SweepConfig()) -> BlockSweep:
    """Sample ``|I^t_{k,j}|`` on the cell lattice for every requested ``t``.

    ``S_y(t)`` sums over y-cells the sup over the cell and all ``x``;
    ``S_x(t)`` is the transposed quantity.  ``S_y`` and ``S_x`` take the sup
    over all time samples before summing.  The reported values come from the
    twice-refined lattice; ``rel_change`` is the relative change against the
    base lattice (cell sups and sums).
    """
    times = np.asarray(cfg.t_samples, dtype=float)
    win = _window(idx, cfg)
    nodes = _count_nodes(idx, win)
    outputs = win.nx * win.ny // 2
    empty = np.full(times.size, np.nan)
    if 4 * nodes > cfg.max_nodes or outputs > cfg.max_outputs:
        return BlockSweep(idx, times, empty, empty.copy(), empty.copy(), np.full(times.size, np.inf),
                          float("nan"), float("nan"), float("inf"), cfg.tol,
                          (win.x_lo, win.x_hi, win.y_hi), int(nodes),
                          skipped=f"over budget: ~{4 * nodes:.3g} nodes, {outputs} outputs")

    shifts = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
    lattices = [_build_lattice(idx, win, cfg, s) for s in shifts]
    abs_times = np.unique(np.abs(times))
    per_abs: dict[float, tuple[_TimeCells, _TimeCells]] = {}
    for t in abs_times:
        base = _kernel_on_window(lattices[0], win, t)
        acc = base.copy()
        for lat in lattices[1:]:
            acc += _kernel_on_window(lat, win, t)
        acc *= 0.25
        per_abs[float(t)] = (_time_cells(base, win), _time_cells(acc, win))

    S_y_t, S_x_t, sup_t, rel = (np.empty(times.size) for _ in range(4))
    parts: dict[str, tuple[list, list]] = {"base": ([], []), "fine": ([], [])}
    for i, t in enumerate(times):
        row = {}
        for name, tc in zip(("base", "fine"), per_abs[float(abs(t))]):
            cx = (tc.cells_x, win.x_lo) if t >= 0 else _mirror_x(tc.cells_x, win.x_lo)
            row[name] = (tc.cells_y, cx[0])
            parts[name][0].append((tc.cells_y, 0))
            parts[name][1].append(cx)
        (by, bx), (fy, fx) = row["base"], row["fine"]
        S_y_t[i], S_x_t[i] = _sums(fy, fx)
        sb_y, sb_x = _sums(by, bx)
        sup_t[i] = per_abs[float(abs(t))][1].sup
        rel[i] = max(_rel(by, fy), _rel(bx, fx),
                     abs(sb_y - S_y_t[i]) / S_y_t[i], abs(sb_x - S_x_t[i]) / S_x_t[i])
    by, fy = (_union_max(parts[n][0])[0] for n in ("base", "fine"))
    bx, fx = (_union_max(parts[n][1])[0] for n in ("base", "fine"))
    S_y, S_x = _sums(fy, fx)
    sb_y, sb_x = _sums(by, bx)
    rel_total = max(_rel(by, fy), _rel(bx, fx), abs(sb_y - S_y) / S_y, abs(sb_x - S_x) / S_x)
    return BlockSweep(idx, times, S_y_t, S_x_t, sup_t, rel, S_y, S_x, rel_total, cfg.tol,
                      (win.x_lo, win.x_hi, win.y_hi), int(4 * nodes))


def kernel_sweep(k_values: Iterable[int], j_values: Iterable[int], cfg: SweepConfig = SweepConfig(),
                 threads: int | None = None) -> list[BlockSweep]:
    """Sweep a rectangle of blocks; results ordered by ``(k, j)``."""
    idxs = [DyadicIndex(k, j) for k in k_values for j in j_values]
    threads = threads or os.cpu_count() or 1
    if threads == 1:
        return [sweep_block(i, cfg) for i in idxs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: sweep_block(i, cfg), idxs))


# ---------------------------------------------------------- reductions ---

def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``y`` against ``x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(x, y, 1)[0])


def fit_plane(k: Sequence[float], j: Sequence[float], v: Sequence[float]) -> tuple[float, float, float]:
    """Fit ``v = c + a k + b j``; returns ``(a, b, c)``."""
    A = np.column_stack([np.asarray(k, float), np.asarray(j, float), np.ones(len(k))])
    coef, *_ = np.linalg.lstsq(A, np.asarray(v, float), rcond=None)
    return float(coef[0]), float(coef[1]), float(coef[2])


def _resolved(results: Sequence[BlockSweep]) -> list[BlockSweep]:
    return [r for r in results if r.resolved]


def sweep_summary(results: Sequence[BlockSweep]) -> dict:
    """Slopes, bound constants and resolution counts of a sweep."""
    good = _resolved(results)
    out: dict = {
        "blocks": len(results),
        "resolved_blocks": len(good),
        "skipped_blocks": sum(1 for r in results if r.skipped),
        "unresolved_points": int(sum(int(np.sum(~r.resolved_t)) for r in results)),
        "max_rel_change": max((float(np.max(r.rel_change)) for r in good), default=float("nan")),
    }
    if not good:
        return out
    ks = [r.idx.k for r in good]
    js = [r.idx.j for r in good]
    ly = [math.log2(r.S_y) for r in good]
    lx = [math.log2(r.S_x) for r in good]
    a, b, _ = fit_plane(ks, js, ly)
    out["plane_slope_k_y"], out["plane_slope_j_y"] = a, b
    a, b, _ = fit_plane(ks, js, lx)
    out["plane_slope_k_x"], out["plane_slope_j_x"] = a, b

    def line(axis: str, fixed: int, vals: list[float]) -> float | None:
        pts = [(r.idx.k if axis == "k" else r.idx.j, v) for r, v in zip(good, vals)
               if (r.idx.j if axis == "k" else r.idx.k) == fixed]
        if len(pts) < 2:
            return None
        return fit_slope(*zip(*sorted(pts)))

    out["slope_k_y_at_j0"] = line("k", 0, ly)
    out["slope_j_y_at_k0"] = line("j", 0, ly)
    out["ratio_y_max"] = max(r.S_y / 2.0 ** float(r.exponents.alpha) for r in good)
    out["ratio_x_max"] = max(r.S_x / 2.0 ** float(r.exponents.delta) for r in good)
    out["ratio_x_alt_max"] = max(r.S_x / 2.0 ** float(exponent_delta_alt(r.idx.k, r.idx.j)) for r in good)
    vdc = [r.sup_at(1.0) / 2.0 ** float(r.exponents.beta) for r in good if max(r.idx.k, r.idx.j) > 0]
    vdc = [v for v in vdc if np.isfinite(v)]
    out["vdc_constant"] = max(vdc) if vdc else None
    out["blocks_table"] = [
        {"k": r.idx.k, "j": r.idx.j, "log2_S_y": math.log2(r.S_y), "log2_S_x": math.log2(r.S_x),
         "alpha": float(r.exponents.alpha), "delta": float(r.exponents.delta),
         "beta": float(r.exponents.beta), "sup_t1": r.sup_at(1.0),
         "rel_change": r.rel_change_total}
        for r in good
    ]
    return out


CSV_COLUMNS = ("k", "j", "t", "S_y", "S_x", "alpha", "delta", "ratio_y", "ratio_x",
               "resolved_fraction", "rel_change", "sup_abs")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_sweep_csv(path: str | os.PathLike, results: Sequence[BlockSweep]) -> None:
    """One row per (block, time sample)."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in results:
                al, de = float(r.exponents.alpha), float(r.exponents.delta)
                for i, t in enumerate(r.times):
                    w.writerow([_fmt(r.idx.k), _fmt(r.idx.j), _fmt(t), _fmt(r.S_y_t[i]), _fmt(r.S_x_t[i]),
                                _fmt(al), _fmt(de), _fmt(r.S_y_t[i] / 2.0**al), _fmt(r.S_x_t[i] / 2.0**de),
                                _fmt(r.resolved_fraction), _fmt(r.rel_change[i]), _fmt(r.sup_t[i])])
    except OSError as exc:
        raise OSError(f"cannot write kernel sweep CSV {path}: {exc}") from exc


def verify_kernel_bound(idx: DyadicIndex, t_samples: Sequence[float] | None = None,
                        extents: int = 8, cfg: SweepConfig | None = None):
    """Sweep one block and report ``S_y / 2^alpha`` (and the x analogue).

    The report passes when the block is resolved; bounds have unspecified
    constants, so the ratio itself is only reported.
    """
    from .harness import EstimateReport

    cfg = cfg or SweepConfig()
    if t_samples is not None:
        cfg = SweepConfig(**{**cfg.__dict__, "t_samples": tuple(t_samples), "min_extent": max(extents, 8)})
    res = sweep_block(idx, cfg)
    ratio_y = res.S_y / 2.0 ** float(res.exponents.alpha)
    ratio_x = res.S_x / 2.0 ** float(res.exponents.delta)
    return EstimateReport.build(
        f"kernel-bound-{idx.k}-{idx.j}",
        np.array([ratio_y]),
        None,
        resolved=res.resolved,
        rows=[{"k": idx.k, "j": idx.j, "S_y": res.S_y, "S_x": res.S_x,
               "ratio_y": ratio_y, "ratio_x": ratio_x, "rel_change": res.rel_change_total}],
        details={"S_y": res.S_y, "S_x": res.S_x, "ratio_x": ratio_x, "skipped": res.skipped},
    )
