"""Discrete versions of the mixed Lebesgue, weighted Sobolev, data and
solution-space norms.

All spatial integrals carry the quadrature weight ``dx*dy`` (so a constant
``c`` on the torus has L2 norm ``|c| * sqrt(4 Lx Ly)``).  Time integrals use
trapezoid weights.  Suprema over continuous variables are maxima over the
sample lattice.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Sequence

import numpy as np
import scipy.fft as sfft

from .multipliers import EPS, plus, pplus_mask, q_mask, weight_values
from .spectral import Grid2D, PhysicalField, SpectralField, forward_transform

__all__ = [
    "TrajectoryField",
    "NormSpec",
    "NormRecord",
    "XParams",
    "Z0Result",
    "mixed_norm",
    "mixed_lebesgue",
    "weighted_sobolev_norm",
    "multiplier_norm",
    "l2_norm",
    "h2_norm",
    "z0_norm",
    "z0_exponents",
    "x_norm",
    "x_norms",
    "x_norm_max",
    "y_norm_set",
    "x0_norm",
    "y0_norm",
    "y0_exponents",
    "lattice_maximal_norm",
    "evaluate",
]

AXES = {"t": 0, "x": 1, "y": 2}
SUPPORT_TOL = 1e-12


# ---------------------------------------------------------- trajectory ---

@dataclass(frozen=True, eq=False)
class TrajectoryField:
    """Real samples ``values[i]`` of ``u(., ., times[i])``."""

    grid: Grid2D
    times: np.ndarray
    values: np.ndarray
    uniform: bool = field(init=False)

    def __post_init__(self) -> None:
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        v = np.asarray(self.values)
        if v.ndim == 2:
            v = v[None]
        if v.shape != (t.size,) + self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match {(t.size,) + self.grid.shape}")
        if np.iscomplexobj(v):
            raise TypeError("trajectory samples must be real")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(t))):
            raise ValueError("trajectory contains non-finite entries")
        t = t.copy()
        t.setflags(write=False)
        v = np.array(v, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.size > 2:
            d = np.diff(t)
            uni = bool(np.allclose(d, d[0], rtol=1e-9, atol=0))
        else:
            uni = True
        object.__setattr__(self, "uniform", uni)

    @classmethod
    def from_fields(cls, times: Sequence[float], fields: Iterable[PhysicalField]) -> "TrajectoryField":
        fields = list(fields)
        if not fields:
            raise ValueError("empty trajectory")
        grid = fields[0].grid
        return cls(grid, np.asarray(times, float), np.stack([f.values for f in fields]))

    @classmethod
    def from_coeffs(cls, grid: Grid2D, times, coeffs: np.ndarray) -> "TrajectoryField":
        vals = sfft.ifft2(np.asarray(coeffs), axes=(-2, -1), norm="ortho").real
        return cls(grid, np.asarray(times, float), vals)

    @classmethod
    def constant(cls, f: PhysicalField, times) -> "TrajectoryField":
        times = np.atleast_1d(np.asarray(times, float))
        return cls(f.grid, times, np.broadcast_to(f.values, (times.size,) + f.grid.shape))

    @property
    def nt(self) -> int:
        return self.times.size

    @cached_property
    def coeffs(self) -> np.ndarray:
        c = sfft.fft2(self.values, axes=(-2, -1), norm="ortho")
        c[:, self.grid.nyquist_mask] = 0.0
        c.setflags(write=False)
        return c

    def field(self, i: int) -> PhysicalField:
        return PhysicalField(self.grid, self.values[i])

    def __sub__(self, other: "TrajectoryField") -> "TrajectoryField":
        _check_compatible(self, other)
        return TrajectoryField(self.grid, self.times, self.values - other.values)

    def __add__(self, other: "TrajectoryField") -> "TrajectoryField":
        _check_compatible(self, other)
        return TrajectoryField(self.grid, self.times, self.values + other.values)

    def scaled(self, c: float) -> "TrajectoryField":
        return TrajectoryField(self.grid, self.times, self.values * c)


def _check_compatible(a: TrajectoryField, b: TrajectoryField) -> None:
    if a.grid != b.grid or a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories live on different grids or time samples")


def _as_traj(u) -> TrajectoryField:
    if isinstance(u, TrajectoryField):
        return u
    if isinstance(u, PhysicalField):
        return TrajectoryField(u.grid, np.zeros(1), u.values[None])
    raise TypeError(f"expected a PhysicalField or TrajectoryField, got {type(u).__name__}")


# ----------------------------------------------------------- quadrature ---

def time_weights(times: np.ndarray) -> np.ndarray:
    """Trapezoid weights; a single sample gets weight 1 (point evaluation)."""
    t = np.asarray(times, float)
    if t.size == 1:
        return np.ones(1)
    w = np.zeros(t.size)
    d = np.diff(t)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _lp_reduce(a: np.ndarray, axis: int, p: float, w: np.ndarray) -> np.ndarray:
    if np.isinf(p):
        return a.max(axis=axis)
    shape = [1] * a.ndim
    shape[axis] = -1
    w = w.reshape(shape)
    if p == 1:
        return np.sum(w * a, axis=axis)
    # scale by the max so tiny or huge entries neither underflow nor overflow
    m = a.max(axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    r = a / safe
    inner = np.sum(w * r * r, axis=axis) if p == 2 else np.sum(w * r**p, axis=axis)
    return inner ** (1.0 / p) * np.squeeze(safe, axis=axis)


def mixed_lebesgue(values: np.ndarray, grid: Grid2D, times: np.ndarray,
                   order: Sequence[str], exponents: Sequence[float]) -> float:
    """Nested norm ``L^{e0}_{order[0]} L^{e1}_{order[1]} L^{e2}_{order[2]}``.

    ``values`` has axes (t, x, y); the first entry of ``order`` is the
    outermost variable.
    """
    order = tuple(order)
    if sorted(order) != ["t", "x", "y"]:
        raise ValueError(f"variable order must be a permutation of (t, x, y), got {order}")
    exps = tuple(float(e) for e in exponents)
    if len(exps) != 3 or any(e < 1 for e in exps):
        raise ValueError("three exponents >= 1 (or inf) are required")
    a = np.abs(np.asarray(values))
    if a.ndim == 2:
        a = a[None]
    weights = {
        "t": time_weights(times),
        "x": np.full(grid.Nx, grid.dx),
        "y": np.full(grid.Ny, grid.dy),
    }
    live = ["t", "x", "y"]
    for var, p in zip(reversed(order), reversed(exps)):
        ax = live.index(var)
        a = _lp_reduce(a, ax, p, weights[var])
        live.pop(ax)
    return float(a)


def mixed_norm(traj, spec: "NormSpec") -> float:
    if spec.kind != "mixed_lebesgue":
        raise ValueError("mixed_norm needs a mixed_lebesgue spec")
    t = _as_traj(traj)
    return mixed_lebesgue(t.values, t.grid, t.times, spec.order, spec.exponents)


# ----------------------------------------------------- multiplier chains ---

def _axis_abs(grid: Grid2D, axis: str) -> np.ndarray:
    XI, LAM = grid.mesh()
    return np.abs(np.broadcast_to(XI if axis == "x" else LAM, grid.shape))


def deriv_symbol(grid: Grid2D, axis: str, order: float, dotted: bool) -> np.ndarray:
    v = _axis_abs(grid, axis)
    if not dotted:
        return (1.0 + v) ** order
    if order == 0:
        return np.ones(grid.shape)
    with np.errstate(divide="ignore"):
        out = v**order
    return np.where(v == 0, 0.0, out)


def _check_zero_line(grid: Grid2D, coeffs: np.ndarray, axis: str) -> None:
    v = _axis_abs(grid, axis)
    line = v == 0
    total = float(np.sum(np.abs(coeffs) ** 2))
    if total > 0 and float(np.sum(np.abs(coeffs[..., line]) ** 2)) > 1e-13 * total:
        raise ValueError(
            f"negative homogeneous order on {axis}: the zero-frequency line carries energy"
        )


def sobolev_symbol(grid: Grid2D, sigma: float, gamma: float, dotted_x: bool = False,
                   dotted_y: bool = False) -> np.ndarray:
    return deriv_symbol(grid, "x", sigma, dotted_x) * deriv_symbol(grid, "y", gamma, dotted_y)


def _to_physical(grid: Grid2D, coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifft2(coeffs, axes=(-2, -1), norm="ortho").real


def _apply(grid: Grid2D, coeffs: np.ndarray, symbol: np.ndarray | None, alpha: float = 0.0,
           weight_kind: str = "bracket") -> np.ndarray:
    c = coeffs if symbol is None else coeffs * symbol
    vals = _to_physical(grid, c)
    if alpha:
        vals = vals * weight_values(grid.y, alpha, weight_kind)[None, :]
    return vals


def _spatial_l2(grid: Grid2D, vals: np.ndarray) -> np.ndarray:
    """L2(dx dy) norm over the last two axes."""
    return np.sqrt(grid.cell_area * np.sum(vals * vals, axis=(-2, -1)))


def _coeffs_of(u) -> tuple[Grid2D, np.ndarray]:
    if isinstance(u, SpectralField):
        return u.grid, np.asarray(u.coeffs)
    if isinstance(u, PhysicalField):
        return u.grid, np.asarray(forward_transform(u).coeffs)
    if isinstance(u, TrajectoryField):
        return u.grid, u.coeffs
    raise TypeError(f"unsupported field type {type(u).__name__}")


def l2_norm(u) -> float:
    grid, c = _coeffs_of(u)
    return float(np.sqrt(grid.cell_area) * np.linalg.norm(c))


def weighted_sobolev_norm(f, sigma: float = 0.0, gamma: float = 0.0, alpha: float = 0.0,
                          dotted_x: bool = False, dotted_y: bool = False,
                          weight_kind: str = "bracket"):
    """``|| <y>^alpha D_x^sigma D_y^gamma f ||_2``; undotted axes use ``(1 + D)``.

    For a trajectory the value is returned per time sample.
    """
    grid, c = _coeffs_of(f)
    if dotted_x and sigma < 0:
        _check_zero_line(grid, c, "x")
    if dotted_y and gamma < 0:
        _check_zero_line(grid, c, "y")
    sym = sobolev_symbol(grid, sigma, gamma, dotted_x, dotted_y)
    vals = _apply(grid, c, sym, alpha, weight_kind)
    out = _spatial_l2(grid, vals)
    return float(out) if np.ndim(out) == 0 else out


def multiplier_norm(f, symbol: np.ndarray, alpha: float = 0.0, weight_kind: str = "bracket"):
    """``|| <y>^alpha m(D) f ||_2`` for an arbitrary symbol array ``m``."""
    grid, c = _coeffs_of(f)
    if symbol.shape != grid.shape:
        raise ValueError("symbol shape does not match the grid")
    out = _spatial_l2(grid, _apply(grid, c, symbol, alpha, weight_kind))
    return float(out) if np.ndim(out) == 0 else out


def h2_norm(f):
    """``||f|| + ||D_x^2 f|| + ||D_y^2 f||``."""
    grid, c = _coeffs_of(f)
    xi2 = _axis_abs(grid, "x") ** 2
    lam2 = _axis_abs(grid, "y") ** 2
    total = 0.0
    for sym in (None, xi2, lam2):
        total = total + _spatial_l2(grid, _apply(grid, c, sym))
    return float(total) if np.ndim(total) == 0 else total


# ------------------------------------------------------------- records ---

@dataclass(frozen=True)
class NormRecord:
    norm_id: str
    params: dict
    value: float
    components: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


# -------------------------------------------------------------- Z0 norm ---

def z0_exponents(eps: float = EPS) -> dict[str, float]:
    return {
        "alpha": plus(0.5, eps),
        "gamma0": plus(0.5, eps),
        "sigma0": plus(0.5, eps),
        "gamma3": plus(0.5, eps),
        "sigma1": plus(0.25, eps),
        "sigma2": plus(0.75, eps),
        "sigma3": plus(0.75, eps),
        "sigma4": plus(1.0, eps),
        "gamma1": plus(1.0, eps),
        "gamma4": plus(1.0, eps),
        "gamma2": plus(1.5, eps),
    }


@dataclass(frozen=True)
class Z0Result:
    value: float
    components: dict

    def record(self, eps: float) -> NormRecord:
        return NormRecord("z0", {"eps": eps}, self.value, dict(self.components))


def _split(grid: Grid2D, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    XI, LAM = grid.mesh()
    q = np.broadcast_to(q_mask(XI, LAM), grid.shape)
    return np.where(q, c, 0.0), np.where(q, 0.0, c)


def z0_norm(f, eps: float = EPS) -> Z0Result:
    """Sum of the seven data-norm components, with the breakdown."""
    grid, c = _coeffs_of(f)
    if c.ndim != 2:
        raise ValueError("z0_norm takes a single field")
    _check_zero_line(grid, c, "x")
    e = z0_exponents(eps)
    a = e["alpha"]
    high, low = _split(grid, c)
    hs = SpectralField(grid, high)
    ls = SpectralField(grid, low)
    comps = {
        "h2": h2_norm(SpectralField(grid, c)),
        "low_w_sigma0_gamma0": weighted_sobolev_norm(ls, -e["sigma0"], e["gamma0"], a, dotted_x=True),
        "low_w_sigma1_gamma1": weighted_sobolev_norm(ls, -e["sigma1"], e["gamma1"], a, dotted_x=True),
        "low_sigma2_gamma2": weighted_sobolev_norm(ls, -e["sigma2"], e["gamma2"], 0.0, dotted_x=True),
        "high_w_sigma3_gamma3": weighted_sobolev_norm(hs, e["sigma3"], e["gamma3"], a),
        "high_w_gamma4": weighted_sobolev_norm(hs, 0.0, e["gamma4"], a),
        "high_w_sigma4": weighted_sobolev_norm(hs, e["sigma4"], 0.0, a),
    }
    return Z0Result(float(sum(comps.values())), comps)


# ------------------------------------------------------------- X norms ---

@dataclass(frozen=True)
class XParams:
    sigma1: float = 0.75 + EPS
    gamma1: float = 0.5 + EPS
    sigma2: float = 1.0 + EPS
    gamma2: float = 1.0 + EPS
    alpha: float = 0.5 + EPS

    @classmethod
    def from_eps(cls, eps: float = EPS) -> "XParams":
        return cls(plus(0.75, eps), plus(0.5, eps), plus(1.0, eps), plus(1.0, eps), plus(0.5, eps))


def _support_energy(grid: Grid2D, c: np.ndarray, keep_high: bool) -> float:
    XI, LAM = grid.mesh()
    q = np.broadcast_to(q_mask(XI, LAM), grid.shape)
    bad = ~q if keep_high else q
    total = float(np.sum(np.abs(c) ** 2))
    if total == 0:
        return 0.0
    return float(np.sum(np.abs(c[..., bad]) ** 2)) / total


def x_norm(traj, i: int, params: XParams = XParams(), check_support: bool = True) -> float:
    """The ``i``-th solution-space norm (``1 <= i <= 12``)."""
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= 12:
        raise ValueError(f"norm index must be in 1..12, got {i!r}")
    traj = _as_traj(traj)
    grid = traj.grid
    c = traj.coeffs
    if check_support and i in (5, 6, 7, 8) and _support_energy(grid, c, True) > SUPPORT_TOL:
        raise ValueError(f"norm {i} needs a trajectory supported in |xi| >= 1")
    p = params
    XI, LAM = grid.mesh()
    XI = np.broadcast_to(XI, grid.shape)
    LAM = np.broadcast_to(LAM, grid.shape)
    sob = lambda s, g: sobolev_symbol(grid, s, g)  # noqa: E731
    if i == 1:
        return float(np.max(h2_norm(traj)))
    if i in (2, 3, 4):
        sym = {2: sob(p.sigma1, p.gamma1), 3: sob(0.0, p.gamma2), 4: sob(p.sigma2, 0.0)}[i]
        vals = _apply(grid, c, sym, p.alpha)
        return float(np.max(_spatial_l2(grid, vals)))
    if i in (5, 6, 7, 8):
        proj = pplus_mask(XI, LAM) if i in (5, 6) else ~pplus_mask(XI, LAM)
        inner = XI**2 + LAM**2 if i in (5, 7) else sob(p.sigma1, p.gamma1)
        sym = 1j * XI * proj * inner
        vals = _apply(grid, c, sym)
        order = ("x", "t", "y") if i in (5, 6) else ("y", "t", "x")
        return mixed_lebesgue(vals, grid, traj.times, order, (np.inf, 2, 2))
    if i in (9, 10):
        vals = _apply(grid, c, None, p.alpha)
        order = ("y", "x", "t") if i == 9 else ("x", "y", "t")
        return mixed_lebesgue(vals, grid, traj.times, order, (2, np.inf, np.inf))
    sym = 1j * (LAM if i == 11 else XI)
    vals = _apply(grid, c, sym, p.alpha)
    return mixed_lebesgue(vals, grid, traj.times, ("t", "x", "y"), (2, np.inf, np.inf))


def x_norms(traj, params: XParams = XParams(), indices: Iterable[int] = range(1, 13),
            check_support: bool = True) -> dict[int, float]:
    return {i: x_norm(traj, i, params, check_support) for i in indices}


def x_norm_max(traj, params: XParams = XParams(), check_support: bool = True) -> tuple[float, dict]:
    comps = x_norms(traj, params, check_support=check_support)
    return max(comps.values()), comps


Y_INDICES = (1, 3, 9, 10, 11, 12)


def y_norm_set(traj, params: XParams = XParams(), check_support: bool = True) -> tuple[float, dict]:
    """Max over norms 1, 3, 9, 10, 11, 12 for a low-frequency trajectory."""
    traj = _as_traj(traj)
    if check_support and _support_energy(traj.grid, traj.coeffs, False) > SUPPORT_TOL:
        raise ValueError("the low-frequency norm needs a trajectory supported in |xi| < 1")
    comps = x_norms(traj, params, Y_INDICES, check_support=False)
    return max(comps.values()), comps


def x0_norm(g, params: XParams = XParams()) -> tuple[float, dict]:
    """Max of norms 1..4 (single time) applied to the high part ``Q g``."""
    grid, c = _coeffs_of(g)
    high, _ = _split(grid, c)
    traj = TrajectoryField.from_coeffs(grid, [0.0], high[None])
    comps = x_norms(traj, params, (1, 2, 3, 4))
    return max(comps.values()), comps


def y0_exponents(eps: float = EPS) -> list[tuple[float, float, bool]]:
    """``(x order, y order, weighted)`` of the three derivative components."""
    return [
        (-plus(0.25, eps), plus(1.0, eps), True),
        (-plus(0.5, eps), plus(0.5, eps), True),
        (-plus(0.75, eps), plus(1.5, eps), False),
    ]


def y0_norm(g, eps: float = EPS, alpha: float | None = None) -> tuple[float, dict]:
    """Max of the four low-frequency data components, applied to ``(Id - Q) g``."""
    grid, c = _coeffs_of(g)
    _, low = _split(grid, c)
    a = plus(0.5, eps) if alpha is None else alpha
    ls = SpectralField(grid, low)
    comps = {"l2": l2_norm(ls)}
    for sx, gy, weighted in y0_exponents(eps):
        key = f"Dx^{sx:g} Dy^{gy:g}" + (" weighted" if weighted else "")
        comps[key] = weighted_sobolev_norm(ls, sx, gy, a if weighted else 0.0,
                                           dotted_x=True, dotted_y=True)
    return max(comps.values()), comps


# -------------------------------------------------------- maximal norm ---

def cell_sup(coord: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Max of ``values`` over unit cells ``[s, s+1)`` of the sorted ``coord``."""
    cells = np.floor(coord + 1e-12).astype(int)
    starts = np.flatnonzero(np.r_[True, np.diff(cells) != 0])
    return np.maximum.reduceat(values, starts)


def lattice_maximal_norm(traj, direction: Literal["y_outer", "x_outer"] = "y_outer",
                         weight_alpha: float = 0.0, t_window: tuple[float, float] | None = None,
                         weight_kind: str = "bracket") -> float:
    """``(sum_s sup_cell |<y>^alpha u|^2)^(1/2)`` over unit cells of the outer variable.

    The supremum runs over every time sample (or those inside ``t_window``)
    and over the other spatial variable.
    """
    traj = _as_traj(traj)
    grid = traj.grid
    if direction not in ("y_outer", "x_outer"):
        raise ValueError(f"direction must be 'y_outer' or 'x_outer', got {direction!r}")
    L = grid.Ly if direction == "y_outer" else grid.Lx
    if 2 * L < 1:
        raise ValueError("unit cells do not fit in the domain")
    vals = np.abs(traj.values)
    if t_window is not None:
        sel = (traj.times >= t_window[0]) & (traj.times <= t_window[1])
        if not np.any(sel):
            raise ValueError("no time samples inside the window")
        vals = vals[sel]
    if weight_alpha:
        vals = vals * weight_values(grid.y, weight_alpha, weight_kind)[None, None, :]
    if direction == "y_outer":
        profile = vals.max(axis=(0, 1))
        coord = grid.y
    else:
        profile = vals.max(axis=(0, 2))
        coord = grid.x
    sups = cell_sup(coord, profile)
    return float(np.sqrt(np.sum(sups**2)))


# -------------------------------------------------------------- specs ---

@dataclass(frozen=True)
class NormSpec:
    """Declarative description of one norm; see :func:`evaluate`."""

    kind: str
    order: tuple = ("t", "x", "y")
    exponents: tuple = (2.0, 2.0, 2.0)
    sigma: float = 0.0
    gamma: float = 0.0
    alpha: float = 0.0
    dotted_x: bool = False
    dotted_y: bool = False
    eps: float = EPS
    index: int = 1
    direction: str = "y_outer"

    KINDS = ("mixed_lebesgue", "weighted_sobolev", "z0", "x_i", "y_set", "x0", "y0",
             "lattice_maximal")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0 <= self.alpha <= 2:
            raise ValueError("weight exponent must lie in [0, 2]")
        if any(float(e) < 1 for e in self.exponents):
            raise ValueError("Lebesgue exponents must be >= 1")


def evaluate(spec: NormSpec, u) -> NormRecord:
    params = {k: v for k, v in asdict(spec).items() if k != "kind"}
    comps: dict = {}
    if spec.kind == "mixed_lebesgue":
        val = mixed_norm(u, spec)
    elif spec.kind == "weighted_sobolev":
        val = weighted_sobolev_norm(u, spec.sigma, spec.gamma, spec.alpha, spec.dotted_x, spec.dotted_y)
        val = float(np.max(val))
    elif spec.kind == "z0":
        res = z0_norm(u, spec.eps)
        val, comps = res.value, res.components
    elif spec.kind == "x_i":
        val = x_norm(u, spec.index, XParams.from_eps(spec.eps))
    elif spec.kind == "y_set":
        val, comps = y_norm_set(u, XParams.from_eps(spec.eps))
    elif spec.kind == "x0":
        val, comps = x0_norm(u, XParams.from_eps(spec.eps))
    elif spec.kind == "y0":
        val, comps = y0_norm(u, spec.eps)
    else:
        val = lattice_maximal_norm(u, spec.direction, spec.alpha)
    return NormRecord(spec.kind, params, float(val), {str(k): float(v) for k, v in comps.items()})
