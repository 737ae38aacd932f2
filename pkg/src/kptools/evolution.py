"""Linear flow, Duhamel quadrature, the split Picard solver and an
integrating-factor Runge-Kutta reference integrator for

    u_t + u_xxx + gamma * dx^{-1} u_yy + beta * N(u) = 0,

with ``N(u) = (u^2)_x`` (KP) or ``N(u) = u^2 u_x = (u^3/3)_x`` (modified KP).
``gamma = -1`` is KP-I.  In Fourier variables the equation reads
``u_hat_t = i phi u_hat - beta * (N(u))^``, so the mild form is

    u(t) = U(t) u0 - beta * int_0^t U(t - s) N(u(s)) ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
import scipy.fft as sfft

from .multipliers import EPS, q_mask
from .norms import TrajectoryField, XParams, x_norm_max, y_norm_set
from .spectral import (
    DispersionSign,
    Grid2D,
    PhysicalField,
    SpectralField,
    apply_multiplier,
    dispersion_phi,
    forward_transform,
)

__all__ = [
    "DivergenceError",
    "PicardConfig",
    "PicardState",
    "ContractionReport",
    "propagate",
    "propagator_symbol",
    "duhamel",
    "cumulative_duhamel",
    "nonlinear_term",
    "picard_solve",
    "reference_integrate",
    "pde_residual",
    "pde_residual_series",
    "rescale_field",
    "ScalingParams",
    "linear_trajectory",
    "write_trajectory_csv",
    "write_spectral_dump",
    "read_spectral_dump",
]

Nonlinearity = Literal["kp_quadratic", "mkp_cubic"]


class DivergenceError(RuntimeError):
    """Iteration or time stepping blew up; ``history`` holds the norms seen so far."""

    def __init__(self, message: str, history: Sequence[float] = ()):
        super().__init__(message)
        self.history = list(history)


# -------------------------------------------------------------- linear ---

def _zero_mean_check(grid: Grid2D, coeffs: np.ndarray, tol: float = 1e-13) -> None:
    col = coeffs[..., grid.xi == 0, :]
    total = float(np.sum(np.abs(coeffs) ** 2))
    if total > 0 and float(np.sum(np.abs(col) ** 2)) > tol * total:
        raise ValueError("field has energy on the xi = 0 column (nonzero x-mean)")


def phi_array(grid: Grid2D, sign: DispersionSign | int = DispersionSign.KP_I) -> np.ndarray:
    XI, LAM = grid.mesh()
    return np.broadcast_to(dispersion_phi(XI, LAM, sign), grid.shape)


def propagator_symbol(grid: Grid2D, t: float, sign: DispersionSign | int = DispersionSign.KP_I) -> np.ndarray:
    out = np.exp(1j * t * phi_array(grid, sign))
    return np.where(grid.nyquist_mask, 0.0, out)


def propagate(F: SpectralField, t: float, sign: DispersionSign | int = DispersionSign.KP_I) -> SpectralField:
    """``U(t) F``: multiply every coefficient by ``exp(i t phi)``."""
    _zero_mean_check(F.grid, F.coeffs)
    return apply_multiplier(F, lambda xi, lam: np.exp(1j * t * dispersion_phi(xi, lam, sign)))


def linear_trajectory(F: SpectralField, times, sign=DispersionSign.KP_I) -> TrajectoryField:
    _zero_mean_check(F.grid, F.coeffs)
    times = np.asarray(times, float)
    phi = phi_array(F.grid, sign)
    coeffs = np.exp(1j * times[:, None, None] * phi[None]) * F.coeffs[None]
    coeffs[:, F.grid.nyquist_mask] = 0.0
    return TrajectoryField.from_coeffs(F.grid, times, coeffs)


# ------------------------------------------------------------- Duhamel ---

def _cumulative_weights_apply(g: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order cumulative integrals ``int_0^{t_n} g`` on a uniform grid.

    Even ``n`` use composite Simpson; odd ``n >= 3`` finish with the 3/8 rule;
    ``n = 1`` uses the quadratic through the first three nodes.
    """
    M = g.shape[0] - 1
    out = np.zeros_like(g)
    if M < 2:
        raise ValueError("at least two intervals are needed")
    out[1] = h * (5.0 * g[0] + 8.0 * g[1] - g[2]) / 12.0
    for n in range(2, M + 1, 2):
        out[n] = out[n - 2] + h / 3.0 * (g[n - 2] + 4.0 * g[n - 1] + g[n])
    for n in range(3, M + 1, 2):
        out[n] = out[n - 3] + 3.0 * h / 8.0 * (g[n - 3] + 3.0 * g[n - 2] + 3.0 * g[n - 1] + g[n])
    return out


def cumulative_duhamel(forcing: np.ndarray, times: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``int_0^{t_n} U(t_n - s) f(s) ds`` for every node of a uniform grid.

    ``forcing`` holds spectral coefficients with shape (M+1, Nx, Ny) and
    ``times[0]`` must be 0.  The integrand is moved to the interaction picture
    ``U(-s) f(s)``, integrated cumulatively, and pushed forward by ``U(t_n)``.
    """
    times = np.asarray(times, float)
    if times[0] != 0.0:
        raise ValueError("Duhamel nodes must start at t = 0")
    h = times[1] - times[0]
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=0):
        raise ValueError("Duhamel nodes must be uniformly spaced")
    back = np.exp(-1j * times[:, None, None] * phi[None])
    acc = _cumulative_weights_apply(back * forcing, h)
    return np.conj(back) * acc


def _simpson_weights(M: int) -> np.ndarray:
    w = np.zeros(M + 1)
    if M % 2 == 0:
        w[0:M:2] += 1.0
        w[1:M:2] += 4.0
        w[2:M + 1:2] += 1.0
        return w / 3.0
    # Simpson on the first M-3 intervals and the 3/8 rule on the last three
    w[: M - 2] = _simpson_weights(M - 3)
    w[M - 3:] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


def duhamel(fs, t: float, sign: DispersionSign | int = DispersionSign.KP_I, M: int = 64) -> SpectralField:
    """Composite Simpson value of ``int_0^t U(t - s) f(s) ds``.

    ``fs`` is either a :class:`TrajectoryField` (interpolated in time with a
    cubic spline when the nodes do not coincide with its samples) or a
    callable ``s -> PhysicalField | SpectralField``.
    """
    if M < 8:
        raise ValueError("Duhamel quadrature needs M >= 8 nodes")
    if t < 0:
        raise ValueError("Duhamel integral is taken forward in time")
    nodes = np.linspace(0.0, t, M + 1)
    if isinstance(fs, TrajectoryField):
        grid = fs.grid
        if nodes[0] < fs.times[0] - 1e-14 or nodes[-1] > fs.times[-1] + 1e-14:
            raise ValueError("t lies outside the forcing's time span")
        coeffs = _sample_trajectory(fs, nodes)
    else:
        samples = [fs(s) for s in nodes]
        samples = [forward_transform(s) if isinstance(s, PhysicalField) else s for s in samples]
        grid = samples[0].grid
        coeffs = np.stack([s.coeffs for s in samples])
    if t == 0:
        return SpectralField(grid, np.zeros(grid.shape, complex))
    phi = phi_array(grid, sign)
    w = _simpson_weights(M) * (t / M)
    acc = np.zeros(grid.shape, complex)
    for wi, si, ci in zip(w, nodes, coeffs):
        acc += wi * np.exp(1j * (t - si) * phi) * ci
    return SpectralField(grid, acc)


def _sample_trajectory(fs: TrajectoryField, nodes: np.ndarray) -> np.ndarray:
    coeffs = fs.coeffs
    if fs.nt == nodes.size and np.allclose(fs.times, nodes, rtol=0, atol=1e-14):
        return np.asarray(coeffs)
    if fs.nt == 1:
        return np.broadcast_to(coeffs[0], (nodes.size,) + fs.grid.shape)
    from scipy.interpolate import CubicSpline

    if fs.nt < 4:
        idx = np.clip(np.searchsorted(fs.times, nodes) - 1, 0, fs.nt - 2)
        t0 = fs.times[idx]
        t1 = fs.times[idx + 1]
        lam = ((nodes - t0) / (t1 - t0))[:, None, None]
        return (1 - lam) * coeffs[idx] + lam * coeffs[idx + 1]
    spline = CubicSpline(fs.times, coeffs, axis=0)
    return spline(nodes)


# ----------------------------------------------------------- nonlinear ---

def dealias_mask(grid: Grid2D) -> np.ndarray:
    """Keep ``|m| < Nx/3`` and ``|n| < Ny/3`` (two-thirds rule)."""
    keep_x = np.abs(grid.m) < grid.Nx / 3.0
    keep_y = np.abs(grid.n) < grid.Ny / 3.0
    return keep_x[:, None] & keep_y[None, :]


def nonlinear_term(w: SpectralField, v: SpectralField, kind: Nonlinearity = "kp_quadratic",
                   projections: bool = True) -> tuple[SpectralField, SpectralField]:
    """``(Q N(w+v), (Id-Q) N(w+v))`` with products dealiased by the 2/3 rule.

    With ``projections=False`` the first entry is the unprojected term and
    the second is zero.
    """
    grid = w.grid
    total = _physical_product_term(grid, np.asarray(w.coeffs) + np.asarray(v.coeffs), kind)
    if not projections:
        return SpectralField(grid, total), SpectralField(grid, np.zeros(grid.shape, complex))
    XI, LAM = grid.mesh()
    q = np.broadcast_to(q_mask(XI, LAM), grid.shape)
    return SpectralField(grid, np.where(q, total, 0.0)), SpectralField(grid, np.where(q, 0.0, total))


def _physical_product_term(grid: Grid2D, coeffs: np.ndarray, kind: Nonlinearity) -> np.ndarray:
    """Ortho coefficients of ``d/dx P(u^2)`` or ``d/dx P(P(u^2) u)/3`` where ``P`` dealiases.

    With unitary transforms, the coefficient array of the pointwise product of
    two sampled fields is ``fft(u*v, ortho)``; no extra factors are needed.
    """
    mask = dealias_mask(grid)
    u = sfft.ifft2(coeffs * mask, axes=(-2, -1), norm="ortho").real
    if kind == "kp_quadratic":
        inner = sfft.fft2(u * u, axes=(-2, -1), norm="ortho") * mask
    elif kind == "mkp_cubic":
        sq = sfft.ifft2(sfft.fft2(u * u, axes=(-2, -1), norm="ortho") * mask,
                        axes=(-2, -1), norm="ortho").real
        inner = sfft.fft2(sq * u, axes=(-2, -1), norm="ortho") * mask / 3.0
    else:
        raise ValueError(f"unknown nonlinearity {kind!r}")
    XI, _ = grid.mesh()
    out = 1j * XI * inner
    out[..., grid.nyquist_mask] = 0.0
    return out


# -------------------------------------------------------------- Picard ---

@dataclass(frozen=True)
class PicardConfig:
    T: float = 0.25
    beta: float = 1.0
    max_iter: int = 30
    tol: float = 1e-10
    M: int = 256
    eps: float = EPS
    nonlinearity: Nonlinearity = "kp_quadratic"
    sign: int = int(DispersionSign.KP_I)
    divergence_factor: float = 1e6

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("solver.T must be positive")
        if not self.tol > 0:
            raise ValueError("solver.tol must be positive")
        if int(self.M) != self.M or self.M < 8:
            raise ValueError("solver.M must be an integer >= 8")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("solver.max_iter must be a positive integer")
        if self.eps <= 0:
            raise ValueError("solver.epsilon must be positive")
        if self.nonlinearity not in ("kp_quadratic", "mkp_cubic"):
            raise ValueError(f"solver.nonlinearity must be kp_quadratic or mkp_cubic, got {self.nonlinearity!r}")
        if self.sign not in (-1, 1):
            raise ValueError("solver.sign must be -1 (KP-I) or +1 (KP-II)")


@dataclass(frozen=True)
class PicardState:
    n: int
    w: TrajectoryField
    v: TrajectoryField
    x_norm_w: float
    y_norm_v: float
    diff: float


@dataclass
class ContractionReport:
    iterations: int = 0
    converged: bool = False
    x_norms: list = field(default_factory=list)
    y_norms: list = field(default_factory=list)
    diffs: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    split_leak: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        finite = [r for r in self.ratios if np.isfinite(r)]
        return max(finite) if finite else 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "x_norms": list(map(float, self.x_norms)),
            "y_norms": list(map(float, self.y_norms)),
            "diffs": list(map(float, self.diffs)),
            "ratios": list(map(float, self.ratios)),
            "max_ratio": float(self.max_ratio),
            "split_leak": list(map(float, self.split_leak)),
        }


def _split_masks(grid: Grid2D) -> np.ndarray:
    XI, LAM = grid.mesh()
    return np.broadcast_to(q_mask(XI, LAM), grid.shape)


def _leak(coeffs: np.ndarray, bad: np.ndarray) -> float:
    total = float(np.sum(np.abs(coeffs) ** 2))
    return 0.0 if total == 0 else float(np.sum(np.abs(coeffs[..., bad]) ** 2)) / total


def picard_solve(u0: PhysicalField, cfg: PicardConfig = PicardConfig(),
                 keep_states: bool = False) -> tuple[TrajectoryField, ContractionReport]:
    """Fixed-point iteration of the split mild formulation on ``[0, T]``.

    ``w = Q u`` and ``v = (Id-Q) u`` are iterated jointly; iterate 0 is the
    linear flow.  The stopping rule compares the successive difference, in
    the high-frequency solution norm for ``w`` and the low-frequency norm for
    ``v``, with ``tol`` times the current size.
    """
    grid = u0.grid
    F0 = forward_transform(u0)
    c0 = np.asarray(F0.coeffs)
    _zero_mean_check(grid, c0)
    q = _split_masks(grid)
    times = np.linspace(0.0, cfg.T, cfg.M + 1)
    phi = phi_array(grid, cfg.sign)
    prop = np.exp(1j * times[:, None, None] * phi[None])
    prop[:, grid.nyquist_mask] = 0.0
    lin = prop * c0[None]
    lin_w = np.where(q, lin, 0.0)
    lin_v = np.where(q, 0.0, lin)
    params = XParams.from_eps(cfg.eps)

    def sizes(cw, cv):
        tw = TrajectoryField.from_coeffs(grid, times, cw)
        tv = TrajectoryField.from_coeffs(grid, times, cv)
        xw = x_norm_max(tw, params, check_support=False)[0]
        yv = y_norm_set(tv, params, check_support=False)[0]
        return tw, tv, xw, yv

    report = ContractionReport()
    cw, cv = lin_w, lin_v
    _, _, xw, yv = sizes(cw, cv)
    report.x_norms.append(xw)
    report.y_norms.append(yv)
    initial = max(xw, yv)
    prev_diff = None
    states = []
    for n in range(1, cfg.max_iter + 1):
        forcing = -cfg.beta * _physical_product_term(grid, cw + cv, cfg.nonlinearity) if cfg.beta else None
        if forcing is None:
            new_w, new_v = lin_w, lin_v
        else:
            D = cumulative_duhamel(forcing, times, phi)
            D[:, grid.nyquist_mask] = 0.0
            new_w = lin_w + np.where(q, D, 0.0)
            new_v = lin_v + np.where(q, 0.0, D)
        leak = max(_leak(new_w, ~q), _leak(new_v, q))
        report.split_leak.append(leak)
        tw, tv, xw, yv = sizes(new_w, new_v)
        dw = TrajectoryField.from_coeffs(grid, times, new_w - cw)
        dv = TrajectoryField.from_coeffs(grid, times, new_v - cv)
        diff = max(x_norm_max(dw, params, check_support=False)[0],
                   y_norm_set(dv, params, check_support=False)[0])
        current = max(xw, yv)
        report.x_norms.append(xw)
        report.y_norms.append(yv)
        report.diffs.append(diff)
        if prev_diff is not None:
            report.ratios.append(diff / prev_diff if prev_diff > 0 else 0.0)
        report.iterations = n
        if keep_states:
            states.append(PicardState(n, tw, tv, xw, yv, diff))
        if not np.isfinite(current) or current > cfg.divergence_factor * max(initial, 1e-300):
            raise DivergenceError(f"Picard iterate {n} grew beyond the divergence threshold",
                                  [max(a, b) for a, b in zip(report.x_norms, report.y_norms)])
        cw, cv = new_w, new_v
        prev_diff = diff
        if diff <= cfg.tol * current or current == 0.0:
            report.converged = True
            break
    u = TrajectoryField.from_coeffs(grid, times, cw + cv)
    if keep_states:
        report.states = states  # type: ignore[attr-defined]
    return u, report


# ----------------------------------------------------------- reference ---

def reference_integrate(u0: PhysicalField, T: float, dt: float,
                        sign: DispersionSign | int = DispersionSign.KP_I, beta: float = 1.0,
                        nonlinearity: Nonlinearity = "kp_quadratic",
                        sample_times: Sequence[float] | None = None,
                        stability_limit: float = 2.5) -> TrajectoryField:
    """Integrating-factor RK4 in the moving frame ``v_hat = exp(-i t phi) u_hat``.

    The linear part is exact, so the step only has to resolve the nonlinear
    term: ``dt * max|xi| * |beta| * max|u|^p`` must stay below
    ``stability_limit`` (``p = 1`` for KP, ``2`` for modified KP).
    """
    grid = u0.grid
    c0 = np.asarray(forward_transform(u0).coeffs)
    _zero_mean_check(grid, c0)
    n_steps = int(round(T / dt))
    if n_steps < 1 or not math.isclose(n_steps * dt, T, rel_tol=1e-9):
        raise ValueError("T must be a positive integer multiple of dt")
    power = 1 if nonlinearity == "kp_quadratic" else 2
    umax = float(np.max(np.abs(u0.values)))
    stiff = dt * float(np.max(np.abs(grid.xi))) * abs(beta) * umax**power
    if stiff > stability_limit:
        raise ValueError(f"time step too large for the nonlinear term (scaled step {stiff:.3g})")
    if sample_times is None:
        sample_times = np.linspace(0.0, T, n_steps + 1)
    sample_times = np.asarray(sample_times, float)
    steps_at = np.rint(sample_times / dt).astype(int)
    if np.any(np.abs(steps_at * dt - sample_times) > 1e-9 * max(T, 1.0)) or np.any(steps_at > n_steps):
        raise ValueError("sample times must be step multiples inside [0, T]")
    phi = phi_array(grid, sign)

    def rhs(t: float, v: np.ndarray) -> np.ndarray:
        if not beta:
            return np.zeros_like(v)
        e = np.exp(1j * t * phi)
        return -beta * np.conj(e) * _physical_product_term(grid, e * v, nonlinearity)

    v = c0.copy()
    out = np.empty((sample_times.size,) + grid.shape, complex)
    want = {int(s): [i for i, x in enumerate(steps_at) if x == s] for s in set(steps_at.tolist())}
    start_norm = float(np.linalg.norm(c0))

    def record(step: int, v: np.ndarray) -> None:
        if step in want:
            u_hat = np.exp(1j * step * dt * phi) * v
            u_hat[grid.nyquist_mask] = 0.0
            for i in want[step]:
                out[i] = u_hat

    record(0, v)
    for s in range(n_steps):
        t = s * dt
        k1 = rhs(t, v)
        k2 = rhs(t + 0.5 * dt, v + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, v + 0.5 * dt * k2)
        k4 = rhs(t + dt, v + dt * k3)
        v = v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        nv = float(np.linalg.norm(v))
        if not np.isfinite(nv) or nv > 1e6 * max(start_norm, 1e-300):
            raise DivergenceError(f"reference integrator blew up at step {s + 1}", [nv])
        record(s + 1, v)
    return TrajectoryField.from_coeffs(grid, sample_times, out)


def _residual_coeffs(traj: TrajectoryField, beta: float, sign, nonlinearity) -> tuple[np.ndarray, np.ndarray, float]:
    if not traj.uniform or traj.nt < 3:
        raise ValueError("the residual needs at least three uniformly spaced samples")
    grid = traj.grid
    h = traj.times[1] - traj.times[0]
    c = np.asarray(traj.coeffs)
    phi = phi_array(grid, sign)
    dt_c = (c[2:] - c[:-2]) / (2 * h)
    # u_xxx + gamma dx^{-1} u_yy has symbol -i phi
    lin = -1j * phi[None] * c[1:-1]
    nl = beta * _physical_product_term(grid, c[1:-1], nonlinearity) if beta else 0.0
    return dt_c + lin + nl, c[1:-1], h


def pde_residual(traj: TrajectoryField, beta: float = 1.0,
                 sign: DispersionSign | int = DispersionSign.KP_I,
                 nonlinearity: Nonlinearity = "kp_quadratic") -> tuple[float, float]:
    """Return ``(||R||, ||u||)`` over the interior time samples.

    ``R = u_t + u_xxx + gamma dx^{-1} u_yy + beta N(u)`` with second-order
    centred differences in time and spectral derivatives in space.  Both
    norms are space-time L2 norms over the interior samples.
    """
    R, c, h = _residual_coeffs(traj, beta, sign, nonlinearity)
    w = np.sqrt(traj.grid.cell_area * h)
    return float(w * np.linalg.norm(R)), float(w * np.linalg.norm(c))


def pde_residual_series(traj: TrajectoryField, beta: float = 1.0,
                        sign: DispersionSign | int = DispersionSign.KP_I,
                        nonlinearity: Nonlinearity = "kp_quadratic") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-sample ``(t, ||R(t)||_2, ||u(t)||_2)`` at the interior times."""
    R, c, _ = _residual_coeffs(traj, beta, sign, nonlinearity)
    w = np.sqrt(traj.grid.cell_area)
    return (traj.times[1:-1].copy(), w * np.linalg.norm(R.reshape(R.shape[0], -1), axis=1),
            w * np.linalg.norm(c.reshape(c.shape[0], -1), axis=1))


# ------------------------------------------------------------- scaling ---

@dataclass(frozen=True)
class ScalingParams:
    """Dyadic ``rho = 2^-m`` with the exact norm exponents of ``u_rho``."""

    rho: float

    def __post_init__(self) -> None:
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        m = -math.log2(self.rho)
        if abs(m - round(m)) > 1e-12:
            raise ValueError(f"rho must be a power of 1/2, got {self.rho}")

    @property
    def m(self) -> int:
        return int(round(-math.log2(self.rho)))

    @staticmethod
    def l2_exponent() -> float:
        return 0.5

    @staticmethod
    def dx_exponent(sigma: float) -> float:
        return 0.5 + sigma

    @staticmethod
    def dy_exponent(gamma: float) -> float:
        return 0.5 + 2.0 * gamma

    @staticmethod
    def weighted_exponent(sigma: float, alpha: float) -> float:
        return 0.5 + sigma - 2.0 * alpha


def rescale_field(u: PhysicalField, rho: float) -> PhysicalField:
    """``u_rho(x, y) = rho^2 u(rho x, rho^2 y)`` on the dilated torus.

    The target grid has half-periods ``Lx/rho`` and ``Ly/rho^2`` with the
    same sample counts, so lattice point ``(m, n)`` of the new grid is the
    dilation of lattice point ``(m, n)`` of the old one.  The continuum
    relation ``u_rho^(xi, lam) = rho^-1 u^(xi/rho, lam/rho^2)`` becomes a
    plain rescaling of the unitary coefficient array by ``rho^2``.
    """
    sp = ScalingParams(rho)
    g = u.grid
    target = Grid2D(g.Lx / sp.rho, g.Ly / sp.rho**2, g.Nx, g.Ny)
    F = forward_transform(u)
    Frho = SpectralField(target, np.asarray(F.coeffs) * sp.rho**2)
    vals = sfft.ifft2(Frho.coeffs, norm="ortho").real
    return PhysicalField(target, vals)


# -------------------------------------------------------------- export ---

def _fmt(v: float) -> str:
    return repr(float(v)) if np.isfinite(v) else str(v)


def write_trajectory_csv(traj: TrajectoryField, path) -> None:
    """Columns ``t, x, y, u`` with 17 significant digits."""
    grid = traj.grid
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,u\n")
        for t, vals in zip(traj.times, traj.values):
            for xv, yv, uv in zip(X.ravel(), Y.ravel(), vals.ravel()):
                fh.write(f"{t:.17g},{xv:.17g},{yv:.17g},{uv:.17g}\n")


def write_spectral_dump(traj: TrajectoryField, path, threshold: float = 0.0) -> None:
    """Plain-text coefficient dump.

    Layout::

        # kp-spectral v1
        # grid Lx Ly Nx Ny
        # t <time>
        m n re im          (signed wavenumber indices, unitary coefficients)

    Only coefficients with modulus above ``threshold`` are listed.
    """
    grid = traj.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# kp-spectral v1\n")
        fh.write(f"# grid {grid.Lx:.17g} {grid.Ly:.17g} {grid.Nx} {grid.Ny}\n")
        for t, c in zip(traj.times, traj.coeffs):
            fh.write(f"# t {t:.17g}\n")
            idx = np.argwhere(np.abs(c) > threshold)
            for p, q in idx:
                z = c[p, q]
                fh.write(f"{grid.m[p]} {grid.n[q]} {z.real:.17g} {z.imag:.17g}\n")


def read_spectral_dump(path) -> TrajectoryField:
    grid = None
    times: list[float] = []
    blocks: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "grid":
                    grid = Grid2D(float(parts[1]), float(parts[2]), int(parts[3]), int(parts[4]))
                elif parts and parts[0] == "t":
                    if grid is None:
                        raise ValueError(f"{path}: time block before grid header")
                    times.append(float(parts[1]))
                    blocks.append(np.zeros(grid.shape, complex))
                continue
            if not blocks:
                raise ValueError(f"{path}: coefficient line before any time header")
            m, n, re, im = line.split()
            blocks[-1][int(m) % grid.Nx, int(n) % grid.Ny] = float(re) + 1j * float(im)
    if grid is None or not blocks:
        raise ValueError(f"{path}: no data")
    return TrajectoryField.from_coeffs(grid, np.asarray(times), np.stack(blocks))
