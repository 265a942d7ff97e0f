"""Impulse schedules, impulse maps and the state-dependent delay law."""
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError
from .geometry import HistorySegment, theta_window
from .quadrature import linear_hat_weights
from .spectral import SpectralField

# ---------------------------------------------------------------------------
# Impulses


@dataclass(frozen=True)
class ImpulseKernel:
    """A kernel rho(t, xi, z) with its time derivative, both vectorized.

    ``rho(t, XI, Z)`` and ``rho_t(t, XI, Z)`` receive a scalar time and
    meshgrids of the spatial variables.
    """

    rho: Callable
    rho_t: Callable
    name: str = "custom"


def trigonometric_kernel(amplitude=0.1, rate=0.0, wavenumber=1):
    """rho(t, xi, z) = amplitude (1 + rate t) sin(k xi), constant in z."""
    k = int(wavenumber)
    if k < 1:
        raise ValidationError("impulse wavenumber must be positive", "impulse.wavenumber")

    def rho(t, XI, Z):
        return amplitude * (1.0 + rate * t) * np.sin(k * XI) + 0.0 * Z

    def rho_t(t, XI, Z):
        return amplitude * rate * np.sin(k * XI) + 0.0 * Z

    return ImpulseKernel(rho, rho_t, "trigonometric")


def zero_kernel():
    def rho(t, XI, Z):
        return np.zeros(np.broadcast(XI, Z).shape)

    return ImpulseKernel(rho, rho, "zero")


@dataclass(frozen=True, eq=False)
class ImpulseSchedule:
    """Breakpoints 0 < tau_1 <= s_1 < tau_2 <= ... <= s_p < T with one kernel per impulse.

    The control intervals are [s_j, tau_{j+1}] (s_0 = 0, tau_{p+1} = T) and
    must have positive length; impulse intervals (tau_j, s_j] may be empty.
    """

    T: float
    taus: tuple = ()
    ss: tuple = ()
    kernels: tuple = ()

    def __post_init__(self):
        taus, ss = tuple(map(float, self.taus)), tuple(map(float, self.ss))
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "ss", ss)
        key = "schedule.breakpoints"
        if not self.T > 0:
            raise ValidationError("horizon T must be positive", "time.horizon")
        if len(taus) != len(ss):
            raise ValidationError("each impulse needs both tau_j and s_j", key)
        if len(self.kernels) != len(taus):
            raise ValidationError("one impulse kernel is needed per impulse", "impulse.kernel")
        chain = [0.0]
        for t, s in zip(taus, ss):
            chain += [t, s]
        chain.append(self.T)
        for j in range(len(taus) + 1):
            start, end = chain[2 * j], chain[2 * j + 1]
            if not start < end:
                raise ValidationError(
                    f"control interval [{start}, {end}] must have positive length", key
                )
        for j, (t, s) in enumerate(zip(taus, ss)):
            if not t <= s:
                raise ValidationError(f"need tau_{j + 1} <= s_{j + 1}, got {t} > {s}", key)

    @classmethod
    def from_breakpoints(cls, T, breakpoints=(), kernels=None):
        bp = [float(b) for b in breakpoints]
        if len(bp) % 2:
            raise ValidationError("breakpoints come in pairs tau_j, s_j", "schedule.breakpoints")
        taus, ss = bp[0::2], bp[1::2]
        if kernels is None:
            kernels = tuple(zero_kernel() for _ in taus)
        return cls(T, tuple(taus), tuple(ss), tuple(kernels))

    @property
    def count(self):
        """Number p of impulses."""
        return len(self.taus)

    @property
    def starts(self):
        """Control interval starts s_0 = 0, s_1, ..., s_p."""
        return (0.0,) + self.ss

    @property
    def ends(self):
        """Control interval ends tau_1, ..., tau_p, tau_{p+1} = T."""
        return self.taus + (self.T,)

    @property
    def breakpoints(self):
        return tuple(x for pair in zip(self.taus, self.ss) for x in pair)

    def control_intervals(self):
        return list(zip(self.starts, self.ends))


def _impulse_values(kernel_fn, t, x_left, grid):
    XI, Z = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    weight = np.cos(x_left.values * grid.nodes) ** 2
    R = np.asarray(kernel_fn(t, XI, Z), dtype=float)
    return R @ (grid.weights * weight)


def _check_window(j, t, sched):
    tau, s = sched.taus[j - 1], sched.ss[j - 1]
    if not tau - 1e-12 <= t <= s + 1e-12:
        raise DomainError(f"t={t} outside the impulse interval [{tau}, {s}] of impulse {j}")


def impulse_h(j, t, x_left, sched):
    """h_j(t, x)(xi) = int_0^pi rho_j(t, xi, z) cos^2(x(tau_j^-)(z) z) dz (j is 1-based).

    The closed endpoint t = tau_j gives the right limit of the state.
    """
    _check_window(j, t, sched)
    vals = _impulse_values(sched.kernels[j - 1].rho, t, x_left, x_left.grid)
    return SpectralField(x_left.grid.project(vals), x_left.grid)


def impulse_h_prime(j, t, x_left, sched):
    """Time derivative of h_j, using d rho_j / dt in place of rho_j."""
    _check_window(j, t, sched)
    vals = _impulse_values(sched.kernels[j - 1].rho_t, t, x_left, x_left.grid)
    return SpectralField(x_left.grid.project(vals), x_left.grid)


def impulse_bounds(sched, sp, n_t=33):
    """Bounds kappa_j >= ||h_j(t, x)|| and theta_j >= ||h_j'(t, x)|| over all t and x.

    Since 0 <= cos^2 <= 1, ||int |rho_j(t, ., z)| dz||_X dominates both
    maps; its supremum is sampled on the closed impulse interval.
    """
    grid = sp.grid
    XI, Z = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    kappas, thetas = [], []
    for j, ker in enumerate(sched.kernels):
        ts = np.linspace(sched.taus[j], sched.ss[j], n_t)
        k_sup = th_sup = 0.0
        for t in ts:
            k_sup = max(k_sup, sp.norm_values(np.abs(ker.rho(t, XI, Z)) @ grid.weights))
            th_sup = max(th_sup, sp.norm_values(np.abs(ker.rho_t(t, XI, Z)) @ grid.weights))
        kappas.append(k_sup)
        thetas.append(th_sup)
    return kappas, thetas


# ---------------------------------------------------------------------------
# Delay


@dataclass(frozen=True)
class MemoryKernel:
    """Kernel b on [0, inf) with the constant L = sup |b(s)| e^{|a| s}."""

    b: Callable
    L: float
    name: str = "custom"
    rate: float = 0.0


def exponential_memory(scale=0.0, decay=1.0, weight_rate=-1.0):
    """b(s) = scale e^{-decay s}; requires decay >= |a| so that L = |scale| is finite."""
    if decay < abs(weight_rate):
        raise ValidationError(
            f"memory decay {decay} is slower than the weight rate |a| = {abs(weight_rate)}",
            "delay.kernel",
        )
    return MemoryKernel(lambda s: scale * np.exp(-decay * np.asarray(s)), abs(scale),
                        "exponential", decay)


def zero_memory():
    return MemoryKernel(lambda s: np.zeros_like(np.asarray(s, dtype=float)), 0.0, "none")


def rational_beta(scale=1.0):
    """beta(r) = scale r / (1 + r), bounded by scale."""
    if scale < 0:
        raise ValidationError("delay scale must be nonnegative", "delay.beta")
    return (lambda r: scale * r / (1.0 + r)), float(scale)


def constant_beta(value=0.0):
    if value < 0:
        raise ValidationError("constant delay must be nonnegative", "delay.beta")
    return (lambda r: float(value)), float(value)


@dataclass(frozen=True)
class DelayLaw:
    """Memory kernel b, delay profile beta >= 0 (bounded by ``beta_sup``) and weight rate a < 0."""

    kernel: MemoryKernel = field(default_factory=zero_memory)
    beta: Callable = field(default=lambda r: 0.0)
    beta_sup: float = 0.0
    weight_rate: float = -1.0
    tail_tol: float = 1e-10

    def __post_init__(self):
        if not self.weight_rate < 0:
            raise ValidationError("weight rate a must be negative", "delay.weight_rate")
        if not self.tail_tol > 0:
            raise ValidationError("tail tolerance must be positive", "delay.tail_tol")

    @property
    def active(self):
        return self.kernel.L > 0.0


def delay_rho(t, seg, law, sp):
    """rho(t, x_t) = t - beta(||x_t(0)||_X)."""
    return t - law.beta(sp.norm_coeffs(seg.values[-1]))


def delay_functional_f(seg, law):
    """f = int b(-theta) seg(theta) dtheta over the stored window.

    The segment is piecewise linear in theta; the discarded tail is at most
    L tail_tol when the window was chosen with ``theta_window``.
    """
    grid = seg.grid
    if not law.active:
        return SpectralField.zeros(grid)
    width = 0.5 / law.kernel.rate if law.kernel.rate > 0 else None
    w = linear_hat_weights(seg.theta, lambda th: law.kernel.b(-th), order=8, max_width=width)
    return SpectralField(w @ seg.values, grid)


def history_window(law, psi_sup):
    """theta_min of the segment window for histories bounded by ``psi_sup``."""
    return theta_window(law.weight_rate, law.tail_tol, psi_sup)


def exponential_history(psi0, rate, theta_lo, spacing=1.0 / 64, weight_rate=-1.0, tail_tol=1e-10):
    """History psi(theta) = e^{rate theta} psi0 sampled on [theta_lo, 0]."""
    if rate < 0:
        raise ValidationError("history rate must be nonnegative", "initial.psi_rate")
    n = max(2, int(math.ceil(-theta_lo / spacing)) + 1)
    th = np.linspace(theta_lo, 0.0, n)
    vals = np.exp(rate * th)[:, None] * psi0.coeffs[None, :]
    return HistorySegment(th, vals, psi0.grid, weight_rate, tail_tol)
