"""Mild solutions of the impulsive fractional system in mode form.

Per mode n the solution families are diagonal with factors c_n, t_n, s_n
(see ``spectral``).  The convolution int_0^t (t - s)^{g-1} s_n(t - s) F(s) ds
is evaluated by product integration: F is interpolated linearly on each time
step (with separate left and right values where it jumps) and the kernel is
integrated exactly, using

    int_0^r k_n = (1 - c_n(r)) / n^2,    int_0^r rho k_n(rho) drho = (t_n(r) - r c_n(r)) / n^2,

so no quadrature of the weakly singular kernel is needed.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .errors import ValidationError
from .schedule import impulse_h, impulse_h_prime
from .spectral import SpectralField, c_factor, s_factor, t_factor
from .trajectory import TimeGrid, Trajectory


@dataclass(frozen=True, eq=False)
class ModeTables:
    """Mode factors at the grid lags r_m = m dt and product-integration weights.

    ``w_right[L-1]`` and ``w_left[L-1]`` weight the right value at the start
    and the left value at the end of a step whose lag range is
    [(L-1) dt, L dt].
    """

    tgrid: TimeGrid
    gamma: float
    c: np.ndarray
    tt: np.ndarray
    s: np.ndarray
    w_right: np.ndarray
    w_left: np.ndarray


@lru_cache(maxsize=16)
def _tables(T, n_steps, gamma, mode_count):
    tgrid = TimeGrid(T, n_steps)
    modes = np.arange(1, mode_count + 1)
    lags = tgrid.times
    c = c_factor(lags, modes, gamma)
    tt = t_factor(lags, modes, gamma)
    s = s_factor(lags, modes, gamma)
    n2 = modes.astype(float) ** 2
    dt = tgrid.dt
    K1 = (tt - lags[:, None] * c) / n2
    A = (c[:-1] - c[1:]) / n2
    Lr = lags[1:, None]
    Bw = (Lr * A - (K1[1:] - K1[:-1])) / dt
    for arr in (c, tt, s, A, Bw):
        arr.setflags(write=False)
    return ModeTables(tgrid, gamma, c, tt, s, A - Bw, Bw)


def mode_tables(tgrid, gamma, mode_count):
    return _tables(float(tgrid.T), int(tgrid.n_steps), float(gamma), int(mode_count))


def convolve(tables, f_left, f_right=None):
    """Samples of int_0^{t_m} (t_m - s)^{g-1} S(t_m - s) F(s) ds on the grid.

    ``f_left[m]`` and ``f_right[m]`` are the left and right limits of the
    forcing coefficients at t_m (pass one array for continuous forcing).
    """
    f_left = np.asarray(f_left, dtype=float)
    f_right = f_left if f_right is None else np.asarray(f_right, dtype=float)
    M = tables.tgrid.n_steps
    if f_left.shape != (M + 1, tables.c.shape[1]) or f_right.shape != f_left.shape:
        raise ValidationError("forcing samples are not aligned with the time grid")
    out = np.zeros_like(f_left)
    if M == 0 or not (np.any(f_left) or np.any(f_right)):
        return out
    a = fftconvolve(tables.w_right, f_right[:M], axes=0)[:M]
    b = fftconvolve(tables.w_left, f_left[1:], axes=0)[:M]
    out[1:] = a + b
    return out


@dataclass(frozen=True, eq=False)
class MildProblem:
    """Data of the evolution: families, grids, impulses and initial state."""

    fparams: object
    grid: object
    tgrid: TimeGrid
    sched: object
    psi0: SpectralField
    eta: SpectralField
    sp: object

    def __post_init__(self):
        if abs(self.tgrid.T - self.sched.T) > 1e-12:
            raise ValidationError("time grid and schedule use different horizons", "time.horizon")
        for b in self.sched.breakpoints:
            self.tgrid.index(b)

    @property
    def tables(self):
        return mode_tables(self.tgrid, self.fparams.gamma, self.grid.mode_count)

    def index(self, t):
        return self.tgrid.index(t)


@dataclass(frozen=True, eq=False)
class MildResult:
    """A trajectory with the convolution parts used to build it."""

    trajectory: Trajectory
    forcing_part: np.ndarray
    control_part: np.ndarray


def _forcing_arrays(problem, forcing):
    shape = (problem.tgrid.n_steps + 1, problem.grid.mode_count)
    if forcing is None:
        z = np.zeros(shape)
        return z, z
    if isinstance(forcing, tuple):
        fl, fr = (np.asarray(a, dtype=float) for a in forcing)
    else:
        fl = fr = np.asarray(forcing, dtype=float)
    if fl.shape != shape or fr.shape != shape:
        raise ValidationError("forcing samples are not aligned with the time grid")
    return fl, fr


def solve_mild(problem, control=None, forcing=None, impulse_left=None, exact_anchors=True):
    """Evaluate the piecewise mild solution for a given control and forcing f.

    On [0, tau_1] the solution is C(t) psi(0) + T(t) eta + I(t) with
    I(t) = int_0^t (t - s)^{g-1} S(t - s)[B u + f](s) ds; on (tau_j, s_j] it is
    h_j(t, x(tau_j^-)); on (s_j, tau_{j+1}] it restarts from h_j(s_j),
    h_j'(s_j) with I(t) - I(s_j).

    ``impulse_left`` optionally supplies the states x(tau_j^-) fed to the
    impulse maps (the Picard map uses those of the previous iterate).  With
    ``exact_anchors`` the control part of I at s_j and tau_{j+1} is taken
    from ``control.contribution`` instead of the grid rule.
    """
    tab = problem.tables
    fl, fr = _forcing_arrays(problem, forcing)
    I_f = convolve(tab, fl, fr)
    if control is not None:
        ul, ur = control.bu_samples(problem.tgrid, tab)
        I_u = convolve(tab, ul, ur)
    else:
        I_u = np.zeros_like(I_f)
    I_grid = I_f + I_u

    def anchor(t):
        m = problem.index(t)
        if control is None or not exact_anchors:
            return I_grid[m]
        return I_f[m] + control.contribution(t)

    sched = problem.sched
    M, N = problem.tgrid.n_steps + 1, problem.grid.mode_count
    X = np.zeros((M, N))
    right = {}
    grid = problem.grid
    for j, (s, tau) in enumerate(sched.control_intervals()):
        ms, me = problem.index(s), problem.index(tau)
        if j == 0:
            X[: me + 1] = tab.c[: me + 1] * problem.psi0.coeffs + tab.tt[: me + 1] * problem.eta.coeffs
            X[: me + 1] += I_grid[: me + 1]
        else:
            mt = problem.index(sched.taus[j - 1])
            if impulse_left is not None:
                xl = impulse_left[j - 1]
            else:
                xl = SpectralField(X[mt], grid)
            right[mt] = impulse_h(j, sched.taus[j - 1], xl, sched).coeffs
            for m in range(mt + 1, ms + 1):
                X[m] = impulse_h(j, problem.tgrid.times[m], xl, sched).coeffs
            h = impulse_h(j, s, xl, sched).coeffs if ms > mt else right[mt]
            hp = impulse_h_prime(j, s, xl, sched).coeffs
            L = np.arange(1, me - ms + 1)
            X[ms + 1: me + 1] = tab.c[L] * h + tab.tt[L] * hp - anchor(s) + I_grid[ms + 1: me + 1]
        if control is not None and exact_anchors:
            X[me] += anchor(tau) - I_grid[me]
    return MildResult(Trajectory(problem.tgrid, X, right), I_f, I_u)


def evaluate_mild(problem, control=None, forcing=None, impulse_left=None, exact_anchors=True):
    """Trajectory of the mild solution (see ``solve_mild``)."""
    return solve_mild(problem, control, forcing, impulse_left, exact_anchors).trajectory


def free_trajectory(problem):
    """The trajectory with u = 0 and f = 0 (impulses still applied)."""
    return evaluate_mild(problem)
