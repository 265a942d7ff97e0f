"""L^p geometry on the grid, the duality map, and the weighted history space.

History segments live in the space of functions on (-inf, 0] with norm
int ||phi(theta)||_X e^{-a theta} dtheta (weight g(theta) = e^{a theta},
a < 0), truncated to a window [theta_min, 0] whose discarded tail is bounded
explicitly.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .quadrature import linear_hat_weights
from .spectral import SpectralField


@dataclass(frozen=True)
class LebesgueSpace:
    """X = L^p(0, pi) with p >= 2, discretized on ``grid``."""

    p: float
    grid: object

    def __post_init__(self):
        if not self.p >= 2.0:
            raise ValidationError(f"p must be >= 2, got {self.p}", "space.p")

    @property
    def q(self):
        """Conjugate exponent of the dual space."""
        return self.p / (self.p - 1.0)

    def norm_values(self, values):
        v = np.abs(np.asarray(values, dtype=float))
        return float(self.grid.integrate(v**self.p) ** (1.0 / self.p))

    def norm_coeffs(self, coeffs):
        return self.norm_values(self.grid.synthesize(coeffs))


def lp_norm(x, sp):
    """Grid-quadrature L^p norm."""
    return sp.norm_values(x.values)


def dual_norm(y, sp):
    """L^q norm of a dual element, q = p / (p - 1)."""
    v = np.abs(y.values)
    return float(sp.grid.integrate(v**sp.q) ** (1.0 / sp.q))


def pairing(x, y):
    """<x, y> = int x y dxi by the grid rule."""
    return float(x.grid.integrate(x.values * y.values))


def duality_values(values, sp):
    """Grid samples of J[x] = ||x||^{2-p} |x|^{p-2} x."""
    values = np.asarray(values, dtype=float)
    if sp.p == 2.0:
        return values
    nrm = sp.norm_values(values)
    if nrm == 0.0:
        return np.zeros_like(values)
    return nrm ** (2.0 - sp.p) * np.abs(values) ** (sp.p - 2.0) * values


def duality_map(x, sp):
    """The duality map J: X -> X*; J[0] = 0 and J is the identity for p = 2."""
    if sp.p == 2.0:
        return x
    return SpectralField.from_values(duality_values(x.values, sp), x.grid)


# ---------------------------------------------------------------------------
# History segments


def theta_window(weight_rate, tail_tol, max_norm, floor=-50.0):
    """Left end theta_min such that the weighted tail mass is below tail_tol."""
    a = abs(weight_rate)
    if max_norm <= 0.0:
        return -1.0
    th = math.log(tail_tol * a / max_norm) / a
    return max(min(th, 0.0), floor)


@dataclass(frozen=True, eq=False)
class HistorySegment:
    """Samples of a history function on [theta_min, 0].

    ``theta`` is non-decreasing and ends at 0; a repeated node carries the
    left and right limits of a jump.  ``values`` holds one coefficient
    vector per node.
    """

    theta: np.ndarray
    values: np.ndarray
    grid: object
    weight_rate: float = -1.0
    tail_tol: float = 1e-10

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if th.ndim != 1 or th.size < 1 or vals.shape != (th.size, self.grid.mode_count):
            raise ValidationError("history samples do not match their theta nodes")
        if np.any(np.diff(th) < 0) or abs(th[-1]) > 1e-12 or th[0] > 0:
            raise ValidationError("theta nodes must be non-decreasing and end at 0")
        if not self.weight_rate < 0:
            raise ValidationError("weight rate a must be negative", "delay.weight_rate")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, fn, grid, theta_min, n_nodes, weight_rate=-1.0, tail_tol=1e-10):
        """Sample ``fn(theta) -> coefficient vector`` on a uniform theta grid."""
        th = np.linspace(theta_min, 0.0, int(n_nodes))
        vals = np.array([fn(t) for t in th])
        return cls(th, vals, grid, weight_rate, tail_tol)

    @classmethod
    def constant(cls, x, theta_min, n_nodes=2, weight_rate=-1.0, tail_tol=1e-10):
        th = np.linspace(theta_min, 0.0, int(n_nodes))
        vals = np.tile(x.coeffs, (th.size, 1))
        return cls(th, vals, x.grid, weight_rate, tail_tol)

    @property
    def theta_min(self):
        return float(self.theta[0])

    def field(self, i):
        return SpectralField(self.values[i], self.grid)

    def at(self, theta):
        """Piecewise-linear value at theta (left limit at a jump)."""
        th = self.theta
        if theta < th[0] - 1e-12 or theta > 1e-12:
            raise DomainError(f"theta={theta} outside the stored window")
        i = int(np.searchsorted(th, theta, side="left"))
        if i < th.size and abs(th[i] - theta) <= 1e-14:
            return self.values[i].copy()
        i = min(max(i, 1), th.size - 1)
        w = (theta - th[i - 1]) / (th[i] - th[i - 1])
        return (1 - w) * self.values[i - 1] + w * self.values[i]

    def head(self):
        """The value phi(0)."""
        return SpectralField(self.values[-1], self.grid)


def phase_norm(seg, sp):
    """int ||seg(theta)||_X e^{-a theta} dtheta over the stored window.

    The integrand is treated as piecewise linear in theta and integrated
    against the exponential weight exactly.  The discarded tail beyond the
    window is at most ``phase_tail_bound``.
    """
    norms = np.array([sp.norm_coeffs(c) for c in seg.values])
    a = seg.weight_rate
    w = linear_hat_weights(seg.theta, lambda th: np.exp(-a * th), order=8,
                           max_width=0.5 / abs(a))
    return float(w @ norms)


def phase_tail_bound(seg, sup_norm):
    """Bound on the truncated tail for histories with ||phi|| <= sup_norm."""
    a = abs(seg.weight_rate)
    return sup_norm * math.exp(a * seg.theta_min) / a


def segment_at(trajectory, initial_history, t, theta_min=None):
    """The segment x_t(theta) = x(t + theta) on [theta_min, 0].

    For t + theta < 0 the initial history is used; otherwise the trajectory,
    interpolated linearly between its samples without crossing a jump.
    ``trajectory`` may be None when t <= 0.
    """
    hist = initial_history
    if theta_min is None:
        theta_min = hist.theta_min
    T = trajectory.grid.T if trajectory is not None else 0.0
    if t > T + 1e-12:
        raise DomainError(f"t={t} beyond the trajectory horizon {T}")
    if t == 0.0 and theta_min == hist.theta_min:
        return hist
    lo = t + theta_min
    if lo < hist.theta_min - 1e-9 * max(1.0, abs(lo)):
        raise DomainError("segment window reaches beyond the stored initial history")
    lo = max(lo, hist.theta_min)
    hi = min(t, 0.0)
    th = hist.theta
    inner = (th > lo) & (th < hi)
    h_times = np.concatenate([[lo], th[inner], [hi]])
    h_vals = np.vstack([hist.at(lo)[None, :], hist.values[inner], hist.at(hi)[None, :]])
    if t > 0.0:
        if trajectory is None:
            raise DomainError("a trajectory is needed for t > 0")
        k_t, k_c = trajectory.samples_up_to(t)
        # psi(0) and the trajectory's x(0) share theta = -t
        times = np.concatenate([h_times, k_t])
        vals = np.vstack([h_vals, k_c])
    else:
        times, vals = h_times, h_vals
    theta = times - t
    theta[-1] = 0.0
    return HistorySegment(theta, vals, hist.grid, hist.weight_rate, hist.tail_tol)


@dataclass(frozen=True)
class PhaseConstants:
    """Constants of the history-norm estimate ||x_s|| <= K1 ||psi|| + K2 sup ||x||."""

    K1: float
    K2: float
    P_sup: float
    Q_sup: float
    theta_sup: float = 1.0


def history_ratio(initial_history, s, sp, theta_min=None):
    """Measured ratio ||psi_s||_B / ||psi||_B for s <= 0."""
    base = phase_norm(segment_at(None, initial_history, 0.0, theta_min), sp)
    if base == 0.0:
        return 0.0
    return phase_norm(segment_at(None, initial_history, s, theta_min), sp) / base


def phase_constants(initial_history, T, sp, weight_rate, s_range=(0.0, 0.0), n_samples=33,
                    theta_min=None):
    """K1 = sup Theta + sup Q and K2 = sup P with P(t) = t, Q(t) = e^{a t}.

    The supremum of the history ratio is sampled on ``s_range`` (s <= 0).
    """
    lo, hi = s_range
    samples = np.linspace(lo, hi, n_samples) if lo < hi else np.array([hi])
    theta_sup = max(history_ratio(initial_history, s, sp, theta_min) for s in samples)
    P_sup = float(T)
    Q_sup = 1.0 if weight_rate <= 0 else math.exp(weight_rate * T)
    return PhaseConstants(theta_sup + Q_sup, P_sup, P_sup, Q_sup, theta_sup)


def phase_bound_holds(trajectory, initial_history, s, consts, sp, tol=1e-8, theta_min=None):
    """Check ||x_s||_B <= K1 ||psi||_B + K2 sup_{[0, max(0, s)]} ||x||_X."""
    seg = segment_at(trajectory if s > 0 else None, initial_history, s, theta_min)
    lhs = phase_norm(seg, sp)
    psi_norm = phase_norm(segment_at(None, initial_history, 0.0, theta_min), sp)
    sup = 0.0
    if trajectory is not None:
        top = max(0.0, s)
        k_t, k_c = trajectory.samples_up_to(top) if top > 0 else (None, trajectory.values[:1])
        sup = max(sp.norm_coeffs(c) for c in k_c)
    rhs = consts.K1 * psi_norm + consts.K2 * sup
    return lhs <= rhs + tol * max(1.0, rhs)
