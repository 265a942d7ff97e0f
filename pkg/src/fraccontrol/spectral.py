"""Sine-mode representation of fields on [0, pi] and the diagonal solution families.

States are carried as coefficients against the normalized Dirichlet
eigenfunctions w_n(xi) = sqrt(2/pi) sin(n xi), n = 1..N, together with their
samples on a uniform grid.  On that grid the composite trapezoid rule is an
exact discrete sine transform for modes below the grid resolution, so
coefficients and samples convert without loss.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ValidationError
from .specfun import gamma_fn, mittag_leffler


@dataclass(frozen=True)
class FractionalParams:
    """Order alpha in (1, 2] of the time derivative; gamma = alpha / 2."""

    alpha: float = 1.5
    cosine_bound_M: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise ValidationError(f"alpha must lie in (1, 2], got {self.alpha}", "fractional.alpha")
        if not self.cosine_bound_M >= 1.0:
            raise ValidationError("cosine bound M must be >= 1", "fractional.cosine_bound")

    @property
    def gamma(self):
        return 0.5 * self.alpha

    @property
    def classical(self):
        """True in the wave-equation limit alpha = 2, kept for validation."""
        return self.alpha == 2.0


class SpatialGrid:
    """Uniform grid on [0, pi] (endpoints included) with N sine modes."""

    def __init__(self, mode_count=32, n_points=None):
        mode_count = int(mode_count)
        if mode_count < 1:
            raise ValidationError("mode count must be positive", "grid.modes")
        if n_points is None:
            n_points = 8 * mode_count + 1
        n_points = int(n_points)
        if n_points < 2 * mode_count + 1:
            raise ValidationError(
                f"need at least 2N+1 = {2 * mode_count + 1} grid points, got {n_points}",
                "grid.points",
            )
        self.mode_count = mode_count
        self.n_points = n_points
        self.nodes = np.linspace(0.0, math.pi, n_points)
        h = math.pi / (n_points - 1)
        w = np.full(n_points, h)
        w[0] = w[-1] = 0.5 * h
        self.weights = w
        self.modes = np.arange(1, mode_count + 1)
        for arr in (self.nodes, self.weights, self.modes):
            arr.setflags(write=False)

    def __eq__(self, other):
        return (isinstance(other, SpatialGrid) and other.mode_count == self.mode_count
                and other.n_points == self.n_points)

    def __hash__(self):
        return hash((self.mode_count, self.n_points))

    def __repr__(self):
        return f"SpatialGrid(mode_count={self.mode_count}, n_points={self.n_points})"

    @cached_property
    def basis(self):
        """Matrix W with W[i, n-1] = w_n(xi_i)."""
        W = math.sqrt(2.0 / math.pi) * np.sin(np.outer(self.nodes, self.modes))
        W.setflags(write=False)
        return W

    @cached_property
    def analysis(self):
        """Matrix mapping grid samples to trapezoid inner products with w_n."""
        A = (self.basis * self.weights[:, None]).T
        A.setflags(write=False)
        return A

    def synthesize(self, coeffs):
        return np.asarray(coeffs, dtype=float) @ self.basis.T

    def project(self, values):
        return np.asarray(values, dtype=float) @ self.analysis.T

    def integrate(self, values):
        return np.asarray(values, dtype=float) @ self.weights


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A state (or dual element) on [0, pi].

    ``coeffs`` are inner products with w_1..w_N.  ``values`` are grid
    samples; for band-limited fields they equal the synthesis of ``coeffs``,
    otherwise (dual elements, constants) they are kept as given and
    ``coeffs`` hold their projection.
    """

    coeffs: np.ndarray
    grid: SpatialGrid
    sampled: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.grid.mode_count,):
            raise ValidationError(f"expected {self.grid.mode_count} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.sampled is not None:
            v = np.array(self.sampled, dtype=float)
            if v.shape != (self.grid.n_points,):
                raise ValidationError("sample vector does not match the grid")
            v.setflags(write=False)
            object.__setattr__(self, "sampled", v)

    @classmethod
    def from_coeffs(cls, coeffs, grid):
        return cls(np.asarray(coeffs, dtype=float), grid)

    @classmethod
    def from_values(cls, values, grid):
        values = np.asarray(values, dtype=float)
        return cls(grid.project(values), grid, values)

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.mode_count), grid)

    @classmethod
    def mode(cls, n, grid, amplitude=1.0):
        c = np.zeros(grid.mode_count)
        c[n - 1] = amplitude
        return cls(c, grid)

    @property
    def band_limited(self):
        return self.sampled is None

    @cached_property
    def values(self):
        if self.sampled is not None:
            return self.sampled
        v = self.grid.synthesize(self.coeffs)
        v.setflags(write=False)
        return v

    def with_coeffs(self, coeffs):
        return SpectralField(coeffs, self.grid)

    def __add__(self, other):
        if self.band_limited and other.band_limited:
            return SpectralField(self.coeffs + other.coeffs, self.grid)
        return SpectralField.from_values(self.values + other.values, self.grid)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        scalar = float(scalar)
        if self.band_limited:
            return SpectralField(scalar * self.coeffs, self.grid)
        return SpectralField(scalar * self.coeffs, self.grid, scalar * self.sampled)

    __rmul__ = __mul__


def sine_transform(values, grid, tol=1e-9):
    """Coefficients of Dirichlet grid data against w_1..w_N."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_points,):
        raise ValidationError(f"expected {grid.n_points} samples, got {values.shape}")
    scale = max(1.0, float(np.max(np.abs(values))))
    if abs(values[0]) > tol * scale or abs(values[-1]) > tol * scale:
        raise ValidationError("samples violate the Dirichlet condition at 0 or pi")
    return SpectralField(grid.project(values), grid)


def inverse_sine_transform(x):
    """Grid samples of the band-limited synthesis of ``x``."""
    return x.grid.synthesize(x.coeffs)


# ---------------------------------------------------------------------------
# Mode factors.  Each returns an array broadcast over (t, n).


def _tn(t, modes):
    t = np.asarray(t, dtype=float)
    n = np.asarray(modes, dtype=float)
    return t[..., None], n


def cosine_factor(t, modes):
    t, n = _tn(t, modes)
    return np.cos(n * t)


def sine_factor(t, modes):
    t, n = _tn(t, modes)
    return np.sin(n * t) / n


def _check_nonneg(t):
    if np.any(np.asarray(t) < 0):
        raise DomainError("fractional families are defined for t >= 0")


def c_factor(t, modes, gamma):
    """E_{2g,1}(-n^2 t^{2g})."""
    _check_nonneg(t)
    t, n = _tn(t, modes)
    z = -(n**2) * t ** (2 * gamma)
    return mittag_leffler(2 * gamma, 1.0, z)


def t_factor(t, modes, gamma):
    """t E_{2g,2}(-n^2 t^{2g}), the running integral of the cosine-type factor."""
    _check_nonneg(t)
    t, n = _tn(t, modes)
    z = -(n**2) * t ** (2 * gamma)
    return t * mittag_leffler(2 * gamma, 2.0, z)


def s_factor(t, modes, gamma):
    """t^g E_{2g,2g}(-n^2 t^{2g})."""
    _check_nonneg(t)
    t, n = _tn(t, modes)
    z = -(n**2) * t ** (2 * gamma)
    return t**gamma * mittag_leffler(2 * gamma, 2 * gamma, z)


def _apply(factor, x):
    return SpectralField(factor * x.coeffs, x.grid)


def cosine_family(t, x):
    return _apply(cosine_factor(t, x.grid.modes), x)


def sine_family(t, x):
    return _apply(sine_factor(t, x.grid.modes), x)


def c_gamma(t, x, p):
    return _apply(c_factor(t, x.grid.modes, p.gamma), x)


def t_gamma(t, x, p):
    return _apply(t_factor(t, x.grid.modes, p.gamma), x)


def s_gamma(t, x, p):
    return _apply(s_factor(t, x.grid.modes, p.gamma), x)


def sine_ratio_limit(gamma):
    """Limit of S_gamma(r) / r^gamma per mode as r -> 0: 2g / Gamma(1 + 2g)."""
    return 2 * gamma / gamma_fn(1 + 2 * gamma)


def scaled_sine_ratio(t, T, xstar, p):
    """Field S_gamma(T - t) x* / (T - t)^gamma for 0 <= t < T."""
    if not 0 <= t < T:
        raise DomainError(f"need 0 <= t < T, got t={t}, T={T}")
    r = T - t
    z = -(xstar.grid.modes.astype(float) ** 2) * r ** (2 * p.gamma)
    factor = mittag_leffler(2 * p.gamma, 2 * p.gamma, z)
    return _apply(factor, xstar)


# ---------------------------------------------------------------------------
# Control operator


def exponential_kernel(scale=1.0, rate=1.0):
    """K(zeta, xi) = scale * exp(rate * (zeta + xi))."""
    def K(zeta, xi):
        return scale * np.exp(rate * (np.asarray(zeta) + np.asarray(xi)))
    return K


@dataclass(frozen=True)
class ControlOperatorSpec:
    """Control operator B: identity, or an integral operator with symmetric kernel."""

    kind: str = "identity"
    kernel: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("identity", "integral-kernel"):
            raise ValidationError(f"unknown control operator kind {self.kind!r}", "control.kind")
        if self.kind == "integral-kernel" and self.kernel is None:
            raise ValidationError("integral-kernel control needs a kernel", "control.kernel")

    def kernel_matrix(self, grid):
        Z, X = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        K = np.asarray(self.kernel(Z, X), dtype=float)
        if np.max(np.abs(K - K.T)) > 1e-12 * max(1.0, np.max(np.abs(K))):
            raise ValidationError("control kernel is not symmetric", "control.kernel")
        return K

    def mode_matrix(self, grid):
        """Galerkin matrix of B on the first N modes (trapezoid in both variables)."""
        if self.kind == "identity":
            return np.eye(grid.mode_count)
        K = self.kernel_matrix(grid)
        Bm = grid.analysis @ (K * grid.weights[:, None]).T @ grid.basis
        return 0.5 * (Bm + Bm.T)

    def operator_norm(self, grid):
        """M-tilde: spectral norm of the mode matrix."""
        if self.kind == "identity":
            return 1.0
        return float(np.linalg.norm(self.mode_matrix(grid), 2))


def apply_B(u, spec, grid=None):
    grid = grid or u.grid
    if spec.kind == "identity":
        return u
    K = spec.kernel_matrix(grid)
    # (Bu)(xi_i) = sum_j omega_j K(zeta_j, xi_i) u(zeta_j)
    values = (K * grid.weights[:, None]).T @ u.values
    return SpectralField(grid.project(values), grid)


def apply_B_adjoint(v, spec, grid=None):
    """Adjoint of B; equal to B because the kernel is symmetric."""
    return apply_B(v, spec, grid)
