"""Controllability Gramians and the regularized resolvent equation.

On an interval [s, tau] the Gramian is

    Phi = int_s^tau (tau - t)^{gamma-1} S(tau - t) B B* S(tau - t)* dt.

In mode form S is diagonal with factors s_n(r) = r^g E_{2g,2g}(-n^2 r^{2g}),
so Phi_mn = (B B*)_mn int s_m s_n.  The substitution sigma = (tau - t)^g
turns the weakly singular integral into (1/g) int_0^{(tau-s)^g} of a smooth
function of sigma, which composite Gauss-Legendre handles to machine
precision.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DomainError, ValidationError
from .geometry import lp_norm
from .quadrature import composite_rule, uniform_edges
from .spectral import SpectralField, s_factor

PANELS_PER_UNIT = 256
GL_ORDER = 8


@dataclass(frozen=True)
class SigmaRule:
    """Quadrature for int_s^tau (tau - t)^{g-1} F(tau - t) dt in sigma = (tau - t)^g.

    ``lags`` are the values r = tau - t at the nodes and ``weights`` already
    include the factor 1/g, so the integral is sum(weights * F(lags)).
    """

    lags: np.ndarray
    weights: np.ndarray
    sigma: np.ndarray
    gamma: float


def sigma_rule(s, tau, gamma, panels_per_unit=PANELS_PER_UNIT, order=GL_ORDER):
    if not tau > s:
        raise DomainError(f"need s < tau, got s={s}, tau={tau}")
    smax = (tau - s) ** gamma
    panels = max(8, int(math.ceil(panels_per_unit * smax)))
    sig, w = composite_rule(uniform_edges(0.0, smax, panels), order)
    return SigmaRule(sig ** (1.0 / gamma), w / gamma, sig, gamma)


def control_mode_products(Bspec, grid):
    """Mode matrices of B and of B B*."""
    Bm = Bspec.mode_matrix(grid)
    return Bm, Bm @ Bm.T


@dataclass(frozen=True, eq=False)
class GramianOperator:
    """Mode matrix of the Gramian on [s, tau] with its quadrature metadata."""

    s: float
    tau: float
    gamma: float
    matrix: np.ndarray
    grid: object
    rule: SigmaRule = field(repr=False)
    Bm: np.ndarray = field(repr=False)

    def __post_init__(self):
        asym = np.max(np.abs(self.matrix - self.matrix.T), initial=0.0)
        if asym > 1e-10 * max(1.0, np.max(np.abs(self.matrix), initial=0.0)):
            raise ValidationError("assembled Gramian is not symmetric")

    @property
    def diagonal(self):
        return np.diag(self.matrix).copy()

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def apply(self, y):
        """Phi y for a field or dual element (acts on its mode projection)."""
        return SpectralField(self.matrix @ y.coeffs, self.grid)

    def __call__(self, y):
        return self.apply(y)


def assemble_gramian(s, tau, Bspec, fparams, grid, panels_per_unit=PANELS_PER_UNIT,
                     order=GL_ORDER):
    """Gramian of the truncated mode system on [s, tau]."""
    rule = sigma_rule(s, tau, fparams.gamma, panels_per_unit, order)
    S = s_factor(rule.lags, grid.modes, fparams.gamma)
    Bm, BB = control_mode_products(Bspec, grid)
    core = (S * rule.weights[:, None]).T @ S
    mat = BB * core
    mat = 0.5 * (mat + mat.T)
    return GramianOperator(float(s), float(tau), fparams.gamma, mat, grid, rule, Bm)


def gramian_quadratic_form(xstar, G, Bspec, fparams, panels_per_unit=None, order=12):
    """<x*, Phi x*> as the time integral of ||B* S(tau - t)* x*||^2.

    Evaluated field by field with its own quadrature, independently of the
    assembled matrix.
    """
    from .spectral import apply_B_adjoint

    ppu = panels_per_unit or 2 * PANELS_PER_UNIT // 3
    rule = sigma_rule(G.s, G.tau, fparams.gamma, ppu, order)
    S = s_factor(rule.lags, xstar.grid.modes, fparams.gamma)
    total = 0.0
    for r_w, sf in zip(rule.weights, S):
        y = apply_B_adjoint(SpectralField(sf * xstar.coeffs, xstar.grid), Bspec)
        total += r_w * float(y.coeffs @ y.coeffs)
    return total


# ---------------------------------------------------------------------------
# Resolvent


@dataclass(frozen=True)
class ResolventSolve:
    """Solution z of lambda z + Phi J[z] = lambda h."""

    z: SpectralField
    residual: float
    iterations: int
    lam: float


def _residual_field(lam, c, h, G, sp):
    grid = G.grid
    if sp.p == 2.0:
        jc = c
    else:
        jc = grid.project(_dual_values(grid.synthesize(c), sp))
    return lam * c + G.matrix @ jc - lam * h


def _dual_values(v, sp):
    nrm = sp.norm_values(v)
    if nrm == 0.0:
        return np.zeros_like(v)
    return nrm ** (2.0 - sp.p) * np.abs(v) ** (sp.p - 2.0) * v


def _dual_jacobian(v, sp):
    """Derivative of the grid duality map at samples v."""
    p = sp.p
    w = sp.grid.weights
    nrm = sp.norm_values(v)
    if nrm == 0.0:
        return np.zeros((v.size, v.size))
    a = np.abs(v) ** (p - 2.0) * v
    D = np.diag((p - 1.0) * np.abs(v) ** (p - 2.0))
    D += (2.0 - p) * nrm ** (-p) * np.outer(a, w * a)
    return nrm ** (2.0 - p) * D


def _coeff_norm(c, sp):
    return sp.norm_values(sp.grid.synthesize(c))


def solve_resolvent_eq(lam, h, G, sp, tol=1e-12, max_iter=100, check_bound=True):
    """Solve lambda z + Phi J[z] = lambda h for band-limited h.

    p = 2 is a symmetric linear solve with one refinement step.  For p > 2
    Newton's method with the analytic Jacobian of the grid duality map is
    used, started from the p = 2 solution and globalized by backtracking;
    uniqueness follows from strict monotonicity of J.  ``tol`` is relative
    to lambda ||h||.  Raises ConvergenceError if the residual does not reach
    ``max(tol, 1e-8) * lambda * ||h||``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if G.grid != h.grid or sp.grid != h.grid:
        raise ValidationError("resolvent inputs live on different grids")
    hc = np.asarray(h.coeffs, dtype=float)
    hn = _coeff_norm(hc, sp)
    if hn == 0.0:
        return ResolventSolve(SpectralField.zeros(h.grid), 0.0, 0, lam)
    lhs = lam * np.eye(hc.size) + G.matrix
    factor = scipy.linalg.cho_factor(lhs)
    c = scipy.linalg.cho_solve(factor, lam * hc)
    c = c - scipy.linalg.cho_solve(factor, lhs @ c - lam * hc)
    iters = 1
    history = []
    if sp.p != 2.0:
        W, A = sp.grid.basis, sp.grid.analysis
        target = tol * lam * hn
        F = _residual_field(lam, c, hc, G, sp)
        fn = _coeff_norm(F, sp)
        history.append(fn)
        for iters in range(1, max_iter + 1):
            if fn <= target:
                break
            v = W @ c
            Jac = lam * np.eye(hc.size) + G.matrix @ (A @ _dual_jacobian(v, sp) @ W)
            step = np.linalg.solve(Jac, -F)
            t = 1.0
            while True:
                c_new = c + t * step
                F_new = _residual_field(lam, c_new, hc, G, sp)
                fn_new = _coeff_norm(F_new, sp)
                if fn_new < (1 - 1e-4 * t) * fn or t < 1e-6:
                    break
                t *= 0.5
            if fn_new >= fn:
                # Newton stalled; fall back to a damped fixed-point step
                jc = A @ _dual_values(v, sp)
                c_new = 0.5 * c + 0.5 * scipy.linalg.cho_solve(factor, lam * hc + G.matrix @ (c - jc))
                F_new = _residual_field(lam, c_new, hc, G, sp)
                fn_new = _coeff_norm(F_new, sp)
            c, F, fn = c_new, F_new, fn_new
            history.append(fn)
    F = _residual_field(lam, c, hc, G, sp)
    res = _coeff_norm(F, sp)
    if res > max(tol, 1e-8) * lam * hn:
        raise ConvergenceError(
            f"resolvent iteration stopped at residual {res:.3e}", res, history
        )
    z = SpectralField(c, h.grid)
    if check_bound and _coeff_norm(c, sp) > hn * (1 + 1e-9):
        raise ConvergenceError("solution violates the bound ||z|| <= ||h||", res, history)
    return ResolventSolve(z, res, iters, float(lam))


def apply_resolvent(lam, h, G, sp, **kw):
    """R(lambda, Phi) h = (lambda I + Phi J)^{-1} h, returned with its solve record."""
    sol = solve_resolvent_eq(lam, h, G, sp, **kw)
    return sol.z * (1.0 / lam), sol


def resolvent_decay_sweep(h, lambdas, G, sp):
    """Pairs (lambda, ||z_lambda(h)||) along a strictly decreasing lambda grid."""
    lambdas = [float(x) for x in lambdas]
    if any(x <= 0 for x in lambdas) or any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValidationError("lambda grid must be strictly decreasing and positive", "lambda.grid")
    return [(lam, lp_norm(solve_resolvent_eq(lam, h, G, sp).z, sp)) for lam in lambdas]


def smallest_gramian_entry(G):
    """Truncated non-degeneracy test: the smallest diagonal Gramian entry."""
    return float(np.min(G.diagonal))
