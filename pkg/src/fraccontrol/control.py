"""Regularized controls: the linear feedback law and the impulsive multi-interval control.

A control piece on [s, tau] has the form u(t) = B* S(tau - t)* y* with a dual
element y*; in modes u(t) = Bm^T (s(tau - t) * d) where d are the mode
coefficients of y*.  Its exact contribution to the state at tau is Phi d,
where Phi is the Gramian of [s, tau].
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .geometry import duality_values, lp_norm
from .gramian import SigmaRule, assemble_gramian, sigma_rule, solve_resolvent_eq
from .quadrature import composite_rule, graded_edges, uniform_edges, weakly_singular_rule
from .schedule import impulse_h, impulse_h_prime
from .spectral import SpectralField, s_factor


class ControlPlan:
    """Gramians of the control intervals and cached cross matrices.

    ``cross(k, t)`` is the matrix Y with Y d = int_{s_k}^{tau_k} (t - s)^{g-1}
    S(t - s) B B* S(tau_k - s)* d ds for t >= tau_k (the Gramian when t = tau_k).
    """

    def __init__(self, gramians, cross_panels_per_unit=64, cross_order=16):
        self.gramians = list(gramians)
        if not self.gramians:
            raise ValidationError("a control plan needs at least one interval")
        self.grid = self.gramians[0].grid
        self.gamma = self.gramians[0].gamma
        self.cross_panels_per_unit = cross_panels_per_unit
        self.cross_order = cross_order
        self._cross = {}

    @classmethod
    def for_schedule(cls, sched, Bspec, fparams, grid, panels_per_unit=256, order=8):
        gram = [assemble_gramian(s, tau, Bspec, fparams, grid, panels_per_unit, order)
                for s, tau in sched.control_intervals()]
        return cls(gram)

    @property
    def intervals(self):
        return [(G.s, G.tau) for G in self.gramians]

    def cross(self, k, t):
        G = self.gramians[k]
        if abs(t - G.tau) <= 1e-12 * max(1.0, G.tau):
            return G.matrix
        if t < G.tau:
            raise DomainError(f"t={t} precedes the end {G.tau} of control interval {k}")
        key = (k, round(float(t), 14))
        if key not in self._cross:
            self._cross[key] = self._assemble_cross(G, t)
        return self._cross[key]

    def _assemble_cross(self, G, t):
        width = G.tau - G.s
        n_uniform = max(4, int(np.ceil(self.cross_panels_per_unit * width)))
        # lag r = tau - s runs over [0, width]; s_n(r) ~ r^g is graded at r = 0
        edges = graded_edges(0.0, width, n_uniform, toward="left")
        r, w = composite_rule(edges, self.cross_order)
        d = t - G.tau
        modes = G.grid.modes
        Sk = s_factor(r, modes, self.gamma)
        St = s_factor(d + r, modes, self.gamma) * ((d + r) ** (self.gamma - 1.0))[:, None]
        core = (St * w[:, None]).T @ Sk
        BB = G.Bm @ G.Bm.T
        return BB * core

    def contribution(self, duals, t, upto=None):
        """Sum of the exact contributions at time t of the pieces k < upto ending by t."""
        out = np.zeros(self.grid.mode_count)
        upto = len(duals) if upto is None else upto
        for k in range(upto):
            d = duals[k]
            if d is None or self.gramians[k].tau > t + 1e-12:
                continue
            out += self.cross(k, t) @ d
        return out


@dataclass(eq=False)
class ControlSignal:
    """u(t) = Bm^T (s(tau_k - t) * d_k) on each [s_k, tau_k], zero elsewhere."""

    plan: ControlPlan
    duals: list
    lam: float = float("nan")
    residuals: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.duals) != len(self.plan.gramians):
            raise ValidationError("one dual coefficient vector per control interval is needed")

    @property
    def gamma(self):
        return self.plan.gamma

    def values(self, t):
        """Mode coefficients of u(t); at a shared endpoint the later piece wins."""
        return self.values_many(np.array([t]))[0]

    def values_many(self, ts):
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((ts.size, self.plan.grid.mode_count))
        for G, d in zip(self.plan.gramians, self.duals):
            inside = (ts >= G.s - 1e-12) & (ts <= G.tau + 1e-12)
            if d is None or not np.any(inside):
                continue
            lag = np.clip(G.tau - ts[inside], 0.0, None)
            out[inside] = (s_factor(lag, G.grid.modes, self.gamma) * d) @ G.Bm
        return out

    def bu_samples(self, tgrid, tables):
        """Left and right limits of the coefficients of B u on the time grid."""
        M, N = tgrid.n_steps + 1, self.plan.grid.mode_count
        left, right = np.zeros((M, N)), np.zeros((M, N))
        for G, d in zip(self.plan.gramians, self.duals):
            if d is None:
                continue
            ms, me = tgrid.index(G.s), tgrid.index(G.tau)
            lags = np.arange(me - ms, -1, -1)
            vals = (tables.s[lags] * d) @ (G.Bm @ G.Bm.T).T
            right[ms:me] = vals[:-1]
            left[ms + 1: me + 1] = vals[1:]
        return left, right

    def contribution(self, t):
        return self.plan.contribution(self.duals, t)

    def weighted_energy(self, T):
        """int_0^T (T - t)^{g-1} ||u(t)||^2 dt, piece by piece in sigma = (T - t)^g."""
        total = 0.0
        for G, d in zip(self.plan.gramians, self.duals):
            if d is None:
                continue
            if abs(G.tau - T) <= 1e-12 and G.s == 0.0:
                rule = G.rule
            else:
                rule = _sigma_piece(G.s, G.tau, T, self.gamma)
            t = T - rule.lags
            lag = np.clip(G.tau - t, 0.0, None)
            U = (s_factor(lag, G.grid.modes, self.gamma) * d) @ G.Bm
            total += float(rule.weights @ np.sum(U * U, axis=1))
        return total

    def support_vanishes_on(self, a, b, n=17):
        """True when u vanishes at n sample points of the open interval (a, b)."""
        ts = np.linspace(a, b, n + 2)[1:-1]
        return all(not np.any(self.values(t)) for t in ts)


def _sigma_piece(s, tau, T, gamma, panels_per_unit=256, order=8):
    """sigma-rule for int_s^tau (T - t)^{g-1} F(t) dt with tau <= T."""
    if tau >= T:
        return sigma_rule(s, T, gamma, panels_per_unit, order)
    lo, hi = (T - tau) ** gamma, (T - s) ** gamma
    panels = max(8, int(np.ceil(panels_per_unit * (hi - lo))))
    sig, w = composite_rule(uniform_edges(lo, hi, panels), order)
    return SigmaRule(sig ** (1.0 / gamma), w / gamma, sig, gamma)


@dataclass(eq=False)
class NodalControl:
    """A control on [0, T] given by its values at the sigma-nodes of a Gramian rule.

    Its contribution to x(T) and its weighted energy are evaluated with the
    same nodes, so the feedback law is the exact minimizer of the discrete
    cost among all nodal controls.
    """

    gramian: object
    values_at_nodes: np.ndarray

    @property
    def times(self):
        return self.gramian.tau - self.gramian.rule.lags

    def values(self, t):
        ts = self.times
        order = np.argsort(ts)
        return np.array([np.interp(t, ts[order], self.values_at_nodes[order, n])
                         for n in range(self.values_at_nodes.shape[1])])

    def bu_samples(self, tgrid, tables):
        G = self.gramian
        ts = self.times
        order = np.argsort(ts)
        U = np.column_stack([np.interp(tgrid.times, ts[order], self.values_at_nodes[order, n])
                             for n in range(self.values_at_nodes.shape[1])])
        vals = U @ G.Bm.T
        return vals, vals

    def contribution(self, t):
        G = self.gramian
        if abs(t - G.tau) > 1e-12:
            raise DomainError("nodal controls are only anchored at the end of their interval")
        S = s_factor(G.rule.lags, G.grid.modes, G.gamma)
        return ((self.values_at_nodes @ G.Bm.T) * S * G.rule.weights[:, None]).sum(axis=0)

    def weighted_energy(self, T):
        return float(self.gramian.rule.weights @ np.sum(self.values_at_nodes ** 2, axis=1))

    @classmethod
    def from_signal(cls, signal):
        G = signal.plan.gramians[0]
        d = signal.duals[0]
        S = s_factor(G.rule.lags, G.grid.modes, G.gamma)
        return cls(G, (S * d) @ G.Bm)


# ---------------------------------------------------------------------------
# Construction of the controls


def dual_coefficients(lam, g, G, sp):
    """Mode coefficients of J[R(lambda, Phi) g] and the resolvent solve record."""
    sol = solve_resolvent_eq(lam, g, G, sp)
    y = sol.z * (1.0 / lam)
    if sp.p == 2.0:
        return np.array(y.coeffs), sol
    return sp.grid.project(duality_values(y.values, sp)), sol


def free_terminal(problem, v, w, T=None):
    """C(T) v + T(T) w, the unforced state at T on the first interval."""
    tab = problem.tables
    m = problem.index(problem.tgrid.T if T is None else T)
    return SpectralField(tab.c[m] * v.coeffs + tab.tt[m] * w.coeffs, v.grid)


def linear_feedback_control(problem, v, w, x_T, lam, plan):
    """The optimal control for the linear regulator problem on [0, T].

    u(t) = B* S(T - t)* J[R(lambda, Phi) l] with l = x_T - C(T) v - T(T) w.
    Returns the control and l.
    """
    if len(plan.gramians) != 1 or plan.gramians[0].s != 0.0:
        raise ValidationError("the linear regulator uses a single control interval [0, T]")
    ell = x_T - free_terminal(problem, v, w)
    d, sol = dual_coefficients(lam, ell, plan.gramians[0], problem.sp)
    return ControlSignal(plan, [d], lam, [sol.residual]), ell


def duhamel_control_term(control, t, Bm, gamma, n_uniform=64, order=12):
    """int_0^t (t - s)^{g-1} S(t - s) B u(s) ds by graded Gauss-Jacobi quadrature.

    The control is sampled pointwise, independently of any Gramian or time
    grid, which makes this an independent check of the other routes.
    """
    r, w = weakly_singular_rule(t, gamma - 1.0, max(4, int(np.ceil(n_uniform * t))), order)
    U = control.values_many(t - r)
    S = s_factor(r, np.arange(1, Bm.shape[0] + 1), gamma)
    return ((U @ Bm.T) * S * w[:, None]).sum(axis=0)


@dataclass(frozen=True)
class IdentityCheck:
    """Both sides of x(T) - x_T = -lambda R(lambda, Phi) l and their distances.

    ``gap`` uses the mild solution whose control part at T is evaluated with
    the Gramian rule, ``quad_gap`` an independent graded quadrature of the
    control term, and ``grid_gap`` the product rule on the time grid (it
    carries the time-discretization error of the trajectory).
    """

    lhs: SpectralField
    rhs: SpectralField
    gap: float
    ell: SpectralField
    grid_gap: float
    quad_gap: float


def terminal_identity_check(problem, v, w, x_T, lam, plan):
    """Simulate with the feedback control and compare x(T) - x_T with -lambda R l."""
    from .mild import MildProblem, evaluate_mild

    prob = MildProblem(problem.fparams, problem.grid, problem.tgrid, problem.sched, v, w, problem.sp)
    u, ell = linear_feedback_control(prob, v, w, x_T, lam, plan)
    sol = solve_resolvent_eq(lam, ell, plan.gramians[0], problem.sp)
    rhs = -1.0 * sol.z
    grid = v.grid
    T = problem.tgrid.T
    xT = evaluate_mild(prob, u).values[-1]
    xT_grid = evaluate_mild(prob, u, exact_anchors=False).values[-1]
    xT_quad = free_terminal(prob, v, w).coeffs + duhamel_control_term(
        u, T, plan.gramians[0].Bm, plan.gamma)
    lhs = SpectralField(xT - x_T.coeffs, grid)

    def dist(x):
        return lp_norm(SpectralField(x - x_T.coeffs, grid) - rhs, problem.sp)

    return IdentityCheck(lhs, rhs, dist(xT), ell, dist(xT_grid), dist(xT_quad))


@dataclass(frozen=True, eq=False)
class ImpulsiveControlResult:
    control: ControlSignal
    g: list
    residual: float


def impulsive_control(problem, plan, targets, lam, trajectory, forcing_part):
    """Build u_j = B* S(tau_{j+1} - t)* J[R(lambda, Phi_j) g_j] on every control interval.

    ``trajectory`` supplies x(tau_j^-) for the impulse maps and
    ``forcing_part`` the grid samples of int_0^t (t - s)^{g-1} S(t - s) f(s) ds.
    g_0 = xi_0 - C(tau_1) psi(0) - T(tau_1) eta - I_f(tau_1) and, for j >= 1,
    g_j = xi_j - C(tau' - s_j) h_j(s_j) - T(tau' - s_j) h_j'(s_j)
          + I_f(s_j) + U_{<j}(s_j) - I_f(tau') - U_{<j}(tau'),
    where U_{<j} is the contribution of the earlier control pieces.
    """
    sched = problem.sched
    if len(targets) != sched.count + 1:
        raise ValidationError("one target per control interval is needed", "targets")
    tab = problem.tables
    grid = problem.grid
    duals, gs, res = [], [], 0.0
    for j, (s, tau) in enumerate(sched.control_intervals()):
        ms, me = problem.index(s), problem.index(tau)
        if j == 0:
            base = tab.c[me] * problem.psi0.coeffs + tab.tt[me] * problem.eta.coeffs + forcing_part[me]
        else:
            xl = SpectralField(trajectory.values[problem.index(sched.taus[j - 1])], grid)
            h = impulse_h(j, s, xl, sched).coeffs
            hp = impulse_h_prime(j, s, xl, sched).coeffs
            L = me - ms
            base = (tab.c[L] * h + tab.tt[L] * hp
                    - forcing_part[ms] - plan.contribution(duals, s, j)
                    + forcing_part[me] + plan.contribution(duals, tau, j))
        g = SpectralField(targets[j].coeffs - base, grid)
        d, sol = dual_coefficients(lam, g, plan.gramians[j], problem.sp)
        duals.append(d)
        gs.append(g)
        res = max(res, sol.residual)
    return ImpulsiveControlResult(ControlSignal(plan, duals, lam, [res]), gs, res)
