import numpy as np
import pytest

from fraccontrol.control import (ControlPlan, ControlSignal, duhamel_control_term,
                                 free_terminal, impulsive_control, linear_feedback_control,
                                 terminal_identity_check)
from fraccontrol.errors import ValidationError
from fraccontrol.geometry import LebesgueSpace, lp_norm
from fraccontrol.gramian import solve_resolvent_eq
from fraccontrol.mild import MildProblem, convolve, free_trajectory, solve_mild
from fraccontrol.schedule import ImpulseSchedule, impulse_h, impulse_h_prime, trigonometric_kernel
from fraccontrol.spectral import (ControlOperatorSpec, FractionalParams, SpatialGrid,
                                  SpectralField, s_factor)
from fraccontrol.trajectory import TimeGrid

GRID = SpatialGrid(8)
SP = LebesgueSpace(2.0, GRID)
IDENTITY = ControlOperatorSpec()


def _setup(alpha=1.5, bp=(), kernels=None, p=2.0, psi=None, eta=None):
    sched = ImpulseSchedule.from_breakpoints(1.0, bp, kernels)
    tg = TimeGrid.aligned(1.0, sched.breakpoints, 256)
    fp = FractionalParams(alpha)
    psi = psi if psi is not None else SpectralField.from_coeffs(np.linspace(0.6, 0.1, 8), GRID)
    eta = eta if eta is not None else SpectralField.from_coeffs(np.linspace(0, 0.3, 8), GRID)
    sp = LebesgueSpace(p, GRID)
    prob = MildProblem(fp, GRID, tg, sched, psi, eta, sp)
    plan = ControlPlan.for_schedule(sched, IDENTITY, fp, GRID)
    return prob, plan


TARGET = SpectralField.from_coeffs([0.3, -0.2, 0.1, 0.05, 0, 0, 0, 0], GRID)


def test_ell_with_zero_initial_data():
    z = SpectralField.zeros(GRID)
    prob, plan = _setup(psi=z, eta=z)
    _, ell = linear_feedback_control(prob, z, z, TARGET, 1e-2, plan)
    assert np.allclose(ell.coeffs, TARGET.coeffs)


def test_free_target_gives_zero_control():
    prob, plan = _setup()
    xT = free_terminal(prob, prob.psi0, prob.eta)
    u, ell = linear_feedback_control(prob, prob.psi0, prob.eta, xT, 1e-3, plan)
    assert np.allclose(ell.coeffs, 0.0)
    assert not np.any(u.values_many(np.linspace(0, 1, 11)))


def test_single_mode_feedback_formula():
    z = SpectralField.zeros(GRID)
    prob, plan = _setup(psi=z, eta=z)
    lam = 1e-3
    x_T = SpectralField.mode(3, GRID, 0.4)
    u, ell = linear_feedback_control(prob, z, z, x_T, lam, plan)
    phi = plan.gramians[0].diagonal[2]
    ts = np.linspace(0.0, 1.0, 9)
    ref = s_factor(1.0 - ts, [3], 0.75)[:, 0] * 0.4 / (lam + phi)
    got = u.values_many(ts)
    assert np.allclose(got[:, 2], ref, rtol=1e-12)
    assert np.allclose(np.delete(got, 2, axis=1), 0.0)


def test_linear_regulator_needs_single_interval():
    prob, plan = _setup(bp=(0.5, 0.625), kernels=[trigonometric_kernel()])
    with pytest.raises(ValidationError):
        linear_feedback_control(prob, prob.psi0, prob.eta, TARGET, 1e-2, plan)


def test_terminal_identity_with_zero_ell():
    prob, plan = _setup()
    xT = free_terminal(prob, prob.psi0, prob.eta)
    chk = terminal_identity_check(prob, prob.psi0, prob.eta, xT, 1e-3, plan)
    assert np.allclose(chk.lhs.coeffs, 0.0, atol=1e-14) and np.allclose(chk.rhs.coeffs, 0.0)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_terminal_identity_routes(alpha):
    prob, plan = _setup(alpha=alpha)
    prev = np.inf
    for lam in (1e-1, 1e-3, 1e-5):
        chk = terminal_identity_check(prob, prob.psi0, prob.eta, TARGET, lam, plan)
        ell = lp_norm(chk.ell, SP)
        assert chk.gap <= 1e-4 * (1 + ell)
        assert chk.quad_gap <= 1e-10 * (1 + ell)
        # per mode: x(T) - x_T = -lambda / (lambda + Phi_n) l_n
        phi = plan.gramians[0].diagonal
        assert np.allclose(chk.rhs.coeffs, -lam / (lam + phi) * chk.ell.coeffs, rtol=1e-10)
        err = lp_norm(chk.lhs, SP)
        assert err <= prev
        prev = err


def test_terminal_identity_in_l4():
    prob, plan = _setup(p=4.0)
    chk = terminal_identity_check(prob, prob.psi0, prob.eta, TARGET, 1e-3, plan)
    assert chk.quad_gap <= 1e-10 * (1 + lp_norm(chk.ell, prob.sp))


def test_impulsive_control_reduces_to_linear():
    prob, plan = _setup()
    lin, ell = linear_feedback_control(prob, prob.psi0, prob.eta, TARGET, 1e-3, plan)
    x0 = free_trajectory(prob)
    zero = np.zeros((prob.tgrid.n_steps + 1, 8))
    imp = impulsive_control(prob, plan, [TARGET], 1e-3, x0, zero)
    assert np.allclose(imp.g[0].coeffs, ell.coeffs, atol=1e-15)
    assert np.allclose(imp.control.duals[0], lin.duals[0], atol=1e-14)


def _impulsive_setup():
    return _setup(bp=(0.5, 0.625), kernels=[trigonometric_kernel(0.1, 0.5, 2)])


def test_free_targets_give_zero_control():
    prob, plan = _impulsive_setup()
    x0 = free_trajectory(prob)
    targets = [SpectralField(x0.values[prob.index(0.5)], GRID),
               SpectralField(x0.values[-1], GRID)]
    zero = np.zeros((prob.tgrid.n_steps + 1, 8))
    res = impulsive_control(prob, plan, targets, 1e-3, x0, zero)
    assert all(np.max(np.abs(g.coeffs)) < 1e-14 for g in res.g)
    assert np.max(np.abs(res.control.values_many(np.linspace(0, 1, 41)))) < 1e-10


def test_two_interval_recursion_by_hand():
    prob, plan = _impulsive_setup()
    lam = 1e-3
    x0 = free_trajectory(prob)
    xi0 = SpectralField.from_coeffs(np.linspace(0.2, -0.1, 8), GRID)
    xi1 = TARGET
    zero = np.zeros((prob.tgrid.n_steps + 1, 8))
    res = impulsive_control(prob, plan, [xi0, xi1], lam, x0, zero)

    # first interval: g_0 = xi_0 - C(tau_1) psi - T(tau_1) eta
    g0 = xi0 - free_terminal(prob, prob.psi0, prob.eta, 0.5)
    assert np.allclose(res.g[0].coeffs, g0.coeffs, atol=1e-15)
    d0 = solve_resolvent_eq(lam, g0, plan.gramians[0], SP).z.coeffs / lam
    assert np.allclose(res.control.duals[0], d0, rtol=1e-12)

    # second interval: restart from h(s_1) and subtract the first piece's
    # influence between s_1 and T, computed by pointwise quadrature; the
    # kink of u at tau_1 limits that quadrature, hence the fine panels
    first = ControlSignal(plan, [d0, None])
    xl = SpectralField(x0.values[prob.index(0.5)], GRID)
    h = impulse_h(1, 0.625, xl, prob.sched).coeffs
    hp = impulse_h_prime(1, 0.625, xl, prob.sched).coeffs
    tab = prob.tables
    L = prob.index(1.0) - prob.index(0.625)
    U_s = duhamel_control_term(first, 0.625, plan.gramians[0].Bm, 0.75, n_uniform=2048)
    U_T = duhamel_control_term(first, 1.0, plan.gramians[0].Bm, 0.75, n_uniform=2048)
    g1 = xi1.coeffs - tab.c[L] * h - tab.tt[L] * hp + U_s - U_T
    assert np.allclose(res.g[1].coeffs, g1, atol=1e-10)


def test_control_support_and_anchors():
    prob, plan = _impulsive_setup()
    lam = 1e-2
    x0 = free_trajectory(prob)
    xi0 = SpectralField.from_coeffs(np.linspace(0.2, -0.1, 8), GRID)
    zero = np.zeros((prob.tgrid.n_steps + 1, 8))
    res = impulsive_control(prob, plan, [xi0, TARGET], lam, x0, zero)
    assert res.control.support_vanishes_on(0.5, 0.625)
    x = solve_mild(prob, res.control, impulse_left=[SpectralField(x0.values[prob.index(0.5)], GRID)]).trajectory
    for j, (xi, end) in enumerate([(xi0, 0.5), (TARGET, 1.0)]):
        z = solve_resolvent_eq(lam, res.g[j], plan.gramians[j], SP).z
        gap = x.values[prob.index(end)] - xi.coeffs + z.coeffs
        assert np.max(np.abs(gap)) < 1e-13


def test_bu_samples_match_pointwise_values():
    prob, plan = _impulsive_setup()
    sig = ControlSignal(plan, [np.ones(8), np.linspace(1, 2, 8)])
    left, right = sig.bu_samples(prob.tgrid, prob.tables)
    m = prob.index(0.25)
    assert np.allclose(left[m], sig.values(0.25), atol=1e-13)
    assert np.allclose(right[prob.index(0.625)], sig.values(0.625), atol=1e-13)
    assert np.allclose(right[prob.index(0.5)], 0.0)
    I = convolve(prob.tables, left, right)
    assert np.allclose(I[-1], sig.contribution(1.0), atol=1e-5)
