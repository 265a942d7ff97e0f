import numpy as np
import pytest

from fraccontrol.control import linear_feedback_control
from fraccontrol.errors import ConvergenceError
from fraccontrol.experiments import interval_bound_report
from fraccontrol.geometry import lp_norm
from fraccontrol.picard import delay_forcing, picard_solve
from fraccontrol.scenario import parse_scenario_text, shipped_config

COARSE = """
grid.modes = 8
numerics.steps_per_unit = 128
numerics.gramian_panels_per_unit = 64
"""


def _scenario(**overrides):
    text = open(shipped_config("impulsive")).read() + COARSE
    for k, v in overrides.items():
        text += f"\n{k.replace('__', '.')} = {v!r}"
    return parse_scenario_text(text)


def _solve(s, lam=1e-3, **kw):
    return picard_solve(s.problem, s.plan, s.targets, lam, s.history, s.law, s.theta_min, **kw)


def test_delay_free_linear_problem_takes_one_iteration():
    s = _scenario(delay__kernel="none", schedule__breakpoints=[])
    res = _solve(s)
    assert res.iterations == 1
    assert res.deltas[-1] == 0.0
    u, _ = linear_feedback_control(s.problem, s.psi0, s.eta, s.final_target, 1e-3, s.plan)
    assert np.allclose(res.control.duals[0], u.duals[0], rtol=1e-12)


def test_inactive_law_gives_zero_forcing():
    s = _scenario(delay__kernel="none")
    left, right = delay_forcing(s.free, s.history, s.law, s.sp, s.theta_min)
    assert not left.any() and not right.any()


def test_weak_memory_converges_fast():
    ratios = {}
    for scale in (1e-3, 1e-6):
        res = _solve(_scenario(delay__scale=scale))
        assert res.iterations <= 3 if scale == 1e-6 else res.iterations <= 5
        ratios[scale] = res.deltas[1] / res.deltas[0]
    # the contraction factor scales with the memory constant
    assert ratios[1e-6] < 1e-2 * ratios[1e-3]


def test_shipped_scenario_contracts_geometrically(impulsive_scenario):
    s = impulsive_scenario
    res = _solve(s, lam=1e-3, tol=s.numerics.picard_tol)
    d = [x for x in res.deltas if x > 0]
    assert len(d) >= 2
    r = [b / a for a, b in zip(d, d[1:])]
    assert max(r) < 0.5
    assert res.deltas[-1] < s.numerics.picard_tol


def test_g_norms_respect_interval_bounds():
    s = _scenario()
    for lam in (1e-1, 1e-3):
        res = _solve(s, lam=lam)
        radius = max(s.sp.norm_coeffs(v) for v in res.trajectory.values)
        N, C = interval_bound_report(s, lam, radius)
        for j, g in enumerate(res.g):
            assert lp_norm(g, s.sp) <= C[j]


def test_non_convergence_raises():
    s = _scenario()
    with pytest.raises(ConvergenceError) as ei:
        _solve(s, max_iter=1, tol=1e-30)
    assert len(ei.value.history) == 1
    assert ei.value.residual == ei.value.history[-1] > 0
