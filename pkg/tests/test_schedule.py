import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fraccontrol.errors import DomainError, ValidationError
from fraccontrol.geometry import HistorySegment, LebesgueSpace, lp_norm, phase_norm
from fraccontrol.schedule import (DelayLaw, ImpulseKernel, ImpulseSchedule, constant_beta,
                                  delay_functional_f, delay_rho, exponential_history,
                                  exponential_memory, impulse_bounds, impulse_h,
                                  impulse_h_prime, rational_beta, trigonometric_kernel,
                                  zero_kernel, zero_memory)
from fraccontrol.spectral import SpatialGrid, SpectralField

GRID = SpatialGrid(16)
SP = LebesgueSpace(2.0, GRID)


def _seg_with_head_norm(norm):
    x = SpectralField.mode(1, GRID, norm)
    return HistorySegment.constant(x, -30.0, 4)


def test_delay_rho_profiles():
    seg = _seg_with_head_norm(1.0)
    assert delay_rho(0.7, seg, DelayLaw(), SP) == 0.7
    beta, sup = constant_beta(0.25)
    assert delay_rho(0.7, seg, DelayLaw(beta=beta, beta_sup=sup), SP) == pytest.approx(0.45)
    beta, sup = rational_beta(1.0)
    assert delay_rho(0.7, seg, DelayLaw(beta=beta, beta_sup=sup), SP) == pytest.approx(0.2)
    with pytest.raises(ValidationError):
        rational_beta(-1.0)


def test_delay_law_validation():
    with pytest.raises(ValidationError):
        DelayLaw(weight_rate=0.0)
    with pytest.raises(ValidationError):
        exponential_memory(1.0, 0.5, -1.0)
    assert not DelayLaw().active


def test_delay_functional_closed_forms():
    x = SpectralField.from_coeffs(np.linspace(1, -1, 16), GRID)
    seg = HistorySegment.constant(x, -40.0, 3)
    assert np.allclose(delay_functional_f(seg, DelayLaw(zero_memory())).coeffs, 0.0)
    law = DelayLaw(exponential_memory(1.0, 1.0, -1.0))
    # int_{-inf}^0 e^{theta} dtheta = 1, less the truncated tail e^{-40}
    assert np.allclose(delay_functional_f(seg, law).coeffs, x.coeffs, atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_delay_functional_bound(seed):
    rng = np.random.default_rng(seed)
    scale, decay = rng.uniform(-2, 2), rng.uniform(1.0, 3.0)
    law = DelayLaw(exponential_memory(scale, decay, -1.0))
    th = np.sort(np.r_[rng.uniform(-25, 0, 60), -25.0, 0.0])
    vals = rng.normal(size=(th.size, 16)) / np.arange(1, 17)
    seg = HistorySegment(th, vals, GRID)
    f = delay_functional_f(seg, law)
    assert lp_norm(f, SP) <= law.kernel.L * phase_norm(seg, SP) * (1 + 1e-9) + 1e-14


def test_impulse_maps():
    sched = ImpulseSchedule.from_breakpoints(1.0, (0.4, 0.6), [zero_kernel()])
    x = SpectralField.from_coeffs(np.ones(16), GRID)
    assert np.allclose(impulse_h(1, 0.5, x, sched).coeffs, 0.0)
    sine = ImpulseKernel(lambda t, XI, Z: np.sin(XI) + 0.0 * Z, lambda t, XI, Z: 0.0 * XI * Z)
    sched = ImpulseSchedule.from_breakpoints(1.0, (0.4, 0.6), [sine])
    h = impulse_h(1, 0.5, SpectralField.zeros(GRID), sched)
    # pi sin(xi) = pi sqrt(pi / 2) w_1
    ref = np.zeros(16)
    ref[0] = math.pi * math.sqrt(math.pi / 2)
    assert np.allclose(h.coeffs, ref, atol=1e-12)
    assert np.allclose(impulse_h_prime(1, 0.5, x, sched).coeffs, 0.0)
    with pytest.raises(DomainError):
        impulse_h(1, 0.7, x, sched)


def test_impulse_with_zero_state_integrates_kernel():
    ker = trigonometric_kernel(0.3, 1.0, 2)
    sched = ImpulseSchedule.from_breakpoints(1.0, (0.4, 0.6), [ker])
    h = impulse_h(1, 0.5, SpectralField.zeros(GRID), sched)
    ref = np.zeros(16)
    ref[1] = 0.3 * 1.5 * math.pi * math.sqrt(math.pi / 2)
    assert np.allclose(h.coeffs, ref, atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_impulse_bounds_dominate(seed):
    rng = np.random.default_rng(seed)
    ker = trigonometric_kernel(rng.uniform(-1, 1), rng.uniform(-1, 1), int(rng.integers(1, 5)))
    sched = ImpulseSchedule.from_breakpoints(1.0, (0.3, 0.5), [ker])
    kappas, thetas = impulse_bounds(sched, SP)
    assert all(np.isfinite(kappas)) and all(np.isfinite(thetas))
    x = SpectralField.from_coeffs(rng.normal(size=16) * 3, GRID)
    t = float(rng.uniform(0.3, 0.5))
    assert lp_norm(impulse_h(1, t, x, sched), SP) <= kappas[0] * (1 + 1e-9)
    assert lp_norm(impulse_h_prime(1, t, x, sched), SP) <= thetas[0] * (1 + 1e-9)


@pytest.mark.parametrize("bp", [(0.6, 0.4), (0.0, 0.2), (0.5, 1.0), (0.3, 0.5, 0.5, 0.7),
                                (0.3,)])
def test_schedule_rejects_bad_breakpoints(bp):
    kernels = [zero_kernel() for _ in range(len(bp) // 2)]
    with pytest.raises(ValidationError) as err:
        ImpulseSchedule.from_breakpoints(1.0, bp, kernels)
    assert err.value.key == "schedule.breakpoints"


def test_schedule_structure():
    sched = ImpulseSchedule.from_breakpoints(2.0, (0.5, 0.75, 1.25, 1.25))
    assert sched.count == 2
    assert sched.control_intervals() == [(0.0, 0.5), (0.75, 1.25), (1.25, 2.0)]
    assert sched.breakpoints == (0.5, 0.75, 1.25, 1.25)


def test_exponential_history():
    x = SpectralField.mode(2, GRID)
    hist = exponential_history(x, 0.5, -4.0, spacing=0.25)
    assert hist.theta[0] == -4.0 and hist.theta[-1] == 0.0
    assert np.allclose(hist.at(-2.0), math.exp(-1.0) * x.coeffs)
    with pytest.raises(ValidationError):
        exponential_history(x, -1.0, -4.0)
