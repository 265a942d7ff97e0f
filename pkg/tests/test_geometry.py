import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fraccontrol.errors import DomainError, ValidationError
from fraccontrol.geometry import (HistorySegment, LebesgueSpace, dual_norm, duality_map,
                                  lp_norm, pairing, phase_bound_holds, phase_constants,
                                  phase_norm, phase_tail_bound, segment_at, theta_window)
from fraccontrol.spectral import SpatialGrid, SpectralField
from fraccontrol.trajectory import TimeGrid, Trajectory

GRID = SpatialGrid(16)
coeff_lists = st.lists(st.floats(-2.0, 2.0), min_size=16, max_size=16)


def _constant_field(c, grid=GRID):
    return SpectralField.from_values(np.full(grid.n_points, c), grid)


def test_lp_norm_basic_values():
    sp = LebesgueSpace(2.0, GRID)
    assert lp_norm(SpectralField.zeros(GRID), sp) == 0.0
    assert lp_norm(SpectralField.mode(1, GRID), sp) == pytest.approx(1.0, abs=1e-13)
    for p in (2.0, 3.0, 4.0, 7.5):
        got = lp_norm(_constant_field(0.7), LebesgueSpace(p, GRID))
        assert got == pytest.approx(0.7 * math.pi ** (1 / p), rel=1e-13)


def test_space_requires_p_at_least_two():
    with pytest.raises(ValidationError):
        LebesgueSpace(1.5, GRID)
    assert LebesgueSpace(4.0, GRID).q == pytest.approx(4 / 3)


def test_duality_map_closed_forms():
    sp2, sp4 = LebesgueSpace(2.0, GRID), LebesgueSpace(4.0, GRID)
    x = SpectralField.from_coeffs(np.linspace(1, 0, 16), GRID)
    assert duality_map(x, sp2) is x
    assert np.allclose(duality_map(SpectralField.zeros(GRID), sp4).values, 0.0)
    # constant c, p = 4: ||c||^{-2} c^3 = c pi^{-1/2}
    y = duality_map(_constant_field(1.3), sp4)
    assert np.allclose(y.values, 1.3 / math.sqrt(math.pi), rtol=1e-13)


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
@given(coeff_lists)
def test_duality_identities(p, c):
    sp = LebesgueSpace(p, GRID)
    x = SpectralField.from_coeffs(c, GRID)
    nx = lp_norm(x, sp)
    jx = duality_map(x, sp)
    assert abs(pairing(x, jx) - nx**2) <= 1e-7 * nx**2 + 1e-300
    assert abs(dual_norm(jx, sp) - nx) <= 1e-7 * nx + 1e-300


@pytest.mark.parametrize("p", [3.0, 4.0])
@given(coeff_lists, coeff_lists, st.floats(0.01, 50.0))
def test_duality_monotone_and_homogeneous(p, a, b, c):
    sp = LebesgueSpace(p, GRID)
    x = SpectralField.from_coeffs(a, GRID)
    y = SpectralField.from_coeffs(b, GRID)
    jx, jy = duality_map(x, sp), duality_map(y, sp)
    assert pairing(x - y, SpectralField.from_values(jx.values - jy.values, GRID)) >= -1e-9
    jcx = duality_map(x * c, sp)
    assert np.allclose(jcx.values, c * jx.values, atol=1e-9 * max(1.0, c))


def test_theta_window():
    th = theta_window(-1.0, 1e-10, 2.0)
    assert th == pytest.approx(math.log(1e-10 / 2.0))
    assert theta_window(-0.01, 1e-10, 1.0) == -50.0
    assert theta_window(-1.0, 1e-10, 0.0) == -1.0


def test_phase_norm_of_constant_segments():
    sp = LebesgueSpace(2.0, GRID)
    x = SpectralField.mode(3, GRID)
    seg = HistorySegment.constant(x, -40.0, 5, weight_rate=-1.0)
    assert phase_norm(seg, sp) == pytest.approx(1.0, abs=1e-12)
    for a in (-0.5, -2.0, -3.7):
        lo = theta_window(a, 1e-12, 1.0)
        seg = HistorySegment.constant(x * 2.0, lo, 3, weight_rate=a)
        assert phase_norm(seg, sp) == pytest.approx(2.0 / abs(a), rel=1e-10)
        tail = phase_tail_bound(seg, 2.0)
        assert tail == pytest.approx(2.0 * math.exp(-abs(a) * -lo) / abs(a), rel=1e-12)
        assert phase_norm(seg, sp) + tail == pytest.approx(2.0 / abs(a), rel=1e-12)
    zero = HistorySegment.constant(SpectralField.zeros(GRID), -10.0)
    assert phase_norm(zero, sp) == 0.0


def test_history_validation():
    with pytest.raises(ValidationError):
        HistorySegment(np.array([-1.0, -0.5]), np.zeros((2, 16)), GRID)
    with pytest.raises(ValidationError):
        HistorySegment(np.array([-1.0, 0.0]), np.zeros((2, 16)), GRID, weight_rate=0.5)
    seg = HistorySegment.constant(SpectralField.mode(1, GRID), -2.0)
    with pytest.raises(DomainError):
        seg.at(-3.0)


def _trajectory(fn, T=1.0, n=64):
    tg = TimeGrid(T, n)
    return Trajectory(tg, np.array([fn(t) for t in tg.times]))


def test_segment_at_zero_returns_history():
    hist = HistorySegment.constant(SpectralField.mode(1, GRID), -5.0, 11)
    assert segment_at(None, hist, 0.0) is hist
    traj = _trajectory(lambda t: hist.values[-1])
    with pytest.raises(DomainError):
        segment_at(traj, hist, 1.5, -1.0)


def test_segment_of_constant_continuation_is_constant():
    x = SpectralField.from_coeffs(np.linspace(1, 2, 16), GRID)
    hist = HistorySegment.constant(x, -5.0, 11)
    traj = _trajectory(lambda t: x.coeffs)
    seg = segment_at(traj, hist, 0.6, -4.0)
    assert np.allclose(seg.values, x.coeffs[None, :])
    assert seg.theta[0] == pytest.approx(-4.0)


def test_segment_interpolates_trajectory():
    omega = np.arange(1, 17) * 0.3
    fn = lambda t: np.sin(omega * t)
    hist = HistorySegment.from_function(lambda th: np.sin(omega * th), GRID, -3.0, 301)
    errs = []
    for n in (32, 64, 128):
        traj = _trajectory(fn, 1.0, n)
        t = 0.7
        seg = segment_at(traj, hist, t, -2.0)
        errs.append(np.max(np.abs(seg.at(-t / 2) - fn(t / 2))))
    # linear interpolation error bound dt^2 / 8 max |x''|
    for n, e in zip((32, 64, 128), errs):
        assert e <= (1.0 / n) ** 2 / 8 * np.max(omega) ** 2 * (1 + 1e-9)
    assert errs[2] < 1e-3


def test_phase_bound_zero_case():
    sp = LebesgueSpace(2.0, GRID)
    hist = HistorySegment.constant(SpectralField.zeros(GRID), -10.0)
    traj = _trajectory(lambda t: np.zeros(16))
    consts = phase_constants(hist, 1.0, sp, -1.0)
    assert phase_bound_holds(traj, hist, 0.5, consts, sp)


def test_phase_bound_constant_history():
    sp = LebesgueSpace(2.0, GRID)
    x = SpectralField.mode(2, GRID, 1.5)
    hist = HistorySegment.constant(x, -36.0, 3)
    traj = _trajectory(lambda t: x.coeffs)
    consts = phase_constants(hist, 1.0, sp, -1.0, s_range=(-1.0, 0.0), n_samples=5,
                             theta_min=-35.0)
    assert consts.K2 == 1.0 and consts.Q_sup == 1.0
    for s in (-0.5, 0.0, 0.3, 1.0):
        assert phase_bound_holds(traj, hist, s, consts, sp, theta_min=-35.0)


@given(st.integers(0, 2**31 - 1))
def test_phase_bound_random_campaign(seed):
    rng = np.random.default_rng(seed)
    sp = LebesgueSpace(float(rng.choice([2.0, 4.0])), GRID)
    a = -float(rng.uniform(0.5, 2.0))
    lo = theta_window(a, 1e-10, 10.0)
    c0 = rng.normal(size=16) / np.arange(1, 17)
    rate = rng.uniform(0, 1)
    hist = HistorySegment.from_function(lambda th: np.exp(rate * th) * c0, GRID, lo - 1.0, 200,
                                        weight_rate=a)
    amp = rng.normal(size=(3, 16))
    traj = _trajectory(lambda t: c0 + amp[0] * t + amp[1] * np.sin(5 * t) + amp[2] * t * t)
    consts = phase_constants(hist, 1.0, sp, a, s_range=(-1.0, 0.0), n_samples=9, theta_min=lo)
    s = float(rng.uniform(0.0, 1.0))
    assert phase_bound_holds(traj, hist, s, consts, sp, theta_min=lo)
