"""Delayed forcing along a trajectory and the Picard iteration for the controlled system."""
from dataclasses import dataclass, field

import numpy as np

from .control import impulsive_control
from .errors import ConvergenceError
from .geometry import segment_at
from .mild import convolve, solve_mild
from .schedule import delay_functional_f, delay_rho
from .spectral import SpectralField


def delay_forcing(trajectory, history, law, sp, theta_min):
    """Left and right limits of f(t, x_{rho(t, x_t)}) at every grid time.

    ``history`` must cover [theta_min - beta_sup, 0].  The right limit differs
    from the left one only where the state jumps.
    """
    tg = trajectory.grid
    M, N = tg.n_steps + 1, sp.grid.mode_count
    left = np.zeros((M, N))
    if not law.active:
        return left, left.copy()

    def f_at(t, x_now):
        rho = t - law.beta(sp.norm_coeffs(x_now))
        traj = trajectory if rho > 0 else None
        seg = segment_at(traj, history, min(rho, tg.T), theta_min)
        return delay_functional_f(seg, law).coeffs

    for m, t in enumerate(tg.times):
        left[m] = f_at(float(t), trajectory.values[m])
    right = left.copy()
    for m, xr in trajectory.right_values.items():
        right[m] = f_at(float(tg.times[m]), xr)
    return left, right


def delay_rho_at(trajectory, history, law, sp, t, theta_min=None):
    """rho(t, x_t) evaluated through the segment x_t."""
    seg = segment_at(trajectory if t > 0 else None, history, t, theta_min)
    return delay_rho(t, seg, law, sp)


@dataclass
class PicardResult:
    trajectory: object
    control: object
    iterations: int
    deltas: list = field(default_factory=list)
    residual: float = 0.0
    g: list = field(default_factory=list)

    @property
    def final_delta(self):
        return self.deltas[-1] if self.deltas else 0.0

    def ratios(self):
        d = [x for x in self.deltas if x > 0]
        return [b / a for a, b in zip(d, d[1:])]


def picard_map(problem, plan, targets, lam, x, history, law, theta_min):
    """One application of the solution operator F_lambda to the trajectory x."""
    tab = problem.tables
    forcing = delay_forcing(x, history, law, problem.sp, theta_min)
    I_f = convolve(tab, *forcing)
    built = impulsive_control(problem, plan, targets, lam, x, I_f)
    taus = problem.sched.taus
    left = [SpectralField(x.values[problem.index(t)], problem.grid) for t in taus]
    new = solve_mild(problem, built.control, forcing, impulse_left=left).trajectory
    return new, built


def picard_solve(problem, plan, targets, lam, history, law, theta_min, x0=None,
                 tol=1e-8, max_iter=200):
    """Successive substitution x^{k+1} = F_lambda(x^k) from the free trajectory.

    Stops when the sup over the grid (and right limits) of ||x^{k+1} - x^k||_X
    falls below ``tol``.  ``iterations`` counts the sweeps after the first,
    so a map that does not depend on x converges in one iteration.
    """
    from .mild import free_trajectory

    x = free_trajectory(problem) if x0 is None else x0
    norm = problem.sp.norm_coeffs
    deltas = []
    for _ in range(max_iter):
        new, built = picard_map(problem, plan, targets, lam, x, history, law, theta_min)
        delta = new.sup_distance(x, norm)
        deltas.append(delta)
        x = new
        if delta < tol:
            return PicardResult(x, built.control, len(deltas) - 1, deltas, built.residual, built.g)
    raise ConvergenceError(
        f"Picard iteration did not reach {tol:g} in {max_iter} sweeps", deltas[-1], deltas
    )
