"""Time grids and piecewise-continuous trajectories."""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] containing every impulse breakpoint."""

    T: float
    n_steps: int

    @classmethod
    def aligned(cls, T, breakpoints=(), steps_per_unit=512, search=64):
        """Smallest grid with at least ``steps_per_unit`` steps per unit that hits all breakpoints."""
        base = max(1, int(math.ceil(T * steps_per_unit - 1e-9)))
        for n in range(base, search * base + 1):
            ok = all(abs(b / T * n - round(b / T * n)) < 1e-9 * n for b in breakpoints)
            if ok:
                return cls(float(T), n)
        raise ValidationError(
            "breakpoints cannot be aligned with a uniform time grid", "schedule.breakpoints"
        )

    @property
    def dt(self):
        return self.T / self.n_steps

    @cached_property
    def times(self):
        t = np.linspace(0.0, self.T, self.n_steps + 1)
        t.setflags(write=False)
        return t

    def index(self, t):
        k = t / self.dt
        i = int(round(k))
        if abs(k - i) > 1e-7:
            raise ValidationError(f"time {t} is not on the grid")
        return i


@dataclass
class Trajectory:
    """Mode coefficients of x(t) on a uniform time grid.

    ``values[m]`` is x(t_m), left-continuous at impulse onsets, and
    ``right_values`` maps a grid index to the right limit where the state
    jumps.
    """

    grid: TimeGrid
    values: np.ndarray
    right_values: dict = field(default_factory=dict)

    @property
    def times(self):
        return self.grid.times

    def right(self, m):
        return self.right_values.get(m, self.values[m])

    @cached_property
    def knots(self):
        """Knot times and coefficients; a jump contributes two coincident knots."""
        ts, cs = [], []
        for m, t in enumerate(self.grid.times):
            ts.append(t)
            cs.append(self.values[m])
            if m in self.right_values:
                ts.append(t)
                cs.append(self.right_values[m])
        return np.array(ts), np.array(cs)

    def evaluate(self, t):
        """Left-continuous piecewise-linear value at time t in [0, T]."""
        if t < -1e-12 or t > self.grid.T + 1e-12:
            raise DomainError(f"time {t} outside [0, {self.grid.T}]")
        dt = self.grid.dt
        k = t / dt
        m = int(round(k))
        if abs(k - m) < 1e-9:
            return self.values[min(max(m, 0), self.grid.n_steps)].copy()
        m = int(math.floor(k))
        w = k - m
        return (1 - w) * self.right(m) + w * self.values[m + 1]

    def samples_up_to(self, t):
        """Knots on [0, t] ending with the value at t (without its right limit)."""
        ts, cs = self.knots
        # left-continuity: a right limit sitting exactly at t is excluded
        n = np.searchsorted(ts, t + 1e-12 * max(1.0, self.grid.T), side="right")
        kt, kc = ts[:n], cs[:n]
        if n and abs(kt[-1] - t) < 1e-12 * max(1.0, self.grid.T):
            if n >= 2 and kt[-2] == kt[-1]:
                kt, kc = kt[:-1], kc[:-1]
            return kt, kc
        return np.append(kt, t), np.vstack([kc, self.evaluate(t)[None, :]])

    def sup_distance(self, other, norm):
        """max over grid (and right limits) of norm(x(t) - y(t))."""
        d = max(norm(a - b) for a, b in zip(self.values, other.values))
        for m in set(self.right_values) | set(other.right_values):
            d = max(d, norm(self.right(m) - other.right(m)))
        return d
