"""Scenario configuration: flat ``section.key = value`` text files.

Values are Python literals (numbers, strings, lists, dicts).  Function-valued
entries are chosen from built-in families by name and parameterized by
numbers, e.g. ``delay.kernel = "exponential"`` with ``delay.scale`` and
``delay.decay``.  Every key has a default; unknown keys are rejected.
"""
import ast
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .geometry import LebesgueSpace, lp_norm, phase_constants
from .schedule import (DelayLaw, ImpulseSchedule, constant_beta, exponential_history,
                       exponential_memory, history_window, rational_beta, trigonometric_kernel,
                       zero_kernel, zero_memory)
from .spectral import (ControlOperatorSpec, FractionalParams, SpatialGrid, SpectralField,
                       exponential_kernel)
from .trajectory import TimeGrid

DEFAULTS = {
    "fractional.alpha": 1.5,
    "fractional.cosine_bound": 1.0,
    "grid.modes": 32,
    "grid.points": None,
    "space.p": 2.0,
    "control.kind": "identity",
    "control.kernel_scale": 1.0,
    "control.kernel_rate": 1.0,
    "time.horizon": 1.0,
    "schedule.breakpoints": [],
    "impulse.kernel": "trigonometric",
    "impulse.amplitude": 0.05,
    "impulse.rate": 0.0,
    "impulse.wavenumber": 1,
    "delay.kernel": "none",
    "delay.scale": 0.0,
    "delay.decay": 1.0,
    "delay.beta": "zero",
    "delay.beta_scale": 0.0,
    "delay.weight_rate": -1.0,
    "delay.tail_tol": 1e-10,
    "initial.psi": {1: 1.0},
    "initial.psi_rate": 0.0,
    "initial.eta": {},
    "targets.final": {1: 0.5},
    "targets.intermediate": "free",
    "lambda.grid": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
    "numerics.steps_per_unit": 512,
    "numerics.gramian_panels_per_unit": 256,
    "numerics.gl_order": 8,
    "numerics.picard_tol": 1e-8,
    "numerics.picard_max_iter": 200,
    "numerics.history_spacing": 1.0 / 64,
    "cnd.delta": 0.0,
    "cnd.zeta": 0.0,
    "seed": 0,
}


class ScenarioError(ValidationError):
    """Invalid configuration; ``errors`` lists (key, message) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        msg = "; ".join(f"{k}: {m}" for k, m in self.errors)
        super().__init__(msg, self.errors[0][0] if self.errors else None)


@dataclass(frozen=True)
class Numerics:
    steps_per_unit: int = 512
    gramian_panels_per_unit: int = 256
    gl_order: int = 8
    picard_tol: float = 1e-8
    picard_max_iter: int = 200
    history_spacing: float = 1.0 / 64


def parse_text(text):
    """Key/value pairs of a config text (later keys override earlier ones)."""
    out, errors = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not _has_string_hash(raw) else _strip_comment(raw)
        if not line:
            continue
        if "=" not in line:
            errors.append((f"line {lineno}", "expected 'key = value'"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            errors.append((key, f"cannot parse value {value!r}"))
    if errors:
        raise ScenarioError(errors)
    return out


def _has_string_hash(line):
    return "#" in line and ("'" in line or '"' in line)


def _strip_comment(line):
    quote = None
    for i, ch in enumerate(line):
        if ch in "'\"":
            quote = None if quote == ch else (ch if quote is None else quote)
        elif ch == "#" and quote is None:
            return line[:i].strip()
    return line.strip()


def _mode_dict(value, grid, key):
    if not isinstance(value, dict):
        raise ValidationError("expected a {mode: coefficient} mapping", key)
    c = np.zeros(grid.mode_count)
    for n, v in value.items():
        if not isinstance(n, int) or not 1 <= n <= grid.mode_count:
            raise ValidationError(f"mode index {n!r} outside 1..{grid.mode_count}", key)
        c[n - 1] = float(v)
    return SpectralField(c, grid)


def _per_impulse(value, count, key):
    if isinstance(value, (list, tuple)):
        if len(value) != count:
            raise ValidationError(f"expected {count} entries, one per impulse", key)
        return list(value)
    return [value] * count


@dataclass(eq=False)
class Scenario:
    """A fully validated problem description."""

    fparams: FractionalParams
    grid: SpatialGrid
    sp: LebesgueSpace
    Bspec: ControlOperatorSpec
    sched: ImpulseSchedule
    law: DelayLaw
    psi0: SpectralField
    psi_rate: float
    eta: SpectralField
    final_target: SpectralField
    intermediate: object
    lambda_grid: tuple
    numerics: Numerics
    cnd_delta: float = 0.0
    cnd_zeta: float = 0.0
    seed: int = 0
    config: dict = field(default_factory=dict)
    source_hash: str = ""

    @property
    def T(self):
        return self.sched.T

    @property
    def classical(self):
        """alpha = 2: the wave-equation limit, admitted for validation runs."""
        return self.fparams.classical

    @cached_property
    def tgrid(self):
        return TimeGrid.aligned(self.T, self.sched.breakpoints, self.numerics.steps_per_unit)

    @cached_property
    def problem(self):
        from .mild import MildProblem

        return MildProblem(self.fparams, self.grid, self.tgrid, self.sched, self.psi0, self.eta,
                           self.sp)

    @cached_property
    def plan(self):
        from .control import ControlPlan

        return ControlPlan.for_schedule(self.sched, self.Bspec, self.fparams, self.grid,
                                        self.numerics.gramian_panels_per_unit,
                                        self.numerics.gl_order)

    @cached_property
    def theta_min(self):
        return history_window(self.law, max(lp_norm(self.psi0, self.sp), 1e-300))

    @cached_property
    def history(self):
        lo = self.theta_min - self.law.beta_sup - self.T  # room for the phase-constant samples
        return exponential_history(self.psi0, self.psi_rate, lo, self.numerics.history_spacing,
                                   self.law.weight_rate, self.law.tail_tol)

    @cached_property
    def free(self):
        from .mild import free_trajectory

        return free_trajectory(self.problem)

    @cached_property
    def targets(self):
        """xi_0 .. xi_p; intermediate targets default to the free-evolution states."""
        out = []
        for j, end in enumerate(self.sched.ends[:-1]):
            if self.intermediate == "free":
                out.append(SpectralField(self.free.values[self.tgrid.index(end)], self.grid))
            else:
                out.append(self.intermediate[j])
        out.append(self.final_target)
        return out

    @cached_property
    def phase(self):
        return phase_constants(self.history, self.T, self.sp, self.law.weight_rate,
                               s_range=(-self.T, 0.0), n_samples=9, theta_min=self.theta_min)

    @property
    def Mtilde(self):
        return self.Bspec.operator_norm(self.grid)


def build_scenario(cfg, source_text=""):
    """Validate a key/value mapping and assemble a Scenario."""
    errors = []
    unknown = sorted(set(cfg) - set(DEFAULTS))
    for k in unknown:
        errors.append((k, "unknown key"))
    if errors:
        raise ScenarioError(errors)
    c = dict(DEFAULTS)
    c.update(cfg)

    def attempt(key, fn):
        try:
            return fn()
        except ValidationError as e:
            errors.append((e.key or key, str(e)))
        except (TypeError, ValueError) as e:
            errors.append((key, str(e)))
        return None

    fparams = attempt("fractional.alpha", lambda: FractionalParams(
        float(c["fractional.alpha"]), float(c["fractional.cosine_bound"])))
    grid = attempt("grid.modes", lambda: SpatialGrid(c["grid.modes"], c["grid.points"]))
    if grid is None:
        raise ScenarioError(errors)
    sp = attempt("space.p", lambda: LebesgueSpace(float(c["space.p"]), grid))

    def make_B():
        kind = c["control.kind"]
        if kind == "identity":
            return ControlOperatorSpec()
        if kind == "exponential-kernel":
            return ControlOperatorSpec("integral-kernel", exponential_kernel(
                float(c["control.kernel_scale"]), float(c["control.kernel_rate"])), kind)
        raise ValidationError(f"unknown control operator {kind!r}", "control.kind")

    Bspec = attempt("control.kind", make_B)

    def make_sched():
        T = float(c["time.horizon"])
        bp = [float(b) for b in c["schedule.breakpoints"]]
        count = len(bp) // 2
        kind = c["impulse.kernel"]
        amps = _per_impulse(c["impulse.amplitude"], count, "impulse.amplitude")
        rates = _per_impulse(c["impulse.rate"], count, "impulse.rate")
        waves = _per_impulse(c["impulse.wavenumber"], count, "impulse.wavenumber")
        if kind == "trigonometric":
            for k in waves:
                if not 1 <= int(k) <= grid.mode_count:
                    raise ValidationError("impulse wavenumber outside the mode range",
                                          "impulse.wavenumber")
            kernels = [trigonometric_kernel(float(a), float(r), int(k))
                       for a, r, k in zip(amps, rates, waves)]
        elif kind == "zero":
            kernels = [zero_kernel() for _ in range(count)]
        else:
            raise ValidationError(f"unknown impulse kernel {kind!r}", "impulse.kernel")
        return ImpulseSchedule.from_breakpoints(T, bp, kernels)

    sched = attempt("schedule.breakpoints", make_sched)

    def make_law():
        a = float(c["delay.weight_rate"])
        if not a < 0:
            raise ValidationError("weight rate a must be negative", "delay.weight_rate")
        kind = c["delay.kernel"]
        if kind == "none":
            kern = zero_memory()
        elif kind == "exponential":
            kern = exponential_memory(float(c["delay.scale"]), float(c["delay.decay"]), a)
        else:
            raise ValidationError(f"unknown memory kernel {kind!r}", "delay.kernel")
        bk = c["delay.beta"]
        if bk == "zero":
            beta, sup = constant_beta(0.0)
        elif bk == "constant":
            beta, sup = constant_beta(float(c["delay.beta_scale"]))
        elif bk == "rational":
            beta, sup = rational_beta(float(c["delay.beta_scale"]))
        else:
            raise ValidationError(f"unknown delay profile {bk!r}", "delay.beta")
        return DelayLaw(kern, beta, sup, a, float(c["delay.tail_tol"]))

    law = attempt("delay.kernel", make_law)
    psi0 = attempt("initial.psi", lambda: _mode_dict(c["initial.psi"], grid, "initial.psi"))
    eta = attempt("initial.eta", lambda: _mode_dict(c["initial.eta"], grid, "initial.eta"))
    final = attempt("targets.final", lambda: _mode_dict(c["targets.final"], grid, "targets.final"))

    def rate():
        r = float(c["initial.psi_rate"])
        if r < 0:
            raise ValidationError("history rate must be nonnegative", "initial.psi_rate")
        return r

    psi_rate = attempt("initial.psi_rate", rate)

    def make_intermediate():
        v = c["targets.intermediate"]
        if v == "free":
            return "free"
        count = sched.count if sched is not None else 0
        if not isinstance(v, (list, tuple)) or len(v) != count:
            raise ValidationError(f"expected 'free' or {count} mode mappings",
                                  "targets.intermediate")
        return [_mode_dict(d, grid, "targets.intermediate") for d in v]

    intermediate = attempt("targets.intermediate", make_intermediate)

    def lambdas():
        lg = tuple(float(x) for x in c["lambda.grid"])
        if any(not x > 0 for x in lg) or any(b >= a for a, b in zip(lg, lg[1:])):
            raise ValidationError("lambda grid must be positive and strictly decreasing",
                                  "lambda.grid")
        return lg

    lambda_grid = attempt("lambda.grid", lambdas)

    def numerics():
        n = Numerics(int(c["numerics.steps_per_unit"]), int(c["numerics.gramian_panels_per_unit"]),
                     int(c["numerics.gl_order"]), float(c["numerics.picard_tol"]),
                     int(c["numerics.picard_max_iter"]), float(c["numerics.history_spacing"]))
        for name in ("steps_per_unit", "gramian_panels_per_unit", "gl_order", "picard_max_iter"):
            if getattr(n, name) < 1:
                raise ValidationError(f"{name} must be positive", f"numerics.{name}")
        for name in ("picard_tol", "history_spacing"):
            if not getattr(n, name) > 0:
                raise ValidationError(f"{name} must be positive", f"numerics.{name}")
        return n

    num = attempt("numerics", numerics)

    def cnd():
        d, z = float(c["cnd.delta"]), float(c["cnd.zeta"])
        gam = fparams.gamma if fparams is not None else 1.0
        if not 0 <= d <= gam or d >= 1:
            raise ValidationError("delta must lie in [0, gamma] and below 1", "cnd.delta")
        if z < 0:
            raise ValidationError("zeta must be nonnegative", "cnd.zeta")
        return d, z

    cnd_vals = attempt("cnd.delta", cnd)
    seed = attempt("seed", lambda: int(c["seed"]))
    if sched is not None and num is not None:
        attempt("schedule.breakpoints",
                lambda: TimeGrid.aligned(sched.T, sched.breakpoints, num.steps_per_unit))
    if errors:
        raise ScenarioError(errors)
    digest = hashlib.sha256(source_text.encode()).hexdigest() if source_text else _hash_cfg(c)
    return Scenario(fparams, grid, sp, Bspec, sched, law, psi0, psi_rate, eta, final, intermediate,
                    lambda_grid, num, cnd_vals[0], cnd_vals[1], seed, c, digest)


def _hash_cfg(c):
    text = "\n".join(f"{k} = {c[k]!r}" for k in sorted(c))
    return hashlib.sha256(text.encode()).hexdigest()


def parse_scenario_text(text):
    return build_scenario(parse_text(text), text)


def parse_scenario(path):
    """Read and validate a scenario file."""
    text = Path(path).read_text()
    return parse_scenario_text(text)


def shipped_config(name):
    """Path of a scenario file bundled with the package ("linear" or "impulsive")."""
    return Path(__file__).with_name("data") / f"{name}.cfg"
