"""Cost functional, the contraction condition, interval bounds and discrete Gronwall."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .specfun import gamma_fn


def cost_functional(x_terminal, control, lam, x_T, sp, T):
    """||x(T) - x_T||^2 + lambda int_0^T (T - t)^{g-1} ||u(t)||^2 dt.

    ``x_terminal`` are the mode coefficients of x(T); ``control`` may be
    None for u = 0.
    """
    diff = np.asarray(x_terminal, dtype=float) - x_T.coeffs
    err = sp.norm_coeffs(diff) ** 2
    if control is None:
        return float(err)
    return float(err + lam * control.weighted_energy(T))


@dataclass(frozen=True)
class CndInputs:
    """Constants entering the contraction condition."""

    M: float = 1.0
    Mtilde: float = 1.0
    T: float = 1.0
    gamma: float = 0.75
    delta: float = 0.0
    K2: float = 1.0
    zeta: float = 0.0
    p: int = 0
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= self.gamma:
            raise ValidationError("delta must lie in [0, gamma]", "cnd.delta")
        if self.delta >= 1.0:
            raise ValidationError("delta must be below 1", "cnd.delta")
        for name in ("M", "Mtilde", "T", "gamma", "lam"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive", f"cnd.{name}")
        if self.K2 < 0 or self.zeta < 0 or self.p < 0:
            raise ValidationError("K2, zeta and p must be nonnegative", "cnd")


def resolvent_growth(inp):
    """R = 2 T^{3g} / (3 g lambda) (M Mtilde / Gamma(2g))^2."""
    g = inp.gamma
    return 2.0 * inp.T ** (3 * g) / (3 * g * inp.lam) * (inp.M * inp.Mtilde / gamma_fn(2 * g)) ** 2


def _holder_c(inp):
    return (2 * inp.gamma - inp.delta) / (1 - inp.delta)


def forcing_prefactor(inp):
    """2 M T^{2g - delta} / (Gamma(2g) c^{1 - delta})."""
    g, d = inp.gamma, inp.delta
    return 2 * inp.M * inp.T ** (2 * g - d) / (gamma_fn(2 * g) * _holder_c(inp) ** (1 - d))


def _exp(x):
    return math.exp(x) if x < 700 else math.inf


def cnd_check(inp):
    """Left-hand side of the contraction condition; the caller compares it with 1."""
    if inp.zeta == 0.0 or inp.K2 == 0.0:
        return 0.0
    R = resolvent_growth(inp)
    p = inp.p
    tail = sum(_exp((p + k) * (p - k - 1) * R / 2) for k in range(p))
    brace = 1 + (p + 1) * (p + 2) * R / 2 + p * (p + 1) * R**2 / 2 * tail
    return forcing_prefactor(inp) * inp.K2 * inp.zeta * brace


def interval_bounds(inp, xi_norms, psi0_norm, eta_norm, kappas, varthetas, phi_norm):
    """Bounds N_0..N_p on ||g_j|| and C_0..C_p (C_0 = N_0).

    N_0 = ||xi_0|| + M ||psi(0)|| + M T ||eta|| + P ||phi||,
    N_j = ||xi_j|| + M kappa_j + M T vartheta_j + P ||phi||,
    C_j = N_j + R sum_{k<j} N_k exp((j + k)(j - k - 1) R / 2),
    with P the forcing prefactor and ``phi_norm`` the norm of the growth
    bound of f on the relevant ball.
    """
    p = inp.p
    if len(xi_norms) != p + 1 or len(kappas) != p or len(varthetas) != p:
        raise ValidationError("bound inputs do not match the number of impulses")
    P = forcing_prefactor(inp) * phi_norm
    M, T = inp.M, inp.T
    N = [xi_norms[0] + M * psi0_norm + M * T * eta_norm + P]
    N += [xi_norms[j] + M * kappas[j - 1] + M * T * varthetas[j - 1] + P for j in range(1, p + 1)]
    R = resolvent_growth(inp)
    C = [N[0]]
    for j in range(1, p + 1):
        C.append(N[j] + R * sum(N[k] * _exp((j + k) * (j - k - 1) * R / 2) for k in range(j)))
    return N, C


def gronwall_recursion(g, R):
    """Worst case of ||g_j|| <= N_j + R sum_{k<j} ||g_k||, solved at equality."""
    out = []
    for j, gj in enumerate(g):
        out.append(gj + R * sum(out))
    return out


def discrete_gronwall_bound(g, w):
    """B_n = g_n + sum_{k<n} g_k w_k exp(sum_{k<j<n} w_j).

    Any f with f_n <= g_n + sum_{k<n} w_k f_k satisfies f_n <= B_n.
    """
    g = np.asarray(g, dtype=float)
    w = np.asarray(w, dtype=float)
    if g.shape != w.shape or g.ndim != 1:
        raise ValidationError("g and w must be sequences of equal length")
    if np.any(g < 0) or np.any(w < 0):
        raise ValidationError("Gronwall sequences must be nonnegative")
    n = g.size
    csum = np.concatenate([[0.0], np.cumsum(w)])
    out = g.copy()
    for i in range(n):
        for k in range(i):
            # sum_{k<j<i} w_j = csum[i] - csum[k+1]
            out[i] += g[k] * w[k] * math.exp(csum[i] - csum[k + 1])
    return out
