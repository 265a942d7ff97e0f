"""Gamma, Mittag-Leffler and Mainardi-Wright functions.

The two-parameter Mittag-Leffler function is evaluated by its Taylor
series near the origin and by a Hankel-contour integral collapsed onto the
negative real axis for large negative arguments.  The Wright-type function
M_gamma uses its power series for small arguments and Kanter's positive
integral representation elsewhere.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.special import roots_jacobi

from .errors import AccuracyError, DomainError, ValidationError
from .quadrature import composite_rule, gauss_legendre

EPS = np.finfo(float).eps

# Arguments with |z| above this go to the contour integral.
TAYLOR_RADIUS = 5.0
ML_RTOL = 1e-9


def gamma_fn(x):
    """Euler gamma function; raises DomainError at the poles 0, -1, -2, ..."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0) & (xa == np.round(xa))):
        raise DomainError(f"gamma function has a pole at {x!r}")
    out = special.gamma(xa)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MLParams:
    """Parameters (alpha, beta) of E_{alpha,beta}."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ValidationError(f"alpha must lie in (0, 2], got {self.alpha}", "alpha")
        if not self.beta > 0.0:
            raise ValidationError(f"beta must be positive, got {self.beta}", "beta")

    def __call__(self, z):
        return mittag_leffler(self.alpha, self.beta, z)


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncated theta-quadrature used by the subordination oracles."""

    node_count: int = 32
    upper_cutoff: float = 40.0
    scheme: str = "adaptive"
    tol: float = 1e-12
    max_depth: int = 8

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 8:
            raise ValidationError("node_count must be an integer >= 8", "node_count")
        if not self.upper_cutoff >= 10:
            raise ValidationError("upper_cutoff must be >= 10", "upper_cutoff")
        if self.scheme not in ("gauss-legendre", "adaptive"):
            raise ValidationError(f"unknown scheme {self.scheme!r}", "scheme")


# ---------------------------------------------------------------------------
# Mittag-Leffler function


def _ml_taylor(alpha, beta, z):
    """Compensated Taylor sum and its rounding estimate.

    The estimate is relative to max(|value|, 1) so that isolated zeros of the
    function do not register as failures.
    """
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    comp = np.zeros_like(z)
    absum = np.zeros_like(z)
    logabs = np.log(np.abs(z), where=z != 0, out=np.full_like(z, -np.inf))
    sign = np.sign(z)
    for k in range(100000):
        lg = -special.gammaln(alpha * k + beta)
        with np.errstate(over="ignore", invalid="ignore"):
            if k == 0:
                term = np.full_like(z, math.exp(lg))
            else:
                term = sign**k * np.exp(k * logabs + lg)
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
        absum += np.abs(term)
        if k > 2 and np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total + comp), 1e-300)):
            break
        if not np.all(np.isfinite(total)):
            raise AccuracyError("Taylor series overflowed", estimate=float("inf"))
    value = total + comp
    est = 4 * EPS * absum / np.maximum(np.abs(value), 1.0)
    return value, est


@lru_cache(maxsize=256)
def _hankel_nodes(alpha, beta, rmax=50.0, h0=0.5, ratio=0.2, levels=24, width=0.5):
    c = alpha - beta
    first = h0 * ratio**levels
    xj, wj = roots_jacobi(16, 0.0, c)
    rj = first * (xj + 1.0) / 2.0
    wjr = wj * (first / 2.0) ** (c + 1.0)
    geo = h0 * ratio ** np.arange(levels, -1, -1)
    edges = np.concatenate([geo, np.arange(h0 + width, rmax + 1e-12, width)])
    r, w = composite_rule(edges, 16)
    w = w * r**c
    nodes = np.concatenate([rj, r])
    weights = np.concatenate([wjr, w])
    ra = nodes**alpha
    return nodes, weights * np.exp(-nodes), ra


def _ml_hankel(alpha, beta, x):
    """E_{alpha,beta}(-x) for x > 5 and beta < 1 + alpha."""
    r, w, ra = _hankel_nodes(float(alpha), float(beta))
    sb = math.sin(math.pi * beta)
    sab = math.sin(math.pi * (alpha - beta))
    ca = math.cos(math.pi * alpha)
    out = np.empty_like(x)
    chunk = 512
    for i in range(0, x.size, chunk):
        xc = x[i:i + chunk, None]
        num = ra * sb - xc * sab
        den = ra * ra + 2.0 * xc * ra * ca + xc * xc
        out[i:i + chunk] = (num / den) @ w
    out /= math.pi
    if alpha > 1.0:
        s = x ** (1.0 / alpha) * np.exp(1j * math.pi / alpha)
        out += (2.0 / alpha) * np.real(np.exp(s) * s ** (1.0 - beta))
    return out


def _ml_mpmath(alpha, beta, z):
    import mpmath as mp

    out = np.empty_like(z)
    for i, zi in enumerate(z):
        m = abs(zi) ** (1.0 / alpha)
        with mp.workdps(int(0.45 * m) + 40):
            zz = mp.mpf(zi)
            a, b = mp.mpf(alpha), mp.mpf(beta)
            s = mp.mpf(0)
            for k in range(int(3 * m) + 80):
                s += zz**k * mp.rgamma(a * k + b)
            out[i] = float(s)
    return out


def _ml_negative(alpha, beta, x):
    """E_{alpha,beta}(-x) for x > TAYLOR_RADIUS."""
    if beta >= 1.0 + alpha:
        # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        inner = _ml_negative(alpha, beta - alpha, x)
        return (inner - 1.0 / special.gamma(beta - alpha)) / (-x)
    if alpha == 1.0 and beta == 1.0:
        return np.exp(-x)
    if alpha == 1.0 and beta == 2.0:
        return -np.expm1(-x) / x
    if alpha == 2.0 and beta == 1.0:
        return np.cos(np.sqrt(x))
    if alpha == 2.0 and beta == 2.0:
        return np.sin(np.sqrt(x)) / np.sqrt(x)
    if abs(alpha - 1.0) >= 0.02:
        return _ml_hankel(alpha, beta, x)
    # Near alpha = 1 the contour integrand develops a narrow peak; fall
    # back to the series, in extended precision when it cancels badly.
    val, est = _ml_taylor(alpha, beta, -x)
    if np.all(est <= 1e-3 * ML_RTOL):
        return val
    if np.all(x <= 200.0):
        return _ml_mpmath(alpha, beta, -x)
    raise AccuracyError(
        f"no reliable method for E_{{{alpha},{beta}}} at |z| > 200 with alpha near 1",
        estimate=float(np.max(est)),
    )


def mittag_leffler(alpha, beta, z):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for real z.

    Accepts scalars or arrays.  On z in [-1e4, 10] the error is below
    1e-9 relative or 1e-13 absolute, the latter mattering only near the
    real zeros of E.
    """
    MLParams(alpha, beta)
    za = np.asarray(z, dtype=float)
    flat = za.ravel()
    out = np.empty_like(flat)
    near = flat >= -TAYLOR_RADIUS
    if np.any(near):
        val, est = _ml_taylor(alpha, beta, flat[near])
        bad = est > ML_RTOL
        if np.any(bad):
            raise AccuracyError(
                "Taylor series lost too many digits", estimate=float(np.max(est))
            )
        out[near] = val
    if np.any(~near):
        out[~near] = _ml_negative(float(alpha), float(beta), -flat[~near])
    out = out.reshape(za.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Mainardi-Wright function


def _log_abs_rgamma(y):
    """log|1/Gamma(y)| and sign(1/Gamma(y)); y may be negative."""
    y = np.asarray(y, dtype=float)
    logv = np.empty_like(y)
    sgn = np.empty_like(y)
    pos = y > 0
    logv[pos] = -special.gammaln(y[pos])
    sgn[pos] = 1.0
    neg = ~pos
    if np.any(neg):
        yn = y[neg]
        s = np.sin(np.pi * yn)
        with np.errstate(divide="ignore"):
            logv[neg] = np.log(np.abs(s)) + special.gammaln(1.0 - yn) - math.log(math.pi)
        sgn[neg] = np.sign(s)
    return logv, sgn


def _wright_series(gamma, theta, kmax=400):
    """Series sum, or None when terms exceed 10 or fail to settle."""
    k = np.arange(kmax)
    logr, sgn = _log_abs_rgamma(1.0 - gamma * (k + 1))
    if theta == 0.0:
        return float(sgn[0] * math.exp(logr[0])), 1.0
    logt = k * math.log(theta) - special.gammaln(k + 1.0) + logr
    logt[sgn == 0] = -np.inf
    if np.max(logt) > math.log(10.0):
        return None
    terms = ((-1.0) ** k) * sgn * np.exp(logt)
    peak = float(np.max(np.abs(terms)))
    total = math.fsum(terms)
    tail = np.abs(terms[-5:]).max()
    if tail > 1e-16 * max(abs(total), 1e-300) and tail > 1e-300:
        return None
    return total, peak


def _kanter_integrand(u, nu, xpow):
    a = 1.0 / (1.0 - nu)
    logA = (nu * a) * math.log(math.sin(nu * u)) + math.log(math.sin((1.0 - nu) * u)) \
        - a * math.log(math.sin(u))
    A = math.exp(logA)
    return A * math.exp(-xpow * A)


def _wright_kanter(gamma, theta):
    a = 1.0 / (1.0 - gamma)
    xpow = theta**a
    val, err = integrate.quad(
        _kanter_integrand, 0.0, math.pi, args=(gamma, xpow),
        epsabs=0.0, epsrel=1e-12, limit=400,
    )
    pref = theta ** (gamma * a) / (math.pi * (1.0 - gamma))
    return pref * val, pref * err


def _wright_scalar(gamma, theta):
    res = _wright_series(gamma, theta)
    if res is not None:
        return res[0]
    val, err = _wright_kanter(gamma, theta)
    if err > 1e-10 * max(abs(val), 1e-300) and err > 1e-15:
        raise AccuracyError(f"Wright integral did not converge at theta={theta}", estimate=err)
    return val


def mainardi_wright(gamma, theta):
    """Mainardi's Wright-type function M_gamma(theta) for theta >= 0.

    Defined by sum_k (-theta)^k / (k! Gamma(1 - gamma (k + 1))).
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0):
        raise DomainError("theta must be nonnegative")
    out = np.array([_wright_scalar(float(gamma), float(t)) for t in th.ravel()])
    out = out.reshape(th.shape)
    return float(out) if out.ndim == 0 else out


def wright_moment(gamma, c):
    """Closed-form moment int_0^inf theta^c M_gamma(theta) dtheta."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if not c > -1.0:
        raise DomainError(f"moment order must exceed -1, got {c}")
    return gamma_fn(1.0 + c) / gamma_fn(1.0 + gamma * c)


@lru_cache(maxsize=4096)
def _wright_panel(gamma, a, b, n):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    nodes = half * (x + 1.0) + a
    vals = mainardi_wright(gamma, nodes)
    return nodes, half * w, vals


def _panel(gamma, a, b, n, fn):
    nodes, w, vals = _wright_panel(gamma, a, b, n)
    return float(np.sum(w * vals * fn(nodes)))


def wright_integral(gamma, fn, q=None):
    """int_0^cutoff M_gamma(theta) fn(theta) dtheta by composite quadrature."""
    q = q or QuadratureSpec()
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    gamma = float(gamma)
    n = int(q.node_count)
    edges = np.arange(0.0, q.upper_cutoff + 0.5, 1.0)
    edges[-1] = q.upper_cutoff
    if q.scheme == "gauss-legendre":
        return math.fsum(_panel(gamma, float(a), float(b), n, fn)
                         for a, b in zip(edges[:-1], edges[1:]))
    total = []
    worst = 0.0
    stack = [(float(a), float(b), 0) for a, b in zip(edges[:-1], edges[1:])]
    while stack:
        a, b, depth = stack.pop()
        fine = _panel(gamma, a, b, n, fn)
        coarse = _panel(gamma, a, b, n // 2, fn)
        diff = abs(fine - coarse)
        if diff <= q.tol or depth >= q.max_depth:
            total.append(fine)
            worst = max(worst, diff if depth >= q.max_depth else 0.0)
            continue
        m = 0.5 * (a + b)
        stack.append((a, m, depth + 1))
        stack.append((m, b, depth + 1))
    if worst > 1e-9:
        raise AccuracyError("adaptive theta-quadrature did not converge", estimate=worst)
    return math.fsum(total)


def wright_moment_quadrature(gamma, c, q=None):
    """Numerical moment int_0^cutoff theta^c M_gamma(theta) dtheta."""
    return wright_integral(gamma, lambda t: t**c, q)


def subordination_oracle(gamma, kind, z, q=None):
    """Theta-quadrature of the subordination integrals.

    ``kind="cosine"`` returns int M(theta) cos(z theta) dtheta and
    ``kind="sine-weighted"`` returns int gamma theta M(theta) sin(z theta) dtheta.
    Used as an independent check on the closed Mittag-Leffler forms.
    """
    if z < 0:
        raise DomainError("z must be nonnegative")
    if kind == "cosine":
        return wright_integral(gamma, lambda t: np.cos(z * t), q)
    if kind == "sine-weighted":
        return wright_integral(gamma, lambda t: gamma * t * np.sin(z * t), q)
    raise DomainError(f"unknown kind {kind!r}")
