"""Composite Gauss-Legendre rules used throughout the package."""
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Nodes and weights of the n-point rule on [-1, 1] (read-only arrays)."""
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(edges, order=8):
    """Composite Gauss-Legendre rule on consecutive panels.

    Parameters
    ----------
    edges : array_like
        Increasing panel boundaries.
    order : int
        Nodes per panel.

    Returns
    -------
    nodes, weights : ndarray
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (half * (x[None, :] + 1.0) + a).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def uniform_edges(a, b, n_panels):
    return np.linspace(a, b, int(n_panels) + 1)


def graded_edges(a, b, n_uniform, ratio=0.2, levels=24, toward="right"):
    """Panel edges refined geometrically toward one endpoint.

    The interval is split into ``n_uniform`` equal panels and the panel
    adjacent to the singular endpoint is replaced by ``levels`` panels
    whose widths shrink by ``ratio``.  Edges that round onto their
    neighbour are dropped, so grade toward 0 when full depth matters.
    """
    edges = _graded(a, b, n_uniform, ratio, levels, toward)
    keep = np.concatenate([[True], np.diff(edges) > 0])
    return edges[keep]


def _graded(a, b, n_uniform, ratio, levels, toward):
    base = np.linspace(a, b, int(n_uniform) + 1)
    h = base[1] - base[0]
    geo = h * ratio ** np.arange(levels, 0, -1)
    if toward == "right":
        inner = b - geo[::-1]
        return np.concatenate([base[:-1], inner, [b]])
    if toward == "left":
        inner = a + geo
        return np.concatenate([[a], inner, base[1:]])
    if toward == "both":
        left = a + geo
        right = b - geo[::-1]
        return np.concatenate([[a], left, base[1:-1], right, [b]])
    raise ValueError(f"unknown grading direction {toward!r}")


def linear_hat_weights(nodes, func, order=4, max_width=None):
    """Weights w_i with sum_i w_i v_i = int func(x) v(x) dx for piecewise-linear v.

    ``v`` is the linear interpolant of samples ``v_i`` at ``nodes``;
    ``func`` is a smooth weight evaluated by Gauss-Legendre on each panel.
    Panels wider than ``max_width`` are split before the rule is applied.
    Repeated nodes (jumps of v) give zero-width panels and are harmless.
    """
    nodes = np.asarray(nodes, dtype=float)
    out = np.zeros(nodes.size)
    if nodes.size < 2:
        return out
    x, w = gauss_legendre(order)
    h = np.diff(nodes)
    if max_width is None:
        splits = np.ones(h.size, dtype=int)
    else:
        splits = np.maximum(1, np.ceil(h / max_width).astype(int))
    # sub-panels [a + h k/m, a + h (k+1)/m] of panel i, described by fractions
    panel = np.repeat(np.arange(h.size), splits)
    m = splits[panel]
    k = np.arange(panel.size) - np.repeat(np.cumsum(splits) - splits, splits)
    lo = (k / m)[:, None]
    width = (1.0 / m)[:, None]
    frac = lo + width * 0.5 * (x[None, :] + 1.0)
    pts = nodes[panel][:, None] + h[panel][:, None] * frac
    fw = func(pts) * (0.5 * width * h[panel][:, None]) * w[None, :]
    np.add.at(out, panel, (fw * (1.0 - frac)).sum(axis=1))
    np.add.at(out, panel + 1, (fw * frac).sum(axis=1))
    return out


def weakly_singular_rule(width, exponent, n_uniform=64, order=12, ratio=0.2, levels=24):
    """Nodes r and weights for int_0^width r^exponent F(r) dr, exponent > -1.

    Panels are graded geometrically toward r = 0; the innermost panel uses
    Gauss-Jacobi with the exact weight and the others Gauss-Legendre times
    r^exponent.
    """
    if not exponent > -1:
        raise ValueError("exponent must exceed -1")
    edges = graded_edges(0.0, width, n_uniform, ratio, levels, toward="left")
    h0 = edges[1]
    xj, wj = roots_jacobi(order, 0.0, exponent)
    r0 = 0.5 * h0 * (xj + 1.0)
    w0 = wj * (0.5 * h0) ** (exponent + 1.0)
    r, w = composite_rule(edges[1:], order)
    return np.concatenate([r0, r]), np.concatenate([w0, w * r**exponent])
