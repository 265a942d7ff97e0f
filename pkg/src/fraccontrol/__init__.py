"""Spectral toolkit for regularized controls of fractional wave equations.

Covers Mittag-Leffler and Wright special functions, mode-wise fractional
cosine and sine families on (0, pi), Lp geometry and phase spaces,
controllability Gramians with their resolvent equation, mild solutions with
non-instantaneous impulses and state-dependent delay, and a CLI that runs
the bundled experiments.
"""

__version__ = "0.1.0"
