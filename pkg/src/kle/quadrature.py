"""Quadrature rules on a closed interval.

A rule's nodes and weights define the discrete inner product
``<f, g> = sum_k w_k f(x_k) g(x_k)`` used by the Nystrom discretization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, NumericError

__all__ = [
    "Interval",
    "QuadratureRule",
    "make_trapezoid",
    "make_gauss_legendre",
    "gauss_legendre_reference",
    "integrate",
]


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[a, b]`` with ``a < b``."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise InvalidArgumentError(f"interval endpoints must be finite, got [{a}, {b}]")
        if not a < b:
            raise InvalidArgumentError(f"interval requires a < b, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.a - atol) & (x <= self.b + atol)))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights on an interval.

    Arrays are stored read-only so a rule can be shared freely.
    """

    interval: Interval
    nodes: np.ndarray
    weights: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        x = np.array(self.nodes, dtype=np.float64)
        w = np.array(self.weights, dtype=np.float64)
        if x.ndim != 1 or w.shape != x.shape:
            raise InvalidArgumentError("nodes and weights must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise InvalidArgumentError("nodes and weights must be finite")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise InvalidArgumentError("nodes must be strictly increasing")
        if np.any(w <= 0):
            raise InvalidArgumentError("weights must be positive")
        if not self.interval.contains(x):
            raise InvalidArgumentError("nodes must lie inside the interval")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    def to_dict(self) -> dict:
        return {
            "rule": self.name,
            "interval": [self.interval.a, self.interval.b],
            "n": self.n,
        }


def _as_interval(interval) -> Interval:
    if isinstance(interval, Interval):
        return interval
    a, b = interval
    return Interval(a, b)


def make_trapezoid(interval, n: int) -> QuadratureRule:
    """Composite trapezoid rule with ``n`` equispaced nodes (endpoints included).

    Interior weights are ``h = (b - a)/(n - 1)``, endpoint weights ``h/2``.
    """
    interval = _as_interval(interval)
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"trapezoid rule needs n >= 2 nodes, got {n}")
    n = int(n)
    x = np.linspace(interval.a, interval.b, n)
    h = interval.length / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return QuadratureRule(interval, x, w, name="trapezoid")


def _legendre_newton(n: int, tol: float = 1e-14, maxiter: int = 100):
    # Nodes on [-1, 1], ascending, with the usual cosine initial guess.
    i = np.arange(1, n + 1)
    t = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(maxiter):
        p0 = np.ones_like(t)
        p1 = t.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * t * p1 - (k - 1) * p0) / k
        # p1 = P_n(t), p0 = P_{n-1}(t)
        dp = n * (t * p1 - p0) / (t * t - 1.0)
        dt = p1 / dp
        t = t - dt
        if np.max(np.abs(dt)) < tol:
            break
    else:
        raise NumericError(f"Gauss-Legendre Newton iteration did not converge for n={n}")
    p0 = np.ones_like(t)
    p1 = t.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * t * p1 - (k - 1) * p0) / k
    dp = n * (t * p1 - p0) / (t * t - 1.0)
    w = 2.0 / ((1.0 - t * t) * dp * dp)
    return t[::-1].copy(), w[::-1].copy()


def make_gauss_legendre(interval, n: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n`` nodes, exact for polynomials of degree <= 2n-1."""
    interval = _as_interval(interval)
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"Gauss-Legendre rule needs n >= 1 nodes, got {n}")
    n = int(n)
    if n == 1:
        t, w = np.array([0.0]), np.array([2.0])
    else:
        t, w = _legendre_newton(n)
    half = 0.5 * interval.length
    x = interval.a + half * (t + 1.0)
    return QuadratureRule(interval, x, half * w, name="gauss")


def gauss_legendre_reference(n: int):
    """Nodes and weights on [-1, 1] from numpy's Golub-Welsch routine (test oracle)."""
    t, w = np.polynomial.legendre.leggauss(n)
    return t, w


def integrate(rule: QuadratureRule, f: Callable) -> float:
    """Return ``sum_k w_k f(x_k)``.

    ``f`` is first tried on the whole node array; scalar-only callables
    are evaluated node by node.
    """
    try:
        vals = np.asarray(f(rule.nodes), dtype=float)
        if vals.shape != rule.nodes.shape:
            vals = np.broadcast_to(vals, rule.nodes.shape)
    except (TypeError, ValueError):
        vals = np.array([float(f(x)) for x in rule.nodes])
    if not np.all(np.isfinite(vals)):
        bad = rule.nodes[~np.isfinite(vals)]
        raise NumericError(f"integrand is not finite at nodes {bad[:5].tolist()}")
    return float(np.dot(rule.weights, vals))
