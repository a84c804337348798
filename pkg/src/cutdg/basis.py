"""Modal Legendre basis on background elements and Gauss-Legendre quadrature.

The basis on every element is the monic Legendre family

    phi_0 = 1,  phi_1 = xi,  phi_2 = xi^2 - 1/3,  phi_3 = xi^3 - (3/5) xi, ...

in the reference coordinate xi = (x - x_c) / (h/2), where x_c and h are the
center and width of the *background* element.  On a cut cell the polynomial
extends beyond the physical sub-interval; evaluation never clamps x.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

MAX_DEGREE = 12
MAX_QUAD_POINTS = 20


def monic_legendre_coefficients(degree: int) -> np.ndarray:
    """Power coefficients (low order first) of phi_0..phi_degree.

    Row k holds the coefficients of phi_k, generated by the monic
    three-term recurrence phi_{k+1} = xi*phi_k - k^2/((2k+1)(2k-1)) phi_{k-1}.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in [0, {MAX_DEGREE}], got {degree}")
    c = np.zeros((degree + 1, degree + 1))
    c[0, 0] = 1.0
    if degree >= 1:
        c[1, 1] = 1.0
    for k in range(1, degree):
        ck = k * k / ((2.0 * k + 1.0) * (2.0 * k - 1.0))
        c[k + 1, 1:] = c[k, :-1]
        c[k + 1, :] -= ck * c[k - 1, :]
    return c


@lru_cache(maxsize=None)
def _coefficient_table(degree: int, order: int) -> np.ndarray:
    """Coefficients of the order-th xi-derivative of phi_0..phi_degree."""
    table = monic_legendre_coefficients(degree)
    for _ in range(order):
        table = np.polynomial.polynomial.polyder(table.T).T
        table = np.pad(table, ((0, 0), (0, degree + 1 - table.shape[1])))
    return table


def eval_reference(degree: int, xi, order: int = 0) -> np.ndarray:
    """Values of d^order/dxi^order phi_k(xi) for k = 0..degree.

    Returns an array of shape xi.shape + (degree+1,).
    """
    table = _coefficient_table(degree, order)
    vals = np.polynomial.polynomial.polyval(np.asarray(xi, dtype=float), table.T)
    return np.moveaxis(vals, 0, -1)


def eval_basis(degree: int, k: int, order: int, x, cell) -> np.ndarray | float:
    """d^order/dx^order phi_k at x, mapped from cell's background element.

    The chain rule contributes a factor (2/h)^order; x may lie anywhere in
    the background interval (polynomial extension at cut-cell faces).
    """
    if not 0 <= k <= degree:
        raise ValueError(f"basis index {k} outside 0..{degree}")
    half = 0.5 * cell.width
    xi = (np.asarray(x, dtype=float) - cell.center) / half
    vals = eval_reference(degree, xi, order)[..., k]
    return vals * (1.0 / half) ** order


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 2n-1."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.nodes)


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadRule:
    """n-point Gauss-Legendre rule via Newton iteration on the Legendre roots."""
    if not 1 <= n <= MAX_QUAD_POINTS:
        raise ValueError(f"point count must be in [1, {MAX_QUAD_POINTS}], got {n}")
    if n == 1:
        return QuadRule(nodes=(0.0,), weights=(2.0,))
    k = np.arange(n)
    x = np.cos(np.pi * (4 * k + 3) / (4 * n + 2))
    dp = np.ones_like(x)
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadRule(nodes=tuple(x[order]), weights=tuple(w[order]))


def integrate_on(interval, f: Callable, n: int) -> float:
    """Integrate f over [a, b] with the n-point Gauss rule mapped to it."""
    a, b = interval
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    rule = gauss_legendre(n)
    nodes = np.asarray(rule.nodes)
    weights = np.asarray(rule.weights)
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * nodes
    return half * float(np.dot(weights, np.asarray(f(x), dtype=float)))


@lru_cache(maxsize=None)
def reference_norms(degree: int) -> tuple[float, ...]:
    """Integrals of phi_k^2 over [-1, 1]; the uncut mass block is (h/2) * these."""
    rule = gauss_legendre(degree + 1)
    vals = eval_reference(degree, np.asarray(rule.nodes))
    return tuple(float(v) for v in (np.asarray(rule.weights) @ vals**2))
