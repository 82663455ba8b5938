"""Bessel functions of order 0 and 1 and the zeros of J0."""

from __future__ import annotations

import math

import numpy as np

_SERIES_LIMIT = 12.0


def _series(x: float, order: int) -> float:
    # sum_k (-1)^k (x/2)^(2k+order) / (k! (k+order)!)
    half = 0.5 * x
    term = half**order / math.factorial(order)
    total = term
    k = 0
    while abs(term) > 1e-18 * max(1.0, abs(total)):
        k += 1
        term *= -(half * half) / (k * (k + order))
        total += term
    return total


def _asymptotic(x: float, order: int) -> float:
    # Hankel expansion, truncated at its smallest term
    mu = 4.0 * order * order
    p, q = 1.0, 0.0
    term = 1.0
    smallest = math.inf
    k = 1
    while True:
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) >= smallest or k > 60:
            break
        smallest = abs(term)
        if k % 2:
            q += term if (k // 2) % 2 == 0 else -term
        else:
            p += -term if (k // 2) % 2 else term
        k += 1
    chi = x - (0.5 * order + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def _elementwise(f):
    def wrapped(x):
        if np.ndim(x) == 0:
            return f(float(x))
        return np.array([f(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    wrapped.__name__, wrapped.__doc__ = f.__name__, f.__doc__
    return wrapped


@_elementwise
def bessel_j0(x: float) -> float:
    x = abs(x)
    return _series(x, 0) if x <= _SERIES_LIMIT else _asymptotic(x, 0)


@_elementwise
def bessel_j1(x: float) -> float:
    sign = -1.0 if x < 0 else 1.0
    x = abs(x)
    value = _series(x, 1) if x <= _SERIES_LIMIT else _asymptotic(x, 1)
    return sign * value


def j0_zero(n: int = 1, tol: float = 1e-14) -> float:
    """Return the n-th positive zero of J0 by Newton iteration.

    The start value is McMahon's expansion; the derivative is J0' = -J1.
    """
    if n < 1:
        raise ValueError("zero index starts at 1")
    b = (n - 0.25) * math.pi
    x = b + 1.0 / (8.0 * b) - 124.0 / (3.0 * (8.0 * b) ** 3)
    for _ in range(50):
        step = bessel_j0(x) / -bessel_j1(x)
        x -= step
        if abs(step) < tol * x:
            break
    return x
