"""Truncated power series arithmetic.

A series is a 1-D float array ``c`` standing for ``sum(c[k] * t**k)``
truncated at ``len(c) - 1``. Only what the Taylor-jet computations need
is implemented.
"""

from __future__ import annotations

import numpy as np


def as_series(coeffs, order: int) -> np.ndarray:
    out = np.zeros(order + 1)
    c = np.asarray(coeffs, dtype=float)[: order + 1]
    out[: c.size] = c
    return out


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(a.size, b.size)
    return np.convolve(a[:n], b[:n])[:n]


def inv(a: np.ndarray) -> np.ndarray:
    if a[0] == 0.0:
        raise ZeroDivisionError("series with zero constant term has no inverse")
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, a.size):
        out[k] = -np.dot(a[1 : k + 1], out[k - 1 :: -1][:k]) / a[0]
    return out


def sqrt(a: np.ndarray) -> np.ndarray:
    """Principal square root; requires ``a[0] > 0``."""
    if a[0] <= 0.0:
        raise ValueError("series square root needs a positive constant term")
    out = np.zeros_like(a)
    out[0] = np.sqrt(a[0])
    for k in range(1, a.size):
        acc = a[k] - np.dot(out[1:k], out[k - 1 : 0 : -1])
        out[k] = acc / (2.0 * out[0])
    return out


def log(a: np.ndarray) -> np.ndarray:
    if a[0] <= 0.0:
        raise ValueError("series logarithm needs a positive constant term")
    out = integrate(mul(derivative(a), inv(a))[: a.size - 1])
    out[0] = np.log(a[0])
    return out


def derivative(a: np.ndarray) -> np.ndarray:
    """Derivative, keeping the same length (top coefficient becomes 0)."""
    out = np.zeros_like(a)
    out[:-1] = a[1:] * np.arange(1, a.size)
    return out


def integrate(a: np.ndarray) -> np.ndarray:
    """Antiderivative vanishing at 0, one order longer than ``a``."""
    out = np.zeros(a.size + 1)
    out[1:] = a / np.arange(1, a.size + 1)
    return out
