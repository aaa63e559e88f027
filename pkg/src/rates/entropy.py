# src/rates/entropy.py

from __future__ import annotations

from typing import Union

import numpy as np

from src.errors import DomainError


LN2: float = float(np.log(2.0))

ArrayLike = Union[float, np.ndarray]


def log2(x: ArrayLike) -> ArrayLike:
    """Base-2 logarithm through the natural-log ratio."""
    return np.log(x) / LN2


def binary_entropy(x: ArrayLike) -> ArrayLike:
    """
    Binary Shannon entropy h(x) = -x log2 x - (1-x) log2 (1-x).

    Works on scalars and arrays; 0 log 0 is taken as 0.

    Parameters
    ----------
    x : float or np.ndarray
        Probabilities in [0, 1].

    Returns
    -------
    float or np.ndarray
        Entropy in bits, same shape as the input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError(f"binary entropy argument outside [0, 1]: {x!r}")

    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(arr > 0.0, -arr * np.log(arr), 0.0)
        right = np.where(arr < 1.0, -(1.0 - arr) * np.log1p(-arr), 0.0)
    out = (left + right) / LN2

    if out.ndim == 0:
        return float(out)
    return out


def error_entropy(x: ArrayLike) -> ArrayLike:
    """
    h() of an error rate that may have been pushed past 1/2 by a statistical
    correction. Rates at or above 1/2 carry no key: the value saturates at 1.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError(f"negative error rate: {x!r}")
    return binary_entropy(np.minimum(arr, 0.5))


def bernoulli_divergence(q: ArrayLike, x: ArrayLike) -> ArrayLike:
    """
    Kullback-Leibler divergence D(q || x) between Bernoulli laws, in nats.

    Both arguments broadcast; x must lie in (0, 1).
    """
    q_arr = np.asarray(q, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.where(q_arr > 0.0, q_arr * np.log(q_arr / x_arr), 0.0)
        tail = np.where(
            q_arr < 1.0, (1.0 - q_arr) * np.log((1.0 - q_arr) / (1.0 - x_arr)), 0.0
        )
    out = head + tail
    if out.ndim == 0:
        return float(out)
    return out
