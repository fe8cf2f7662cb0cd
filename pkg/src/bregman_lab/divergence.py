"""Bregman divergence and the boundary inner-product term."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import DomainError, _as_vector
from .generators import Generator

OVERFLOW = 1e300


@dataclass(frozen=True)
class DivergenceValue:
    """``D_h(y, x)`` together with ``<grad h(x), y - x>``.

    ``value`` is ``inf`` when any intermediate exceeded 1e300 in magnitude.
    """

    value: float
    overflowed: bool
    inner_term: float

    def __float__(self):
        return self.value


def _check(gen: Generator, y, x):
    y = _as_vector(y, gen.dim)
    x = _as_vector(x, gen.dim)
    if not gen.domain.contains(y):
        raise DomainError("divergence: y must lie in the domain")
    if not gen.domain.is_interior(x, tol=0.0):
        raise DomainError("divergence: x must be interior")
    return y, x


def bregman(gen: Generator, y, x) -> DivergenceValue:
    y, x = _check(gen, y, x)
    with np.errstate(over="ignore", invalid="ignore"):
        hy = gen._value(y)
        hx = gen._value(x)
        grad = gen._gradient(x)
        inner = float(grad @ (y - x))
        terms = (hy, hx, inner, float(np.max(np.abs(grad))))
        if any(not math.isfinite(t) or abs(t) > OVERFLOW for t in terms):
            return DivergenceValue(math.inf, True, inner)
        value = float(hy - hx - inner)
    return DivergenceValue(value, False, inner)


def inner_gap(gen: Generator, y, x) -> float:
    """``<grad h(x), y - x>``; condition (B) at ``y`` asks this to vanish as ``x -> y``."""
    y, x = _check(gen, y, x)
    return float(gen._gradient(x) @ (y - x))


def divergence(gen: Generator, y, x) -> float:
    return bregman(gen, y, x).value
