"""Convex objectives for the algorithms, with known minimizers where the
domain allows a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domains import Ball, Box, Domain, Simplex
from .generators import Generator, project


@dataclass(frozen=True)
class Objective:
    """``f`` with a subgradient selector and optional smooth/separable data.

    ``partials(x)`` returns the left and right partial derivatives of a
    separable ``f`` coordinatewise; ``kinks`` lists, per coordinate, the
    point where they differ (or NaN).
    """

    name: str
    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]
    smooth_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz_const: Optional[float] = None
    relsmooth_alpha: Optional[float] = None
    solutions: tuple = ()
    partials: Optional[Callable[[np.ndarray], tuple]] = None
    kinks: Optional[np.ndarray] = None
    linear: bool = False
    params: dict = field(default_factory=dict)


def _max_distance(domain: Domain, a):
    if isinstance(domain, Ball):
        return float(np.linalg.norm(a - domain.center) + domain.radius)
    return float(max(np.linalg.norm(v - a) for v in domain.vertices()))


def _linear_minimizers(domain, c):
    if isinstance(domain, Simplex):
        best = np.flatnonzero(c == c.min())
        return (np.eye(domain.dim)[best[0]],) if len(best) == 1 else ()
    if isinstance(domain, Box):
        if np.any(c == 0):
            return ()
        return (np.where(c > 0, domain.lo, domain.hi),)
    if isinstance(domain, Ball):
        return (domain.center - domain.radius * c / np.linalg.norm(c),)
    return ()


def linear(domain: Domain, c, gen: Generator | None = None) -> Objective:
    c = np.asarray(c, dtype=float)
    if c.shape != (domain.dim,):
        raise ValueError("linear objective: c has the wrong length")
    nonzero = bool(np.any(c))
    lip = float(np.linalg.norm(c))
    return Objective(
        name="linear",
        value=lambda x: float(c @ x),
        subgradient=lambda x: c.copy(),
        smooth_gradient=lambda x: c.copy(),
        lipschitz_const=lip,
        relsmooth_alpha=np.inf,
        solutions=_linear_minimizers(domain, c) if nonzero else (),
        partials=lambda x: (c.copy(), c.copy()),
        kinks=np.full(domain.dim, np.nan),
        linear=True,
        params={"c": c.tolist()},
    )


def quadratic(domain: Domain, a, gen: Generator | None = None) -> Objective:
    """``|x - a|^2 / 2``."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (domain.dim,)).copy()
    curvature = gen.min_curvature if gen is not None else None
    return Objective(
        name="quadratic",
        value=lambda x: 0.5 * float((x - a) @ (x - a)),
        subgradient=lambda x: x - a,
        smooth_gradient=lambda x: x - a,
        lipschitz_const=_max_distance(domain, a),
        relsmooth_alpha=curvature,
        solutions=(project(domain, a),),
        partials=lambda x: (x - a, x - a),
        kinks=np.full(domain.dim, np.nan),
        params={"a": a.tolist()},
    )


def absolute(domain: Domain, a, gen: Generator | None = None) -> Objective:
    """``|x - a|_1`` (nonsmooth)."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (domain.dim,)).copy()
    sols = (np.clip(a, domain.lo, domain.hi),) if isinstance(domain, Box) else ()
    if isinstance(domain, Simplex) and domain.contains(a):
        sols = (a.copy(),)
    return Objective(
        name="abs",
        value=lambda x: float(np.sum(np.abs(x - a))),
        subgradient=lambda x: np.sign(x - a),
        lipschitz_const=float(np.sqrt(domain.dim)),
        solutions=sols,
        partials=lambda x: (np.where(x > a, 1.0, -1.0), np.where(x < a, -1.0, 1.0)),
        kinks=a.copy(),
        params={"a": a.tolist()},
    )


def constant(domain: Domain, value=0.0, gen: Generator | None = None) -> Objective:
    zero = np.zeros(domain.dim)
    return Objective(
        name="constant",
        value=lambda x: float(value),
        subgradient=lambda x: zero.copy(),
        smooth_gradient=lambda x: zero.copy(),
        lipschitz_const=0.0,
        relsmooth_alpha=np.inf,
        solutions=(domain.interior_point.copy(),),
        partials=lambda x: (zero.copy(), zero.copy()),
        kinks=np.full(domain.dim, np.nan),
        linear=True,
        params={"value": value},
    )


OBJECTIVES = {
    "linear": linear,
    "quadratic": quadratic,
    "abs": absolute,
    "constant": constant,
}
