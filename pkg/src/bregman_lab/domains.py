"""Compact convex domains with the membership predicates used by the
generators, algorithms and probes.

Four kinds are supported: general polytopes in H-representation, boxes,
probability simplices (stored in barycentric coordinates) and Euclidean
balls.  All domains are immutable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

TOL = 1e-12
ACTIVE_TOL = 1e-10
BISECTION_CAP = 200


class DomainError(ValueError):
    """Raised on dimension mismatch or a point outside the expected set."""


def _as_vector(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise DomainError(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


class Domain:
    """Base class for a compact convex body with nonempty (relative) interior."""

    kind = "Domain"
    dim: int
    interior_point: np.ndarray

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    # subclasses provide _slack: one entry per inequality, >= 0 inside
    def slacks(self, x) -> np.ndarray:
        return self._slack(_as_vector(x, self.dim))

    def _equality_residual(self, x) -> float:
        return 0.0

    def contains(self, x) -> bool:
        x = _as_vector(x, self.dim)
        if not np.all(np.isfinite(x)):
            return False
        return bool(np.all(self._slack(x) >= -TOL) and self._equality_residual(x) <= TOL)

    def is_interior(self, x, tol: float = TOL) -> bool:
        """Whether ``x`` lies in the (relative) interior.

        With the default ``tol`` every slack must exceed 1e-12.  Passing
        ``tol=0`` gives the open-set test used before gradient evaluation.
        """
        x = _as_vector(x, self.dim)
        if not self.contains(x):
            return False
        return bool(np.all(self._slack(x) > tol))

    def boundary_distance(self, x) -> float:
        x = _as_vector(x, self.dim)
        return float(np.min(self._normalized_slack(x)))

    def _normalized_slack(self, x):
        return self._slack(x)

    def reflection_stays(self, y, x) -> bool:
        y = _as_vector(y, self.dim)
        x = _as_vector(x, self.dim)
        return self.contains(2.0 * x - y)

    def reflection_radius(self, y):
        return self.to_polytope().reflection_radius(y)

    def chord_exit(self, y, b) -> np.ndarray:
        return self.to_polytope().chord_exit(y, b)

    def to_polytope(self) -> "Polytope":
        raise DomainError(f"{self.kind} has no polytope representation")

    @property
    def is_polytope(self) -> bool:
        return True

    def tangent_basis(self) -> np.ndarray:
        """Orthonormal rows spanning the directions along which C is full-dimensional."""
        return np.eye(self.dim)

    def nudge_interior(self, x, margin: float = 1e-14) -> np.ndarray:
        """Move ``x`` toward the interior witness until every normalized slack is >= margin."""
        x = np.asarray(x, dtype=float)
        s = self._normalized_slack(x)
        if np.all(s >= margin) and self._equality_residual(x) <= TOL:
            return x
        w = self.interior_point
        sw = self._normalized_slack(w)
        need = s < margin
        t = np.max((margin - s[need]) / (sw[need] - s[need])) if np.any(need) else 0.0
        t = min(max(t, 0.0), 1.0)
        return (1.0 - t) * x + t * w

    def sample(self, rng, size: int) -> np.ndarray:
        """Random points of C (not necessarily uniform)."""
        raise NotImplementedError

    def sample_boundary(self, rng, size: int) -> np.ndarray:
        raise NotImplementedError


class Polytope(Domain):
    """``{x : A x <= b, E x = e}`` with compact, nonempty relative interior."""

    kind = "Polytope"

    def __init__(self, A, b, A_eq=None, b_eq=None, interior_point=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise DomainError("A and b have inconsistent shapes")
        self.dim = A.shape[1]
        self.A = A
        self.b = b
        self.A_eq = (np.zeros((0, self.dim)) if A_eq is None
                     else np.atleast_2d(np.asarray(A_eq, dtype=float)))
        self.b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
        self.row_norms = np.linalg.norm(A, axis=1)
        if np.any(self.row_norms == 0):
            raise DomainError("zero normal vector in half-space list")
        for arr in (self.A, self.b, self.A_eq, self.b_eq):
            arr.setflags(write=False)
        if interior_point is None:
            interior_point = self._chebyshev_center()
        self.interior_point = _as_vector(interior_point, self.dim)
        if not self.is_interior(self.interior_point):
            raise DomainError("polytope has empty interior")
        self.interior_point.setflags(write=False)

    def _chebyshev_center(self):
        m, n = self.A.shape
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.A, self.row_norms[:, None]])
        A_eq = np.hstack([self.A_eq, np.zeros((self.A_eq.shape[0], 1))]) if len(self.b_eq) else None
        bounds = [(None, None)] * n + [(0, None)]
        res = linprog(c, A_ub=A_ub, b_ub=self.b, A_eq=A_eq,
                      b_eq=self.b_eq if len(self.b_eq) else None, bounds=bounds)
        if res.status == 3:
            raise DomainError("polytope is unbounded")
        if not res.success or res.x[-1] <= TOL:
            raise DomainError("polytope has empty interior")
        return res.x[:n]

    def _slack(self, x):
        return self.b - self.A @ x

    def _normalized_slack(self, x):
        return (self.b - self.A @ x) / self.row_norms

    def _equality_residual(self, x):
        if not len(self.b_eq):
            return 0.0
        return float(np.max(np.abs(self.A_eq @ x - self.b_eq)))

    def to_polytope(self):
        return self

    def reflection_radius(self, y):
        """Half the smallest normalized slack among inactive constraints.

        Equality rows count as active.  Returns ``math.inf`` when every
        inequality is active.
        """
        y = _as_vector(y, self.dim)
        if not self.contains(y):
            raise DomainError("reflection_radius requires y in C")
        s = self._normalized_slack(y)
        inactive = s > ACTIVE_TOL
        if not np.any(inactive):
            return math.inf
        return 0.5 * float(np.min(s[inactive]))

    def chord_exit(self, y, b):
        y = _as_vector(y, self.dim)
        b = _as_vector(b, self.dim)
        d = b - y
        if not np.any(d):
            raise DomainError("chord_exit needs two distinct points")
        rate = self.A @ d
        slack = self._slack(y)
        moving = rate > 0
        if not np.any(moving):
            raise DomainError("line does not leave the polytope")
        t = float(np.min(slack[moving] / rate[moving]))
        return y + t * d

    def _directions(self, rng, size):
        d = rng.normal(size=(size, self.dim))
        if len(self.b_eq):
            N = null_space(self.A_eq)
            d = (d @ N) @ N.T
        return d

    def sample(self, rng, size):
        # random points on random chords through the interior witness
        w = self.interior_point
        exits = np.array([self.chord_exit(w, w + d) for d in self._directions(rng, size)])
        return w + rng.uniform(0.0, 1.0, size=(size, 1)) * (exits - w)

    def sample_boundary(self, rng, size):
        w = self.interior_point
        return np.array([self.chord_exit(w, w + d) for d in self._directions(rng, size)])


class Box(Domain):
    kind = "Box"

    def __init__(self, lo=0.0, hi=1.0, dim=None):
        if dim is None:
            dim = np.broadcast(np.asarray(lo), np.asarray(hi)).size
        self.dim = int(dim)
        self.lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim,)).copy()
        self.hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim,)).copy()
        if np.any(self.hi <= self.lo):
            raise DomainError("box needs lo < hi in every coordinate")
        self.interior_point = 0.5 * (self.lo + self.hi)
        for arr in (self.lo, self.hi, self.interior_point):
            arr.setflags(write=False)

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"

    def _slack(self, x):
        return np.concatenate([x - self.lo, self.hi - x])

    def to_polytope(self):
        eye = np.eye(self.dim)
        return Polytope(np.vstack([-eye, eye]), np.concatenate([-self.lo, self.hi]),
                        interior_point=self.interior_point)

    def vertices(self):
        grid = np.array(np.meshgrid(*[[0, 1]] * self.dim, indexing="ij")).reshape(self.dim, -1).T
        return self.lo + grid * (self.hi - self.lo)

    def nudge_interior(self, x, margin=1e-14):
        return np.clip(np.asarray(x, dtype=float), self.lo + margin, self.hi - margin)

    def sample(self, rng, size):
        return self.lo + rng.random((size, self.dim)) * (self.hi - self.lo)

    def sample_boundary(self, rng, size):
        pts = self.sample(rng, size)
        face = rng.integers(0, self.dim, size)
        side = rng.integers(0, 2, size)
        pts[np.arange(size), face] = np.where(side == 0, self.lo[face], self.hi[face])
        return pts


class Simplex(Domain):
    """Probability simplex ``{x >= 0, sum x = 1}`` in barycentric coordinates.

    The interior is the relative interior; :meth:`to_chart` and
    :meth:`from_chart` give the affine chart on which it is open.
    """

    kind = "Simplex"

    def __init__(self, dim):
        if dim < 2:
            raise DomainError("simplex needs dim >= 2")
        self.dim = int(dim)
        self.interior_point = np.full(self.dim, 1.0 / self.dim)
        self.interior_point.setflags(write=False)

    def __repr__(self):
        return f"Simplex({self.dim})"

    def _slack(self, x):
        return x.copy()

    def _normalized_slack(self, x):
        # distance to the facet x_i = 0 measured inside the affine hull
        return x * math.sqrt(self.dim / (self.dim - 1.0))

    def _equality_residual(self, x):
        return abs(float(np.sum(x)) - 1.0)

    def to_polytope(self):
        n = self.dim
        return Polytope(-np.eye(n), np.zeros(n), A_eq=np.ones((1, n)), b_eq=[1.0],
                        interior_point=self.interior_point)

    def to_chart(self, x):
        return _as_vector(x, self.dim)[:-1].copy()

    def from_chart(self, u):
        u = np.asarray(u, dtype=float)
        return np.append(u, 1.0 - np.sum(u))

    def tangent_basis(self):
        # orthonormal basis of {v : sum v = 0}
        q, _ = np.linalg.qr(np.eye(self.dim)[:, :-1] - 1.0 / self.dim)
        return q.T

    def vertices(self):
        return np.eye(self.dim)

    def nudge_interior(self, x, margin=1e-14):
        x = np.asarray(x, dtype=float)
        if np.all(x >= margin) and abs(x.sum() - 1.0) <= TOL:
            return x
        x = np.maximum(x, margin)
        return x / x.sum()

    def sample(self, rng, size):
        return rng.dirichlet(np.ones(self.dim), size)

    def sample_boundary(self, rng, size):
        pts = self.sample(rng, size)
        pts[np.arange(size), rng.integers(0, self.dim, size)] = 0.0
        return pts / pts.sum(axis=1, keepdims=True)


class Ball(Domain):
    kind = "Ball"

    def __init__(self, dim=2, radius=1.0, center=None):
        self.dim = int(dim)
        self.radius = float(radius)
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")
        self.center = np.zeros(self.dim) if center is None else _as_vector(center, self.dim).copy()
        self.interior_point = self.center.copy()
        self.center.setflags(write=False)
        self.interior_point.setflags(write=False)

    def __repr__(self):
        return f"Ball(dim={self.dim}, radius={self.radius})"

    @property
    def is_polytope(self):
        return False

    def _slack(self, x):
        return np.array([self.radius - np.linalg.norm(x - self.center)])

    def reflection_radius(self, y):
        _as_vector(y, self.dim)
        return None

    def chord_exit(self, y, b):
        """Farthest point of the ray from ``y`` through ``b`` inside the ball (bisection)."""
        y = _as_vector(y, self.dim)
        b = _as_vector(b, self.dim)
        d = b - y
        if not np.any(d):
            raise DomainError("chord_exit needs two distinct points")
        lo, hi = 1.0, 2.0
        while self.contains(y + hi * d):
            lo, hi = hi, 2.0 * hi
        for _ in range(BISECTION_CAP):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if np.linalg.norm(y + mid * d - self.center) <= self.radius:
                lo = mid
            else:
                hi = mid
        return y + lo * d

    def nudge_interior(self, x, margin=1e-14):
        x = np.asarray(x, dtype=float)
        v = x - self.center
        r = np.linalg.norm(v)
        if r <= self.radius - margin:
            return x
        return self.center + v * ((self.radius - margin) / r)

    def sample(self, rng, size):
        v = rng.standard_normal((size, self.dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        rad = self.radius * rng.random(size) ** (1.0 / self.dim)
        return self.center + v * rad[:, None]

    def sample_boundary(self, rng, size):
        v = rng.standard_normal((size, self.dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return self.center + self.radius * v
