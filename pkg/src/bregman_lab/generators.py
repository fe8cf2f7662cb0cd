"""Legendre generators: value, gradient, inverse gradient (mirror) map and
the metadata the probes compare against.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, logit, softmax, xlogy

from .domains import Ball, Box, Domain, DomainError, Simplex, _as_vector

NEG_INF = -math.inf
# difference quotients below this are reported as -inf
DIVERGENCE_FLOOR = -1e9
NEWTON_CAP = 100
NEWTON_RESIDUAL = 1e-10
CLAMP_MARGIN = 1e-14


class GeneratorError(ValueError):
    pass


class Generator:
    """A convex function ``h`` on a compact domain ``C``.

    Subclasses implement ``_value`` and ``_gradient``; ``_mirror_inverse``
    and ``_hessian`` are optional (damped Newton and finite differences are
    used otherwise).
    """

    name = "generator"
    strictly_convex_on_closure = True
    continuous_on_closure = True
    legendre_on_C = True
    # lower bound on the curvature of h over int C, used for relative smoothness
    min_curvature = 0.0

    def __init__(self, domain: Domain):
        self.domain = domain

    def __repr__(self):
        return f"{type(self).__name__}({self.domain!r})"

    @property
    def dim(self):
        return self.domain.dim

    def value(self, x) -> float:
        x = _as_vector(x, self.dim)
        if not self.domain.contains(x):
            raise DomainError(f"{self.name}: point outside the domain")
        return float(self._value(x))

    def gradient(self, x) -> np.ndarray:
        x = _as_vector(x, self.dim)
        if not self.domain.is_interior(x, tol=0.0):
            raise DomainError(f"{self.name}: gradient needs an interior point")
        return self._gradient(x)

    def hessian(self, x) -> np.ndarray:
        x = _as_vector(x, self.dim)
        return self._hessian(x)

    def mirror_inverse(self, g) -> np.ndarray:
        """Interior point whose gradient is ``g``."""
        g = np.asarray(g, dtype=float)
        if g.shape != (self.dim,) or not np.all(np.isfinite(g)):
            raise GeneratorError("mirror_inverse needs a finite dual vector of matching length")
        return self._mirror_inverse(g)

    def clamp(self, x) -> np.ndarray:
        """Nudge ``x`` to boundary distance at least 1e-14."""
        return self.domain.nudge_interior(x, CLAMP_MARGIN)

    def _interior(self, x):
        # closed forms can round onto bd C; only then move inward
        if self.domain.is_interior(x, tol=0.0):
            return x
        return self.clamp(x)

    def _hessian(self, x):
        # central differences of the gradient, symmetrized
        n = self.dim
        step = 1e-6 * max(1.0, float(np.max(np.abs(x))))
        step = min(step, 0.5 * self.domain.boundary_distance(x))
        H = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            H[:, i] = (self._gradient(x + e) - self._gradient(x - e)) / (2 * step)
        return 0.5 * (H + H.T)

    def _mirror_inverse(self, g):
        # damped Newton on gradient(x) = g in tangent coordinates, halving
        # steps to stay interior
        B = self.domain.tangent_basis()

        def residual(x):
            return B @ (self._gradient(x) - g)

        x = self.domain.interior_point.copy()
        r = residual(x)
        for _ in range(NEWTON_CAP):
            res = np.linalg.norm(r)
            if res <= NEWTON_RESIDUAL:
                return x
            step = B.T @ np.linalg.solve(B @ self._hessian(x) @ B.T, r)
            t = 1.0
            while True:
                cand = x - t * step
                if self.domain.is_interior(cand, tol=0.0):
                    r_cand = residual(cand)
                    if np.linalg.norm(r_cand) < res or t < 1e-6:
                        break
                t *= 0.5
                if t < 1e-12:
                    raise GeneratorError("Newton step cannot stay interior")
            x, r = cand, r_cand
        if np.linalg.norm(r) <= NEWTON_RESIDUAL:
            return x
        raise GeneratorError("mirror_inverse: Newton did not reach the residual target")

    def directional_derivative(self, x, d) -> float:
        """One-sided derivative ``h'(x; d)``, possibly ``-inf``.

        Interior points use the gradient.  At boundary points forward
        difference quotients are Richardson-extrapolated; a quotient
        sequence that keeps decreasing without settling is reported as
        ``-inf``.
        """
        x = _as_vector(x, self.dim)
        d = _as_vector(d, self.dim)
        if not np.any(d):
            return 0.0
        if self.domain.is_interior(x, tol=0.0):
            return float(self._gradient(x) @ d)
        if not self.domain.contains(x):
            raise DomainError("directional_derivative: x outside the domain")
        t = 1.0
        while not self.domain.contains(x + t * d):
            t *= 0.5
            if t * np.linalg.norm(d) < 1e-9:
                raise DomainError("direction leaves the domain immediately")
        t0 = min(t, 1e-2)
        hx = self._value(x)
        ts = t0 * 0.5 ** np.arange(34)
        q = np.array([(self._value(self._onto(x + s * d)) - hx) / s for s in ts])
        return _extrapolate_quotients(q)

    def _onto(self, x):
        # keep rounding noise from pushing sample points out of C
        return x

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError


def _extrapolate_quotients(q):
    """Limit of forward difference quotients taken at geometrically halving steps."""
    if np.any(q < DIVERGENCE_FLOOR):
        return NEG_INF
    diffs = np.diff(q)
    # finite limit: increments shrink roughly by half per level
    head = diffs[:12]
    if np.all(head[-6:] < 0) and np.all(np.abs(head[-5:]) >= 0.85 * np.abs(head[-6:-1])):
        return NEG_INF
    # Richardson on the coarse levels, before cancellation dominates
    r1 = 2.0 * q[1:13] - q[:12]
    r2 = (4.0 * r1[1:] - r1[:-1]) / 3.0
    return float(r2[-1])


class NegEntropy(Generator):
    """``sum x_i log x_i`` on the probability simplex.

    Gradients are taken in the affine chart, so they are defined up to a
    constant vector; the gauge is fixed by centering to zero mean.
    """

    name = "neg_entropy"
    min_curvature = 1.0

    def __init__(self, domain):
        if not isinstance(domain, Simplex):
            raise GeneratorError("NegEntropy lives on a Simplex")
        super().__init__(domain)

    def _value(self, x):
        x = np.maximum(x, 0.0)
        return np.sum(xlogy(x, x))

    def _gradient(self, x):
        g = np.log(x)
        return g - g.mean()

    def _hessian(self, x):
        P = np.eye(self.dim) - 1.0 / self.dim
        return P @ np.diag(1.0 / x) @ P

    def _mirror_inverse(self, g):
        return self._interior(softmax(g))

    def _onto(self, x):
        return np.maximum(x, 0.0) / np.sum(np.maximum(x, 0.0))


class FermiDirac(Generator):
    """``sum x log x + (1 - x) log(1 - x)`` on the unit box."""

    name = "fermi_dirac"
    min_curvature = 4.0

    def __init__(self, domain):
        if not isinstance(domain, Box) or np.any(domain.lo != 0) or np.any(domain.hi != 1):
            raise GeneratorError("FermiDirac lives on Box[0,1]^n")
        super().__init__(domain)

    def _value(self, x):
        x = np.clip(x, 0.0, 1.0)
        return np.sum(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x))

    def _gradient(self, x):
        return logit(x)

    def _hessian(self, x):
        return np.diag(1.0 / (x * (1.0 - x)))

    def _mirror_inverse(self, g):
        return self._interior(expit(g))

    def _onto(self, x):
        return np.clip(x, 0.0, 1.0)


class BallGen(Generator):
    """``-sqrt(1 - |x|^2)`` on the closed unit ball."""

    name = "ball"
    min_curvature = 1.0

    def __init__(self, domain):
        if not isinstance(domain, Ball) or domain.radius != 1.0 or np.any(domain.center != 0):
            raise GeneratorError("BallGen lives on the unit ball centred at 0")
        super().__init__(domain)

    def _value(self, x):
        return -math.sqrt(max(1.0 - float(x @ x), 0.0))

    def _gradient(self, x):
        return x / math.sqrt(1.0 - float(x @ x))

    def _hessian(self, x):
        s2 = 1.0 - float(x @ x)
        return np.eye(self.dim) / math.sqrt(s2) + np.outer(x, x) / s2 ** 1.5

    def _mirror_inverse(self, g):
        return self._interior(g / math.sqrt(1.0 + float(g @ g)))

    def _onto(self, x):
        n = np.linalg.norm(x)
        return x if n <= 1.0 else x / n


class HalfSquaredNorm(Generator):
    """``|x|^2 / 2`` restricted to C.

    Not essentially smooth on a bounded domain, so it is not Legendre
    there.  Its mirror step is a Euclidean projection, which turns mirror
    descent into projected subgradient descent.
    """

    name = "half_squared_norm"
    legendre_on_C = False
    min_curvature = 1.0

    def _value(self, x):
        return 0.5 * float(x @ x)

    def _gradient(self, x):
        return x.copy()

    def _hessian(self, x):
        return np.eye(self.dim)

    def _mirror_inverse(self, g):
        return self._interior(project(self.domain, g))


def project(domain: Domain, z) -> np.ndarray:
    """Euclidean projection onto a Box, Ball or Simplex."""
    z = np.asarray(z, dtype=float)
    if isinstance(domain, Box):
        return np.clip(z, domain.lo, domain.hi)
    if isinstance(domain, Ball):
        v = z - domain.center
        n = np.linalg.norm(v)
        return z if n <= domain.radius else domain.center + v * (domain.radius / n)
    if isinstance(domain, Simplex):
        u = np.sort(z)[::-1]
        css = np.cumsum(u) - 1.0
        ind = np.arange(1, len(z) + 1)
        rho = ind[u - css / ind > 0][-1]
        return np.maximum(z - css[rho - 1] / rho, 0.0)
    raise GeneratorError(f"no Euclidean projection for {domain.kind}")


GENERATORS = {
    "neg_entropy": NegEntropy,
    "fermi_dirac": FermiDirac,
    "ball": BallGen,
    "half_squared_norm": HalfSquaredNorm,
}
