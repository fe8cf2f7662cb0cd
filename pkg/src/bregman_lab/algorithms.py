"""Mirror descent, the Bregman gradient method, proximal minimization with
D-functions, cyclic Bregman projections, and a Fejer diagnostic for the
trajectories they produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import brentq, root
from scipy.spatial.distance import pdist

from .divergence import divergence
from .domains import DomainError, _as_vector
from .generators import FermiDirac, Generator, NegEntropy
from .objectives import Objective

DESCENT_SLACK = 1e-10
PROX_RESIDUAL = 1e-9
PROJECTION_RESIDUAL = 1e-9
BISECTION_CAP = 200


class AlgorithmError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Iterates ``x_0..x_K`` with per-iterate objective values and divergences.

    ``step_sizes[k]`` is the step that produced ``x_{k+1}``.
    """

    generator: Generator
    algorithm: str
    iterates: np.ndarray
    objectives: np.ndarray
    step_sizes: np.ndarray
    divergences_to: dict = field(default_factory=dict)
    residuals: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.iterates)

    @property
    def final(self):
        return self.iterates[-1]

    def divergence_series(self, y) -> np.ndarray:
        key = tuple(np.asarray(y, dtype=float).tolist())
        if key not in self.divergences_to:
            self.divergences_to[key] = np.array(
                [divergence(self.generator, y, x) for x in self.iterates])
        return self.divergences_to[key]

    def max_divergence_increase(self, y) -> float:
        series = self.divergence_series(y)
        return float(np.max(np.diff(series))) if len(series) > 1 else 0.0


def decaying_steps(alpha0: float, exponent: float = 0.75) -> Callable[[int], float]:
    """``alpha0 / (k + 1)**exponent``; divergent sum, summable squares for exponent in (1/2, 1]."""
    return lambda k: alpha0 / (k + 1) ** exponent


def _schedule(steps, obj: Objective | None) -> Callable[[int], float]:
    if steps is None:
        lip = obj.lipschitz_const if obj is not None else None
        return decaying_steps(1.0 / lip if lip else 1.0)
    if callable(steps):
        return steps
    if np.isscalar(steps):
        return lambda k: float(steps)
    seq = list(steps)
    return lambda k: float(seq[k])


def _start(gen: Generator, x0):
    x0 = _as_vector(x0, gen.dim)
    if not gen.domain.is_interior(x0):
        raise DomainError("x0 must be an interior point")
    return x0.copy()


def _finish(gen, name, xs, obj, steps, references, residuals=None, notes=None):
    xs = np.array(xs)
    values = (np.array([obj.value(x) for x in xs]) if obj is not None
              else np.full(len(xs), np.nan))
    traj = Trajectory(gen, name, xs, values, np.asarray(steps, dtype=float),
                      residuals=None if residuals is None else np.asarray(residuals),
                      notes=notes or {})
    for y in references:
        traj.divergence_series(y)
    return traj


def mirror_descent(gen: Generator, obj: Objective, x0, steps=None, K: int = 1000,
                   references: Sequence = ()) -> Trajectory:
    """``x_{k+1} = grad h*(grad h(x_k) - a_k v_k)`` with ``v_k`` from ``obj.subgradient``."""
    schedule = _schedule(steps, obj)
    x = _start(gen, x0)
    xs, used = [x], []
    for k in range(K):
        a = schedule(k)
        if not a > 0:
            raise AlgorithmError("step sizes must be positive")
        v = np.asarray(obj.subgradient(x), dtype=float)
        if not np.all(np.isfinite(v)):
            raise AlgorithmError(f"non-finite subgradient at iteration {k}")
        x = gen.clamp(gen.mirror_inverse(gen.gradient(x) - a * v))
        xs.append(x)
        used.append(a)
    return _finish(gen, "mirror_descent", xs, obj, used, references,
                   notes={"subgradient": obj.name})


def bregman_gradient(gen: Generator, obj: Objective, x0, alpha: float, K: int = 1000,
                     references: Sequence | None = None) -> Trajectory:
    """Fixed-step ``x_{k+1} = grad h*(grad h(x_k) - alpha grad f(x_k))``.

    Requires ``h - alpha f`` convex, i.e. ``alpha <= obj.relsmooth_alpha``.
    The largest per-step increase of ``D_h(y, x_k)`` for each known
    minimizer is stored in ``notes['max_increase']``.
    """
    if obj.smooth_gradient is None:
        raise AlgorithmError("bregman_gradient needs a smooth objective")
    if obj.relsmooth_alpha is not None and alpha > obj.relsmooth_alpha * (1 + 1e-12):
        raise AlgorithmError(
            f"alpha={alpha} exceeds the relative smoothness bound {obj.relsmooth_alpha}")
    x = _start(gen, x0)
    xs = [x]
    for _ in range(K):
        x = gen.clamp(gen.mirror_inverse(gen.gradient(x) - alpha * obj.smooth_gradient(x)))
        xs.append(x)
    refs = list(obj.solutions) if references is None else list(references)
    traj = _finish(gen, "bregman_gradient", xs, obj, [alpha] * K, refs)
    traj.notes["max_increase"] = {tuple(np.asarray(y).tolist()): traj.max_divergence_increase(y)
                                  for y in refs}
    return traj


# --- proximal step -----------------------------------------------------------

def _monotone_root(psi, lo, hi):
    """Vectorized bisection for increasing ``psi`` with ``psi(lo) <= 0 <= psi(hi)``."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(BISECTION_CAP):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        neg = psi(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def _coordinate_solve(target, alpha, obj, to_primal, to_dual, x_lo, x_hi):
    """Solve ``u + alpha f'(x(u)) = target`` coordinatewise in dual coordinates.

    Returns the primal point and the subgradient ``v`` that closes the
    stationarity equation.  Coordinates that land on a kink of ``f`` are
    set exactly to the kink, with ``v`` taken inside the subdifferential.
    """
    n = len(target)
    dmin = obj.partials(np.asarray(x_lo, dtype=float))[0]
    dmax = obj.partials(np.asarray(x_hi, dtype=float))[1]

    def psi(u):
        return u - target + alpha * obj.partials(to_primal(u))[1]

    lo = target - alpha * dmax - 1.0
    hi = target - alpha * dmin + 1.0
    while np.any(psi(lo) > 0):
        lo = lo - (hi - lo)
    while np.any(psi(hi) < 0):
        hi = hi + (hi - lo)
    u = _monotone_root(psi, lo, hi)
    x = to_primal(u)
    v = obj.partials(x)[1]
    kinks = obj.kinks if obj.kinks is not None else np.full(n, np.nan)
    finite = np.isfinite(kinks) & (kinks > x_lo) & (kinks < x_hi)
    if np.any(finite):
        safe = np.where(finite, kinks, 0.5 * (x_lo + x_hi))
        uk = to_dual(safe)
        left, right = obj.partials(safe)
        pinned = finite & (uk - target + alpha * left <= 0) & (uk - target + alpha * right >= 0)
        x = np.where(pinned, safe, x)
        v = np.where(pinned, np.clip((target - uk) / alpha, left, right), v)
    return x, v


def _prox_box_entropy(gen, obj, x, alpha):
    g = gen.gradient(x)
    x_new, v = _coordinate_solve(g, alpha, obj, _expit, _logit,
                                 np.zeros(gen.dim), np.ones(gen.dim))
    x_new = gen.clamp(x_new)
    residual = np.linalg.norm(gen.gradient(x_new) - g + alpha * v)
    return x_new, residual


def _prox_simplex_entropy(gen, obj, x, alpha):
    g = gen.gradient(x)
    n = gen.dim
    zeros, ones = np.zeros(n), np.ones(n)

    def solve(mu):
        return _coordinate_solve(g - mu, alpha, obj, np.exp, _safe_log, zeros, ones)

    def mass(mu):
        return float(np.sum(solve(mu)[0])) - 1.0

    a, b = -1.0, 1.0
    while mass(a) < 0:
        a *= 2.0
    while mass(b) > 0:
        b *= 2.0
    mu = brentq(mass, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=BISECTION_CAP)
    x_new, v = solve(mu)
    x_new = x_new / x_new.sum()
    r = np.log(x_new) + alpha * v - g
    residual = np.linalg.norm(r - r.mean())
    return gen.clamp(x_new), residual


def _prox_smooth(gen, obj, x, alpha):
    if obj.smooth_gradient is None:
        raise AlgorithmError(f"no prox solver for nonsmooth {obj.name} with {gen.name}")
    g = gen.gradient(x)
    B = gen.domain.tangent_basis()

    def F(w):
        u = B.T @ w
        return B @ (u + alpha * obj.smooth_gradient(gen.mirror_inverse(u)) - g)

    sol = root(F, B @ g, method="hybr", tol=1e-14)
    x_new = gen.clamp(gen.mirror_inverse(B.T @ sol.x))
    residual = np.linalg.norm(B @ (gen.gradient(x_new) + alpha * obj.smooth_gradient(x_new) - g))
    return x_new, residual


def _expit(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _logit(x):
    return np.log(x) - np.log1p(-x)


def _safe_log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def prox_step(gen: Generator, obj: Objective, x, alpha: float):
    """``argmin_x alpha f(x) + D_h(x, x_k)`` and its stationarity residual."""
    if obj.partials is not None and isinstance(gen, FermiDirac):
        return _prox_box_entropy(gen, obj, x, alpha)
    if obj.partials is not None and isinstance(gen, NegEntropy):
        return _prox_simplex_entropy(gen, obj, x, alpha)
    return _prox_smooth(gen, obj, x, alpha)


def proximal_d(gen: Generator, obj: Objective, x0, steps=None, K: int = 100,
               references: Sequence | None = None) -> Trajectory:
    """Proximal minimization with the Bregman distance of ``gen``.

    Each subproblem is solved to stationarity residual 1e-9 or an
    :class:`AlgorithmError` is raised.
    """
    schedule = _schedule(steps, obj)
    x = _start(gen, x0)
    xs, used, residuals = [x], [], []
    for k in range(K):
        a = schedule(k)
        x, res = prox_step(gen, obj, x, a)
        if not res <= PROX_RESIDUAL:
            raise AlgorithmError(f"prox subproblem residual {res:.3e} at iteration {k}")
        xs.append(x)
        used.append(a)
        residuals.append(res)
    refs = list(obj.solutions) if references is None else list(references)
    traj = _finish(gen, "proximal_d", xs, obj, used, refs, residuals)
    traj.notes["max_increase"] = {tuple(np.asarray(y).tolist()): traj.max_divergence_increase(y)
                                  for y in refs}
    return traj


# --- cyclic Bregman projections ---------------------------------------------

def bregman_projection(gen: Generator, a, b: float, x):
    """Bregman projection of interior ``x`` onto ``{<a, z> <= b}`` within C.

    Solved through the scalar multiplier ``mu >= 0`` in
    ``grad h(z) = grad h(x) - mu a``.  Returns ``(z, mu, residual)``.
    """
    a = np.asarray(a, dtype=float)
    if a @ x <= b:
        return x.copy(), 0.0, 0.0
    g = gen.gradient(x)

    def phi(mu):
        return float(a @ gen.mirror_inverse(g - mu * a)) - b

    hi = 1.0
    while phi(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise AlgorithmError("half-space does not meet the domain interior")
    mu = brentq(phi, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=BISECTION_CAP)
    z = gen.clamp(gen.mirror_inverse(g - mu * a))
    return z, mu, abs(phi(mu))


def alternating_projections(gen: Generator, sets, x0, K: int = 500, witness=None,
                            references: Sequence = ()) -> Trajectory:
    """Cyclic Bregman projections onto half-spaces ``(a, b)`` meaning ``<a, x> <= b``.

    A point of the intersection must be supplied as ``witness``; it is also
    used as a reference for the divergence series.
    """
    if witness is None:
        raise AlgorithmError("a witness point of the intersection is required")
    sets = [(np.asarray(a, dtype=float), float(b)) for a, b in sets]
    witness = _as_vector(witness, gen.dim)
    if not gen.domain.contains(witness) or any(a @ witness > b + 1e-12 for a, b in sets):
        raise AlgorithmError("witness is not in the intersection")
    x = _start(gen, x0)
    xs, residuals = [x], []
    for k in range(K):
        a, b = sets[k % len(sets)]
        x, _, res = bregman_projection(gen, a, b, x)
        if res > PROJECTION_RESIDUAL:
            raise AlgorithmError(f"projection residual {res:.3e} at iteration {k}")
        xs.append(x)
        residuals.append(res)
    refs = [witness, *references]
    traj = _finish(gen, "alternating_projections", xs, None, [math.nan] * K, refs, residuals)
    traj.notes["max_increase"] = {tuple(np.asarray(y).tolist()): traj.max_divergence_increase(y)
                                  for y in refs}
    traj.notes["sets"] = sets
    return traj


# --- Fejer diagnostic --------------------------------------------------------

@dataclass
class FejerReport:
    clusters: list
    accumulation_in_solutions: bool
    oscillations: dict
    cauchy: bool
    fejer: bool
    tail_diameter: float
    converged: bool
    convergence_predicted: bool
    tol: float

    @property
    def consistent(self) -> bool:
        """False only when convergence was predicted but the tail did not settle."""
        return self.converged or not self.convergence_predicted

    def summary(self) -> str:
        verdict = "Fejer" if self.fejer else "NOT Fejer"
        conv = "converged" if self.converged else "not converged"
        return (f"{verdict}, {conv} (clusters={len(self.clusters)}, "
                f"tail diameter={self.tail_diameter:.3e}, tol={self.tol:g})")


def fejer_diagnose(traj: Trajectory, solutions, tol: float = 1e-3) -> FejerReport:
    """Fejer verdict from the last 10% of a trajectory.

    Tail points are grouped by single linkage at radius ``tol``; every
    group centre must be within ``tol`` of a known solution and every
    ``D_h(y, x_k)`` series must oscillate by at most ``tol`` over the tail.
    """
    if len(traj) < 20:
        raise ValueError("fejer_diagnose needs at least 20 iterates")
    solutions = [np.asarray(y, dtype=float) for y in solutions]
    series = [traj.divergence_series(y) for y in solutions]
    gen = traj.generator
    metadata_ok = (gen.legendre_on_C and gen.continuous_on_closure
                   and gen.strictly_convex_on_closure and gen.domain.is_polytope)
    return fejer_from_arrays(traj.iterates, series, solutions, tol, metadata_ok)


def fejer_from_arrays(iterates, series, solutions, tol, metadata_ok) -> FejerReport:
    iterates = np.asarray(iterates, dtype=float)
    if not len(solutions):
        raise ValueError("fejer_diagnose needs at least one known solution")
    n_tail = max(2, math.ceil(0.1 * len(iterates)))
    tail = iterates[-n_tail:]

    labels = fcluster(linkage(tail, method="single"), t=tol, criterion="distance")
    clusters = [tail[labels == lab].mean(axis=0) for lab in np.unique(labels)]
    in_s = all(min(np.linalg.norm(c - y) for y in solutions) <= tol for c in clusters)

    oscillations = {}
    for y, d in zip(solutions, series):
        d = np.asarray(d)[-n_tail:]
        oscillations[tuple(np.asarray(y).tolist())] = float(np.max(d) - np.min(d))
    cauchy = all(v <= tol for v in oscillations.values())
    fejer = in_s and cauchy

    diameter = float(np.max(pdist(tail)))
    return FejerReport(clusters, in_s, oscillations, cauchy, fejer, diameter,
                       diameter <= tol, fejer and metadata_ok, tol)
