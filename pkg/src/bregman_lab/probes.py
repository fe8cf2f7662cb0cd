"""Numerical probes of how Bregman and Euclidean convergence relate at the
boundary of the domain.

Each probe evaluates divergences along explicit approach curves and turns
the finest samples into a verdict (HOLDS / FAILS / INCONCLUSIVE).  A probe
can only certify behaviour on the curves it is given; the verdict that
the theory predicts from the generator metadata and the domain type is
reported next to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from .divergence import bregman
from .domains import Ball, _as_vector
from .generators import NEG_INF, Generator

HOLDS = "HOLDS"
FAILS = "FAILS"
INCONCLUSIVE = "INCONCLUSIVE"

WINDOW = 5
BLOWUP_BAR = 1e6
AFFINE_TOL = 1e-10


class ProbeError(ValueError):
    pass


# --- approach curves ---------------------------------------------------------

@dataclass(frozen=True)
class ApproachCurve:
    """A family of interior points ``point(p)`` converging to ``target``.

    ``params`` is ordered from coarse to fine; ``gaps`` holds the matching
    boundary-distance parameter (``lambda`` for chords, ``1 - r`` for the
    tangential disk curve) used for log-scale plotting.
    """

    kind: str
    target: np.ndarray
    params: np.ndarray
    gaps: np.ndarray
    point: Callable[[float], np.ndarray]
    label: str = ""

    def points(self) -> np.ndarray:
        return np.array([self.point(p) for p in self.params])


def chord_curve(target, anchor, j_min=4, j_max=40, label=None) -> ApproachCurve:
    """``y + lambda (a - y)`` for ``lambda = 2**-j``."""
    y = np.asarray(target, dtype=float)
    a = np.asarray(anchor, dtype=float)
    lam = 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)
    return ApproachCurve("Chord", y, lam, lam, lambda t: y + t * (a - y),
                         label or f"chord from {np.round(a, 4).tolist()}")


def tangential_disk_curve(target, j_min=4, j_max=40, center=None, radius=1.0,
                          direction=None) -> ApproachCurve:
    """Curve hugging the sphere, ``r (cos t(r) u + sin t(r) v)`` with
    ``cos t(r) = r - sqrt(1 - r^2)`` and ``r = 1 - 2**-j``.

    ``u`` points from the centre to ``target`` and ``v`` is a unit vector
    orthogonal to it (``direction`` picks it, default: the first
    coordinate axis not parallel to ``u``).
    """
    y = np.asarray(target, dtype=float)
    c = np.zeros_like(y) if center is None else np.asarray(center, dtype=float)
    u = (y - c) / radius
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ProbeError("tangential curve needs a target on the sphere")
    if direction is None:
        direction = np.eye(len(y))[np.argmin(np.abs(u))]
    v = np.asarray(direction, dtype=float) - (np.asarray(direction, dtype=float) @ u) * u
    v /= np.linalg.norm(v)
    r = 1.0 - 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)

    def point(rr):
        th = math.acos(rr - math.sqrt((1.0 - rr) * (1.0 + rr)))
        return c + radius * rr * (math.cos(th) * u + math.sin(th) * v)

    return ApproachCurve("TangentialDisk", y, r, 1.0 - r, point, "tangential")


def custom_curve(target, params, point, gaps=None, label="custom") -> ApproachCurve:
    params = np.asarray(params, dtype=float)
    return ApproachCurve("Custom", np.asarray(target, dtype=float), params,
                         params if gaps is None else np.asarray(gaps, dtype=float),
                         point, label)


# --- reports -----------------------------------------------------------------

@dataclass
class CurveSamples:
    curve: ApproachCurve
    points: np.ndarray
    divergence: np.ndarray
    inner_gap: np.ndarray
    verdict: str

    @property
    def distances(self):
        return np.linalg.norm(self.points - self.curve.target, axis=1)

    @property
    def limit_estimate(self) -> float:
        return float(self.divergence[-1])


@dataclass
class ProbeReport:
    probe: str
    target: np.ndarray
    samples: list
    verdict: str
    limit_estimate: float
    predicted: str | None
    tol: float
    details: dict = field(default_factory=dict)

    @property
    def matches_prediction(self) -> bool:
        return self.predicted is None or self.verdict == self.predicted

    @property
    def contradicts_theory(self) -> bool:
        """An observed FAILS where HOLDS is predicted.

        The converse is not a contradiction: HOLDS only covers the tested curves.
        """
        if self.predicted is None or self.verdict == INCONCLUSIVE:
            return False
        return self.verdict == FAILS and self.predicted == HOLDS

    def summary(self) -> str:
        lines = [f"probe: {self.probe}",
                 f"target: {np.asarray(self.target).tolist()}",
                 f"verdict: {self.verdict} (on tested curves)",
                 f"predicted: {self.predicted}",
                 f"matches prediction: {self.matches_prediction}",
                 f"limit estimate: {self.limit_estimate:.10g}"]
        for s in self.samples:
            lines.append(f"  {s.curve.label}: {s.verdict}, finest D={s.divergence[-1]:.6g}, "
                         f"finest inner gap={s.inner_gap[-1]:.6g}")
        for k, v in self.details.items():
            lines.append(f"{k}: {v}")
        return "\n".join(lines)


def curve_verdict(divergence, inner_gap, tol: float) -> str:
    """Verdict from the finest ``WINDOW`` samples of one curve.

    FAILS when the divergence stays at least ``10 tol`` away from zero or
    exceeds 1e6; HOLDS when both the divergence and the inner-product term
    are below ``tol``.
    """
    d = np.abs(np.asarray(divergence, dtype=float)[-WINDOW:])
    g = np.abs(np.asarray(inner_gap, dtype=float)[-WINDOW:])
    if not np.all(np.isfinite(d)) or np.max(d) > BLOWUP_BAR or np.min(d) >= 10 * tol:
        return FAILS
    if np.all(d < tol) and np.all(g <= tol):
        return HOLDS
    return INCONCLUSIVE


def combine_verdicts(verdicts: Sequence[str]) -> str:
    if FAILS in verdicts:
        return FAILS
    if verdicts and all(v == HOLDS for v in verdicts):
        return HOLDS
    return INCONCLUSIVE


def predict_condition_b(gen: Generator) -> str | None:
    if not (gen.legendre_on_C and gen.continuous_on_closure):
        return None
    return HOLDS if gen.domain.is_polytope else FAILS


def predict_condition_a(gen: Generator) -> str | None:
    if not (gen.legendre_on_C and gen.continuous_on_closure):
        return None
    return HOLDS if gen.strictly_convex_on_closure else FAILS


def _sample_curve(gen: Generator, curve: ApproachCurve, tol: float) -> CurveSamples:
    pts = curve.points()
    dvals, inner = [], []
    for x in pts:
        if not gen.domain.is_interior(x, tol=0.0):
            raise ProbeError(f"{curve.label}: curve point {x.tolist()} is not interior")
        dv = bregman(gen, curve.target, x)
        dvals.append(dv.value)
        inner.append(dv.inner_term)
    dvals, inner = np.array(dvals), np.array(inner)
    return CurveSamples(curve, pts, dvals, inner, curve_verdict(dvals, inner, tol))


def probe_condition_b(gen: Generator, y, curves: Sequence[ApproachCurve],
                      tol: float = 1e-4) -> ProbeReport:
    """Does ``x_k -> y`` force ``D_h(y, x_k) -> 0`` along the given curves?"""
    y = _as_vector(y, gen.dim)
    if not gen.domain.contains(y):
        raise ProbeError("target must lie in the domain")
    if not curves:
        raise ProbeError("at least one approach curve is required")
    for c in curves:
        if not np.allclose(c.target, y, rtol=0, atol=1e-15):
            raise ProbeError("every curve must target y")
    samples = [_sample_curve(gen, c, tol) for c in curves]
    verdict = combine_verdicts([s.verdict for s in samples])
    decisive = [s for s in samples if s.verdict == verdict] or samples
    limit = max((s.limit_estimate for s in decisive), key=abs)
    return ProbeReport("condition-b", y, samples, verdict, limit,
                       predict_condition_b(gen), tol)


# --- disk counterexample -----------------------------------------------------

@dataclass
class CounterexampleTable:
    r: np.ndarray
    theta: np.ndarray
    points: np.ndarray
    divergence: np.ndarray

    def __len__(self):
        return len(self.r)


def disk_counterexample(r_grid, dps: int = 50) -> CounterexampleTable:
    """``D_h(e1, x(r))`` for ``h = -sqrt(1 - |x|^2)`` along the tangential curve.

    The divergence is ill-conditioned near the circle (the gradient scales
    like ``(1 - r)**-1/2``), so it is evaluated from the three-term formula
    in ``dps``-digit arithmetic at the exact curve point and rounded once.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0) or np.any(r_grid >= 1):
        raise ProbeError("radii must lie in the open interval (0, 1)")
    thetas, pts, dvals = [], [], []
    with mpmath.workdps(dps):
        for r in r_grid:
            r = mpmath.mpf(float(r))
            s = mpmath.sqrt((1 - r) * (1 + r))
            th = mpmath.acos(r - s)
            x1, x2 = r * mpmath.cos(th), r * mpmath.sin(th)
            sx = mpmath.sqrt(1 - x1 ** 2 - x2 ** 2)
            # h(e1) - h(x) - <x / sx, e1 - x>
            d = 0 + sx - (x1 * (1 - x1) - x2 * x2) / sx
            thetas.append(float(th))
            pts.append((float(x1), float(x2)))
            dvals.append(float(d))
    return CounterexampleTable(r_grid, np.array(thetas), np.array(pts), np.array(dvals))


def counterexample_grid(j_min=4, j_max=30, r_max=None) -> np.ndarray:
    r = 1.0 - 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)
    if r_max is not None:
        if not 0 < r_max < 1:
            raise ProbeError("r_max must lie in the open interval (0, 1)")
        r = r[r <= r_max]
    return r


# --- chord blow-up -----------------------------------------------------------

def probe_chord_blowup(gen: Generator, x, y, lam_grid=None) -> ProbeReport:
    """``D_h(y, (1 - lam) x + lam y)`` as ``lam -> 0`` for boundary ``x``.

    Verdict HOLDS means the blow-up was observed: the series is increasing
    over the finest samples and either passes 1e6 or keeps growing by
    non-shrinking increments (logarithmic growth).
    """
    x = _as_vector(x, gen.dim)
    y = _as_vector(y, gen.dim)
    dom = gen.domain
    if not dom.contains(x) or dom.is_interior(x, tol=0.0):
        raise ProbeError("x must be a boundary point")
    if not dom.contains(y):
        raise ProbeError("y must lie in the domain")
    if not dom.is_interior(0.5 * (x + y)):
        raise ProbeError("the midpoint of [x, y] must be interior")
    lam = (2.0 ** -np.arange(4, 49, dtype=float) if lam_grid is None
           else np.sort(np.asarray(lam_grid, dtype=float))[::-1])
    curve = custom_curve(x, lam, lambda t: (1.0 - t) * x + t * y, label="chord blow-up")
    pts = curve.points()
    vals = [bregman(gen, y, p) for p in pts]
    dvals = np.array([v.value for v in vals])
    inner = np.array([v.inner_term for v in vals])

    verdict = blowup_verdict(dvals)
    fine = slice(-WINDOW, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        exponent = float(np.polyfit(np.log(1.0 / lam[fine]), np.log(dvals[fine]), 1)[0])
    samples = [CurveSamples(curve, pts, dvals, inner, verdict)]
    predicted = HOLDS if gen.legendre_on_C and gen.continuous_on_closure else None
    return ProbeReport("chord-blowup", x, samples, verdict, float(dvals[-1]), predicted,
                       BLOWUP_BAR, {"growth exponent": exponent, "toward": y.tolist()})


def blowup_verdict(divergence) -> str:
    """HOLDS when the finest samples increase and either pass 1e6 or keep
    growing by non-shrinking increments; FAILS when they do not increase."""
    d = np.asarray(divergence, dtype=float)
    if np.any(np.isinf(d[-2 * WINDOW:])):
        return HOLDS
    steps = np.diff(d[-2 * WINDOW:])
    increasing = bool(np.all(steps > 0))
    unbounded = d[-1] > BLOWUP_BAR or (increasing and steps[-1] >= 0.5 * steps[0])
    if increasing and unbounded:
        return HOLDS
    return INCONCLUSIVE if increasing else FAILS


# --- condition (A) -----------------------------------------------------------

def condition_a_verdict(affine: bool, separation: float, divergence, distance, tol) -> str:
    """FAILS when ``D_h(x, z_k)`` drops below ``tol`` while ``z_k`` stays at
    least half the segment separation away from ``x``."""
    d = np.abs(np.asarray(divergence, dtype=float)[-WINDOW:])
    dist = np.asarray(distance, dtype=float)[-WINDOW:]
    if affine and separation > 10 * tol and np.all(d < tol) and np.all(dist >= 0.5 * separation):
        return FAILS
    if np.min(d) >= 10 * tol:
        return HOLDS
    return INCONCLUSIVE


def probe_condition_a(gen: Generator, segment, z0, k_max: int = 10 ** 6,
                      tol: float = 1e-4) -> ProbeReport:
    """Look for ``D_h(x, z_k) -> 0`` with ``z_k`` staying away from ``x``.

    When ``h`` is affine on ``[x, y]`` the sequence
    ``z_k = z0 / k + (1 - 1/k) (x + y) / 2`` converges to the midpoint
    while ``D_h(x, z_k) -> 0``.  A segment with midpoint gap above ``tol``
    is reported HOLDS without building the sequence.
    """
    x, y = (_as_vector(p, gen.dim) for p in segment)
    z0 = _as_vector(z0, gen.dim)
    dom = gen.domain
    if not dom.is_interior(z0):
        raise ProbeError("z0 must be interior")
    if not (dom.contains(x) and dom.contains(y)):
        raise ProbeError("segment endpoints must lie in the domain")
    z = 0.5 * (x + y)
    gap = 0.5 * (gen.value(x) + gen.value(y)) - gen.value(z)
    affine = abs(gap) <= AFFINE_TOL
    predicted = predict_condition_a(gen)
    details = {"midpoint gap": gap, "affine on segment": affine}
    if gap > tol:
        details["note"] = "strictly convex on the segment; no violation constructible"
        return ProbeReport("condition-a", x, [], HOLDS, math.nan, predicted, tol, details)

    ks = 2.0 ** np.arange(1, int(math.log2(k_max)) + 1)
    if ks[-1] != k_max:
        ks = np.append(ks, float(k_max))
    curve = custom_curve(x, ks, lambda k: z0 / k + (1.0 - 1.0 / k) * z,
                         gaps=1.0 / ks, label="z_k sequence")
    pts = curve.points()
    vals = [bregman(gen, x, p) for p in pts]
    dvals = np.array([v.value for v in vals])
    inner = np.array([v.inner_term for v in vals])
    dist = np.linalg.norm(pts - x, axis=1)
    sep = float(np.linalg.norm(z - x))
    verdict = condition_a_verdict(affine, sep, dvals, dist, tol)
    details.update({"|z - x|": sep, "finest |z_k - x|": float(dist[-1])})
    samples = [CurveSamples(curve, pts, dvals, inner, verdict)]
    return ProbeReport("condition-a", x, samples, verdict, float(dvals[-1]), predicted, tol,
                       details)


# --- directional derivative upper semicontinuity ----------------------------

@dataclass
class UscReport:
    reference: float
    values: np.ndarray
    tail_excess: float
    holds: bool
    tol: float

    def summary(self):
        return (f"h'(y; d) = {self.reference:.6g}; tail max excess = {self.tail_excess:.3e}; "
                f"{'HOLDS' if self.holds else 'FAILS'}")


def probe_usc(gen: Generator, y, d, xs, ds, tol: float = 1e-3) -> UscReport:
    """Check ``limsup h'(x_k; d_k) <= h'(y; d)`` along ``(x_k, d_k) -> (y, d)``.

    With ``h'(y; d) = -inf`` the tail must diverge: below -1e3, or
    decreasing by non-shrinking increments.
    """
    y = _as_vector(y, gen.dim)
    d = _as_vector(d, gen.dim)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ds = np.atleast_2d(np.asarray(ds, dtype=float))
    if not gen.domain.contains(y + d):
        raise ProbeError("y + d must lie in the domain")
    for xk, dk in zip(xs, ds):
        if not gen.domain.contains(xk + dk):
            raise ProbeError("x_k + d_k left the domain")
    ref = gen.directional_derivative(y, d)
    vals = np.array([gen.directional_derivative(xk, dk) for xk, dk in zip(xs, ds)])
    n_tail = max(3, len(vals) // 5)
    tail = vals[-n_tail:]
    if ref == NEG_INF:
        steps = np.diff(tail)
        diverging = np.all(tail < -1e3) or (np.all(steps < 0)
                                            and abs(steps[-1]) >= 0.5 * abs(steps[0]))
        return UscReport(ref, vals, math.inf if not diverging else NEG_INF, bool(diverging), tol)
    excess = float(np.max(tail) - ref)
    return UscReport(ref, vals, excess, excess <= tol, tol)


def boundary_sequence(y, anchor, j_min=4, j_max=40) -> np.ndarray:
    """Interior points ``y + 2**-j (anchor - y)``."""
    y = np.asarray(y, dtype=float)
    lam = 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)
    return y + lam[:, None] * (np.asarray(anchor, dtype=float) - y)


def default_curves(gen: Generator, y, rng, n_anchors: int = 3, kinds=("chord",),
                   j_min=4, j_max=40) -> list:
    """Chord curves from random interior anchors, plus the tangential curve on balls."""
    curves = []
    dom = gen.domain
    if "chord" in kinds:
        for _ in range(n_anchors):
            for _ in range(1000):
                a = dom.sample(rng, 1)[0]
                if dom.is_interior(a, tol=1e-3) and np.linalg.norm(a - y) > 1e-3:
                    break
            curves.append(chord_curve(y, a, j_min, j_max))
    if "radial" in kinds:
        curves.append(chord_curve(y, dom.interior_point, j_min, j_max, label="radial"))
    if "tangential" in kinds:
        if not isinstance(dom, Ball):
            raise ProbeError("the tangential curve is defined on ball domains")
        curves.append(tangential_disk_curve(y, j_min, j_max, dom.center, dom.radius))
    return curves
