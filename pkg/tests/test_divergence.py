import math

import numpy as np
import pytest

from bregman_lab.divergence import bregman, divergence, inner_gap
from bregman_lab.domains import Ball, Box, DomainError, Simplex
from bregman_lab.generators import BallGen, FermiDirac, HalfSquaredNorm, NegEntropy
from bregman_lab.probes import tangential_disk_curve


def generators():
    return [NegEntropy(Simplex(3)), FermiDirac(Box(dim=2)), BallGen(Ball(2)),
            HalfSquaredNorm(Box(dim=3))]


def interior(gen, rng, n):
    return np.array([x for x in gen.domain.sample(rng, 4 * n)
                     if gen.domain.is_interior(x, tol=0.0)][:n])


def test_examples():
    for gen in generators():
        x = gen.domain.interior_point
        assert divergence(gen, x, x) == 0.0
    assert divergence(BallGen(Ball(2)), [0, 0], [0.6, 0]) == pytest.approx(0.25, abs=1e-15)
    assert divergence(NegEntropy(Simplex(2)), [1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))


def test_kl_closed_form():
    gen = NegEntropy(Simplex(3))
    rng = np.random.default_rng(0)
    for y, x in zip(interior(gen, rng, 50), interior(gen, rng, 50)):
        assert divergence(gen, y, x) == pytest.approx(float(np.sum(y * np.log(y / x))), abs=1e-12)


def test_inner_gap_examples():
    gen = FermiDirac(Box(dim=2))
    assert inner_gap(gen, [0.3, 0.3], [0.3, 0.3]) == 0.0
    t = 1e-6
    val = inner_gap(gen, [0.0, 0.5], [t, 0.5])
    assert val == pytest.approx(t * math.log((1 - t) / t), rel=1e-9)
    assert abs(val) <= 2e-5


def test_disk_curve_direct_evaluation():
    # three-term formula along the tangential curve at r = 0.99
    curve = tangential_disk_curve(np.array([1.0, 0.0]))
    r = 0.99
    th = math.acos(r - math.sqrt(1 - r * r))
    x = np.array([r * math.cos(th), r * math.sin(th)])
    val = divergence(BallGen(Ball(2)), [1.0, 0.0], x)
    assert val == pytest.approx(r + math.sqrt(1 - r * r), abs=1e-9)
    assert curve.kind


def test_errors():
    gen = FermiDirac(Box(dim=2))
    with pytest.raises(DomainError):
        bregman(gen, [0.5, 0.5], [0.0, 0.5])
    with pytest.raises(DomainError):
        bregman(gen, [1.5, 0.5], [0.5, 0.5])


def test_overflow_sentinel():
    gen = BallGen(Ball(2))
    x = np.array([np.nextafter(1.0, 0.0), 0.0])
    v = bregman(gen, [0.0, 0.0], x)
    assert v.value > 1e6
    assert math.isfinite(v.inner_term)

    class Huge(HalfSquaredNorm):
        def _gradient(self, x):
            return np.full(self.dim, 1e301)

    v = bregman(Huge(Box(dim=2)), [0.2, 0.2], [0.5, 0.5])
    assert v.overflowed and v.value == math.inf


@pytest.mark.parametrize("gen", generators())
def test_nonnegative(gen):
    rng = np.random.default_rng(1)
    ys = np.vstack([gen.domain.sample(rng, 900), gen.domain.sample_boundary(rng, 100)])
    xs = interior(gen, rng, 1000)
    for y, x in zip(ys, xs):
        assert divergence(gen, y, x) >= -1e-10


@pytest.mark.parametrize("gen", generators())
def test_three_point_identity(gen):
    rng = np.random.default_rng(2)
    pts = interior(gen, rng, 300)
    for y, x, z in zip(pts[:100], pts[100:200], pts[200:]):
        lhs = divergence(gen, y, x) + divergence(gen, x, z) - divergence(gen, y, z)
        rhs = float((gen.gradient(z) - gen.gradient(x)) @ (y - x))
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_zero_iff_equal():
    rng = np.random.default_rng(3)
    for gen in generators()[:3]:
        pts = interior(gen, rng, 40)
        for y, x in zip(pts[::2], pts[1::2]):
            if np.linalg.norm(y - x) > 1e-8:
                assert divergence(gen, y, x) > 0


def test_half_squared_norm_divergence():
    gen = HalfSquaredNorm(Box(dim=3))
    rng = np.random.default_rng(4)
    for y, x in zip(gen.domain.sample(rng, 100), interior(gen, rng, 100)):
        assert divergence(gen, y, x) == pytest.approx(0.5 * float((y - x) @ (y - x)), abs=1e-12)
