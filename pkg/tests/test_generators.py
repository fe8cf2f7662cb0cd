import math

import numpy as np
import pytest

from bregman_lab.domains import Ball, Box, DomainError, Simplex
from bregman_lab.generators import (
    NEG_INF,
    BallGen,
    FermiDirac,
    GeneratorError,
    HalfSquaredNorm,
    NegEntropy,
)
from face_affine import FaceAffine


def legendre_generators():
    return [NegEntropy(Simplex(3)), FermiDirac(Box(dim=2)), BallGen(Ball(2)), BallGen(Ball(3))]


def interior_points(gen, rng, n, min_dist=1e-3):
    pts = []
    while len(pts) < n:
        x = gen.domain.sample(rng, 1)[0]
        if gen.domain.boundary_distance(x) >= min_dist:
            pts.append(x)
    return np.array(pts)


def random_duals(gen, rng, n, bound):
    g = rng.uniform(-1, 1, size=(n, gen.dim))
    g *= bound * rng.uniform(0, 1, size=(n, 1)) / np.linalg.norm(g, axis=1, keepdims=True)
    if isinstance(gen, NegEntropy):
        g -= g.mean(axis=1, keepdims=True)
    return g


def fd_gradient(gen, x, step=1e-6):
    basis = gen.domain.tangent_basis()
    g = np.array([(gen.value(x + step * e) - gen.value(x - step * e)) / (2 * step) for e in basis])
    return basis.T @ g


def test_value_examples():
    assert BallGen(Ball(2)).value([0, 0]) == -1.0
    assert FermiDirac(Box(dim=1)).value([0.5]) == pytest.approx(math.log(0.5), abs=1e-12)
    assert NegEntropy(Simplex(2)).value([1, 0]) == 0.0


def test_value_outside_domain():
    with pytest.raises(DomainError):
        BallGen(Ball(2)).value([1.1, 0])


def test_value_finite_on_boundary():
    rng = np.random.default_rng(5)
    for gen in legendre_generators():
        for x in gen.domain.sample_boundary(rng, 50):
            assert math.isfinite(gen.value(x))


def test_gradient_examples():
    np.testing.assert_allclose(BallGen(Ball(2)).gradient([0.6, 0]), [0.75, 0], atol=1e-15)
    assert FermiDirac(Box(dim=1)).gradient([0.5])[0] == 0.0
    with pytest.raises(DomainError):
        FermiDirac(Box(dim=2)).gradient([0.0, 0.5])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for gen in legendre_generators() + [HalfSquaredNorm(Box(dim=2))]:
        for x in interior_points(gen, rng, 20):
            g = gen.gradient(x)
            rel = np.linalg.norm(g - fd_gradient(gen, x)) / max(1.0, np.linalg.norm(g))
            assert rel <= 1e-5, (gen, x)


def test_mirror_inverse_examples():
    np.testing.assert_allclose(BallGen(Ball(2)).mirror_inverse([0.75, 0]), [0.6, 0], atol=1e-15)
    assert FermiDirac(Box(dim=1)).mirror_inverse([0.0])[0] == 0.5
    ne = NegEntropy(Simplex(2))
    np.testing.assert_allclose(ne.mirror_inverse(ne.gradient([0.3, 0.7])), [0.3, 0.7], atol=1e-8)
    with pytest.raises(GeneratorError):
        ne.mirror_inverse([np.nan, 0.0])


def test_round_trip_primal():
    rng = np.random.default_rng(1)
    for gen in legendre_generators() + [FaceAffine()]:
        for x in interior_points(gen, rng, 100):
            np.testing.assert_allclose(gen.mirror_inverse(gen.gradient(x)), x, atol=1e-8)


@pytest.mark.parametrize("gen,bound", [(NegEntropy(Simplex(3)), 50.0), (BallGen(Ball(2)), 50.0),
                                       (BallGen(Ball(3)), 50.0), (FermiDirac(Box(dim=2)), 15.0)])
def test_round_trip_dual(gen, bound):
    rng = np.random.default_rng(2)
    for g in random_duals(gen, rng, 100, bound):
        np.testing.assert_allclose(gen.gradient(gen.mirror_inverse(g)), g, atol=1e-8)


def test_newton_fallback_matches_closed_form():
    class Slow(FermiDirac):
        _mirror_inverse = FermiDirac.__mro__[1]._mirror_inverse

    gen, slow = FermiDirac(Box(dim=2)), Slow(Box(dim=2))
    for g in ([0.3, -1.2], [4.0, 2.0]):
        np.testing.assert_allclose(slow.mirror_inverse(g), gen.mirror_inverse(g), atol=1e-10)


def test_convex_along_segments():
    rng = np.random.default_rng(3)
    for gen in legendre_generators():
        xs = interior_points(gen, rng, 100, 0.0)
        ys = interior_points(gen, rng, 100, 0.0)
        for x, y in zip(xs, ys):
            for t in (0.25, 0.5, 0.75):
                lhs = gen.value(t * x + (1 - t) * y)
                assert lhs <= t * gen.value(x) + (1 - t) * gen.value(y) + 1e-12


def test_strict_midpoint_gap_including_boundary():
    rng = np.random.default_rng(4)
    for gen in legendre_generators():
        assert gen.strictly_convex_on_closure
        pts = np.vstack([gen.domain.sample(rng, 50), gen.domain.sample_boundary(rng, 50)])
        rng.shuffle(pts)
        for x, y in zip(pts[::2], pts[1::2]):
            gap = 0.5 * (gen.value(x) + gen.value(y)) - gen.value(0.5 * (x + y))
            assert gap > 0


def _ray_norms(gen, y, inward):
    return np.array([np.linalg.norm(gen.gradient(y + 10.0 ** -k * inward)) for k in range(4, 13)])


def test_essential_smoothness_ball():
    gen = BallGen(Ball(2))
    for a in np.linspace(0, 2 * np.pi, 10, endpoint=False):
        y = np.array([np.cos(a), np.sin(a)])
        norms = _ray_norms(gen, y, -y)
        assert np.all(np.diff(norms) > 0)
        assert norms[-1] > 1e5
        assert np.linalg.norm(gen.gradient((1 - 1e-14) * y)) > 1e6


@pytest.mark.parametrize("gen", [FermiDirac(Box(dim=2)), NegEntropy(Simplex(3))])
def test_essential_smoothness_entropies(gen):
    # entropy gradients grow like |log dist|: monotone and unbounded, not fast
    rng = np.random.default_rng(6)
    w = gen.domain.interior_point
    for y in gen.domain.sample_boundary(rng, 10):
        inward = (w - y) / np.linalg.norm(w - y)
        norms = _ray_norms(gen, y, inward)
        assert np.all(np.diff(norms) > 0)
        assert norms[-1] - norms[0] > 0.5 * 8 * math.log(10)


def test_directional_derivative():
    fd = FermiDirac(Box(dim=1))
    assert fd.directional_derivative([0.0], [1.0]) == NEG_INF
    assert fd.directional_derivative([0.0], [0.0]) == 0.0
    x, d = np.array([0.3]), np.array([0.5])
    assert fd.directional_derivative(x, d) == pytest.approx(float(fd.gradient(x) @ d), abs=1e-6)
    ball = BallGen(Ball(2))
    # at the north pole moving along the tangent the derivative is -inf
    assert ball.directional_derivative([0.0, 1.0], [0.5, -0.5]) == NEG_INF
    with pytest.raises(DomainError):
        fd.directional_derivative([1.0], [1.0])


def test_directional_derivative_finite_at_boundary():
    # h(x) = |x|^2/2 on the box: derivative at a face equals <x, d>
    gen = HalfSquaredNorm(Box(dim=2))
    assert gen.directional_derivative([0.0, 0.5], [0.5, 0.1]) == pytest.approx(0.05, abs=1e-6)
    # along a face the entropy derivative is finite
    fd = FermiDirac(Box(dim=2))
    expect = math.log(0.4 / 0.6) * 0.2
    assert fd.directional_derivative([0.0, 0.4], [0.0, 0.2]) == pytest.approx(expect, abs=1e-6)


def test_generator_domain_checks():
    with pytest.raises(GeneratorError):
        NegEntropy(Box(dim=2))
    with pytest.raises(GeneratorError):
        FermiDirac(Box(-1.0, 1.0, dim=2))
    with pytest.raises(GeneratorError):
        BallGen(Ball(2, radius=2.0))


def test_half_squared_norm_is_projection():
    gen = HalfSquaredNorm(Box(dim=2))
    assert not gen.legendre_on_C
    x = gen.mirror_inverse([2.0, 0.5])
    assert x[0] == pytest.approx(1.0) and x[1] == 0.5
    assert gen.domain.is_interior(x, tol=0.0)
