import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bregman_lab.domains import Ball, Box, DomainError, Polytope, Simplex

RNG = np.random.default_rng(0)


def all_domains():
    return [Simplex(3), Box(0.0, 1.0, dim=2), Ball(2), Ball(3, radius=2.0),
            Polytope([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])]


def test_contains_examples():
    assert Simplex(2).contains([0.5, 0.5])
    assert Ball(2).contains([1.0, 0.0])
    assert not Ball(2).contains([1.1, 0.0])
    assert Box(dim=2).to_polytope().contains([0.0, 1.0])


def test_contains_tolerance():
    assert Box(dim=1).contains([1.0 + 5e-13])
    assert not Box(dim=1).contains([1.0 + 5e-12])


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        Box(dim=2).contains([0.5, 0.5, 0.5])


def test_is_interior_examples():
    box = Box(dim=2)
    assert box.is_interior([0.5, 0.5])
    assert not box.is_interior([0.0, 0.5])
    assert not Ball(2).is_interior([0.999999999999, 0.0])


def test_interior_witness():
    for d in all_domains():
        assert d.is_interior(d.interior_point)


def test_polytope_needs_interior():
    with pytest.raises(DomainError):
        Polytope([[1.0], [-1.0]], [0.0, 0.0])
    with pytest.raises(DomainError):
        Polytope([[1.0, 0.0]], [1.0])


def test_interior_implies_contains():
    for d in all_domains():
        for x in d.sample(RNG, 1000):
            if d.is_interior(x):
                assert d.contains(x)


def test_polytope_conversion_agrees():
    for d in (Box(dim=3), Box(-1.0, 2.0, dim=2), Simplex(3)):
        p = d.to_polytope()
        pts = RNG.uniform(-1.5, 2.5, size=(1000, d.dim))
        if isinstance(d, Simplex):
            # points near the affine hull exercise the equality row
            pts = pts / pts.sum(axis=1, keepdims=True)
        for x in pts:
            assert p.contains(x) == d.contains(x)
    with pytest.raises(DomainError):
        Ball(2).to_polytope()
    assert not Ball(2).is_polytope


def test_reflection_examples():
    assert Box(dim=2).reflection_stays([0, 0], [0.1, 0.1])
    x = np.array([np.cos(0.1), np.sin(0.1)])
    assert not Ball(2).reflection_stays([1.0, 0.0], x)
    for d in all_domains():
        y = d.interior_point
        assert d.reflection_stays(y, y)


def test_reflection_radius_examples():
    assert Box(dim=2).reflection_radius([0.0, 0.5]) == pytest.approx(0.25)
    assert Simplex(3).reflection_radius(np.full(3, 1 / 3)) > 0
    assert Ball(2).reflection_radius([1.0, 0.0]) is None


def _ball_sample(rng, y, eps, n):
    v = rng.normal(size=(n, len(y)))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return y + v * eps * rng.uniform(0, 1, size=(n, 1))


@pytest.mark.parametrize("domain", [Box(dim=2), Box(dim=3), Simplex(3)])
def test_reflection_radius_property(domain):
    rng = np.random.default_rng(1)
    ys = np.vstack([domain.sample(rng, 25), domain.sample_boundary(rng, 25)])
    for y in ys:
        eps = domain.reflection_radius(y)
        assert eps > 0
        xs = _ball_sample(rng, y, eps, 100)
        if isinstance(domain, Simplex):
            B = domain.tangent_basis()
            xs = y + ((xs - y) @ B.T) @ B
        for x in xs:
            if domain.contains(x):
                assert domain.reflection_stays(y, x)


def test_chord_exit_examples():
    np.testing.assert_allclose(Ball(2).chord_exit([0, 0], [0.5, 0]), [1, 0], atol=1e-12)
    np.testing.assert_allclose(Box(dim=2).chord_exit([0.5, 0.5], [0.75, 0.5]), [1, 0.5])
    np.testing.assert_allclose(Simplex(2).chord_exit([0.5, 0.5], [0.6, 0.4]), [1, 0], atol=1e-12)
    with pytest.raises(DomainError):
        Box(dim=2).chord_exit([0.5, 0.5], [0.5, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_chord_exit_on_boundary(seed):
    rng = np.random.default_rng(seed)
    for d in all_domains():
        y, b = d.sample(rng, 2)
        if np.linalg.norm(y - b) < 1e-6:
            continue
        x = d.chord_exit(y, b)
        assert d.contains(x)
        assert not d.is_interior(x)


def test_nudge_interior():
    for d in all_domains():
        for x in d.sample_boundary(RNG, 10):
            assert d.is_interior(d.nudge_interior(x, 1e-10), tol=0.0)
