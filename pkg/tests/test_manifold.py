import math

import numpy as np
import pytest

from src.core.errors import DimensionMismatchError, InvalidParameterError, InvalidPointError
from src.core.manifold import Euclidean, LogOrthant, Tangent, manifold_from_name

E = math.e


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(11))


def test_dist_examples():
    m3 = LogOrthant(3)
    assert m3.dist(m3.point([1, 1, 1]), m3.point([1, 1, 1])) == 0.0
    assert m3.dist(m3.point([E, E, E]), m3.point([1, 1, 1])) == pytest.approx(math.sqrt(3), rel=1e-12)
    m2 = LogOrthant(2)
    expected = math.sqrt(math.log(2) ** 2 + math.log(3) ** 2)
    assert m2.dist(m2.point([2, 3]), m2.point([1, 1])) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(1.29900, abs=1e-5)


def test_dist_rejects_bad_points():
    m = LogOrthant(2)
    with pytest.raises(DimensionMismatchError):
        m.dist(m.point([1, 1]), LogOrthant(3).point([1, 1, 1]))
    with pytest.raises(InvalidPointError):
        m.point([1.0, 0.0])
    with pytest.raises(InvalidPointError):
        m.point([1.0, -2.0])
    with pytest.raises(InvalidPointError):
        m.point([1.0, float("inf")])


def test_log_map_examples():
    m = LogOrthant(2)
    x = m.point([1, 1])
    np.testing.assert_allclose(m.log_map(x, m.point([E, E ** 2])).vec, [1.0, 2.0], rtol=1e-12)
    np.testing.assert_allclose(m.log_map(m.point([2, 2]), m.point([4, 2])).vec, [2 * math.log(2), 0.0], atol=1e-15)
    np.testing.assert_array_equal(m.log_map(x, x).vec, [0.0, 0.0])


def test_exp_map_examples():
    m3 = LogOrthant(3)
    x = m3.point([5, 7, 11])
    assert m3.exp_map(m3.zero_tangent(x)).allclose(x)
    m2 = LogOrthant(2)
    assert m2.exp_map(Tangent(m2.point([2, 2]), [2 * math.log(2), 0.0])).allclose(m2.point([4, 2]))
    m1 = LogOrthant(1)
    assert m1.exp_map(Tangent(m1.point([1]), [1.0])).coords[0] == pytest.approx(E, rel=1e-14)


def test_tangent_validation():
    p = LogOrthant(2).point([1, 1])
    with pytest.raises(DimensionMismatchError):
        Tangent(p, [1.0, 2.0, 3.0])
    with pytest.raises(InvalidPointError):
        Tangent(p, [1.0, float("nan")])


def test_inner_examples():
    m2 = LogOrthant(2)
    assert m2.inner(m2.point([1, 1]), [1, 0], [0, 1]) == 0.0
    assert m2.inner(m2.point([2, 2]), [2, 0], [2, 0]) == pytest.approx(1.0)
    m3 = LogOrthant(3)
    assert m3.inner(m3.point([1, 1, 1]), [1, 1, 1], [1, 1, 1]) == pytest.approx(3.0)
    with pytest.raises(DimensionMismatchError):
        m3.inner(m3.point([1, 1, 1]), [1, 1], [1, 1, 1])


def test_geodesic_examples():
    m1 = LogOrthant(1)
    x, y = m1.point([1]), m1.point([E ** 2])
    assert m1.geodesic(x, y, 0.0).allclose(x)
    mid = m1.geodesic(x, y, 0.5)
    assert mid.coords[0] == pytest.approx(E, rel=1e-14)
    assert m1.dist(x, mid) == pytest.approx(m1.dist(mid, y), rel=1e-12)
    e2 = Euclidean(2)
    assert e2.geodesic(e2.point([0, 0]), e2.point([2, 2]), 0.25).allclose(e2.point([0.5, 0.5]))
    with pytest.raises(InvalidParameterError):
        m1.geodesic(x, y, -0.1)


def test_geodesic_is_constant_speed(rng):
    m = LogOrthant(4)
    x, y = m.random_point(rng), m.random_point(rng)
    d = m.dist(x, y)
    for s, t in [(0.1, 0.7), (0.0, 1.0), (0.3, 1.8)]:
        assert m.dist(m.geodesic(x, y, s), m.geodesic(x, y, t)) == pytest.approx(abs(s - t) * d, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 10])
def test_random_identities(rng, n):
    m = LogOrthant(n)
    for _ in range(200):
        x, y, z = m.random_point(rng), m.random_point(rng), m.random_point(rng)
        d = m.dist(x, y)
        v = m.log_map(x, y)
        assert m.dist(m.exp_map(v), y) <= 1e-10 * (1 + d)
        assert m.norm(x, v) ** 2 == pytest.approx(d * d, rel=1e-10, abs=1e-10)
        lhs = m.sq_dist(x, y) + m.sq_dist(y, z) - m.sq_dist(z, x)
        rhs = 2 * m.inner(y, m.log_map(y, x), m.log_map(y, z))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-9)
        assert d == pytest.approx(np.linalg.norm(np.log(x.coords) - np.log(y.coords)), rel=1e-12)


def test_points_are_read_only():
    p = LogOrthant(2).point([1, 2])
    with pytest.raises(ValueError):
        p.coords[0] = 5.0


def test_manifold_from_name():
    assert manifold_from_name("log-orthant", 3) == LogOrthant(3)
    assert manifold_from_name("Euclidean", 2) == Euclidean(2)
    assert LogOrthant(2) != Euclidean(2)
    with pytest.raises(InvalidParameterError):
        manifold_from_name("sphere", 2)
    with pytest.raises(InvalidParameterError):
        LogOrthant(0)
