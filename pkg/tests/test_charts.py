"""Charts, smooth maps, vector fields: jacobians, composition, periodicity."""

import math

import numpy as np
import pytest

from cosymred.charts import (
    GeometryError,
    Point,
    chart,
    commutator,
    compose,
    coordinate_field,
    identity_map,
    jacobian,
    pushforward,
    reduce_periodic,
    seeded_rng,
    smooth_map,
    vector_field,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture
def plane():
    return chart("plane", ["q", "p"])


@pytest.fixture
def triple():
    return chart("triple", ["x", "y", "z"])


def test_chain_rule(plane, triple):
    """d(f o g) = df . dg at 50 seeded points, polynomial so nearly exact."""
    g = smooth_map(plane, triple, ["q*p", "q^2 - p", "q + 3*p"])
    f = smooth_map(triple, plane, ["x*y + z^2", "x - y*z"])
    fg = compose(f, g)
    rng = seeded_rng(11, "chain")
    pts = plane.sample(50, rng)
    jf = f.jacobian_many(g.apply_many(pts))
    jg = g.jacobian_many(pts)
    np.testing.assert_allclose(fg.jacobian_many(pts),
                               np.einsum("pij,pjk->pik", jf, jg),
                               rtol=0, atol=1e-9)


def test_jacobian_against_central_difference(triple):
    f = smooth_map(triple, triple, ["sin(x*y)", "exp(z/3) + y", "x/(2 + y^2)"])
    rng = seeded_rng(5, "jac")
    pts = triple.sample(20, rng)
    h = 1e-6
    sym = f.jacobian_many(pts)
    for j in range(3):
        up = pts.copy()
        dn = pts.copy()
        up[:, j] += h
        dn[:, j] -= h
        fd = (f.apply_many(up) - f.apply_many(dn)) / (2 * h)
        np.testing.assert_allclose(sym[:, :, j], fd, rtol=0, atol=1e-7)


def test_jacobian_point_matches_many(plane, triple):
    g = smooth_map(plane, triple, ["q*p", "q^2 - p", "q + 3*p"])
    p = Point(plane, [0.4, -1.2])
    np.testing.assert_allclose(jacobian(g, p), g.jacobian_many(p.values[None, :])[0])


def test_pushforward(plane, triple):
    g = smooth_map(plane, triple, ["q*p", "q^2 - p", "q + 3*p"])
    v = vector_field(plane, ["p", "1"])
    p = Point(plane, [0.7, 0.2])
    np.testing.assert_allclose(pushforward(g, v, p), jacobian(g, p) @ v.at(p))


def test_seeded_rng_label_separation():
    a = seeded_rng(42, "alpha").uniform(size=4)
    b = seeded_rng(42, "alpha").uniform(size=4)
    c = seeded_rng(42, "beta").uniform(size=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_periodic_reduction():
    cyl = chart("cyl", ["q", "theta"], periodic=["theta"])
    p = Point(cyl, [1.0, 7.0])
    assert p.values[1] == pytest.approx(7.0 - TWO_PI)
    pts = np.array([[0.0, -0.1], [2.0, TWO_PI + 0.3]])
    red = reduce_periodic(cyl, pts)
    assert red[0, 1] == pytest.approx(TWO_PI - 0.1)
    assert red[1, 1] == pytest.approx(0.3)
    # the non periodic column is untouched
    np.testing.assert_array_equal(red[:, 0], pts[:, 0])


def test_wrap_deltas():
    cyl = chart("cyl", ["q", "theta"], periodic=["theta"])
    deltas = np.array([[0.5, TWO_PI - 1e-9], [0.0, -TWO_PI + 1e-9]])
    wrapped = cyl.wrap_deltas(deltas)
    assert abs(wrapped[0, 1]) < 1e-8
    assert abs(wrapped[1, 1]) < 1e-8
    assert wrapped[0, 0] == 0.5


def test_sample_respects_box_and_periodicity():
    c = chart("c", ["a", "theta"], periodic=["theta"], box={"a": (2.0, 3.0)})
    pts = c.sample(256, seeded_rng(1, "box"))
    assert pts.shape == (256, 2)
    assert np.all(pts[:, 0] >= 2.0) and np.all(pts[:, 0] <= 3.0)
    assert np.all(pts[:, 1] >= 0.0) and np.all(pts[:, 1] < TWO_PI)


def test_commutator(plane):
    dq = coordinate_field(plane, "q")
    qdp = vector_field(plane, ["0", "q"])
    lie = commutator(dq, qdp)
    pts = plane.sample(16, seeded_rng(2, "comm"))
    np.testing.assert_allclose(lie.at_many(pts), np.tile([0.0, 1.0], (16, 1)),
                               rtol=0, atol=1e-14)
    # antisymmetry
    rev = commutator(qdp, dq)
    np.testing.assert_allclose(rev.at_many(pts), np.tile([0.0, -1.0], (16, 1)),
                               rtol=0, atol=1e-14)


def test_jacobi_identity_for_fields(triple):
    x = vector_field(triple, ["y", "z*x", "1"])
    y = vector_field(triple, ["x^2", "z", "y"])
    z = vector_field(triple, ["1", "x", "x*y"])
    total = commutator(x, commutator(y, z))
    pts = triple.sample(32, seeded_rng(9, "jacobi"))
    acc = total.at_many(pts) \
        + commutator(y, commutator(z, x)).at_many(pts) \
        + commutator(z, commutator(x, y)).at_many(pts)
    np.testing.assert_allclose(acc, 0.0, rtol=0, atol=1e-10)


def test_chart_mismatch_errors(plane, triple):
    v = vector_field(plane, ["1", "0"])
    with pytest.raises(GeometryError):
        v.at(Point(triple, [0, 0, 0]))
    f = smooth_map(plane, triple, ["q", "p", "0"])
    g = smooth_map(plane, triple, ["q", "p", "1"])
    with pytest.raises(GeometryError):
        compose(f, g)  # target of inner is not source of outer
    with pytest.raises(GeometryError):
        smooth_map(plane, triple, ["q", "p"])  # wrong component count
    with pytest.raises(GeometryError):
        Point(plane, [1.0])


def test_identity_map(plane):
    ident = identity_map(plane)
    pts = plane.sample(8, seeded_rng(4, "id"))
    np.testing.assert_array_equal(ident.apply_many(pts), pts)
    np.testing.assert_allclose(ident.jacobian_many(pts),
                               np.tile(np.eye(2), (8, 1, 1)))


def test_vector_field_apply_to(plane):
    from cosymred.expr import evaluate

    v = vector_field(plane, ["p", "-q"])
    out = v.apply_to(plane.parse("q^2 + p"))
    env = {"q": 1.5, "p": -0.5}
    # v(f) = p * 2q + (-q) * 1
    assert evaluate(out, env) == pytest.approx(2 * 1.5 * -0.5 - 1.5)


def test_unknown_coordinate_rejected(plane):
    with pytest.raises(Exception):
        vector_field(plane, ["q", "w"])
    with pytest.raises(GeometryError):
        coordinate_field(plane, "w")
