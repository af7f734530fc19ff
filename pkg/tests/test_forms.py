"""Differential forms: d, wedge, pullback, interior and Lie derivatives."""

import itertools
import math

import numpy as np
import pytest

from cosymred.charts import Point, chart, seeded_rng, smooth_map, vector_field
from cosymred.forms import (
    comb_list,
    d_coord,
    exterior_derivative,
    form_from_strings,
    interior_product,
    lie_derivative,
    minor_matrix,
    one_form,
    pullback_form,
    pullback_values,
    two_form_dets,
    two_form_matrices,
    values_as_matrix,
    wedge,
    wedge_power,
    wedge_values,
    zero_form,
)

C3 = chart("c3", ["x", "y", "z"])
C5 = chart("c5", ["q1", "p1", "q2", "p2", "theta"])


def _random_form(ch, degree, rng, terms=3):
    keys = ["1"] if degree == 0 else [
        "^".join("d" + ch.coords[i] for i in idx)
        for idx in comb_list(ch.dim, degree)]
    pool = ["sin({})", "cos({})", "{}^2", "{}", "exp({}/3)"]
    entries = {}
    for key in rng.choice(keys, size=min(terms, len(keys)), replace=False):
        var = ch.coords[rng.integers(ch.dim)]
        entries[key] = pool[rng.integers(len(pool))].format(var)
    return form_from_strings(ch, degree, entries)


@pytest.mark.parametrize("ch,degree", [(C3, 0), (C3, 1), (C5, 1), (C5, 2), (C5, 3)])
def test_d_squared_is_zero(ch, degree):
    rng = np.random.default_rng(100 + degree)
    pts = ch.sample(128, seeded_rng(1, f"dd{degree}"))
    for _ in range(5):
        a = _random_form(ch, degree, rng)
        dd = exterior_derivative(exterior_derivative(a))
        vals = dd.coeff_values(pts)
        assert vals.size == 0 or float(np.max(np.abs(vals))) < 1e-12


def test_wedge_graded_antisymmetry():
    rng = np.random.default_rng(7)
    pts = C5.sample(64, seeded_rng(2, "anti"))
    for ka, kb in [(1, 1), (1, 2), (2, 2), (2, 3)]:
        a = _random_form(C5, ka, rng)
        b = _random_form(C5, kb, rng)
        lhs = wedge(a, b).coeff_values(pts)
        rhs = wedge(b, a).coeff_values(pts)
        sign = (-1.0) ** (ka * kb)
        np.testing.assert_allclose(lhs, sign * rhs, rtol=0, atol=1e-12)


def _eval_alternating(form, p, vectors):
    """Brute-force (a wedge b) via the alternating-sum definition."""
    k = form.degree
    total = 0.0
    for perm in itertools.permutations(range(k)):
        sign = 1.0
        # count inversions
        inv = sum(1 for i in range(k) for j in range(i + 1, k)
                  if perm[i] > perm[j])
        sign = (-1.0) ** inv
        total += sign * form.evaluate(p, [vectors[i] for i in perm])
    return total / math.factorial(k)


def test_wedge_against_permutation_sum():
    """(a^b)(v1..vk+l) = sum over shuffles; checked by full antisymmetrization
    of the tensor product, which agrees for alternating inputs."""
    rng = np.random.default_rng(21)
    a = one_form(C3, ["y", "x*z", "1"])
    b = form_from_strings(C3, 1, {"dx": "sin(y)", "dz": "x"})
    w = wedge(a, b)
    for _ in range(6):
        p = Point(C3, rng.uniform(-1, 1, 3))
        vs = [rng.uniform(-1, 1, 3) for _ in range(2)]
        direct = w.evaluate(p, vs)
        brute = sum(
            math.copysign(1, 1) * a.evaluate(p, [vs[i]]) * b.evaluate(p, [vs[j]])
            * (1 if (i, j) == (0, 1) else -1)
            for i, j in [(0, 1), (1, 0)]
        )
        assert direct == pytest.approx(brute, abs=1e-12)
    # degree 1 ^ degree 2 against the antisymmetrized triple product
    c = form_from_strings(C3, 2, {"dx^dy": "z", "dy^dz": "x^2"})
    w2 = wedge(a, c)
    for _ in range(6):
        p = Point(C3, rng.uniform(-1, 1, 3))
        vs = [rng.uniform(-1, 1, 3) for _ in range(3)]
        brute = _eval_alternating_product(a, c, p, vs)
        assert w2.evaluate(p, vs) == pytest.approx(brute, abs=1e-12)


def _eval_alternating_product(a, b, p, vs):
    k, l = a.degree, b.degree
    total = 0.0
    for perm in itertools.permutations(range(k + l)):
        inv = sum(1 for i in range(k + l) for j in range(i + 1, k + l)
                  if perm[i] > perm[j])
        total += ((-1.0) ** inv) \
            * a.evaluate(p, [vs[perm[i]] for i in range(k)]) \
            * b.evaluate(p, [vs[perm[k + i]] for i in range(l)])
    return total / (math.factorial(k) * math.factorial(l))


def test_volume_normalization():
    """omega^n ^ eta = n! dq1^dp1^...^theta on the standard structure."""
    omega = form_from_strings(C5, 2, {"dq1^dp1": "1", "dq2^dp2": "1"})
    eta = form_from_strings(C5, 1, {"dtheta": "1"})
    vol = wedge(wedge_power(omega, 2), eta)
    assert vol.degree == 5
    pts = C5.sample(16, seeded_rng(3, "vol"))
    vals = vol.coeff_values(pts)
    # single top coefficient, ordered dq1^dp1^dq2^dp2^dtheta
    expected = 2.0  # n! for n = 2
    np.testing.assert_allclose(vals, expected, rtol=0, atol=1e-14)


def test_stokes_on_a_cell():
    """Boundary integral of alpha equals the cell integral of d(alpha) for a
    polynomial form; Gauss quadrature is exact here."""
    plane = chart("pl", ["x", "y"])
    alpha = one_form(plane, ["x^2 * y", "x - y^3"])
    dalpha = exterior_derivative(alpha)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    # map [-1, 1] to [0, 1]
    t = 0.5 * (nodes + 1.0)
    wts = 0.5 * weights

    def along(xs, ys, dxs, dys):
        pts = np.column_stack([xs, ys])
        vals = alpha.coeff_values(pts)
        return float(np.sum(wts * (vals[:, 0] * dxs + vals[:, 1] * dys)))

    ones = np.ones_like(t)
    boundary = (
        along(t, 0 * t, ones, 0 * ones)      # bottom, left to right
        + along(ones, t, 0 * ones, ones)     # right, up
        + along(1 - t, ones, -ones, 0 * ones)  # top, right to left
        + along(0 * ones, 1 - t, 0 * ones, -ones)  # left, down
    )
    xg, yg = np.meshgrid(t, t, indexing="ij")
    grid = np.column_stack([xg.ravel(), yg.ravel()])
    density = dalpha.coeff_values(grid)[:, 0].reshape(8, 8)
    cell = float(np.einsum("i,j,ij->", wts, wts, density))
    assert boundary == pytest.approx(cell, abs=1e-12)


def test_lie_derivative_leibniz():
    rng = np.random.default_rng(31)
    x = vector_field(C3, ["y", "z", "x*y"])
    a = _random_form(C3, 1, rng)
    b = _random_form(C3, 1, rng)
    lhs = lie_derivative(x, wedge(a, b))
    rhs_1 = wedge(lie_derivative(x, a), b)
    rhs_2 = wedge(a, lie_derivative(x, b))
    pts = C3.sample(64, seeded_rng(4, "leib"))
    np.testing.assert_allclose(
        lhs.coeff_values(pts), rhs_1.coeff_values(pts) + rhs_2.coeff_values(pts),
        rtol=0, atol=1e-9)


def test_lie_derivative_against_flow():
    """For the rotation field the flow is exact, so L_X a can be compared
    with a central difference of flow pullbacks."""
    plane = chart("pl", ["x", "y"])
    x = vector_field(plane, ["0 - y", "x"])
    a = form_from_strings(plane, 1, {"dx": "x*y", "dy": "x^2 - y"})
    sym = lie_derivative(x, a)
    h = 1e-4

    def flow(t):
        c, s = math.cos(t), math.sin(t)
        return smooth_map(plane, plane,
                          [f"{c!r}*x - {s!r}*y", f"{s!r}*x + {c!r}*y"])

    fwd = pullback_form(flow(h), a)
    bwd = pullback_form(flow(-h), a)
    pts = plane.sample(64, seeded_rng(5, "flow"))
    fd = (fwd.coeff_values(pts) - bwd.coeff_values(pts)) / (2 * h)
    np.testing.assert_allclose(sym.coeff_values(pts), fd, rtol=0, atol=1e-5)


def test_pullback_naturality():
    f = smooth_map(C3, C3, ["x*y", "y + z^2", "z"], "f")
    g = smooth_map(C3, C3, ["sin(x)", "x + y", "y*z"], "g")
    rng = np.random.default_rng(43)
    a = _random_form(C3, 1, rng)
    b = _random_form(C3, 1, rng)
    pts = C3.sample(64, seeded_rng(6, "nat"))
    # F*(a ^ b) = F*a ^ F*b
    lhs = pullback_form(f, wedge(a, b)).coeff_values(pts)
    rhs = wedge(pullback_form(f, a), pullback_form(f, b)).coeff_values(pts)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)
    # (f o g)* = g* o f*
    from cosymred.charts import compose

    two = pullback_form(g, pullback_form(f, a)).coeff_values(pts)
    one = pullback_form(compose(f, g), a).coeff_values(pts)
    np.testing.assert_allclose(one, two, rtol=0, atol=1e-10)
    # d commutes with pullback
    da = pullback_form(f, exterior_derivative(a)).coeff_values(pts)
    ad = exterior_derivative(pullback_form(f, a)).coeff_values(pts)
    np.testing.assert_allclose(da, ad, rtol=0, atol=1e-10)


def test_pullback_values_matches_symbolic():
    incl = smooth_map(C3, C5, ["x", "y", "x*z", "sin(z)", "x + y"], "incl")
    rng = np.random.default_rng(53)
    pts = C3.sample(32, seeded_rng(7, "pbv"))
    for degree in (1, 2):
        a = _random_form(C5, degree, rng)
        symbolic = pullback_form(incl, a).coeff_values(pts)
        target_vals = a.coeff_values(incl.apply_many(pts))
        numeric = pullback_values(target_vals, incl.jacobian_many(pts),
                                  degree, C3.dim, C5.dim)
        np.testing.assert_allclose(symbolic, numeric, rtol=0, atol=1e-11)


def test_minor_matrix_row_order_matches_comb_list():
    incl = smooth_map(C3, C5, ["x", "y", "x*z", "sin(z)", "x + y"])
    pts = C3.sample(4, seeded_rng(8, "minor"))
    jac = incl.jacobian_many(pts)
    m = minor_matrix(jac, 2, C3.dim, C5.dim)
    rows = comb_list(C5.dim, 2)
    cols = comb_list(C3.dim, 2)
    assert m.shape == (4, len(rows), len(cols))
    for r, (i, j) in enumerate(rows):
        for c, (a, b) in enumerate(cols):
            det = jac[:, i, a] * jac[:, j, b] - jac[:, i, b] * jac[:, j, a]
            np.testing.assert_allclose(m[:, r, c], det, rtol=0, atol=1e-12)


def test_two_form_matrix_helpers():
    omega = form_from_strings(C3, 2, {"dx^dy": "1 + z^2", "dy^dz": "x"})
    pts = C3.sample(16, seeded_rng(9, "mat"))
    mats = two_form_matrices(omega, pts)
    np.testing.assert_allclose(mats, -np.transpose(mats, (0, 2, 1)))
    np.testing.assert_allclose(mats[:, 0, 1], 1 + pts[:, 2] ** 2)
    np.testing.assert_allclose(mats[:, 1, 2], pts[:, 0])
    np.testing.assert_allclose(two_form_dets(omega, pts), np.linalg.det(mats))
    rebuilt = values_as_matrix(omega.coeff_values(pts), C3.dim)
    np.testing.assert_allclose(rebuilt, mats)


def test_interior_product():
    omega = form_from_strings(C3, 2, {"dx^dy": "1", "dy^dz": "z"})
    v = vector_field(C3, ["y", "x^2", "1"])
    got = interior_product(v, omega)
    pts = C3.sample(32, seeded_rng(10, "iota"))
    rng = np.random.default_rng(61)
    for i in range(5):
        p = Point(C3, pts[i])
        w = rng.uniform(-1, 1, 3)
        assert got.evaluate(p, [w]) == pytest.approx(
            omega.evaluate(p, [v.at(p), w]), abs=1e-12)
    # contraction with a 1-form gives the pairing as a 0-form
    alpha = one_form(C3, ["z", "0", "x"])
    paired = interior_product(v, alpha)
    assert paired.degree == 0
    np.testing.assert_allclose(
        paired.coeff_values(pts)[:, 0],
        pts[:, 2] * pts[:, 1] + pts[:, 0],
        rtol=0, atol=1e-12)


def test_form_construction_errors():
    from cosymred.charts import GeometryError

    with pytest.raises(GeometryError):
        form_from_strings(C3, 1, {"dw": "1"})
    with pytest.raises(GeometryError):
        form_from_strings(C3, 2, {"dx": "1"})  # wrong key arity
    with pytest.raises(GeometryError):
        zero_form(C3, 4)
    # repeated axis in a key
    with pytest.raises(GeometryError):
        form_from_strings(C3, 2, {"dx^dx": "1"})


def test_wedge_values_matches_symbolic_wedge():
    rng = np.random.default_rng(71)
    a = _random_form(C5, 1, rng)
    b = _random_form(C5, 2, rng)
    pts = C5.sample(16, seeded_rng(11, "wv"))
    direct = wedge(a, b).coeff_values(pts)
    numeric = wedge_values(a.coeff_values(pts), 1, b.coeff_values(pts), 2, C5.dim)
    np.testing.assert_allclose(direct, numeric, rtol=0, atol=1e-12)


def test_d_coord_and_zero_form():
    dx = d_coord(C3, "x")
    pts = C3.sample(4, seeded_rng(12, "dc"))
    np.testing.assert_array_equal(dx.coeff_values(pts),
                                  np.tile([1.0, 0.0, 0.0], (4, 1)))
    z = zero_form(C3, 2)
    assert float(np.max(np.abs(z.coeff_values(pts)))) == 0.0
