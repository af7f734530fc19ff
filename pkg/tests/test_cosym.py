"""Cosymplectic structures: flat map, Reeb field, brackets, constructions."""

import math

import numpy as np
import pytest

from cosymred.actions import GroupModel, group_action
from cosymred.charts import chart, seeded_rng, smooth_map, vector_field
from cosymred.cosym import (
    TransversalityError,
    average_one_form,
    cosymplectic,
    flat_apply,
    flat_inverse,
    from_symplectic_hypersurface,
    hamiltonian_vf,
    leaf_distribution,
    poisson_bracket,
    reeb,
    symplectization,
    verify_cosymplectic,
    verify_reeb,
    verify_symplectization,
    volume_form,
)
from cosymred.expr import evaluate
from cosymred.forms import (
    exterior_derivative,
    form_from_strings,
    interior_product,
    one_form,
    pullback_form,
    wedge,
)

C5 = chart("c5", ["q1", "p1", "q2", "p2", "theta"], periodic=["theta"])


@pytest.fixture(scope="module")
def canonical():
    return cosymplectic(C5, {"dq1^dp1": "1", "dq2^dp2": "1"}, {"dtheta": "1"}, "S")


def test_verify_canonical(canonical):
    rep = verify_cosymplectic(canonical, samples=128, seed=42)
    assert rep.failing() == []
    assert verify_reeb(canonical, samples=128, seed=42).failing() == []


def test_flat_round_trip(canonical):
    rng = np.random.default_rng(17)
    pts = C5.sample(128, seeded_rng(42, "flatrt"))
    for _ in range(4):
        comps = [f"{rng.uniform(-2, 2)!r} + {rng.uniform(-2, 2)!r}*{c}"
                 for c in C5.coords]
        v = vector_field(C5, comps)
        back = flat_inverse(canonical, flat_apply(canonical, v))
        np.testing.assert_allclose(back.at_many(pts), v.at_many(pts),
                                   rtol=0, atol=1e-10)
        alpha = one_form(C5, comps)
        round_a = flat_apply(canonical, flat_inverse(canonical, alpha))
        np.testing.assert_allclose(round_a.coeff_values(pts),
                                   alpha.coeff_values(pts), rtol=0, atol=1e-10)


def test_reeb_is_the_angle_field(canonical):
    xi = reeb(canonical)
    pts = C5.sample(128, seeded_rng(42, "reeb"))
    np.testing.assert_allclose(xi.at_many(pts),
                               np.tile([0, 0, 0, 0, 1.0], (128, 1)),
                               rtol=0, atol=1e-12)
    # defining equations
    paired = interior_product(xi, canonical.eta)
    np.testing.assert_allclose(paired.coeff_values(pts), 1.0, rtol=0, atol=1e-12)
    contracted = interior_product(xi, canonical.omega)
    np.testing.assert_allclose(contracted.coeff_values(pts), 0.0, rtol=0, atol=1e-12)


def test_hamiltonian_field_equation(canonical):
    pts = C5.sample(128, seeded_rng(42, "ham"))
    xi = reeb(canonical)
    for text in ("q1^2 * p2 + sin(theta)", "p1*p2 + q2", "cos(theta) * q1"):
        f = C5.parse(text)
        xf = hamiltonian_vf(canonical, f)
        lhs = flat_apply(canonical, xf)
        df = exterior_derivative(form_from_strings(C5, 0, {"1": text}))
        rhs = df - canonical.eta.scale(xi.apply_to(f))
        np.testing.assert_allclose(lhs.coeff_values(pts), rhs.coeff_values(pts),
                                   rtol=0, atol=1e-10)
        # eta annihilates every Hamiltonian field
        np.testing.assert_allclose(
            interior_product(xf, canonical.eta).coeff_values(pts), 0.0,
            rtol=0, atol=1e-10)


def test_canonical_bracket(canonical):
    one = poisson_bracket(canonical, C5.parse("q1"), C5.parse("p1"))
    pts = C5.sample(16, seeded_rng(1, "pb"))
    env = dict(zip(C5.coords, pts[0]))
    assert evaluate(one, env) == pytest.approx(1.0, abs=1e-14)
    # theta is central for coordinate functions of the symplectic block
    zero = poisson_bracket(canonical, C5.parse("q1"), C5.parse("q2"))
    assert evaluate(zero, env) == pytest.approx(0.0, abs=1e-14)


def test_jacobi_identity(canonical):
    f = C5.parse("q1*p2 + sin(theta)")
    g = C5.parse("p1^2 - q2")
    h = C5.parse("q2*p2 + cos(q1)")
    cyc = [
        poisson_bracket(canonical, f, poisson_bracket(canonical, g, h)),
        poisson_bracket(canonical, g, poisson_bracket(canonical, h, f)),
        poisson_bracket(canonical, h, poisson_bracket(canonical, f, g)),
    ]
    pts = C5.sample(128, seeded_rng(42, "jac"))
    from cosymred import engine

    total = sum(engine.eval_expr(c, C5.coords, pts) for c in cyc)
    assert float(np.max(np.abs(total))) < 1e-8


def test_reeb_is_a_bracket_derivation(canonical):
    xi = reeb(canonical)
    f = C5.parse("q1 * sin(theta)")
    g = C5.parse("p1 + q2*p2")
    lhs = xi.apply_to(poisson_bracket(canonical, f, g))
    rhs_a = poisson_bracket(canonical, xi.apply_to(f), g)
    rhs_b = poisson_bracket(canonical, f, xi.apply_to(g))
    pts = C5.sample(128, seeded_rng(42, "der"))
    from cosymred import engine

    resid = engine.eval_expr(lhs, C5.coords, pts) \
        - engine.eval_expr(rhs_a, C5.coords, pts) \
        - engine.eval_expr(rhs_b, C5.coords, pts)
    assert float(np.max(np.abs(resid))) < 1e-9


def test_volume_form(canonical):
    vol = volume_form(canonical)
    pts = C5.sample(8, seeded_rng(2, "vol"))
    vals = vol.coeff_values(pts)
    assert vals.shape == (8, 1)
    # omega^2 ^ eta has top coefficient 2! for the standard pair
    np.testing.assert_allclose(vals, 2.0, rtol=0, atol=1e-13)


def test_hypersurface_construction():
    amb = chart("amb", ["x", "r", "px", "pr"])
    omega_amb = form_from_strings(amb, 2, {"dx^dpx": "1", "dr^dpr": "1"})
    slice3 = chart("slice", ["x", "px", "pr"])
    incl = smooth_map(slice3, amb, ["x", "0", "px", "pr"], "incl")
    radial = vector_field(amb, ["0", "1", "0", "0"])
    structure, rep = from_symplectic_hypersurface(omega_amb, incl, radial)
    assert rep.failing() == []
    pts = slice3.sample(64, seeded_rng(3, "hyp"))
    np.testing.assert_allclose(structure.eta.coeff_values(pts),
                               np.tile([0, 0, 1.0], (64, 1)), rtol=0, atol=1e-12)
    np.testing.assert_allclose(reeb(structure).at_many(pts),
                               np.tile([0, 0, 1.0], (64, 1)), rtol=0, atol=1e-12)
    assert verify_cosymplectic(structure).failing() == []


def test_hypersurface_transversality_failure():
    amb = chart("amb", ["x", "r", "px", "pr"])
    omega_amb = form_from_strings(amb, 2, {"dx^dpx": "1", "dr^dpr": "1"})
    slice3 = chart("slice", ["x", "px", "pr"])
    incl = smooth_map(slice3, amb, ["x", "0", "px", "pr"], "incl")
    along = vector_field(amb, ["1", "0", "0", "0"])  # tangent to the slice
    with pytest.raises(TransversalityError) as err:
        from_symplectic_hypersurface(omega_amb, incl, along)
    assert "sample" in str(err.value)


def test_symplectization(canonical):
    sz = symplectization(canonical)
    assert sz.chart.dim == C5.dim + 1
    assert sz.t_coord not in C5.coords
    rep = verify_symplectization(sz)
    assert rep.failing() == []
    # the product form restricts back to omega on the t = const slice
    embed = smooth_map(C5, sz.chart, list(C5.coords) + ["0"], "slice0")
    back = pullback_form(embed, sz.form)
    pts = C5.sample(64, seeded_rng(4, "sz"))
    np.testing.assert_allclose(back.coeff_values(pts),
                               canonical.omega.coeff_values(pts),
                               rtol=0, atol=1e-12)


def test_leaf_distribution(canonical):
    pts = C5.sample(128, seeded_rng(42, "leaf"))
    basis, rep = leaf_distribution(canonical, pts)
    assert basis.shape == (128, 5, 4)
    assert rep.failing() == []
    eta_vals = canonical.eta.coeff_values(pts)
    resid = np.einsum("pi,pic->pc", eta_vals, basis)
    assert float(np.max(np.abs(resid))) < 1e-12


CYL = chart("cyl", ["q", "theta"], periodic=["theta"])


def _rotation():
    return group_action(GroupModel(0, 1), CYL, ["g1"], ["q", "theta + g1"], "rot")


def test_average_projects_to_invariant_part():
    act = _rotation()
    alpha = form_from_strings(CYL, 1, {"dq": "sin(theta)", "dtheta": "1"})
    avg = average_one_form(act, alpha, order=64)
    pts = CYL.sample(64, seeded_rng(5, "avg"))
    np.testing.assert_allclose(avg.coeff_values(pts),
                               np.tile([0.0, 1.0], (64, 1)), rtol=0, atol=1e-12)
    # invariance under a generic group element
    moved = pullback_form(act.map_for([0.83]), avg)
    np.testing.assert_allclose(moved.coeff_values(pts), avg.coeff_values(pts),
                               rtol=0, atol=1e-12)
    # averaging something already invariant changes nothing
    again = average_one_form(act, avg, order=64)
    np.testing.assert_allclose(again.coeff_values(pts), avg.coeff_values(pts),
                               rtol=0, atol=1e-13)


def test_average_accepts_non_closed_input():
    act = _rotation()
    alpha = form_from_strings(CYL, 1, {"dtheta": "q"})  # d(alpha) != 0
    avg = average_one_form(act, alpha, order=64)
    pts = CYL.sample(32, seeded_rng(6, "nc"))
    np.testing.assert_allclose(avg.coeff_values(pts)[:, 1], pts[:, 0],
                               rtol=0, atol=1e-12)


def test_average_quadrature_convergence():
    act = _rotation()
    alpha = form_from_strings(CYL, 1, {"dq": "sin(theta)^3 + cos(2*theta)",
                                       "dtheta": "exp(cos(theta))"})
    a64 = average_one_form(act, alpha, order=64)
    a128 = average_one_form(act, alpha, order=128)
    pts = CYL.sample(64, seeded_rng(7, "conv"))
    np.testing.assert_allclose(a64.coeff_values(pts), a128.coeff_values(pts),
                               rtol=0, atol=1e-12)


def test_average_rejects_noncompact_model():
    from cosymred.charts import GeometryError

    act = group_action(GroupModel(1, 0), CYL, ["g1"], ["q + g1", "theta"], "shift")
    alpha = form_from_strings(CYL, 1, {"dq": "1"})
    with pytest.raises(GeometryError) as err:
        average_one_form(act, alpha)
    assert "compact" in str(err.value)


def test_even_dimension_is_reported_not_raised():
    """Constructors are permissive; the verifier owns the judgement."""
    even = chart("even", ["a", "b"])
    s = cosymplectic(even, {"da^db": "1"}, {"db": "1"})
    rep = verify_cosymplectic(s)
    assert "odd_dimension" in rep.failing()
