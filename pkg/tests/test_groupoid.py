"""Groupoid presentations: axioms, multiplicativity, morphisms, leaves."""

import numpy as np
import pytest

from cosymred.charts import GeometryError, seeded_rng
from cosymred.forms import form_from_strings, pullback_form
from cosymred.gallery import build
from cosymred.groupoid import (
    verify_cosymplectic_groupoid,
    verify_groupoid,
    verify_groupoid_morphism,
    verify_leaf_subgroupoid,
    verify_multiplicative,
)
from cosymred.manifest import load_world


@pytest.fixture(scope="module")
def world():
    return load_world(build("cotangent_s1"))


@pytest.fixture(scope="module")
def gp(world):
    return world.groupoids["G"]


def test_axioms_hold(gp):
    rep = verify_groupoid(gp, samples=128, seed=42)
    assert rep.failing() == []
    names = {c.name for c in rep.checks}
    for expected in ("unit_section_source", "left_unit_law", "associativity",
                     "left_inverse_law", "inverse_involutive"):
        assert any(expected in n for n in names), expected


def test_multiplicative_forms(gp, world):
    for label in ("omega", "eta"):
        rep = verify_multiplicative(gp, world.forms[label], samples=128, seed=42)
        assert rep.failing() == [], label


def test_cosymplectic_groupoid(gp, world):
    s = world.structures["S"]
    rep = verify_cosymplectic_groupoid(gp, s.omega, s.eta, samples=128, seed=42)
    assert rep.failing() == []
    dim_check = next(c for c in rep.checks if c.name == "arrow_unit_dimension")
    assert dim_check.passed
    assert "dim arrows = 5" in dim_check.detail


def test_multiplicativity_breaks_under_perturbation(gp, world):
    """Coefficients nonlinear in the fiber variables break additivity under
    the fiberwise product; the pair chart check catches them."""
    omega = world.forms["omega"]
    bad = omega + form_from_strings(omega.chart, 2, {"dq1^dq2": "cos(p1)"})
    rep = verify_multiplicative(gp, bad, samples=128, seed=42)
    assert "pair_additivity" in rep.failing()


def test_morphism_to_the_moment_line(gp):
    comps = [gp.arrows.parse("p2")]
    rep = verify_groupoid_morphism(gp, comps, samples=128, seed=42)
    assert rep.failing() == []


def test_broken_morphism_is_flagged(gp):
    comps = [gp.arrows.parse("q1")]
    rep = verify_groupoid_morphism(gp, comps, samples=128, seed=42)
    assert "units_to_zero" in rep.failing()


def test_morphism_rejects_stray_names(gp):
    import cosymred.expr as ex

    with pytest.raises(GeometryError):
        verify_groupoid_morphism(gp, [ex.Sym("w")])


def test_counterexample_dimension_mismatch():
    world = load_world(build("poisson_quotient_counterexample"))
    gp_bad = world.groupoids["G_bad"]
    assert verify_groupoid(gp_bad, samples=128, seed=42).failing() == []
    s = world.structures["S_bad"]
    rep = verify_cosymplectic_groupoid(gp_bad, s.omega, s.eta, samples=128, seed=42)
    assert "arrow_unit_dimension" in rep.failing()
    dim_check = next(c for c in rep.checks if c.name == "arrow_unit_dimension")
    # integer bookkeeping, not a numeric residual
    assert "dim arrows = 4" in dim_check.detail and "3" in dim_check.detail


def test_leaf_subgroupoid():
    world = load_world(build("leaf_reduction"))
    ls = world.leaf_subgroupoids["leaf_sub"]
    s = world.structures["S"]
    rep = verify_leaf_subgroupoid(ls, s.omega, s.eta, samples=128, seed=42)
    assert rep.failing() == []


def test_unit_pullback_of_high_degree_form(world):
    """A 2-form pulled back to a 1-dimensional unit chart vanishes by
    degree; the multiplicativity report keeps that as an exact check."""
    red = world.groupoids["G_red"]
    omega_red = world.forms["omega_red"]
    assert red.units.dim < omega_red.degree
    rep = verify_multiplicative(red, omega_red, samples=64, seed=42)
    assert rep.failing() == []
    names = [c.name for c in rep.checks]
    assert "unit_pullback_vanishes" in names


def test_bundle_of_groups_has_equal_source_and_target(gp):
    """The gallery groupoid is a bundle of abelian groups, so source and
    target coincide and every pair of arrows over a point is composable."""
    rng = seeded_rng(42, "st")
    pts = gp.arrows.sample(64, rng)
    s_vals = gp.source.apply_many(pts)
    t_vals = gp.target.apply_many(pts)
    np.testing.assert_array_equal(s_vals, t_vals)
