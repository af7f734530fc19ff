"""Reduction pipeline: action, moment, level set, quotient solve, squares."""

from dataclasses import replace

import numpy as np
import pytest

from cosymred.charts import GeometryError, seeded_rng, smooth_map
from cosymred.gallery import build
from cosymred.manifest import load_world
from cosymred.reduction import (
    moment_map,
    solve_reduced_forms,
    verify_cosymplectic_action,
    verify_groupoid_reduction,
    verify_infinitesimal_reduction_square,
    verify_leaf_reduction,
    verify_moment_map,
    verify_regular_value,
    verify_symplectization_correspondence,
)


@pytest.fixture(scope="module")
def world():
    return load_world(build("cotangent_s1"))


@pytest.fixture(scope="module")
def redn(world):
    return world.reductions["redn"]


def test_full_pipeline(redn):
    rep = verify_groupoid_reduction(redn, samples=128, seed=42)
    assert rep.failing() == []


def test_larger_family():
    world = load_world(build("cotangent_s1", n=3, k=2))
    rep = verify_groupoid_reduction(world.reductions["redn"], samples=128, seed=42)
    assert rep.failing() == []


def test_stage_verifiers(world, redn):
    s = world.structures["S"]
    act = world.actions["act"]
    mom = world.moments["J"]
    assert verify_cosymplectic_action(s, act, samples=128, seed=42).failing() == []
    assert verify_moment_map(s, act, mom, samples=128, seed=42).failing() == []
    assert verify_regular_value(redn, samples=128, seed=42).failing() == []


def test_moment_sign_convention(world):
    """Negating both the components and the declared sign leaves the
    Hamiltonian pairing satisfied."""
    s = world.structures["S"]
    act = world.actions["act"]
    mom = world.moments["J"]
    flipped = moment_map(mom.chart, [f"0 - ({c})" for c in
                                     ("p2",)], sign=-mom.sign)
    rep = verify_moment_map(s, act, flipped, samples=128, seed=42)
    assert rep.failing() == []
    # negating only the components breaks the pairing
    broken = moment_map(mom.chart, ["0 - p2"], sign=mom.sign)
    rep2 = verify_moment_map(s, act, broken, samples=128, seed=42)
    assert "hamiltonian_condition" in rep2.failing()


def test_solved_coefficients(redn):
    sol, rep = solve_reduced_forms(redn, samples=128, seed=42)
    assert rep.failing() == []
    # omega_red = dq1^dp1 and eta_red = dtheta in the ordered coefficients
    np.testing.assert_allclose(sol.omega_coeffs,
                               np.tile([1.0, 0.0, 0.0], (sol.omega_coeffs.shape[0], 1)),
                               rtol=0, atol=1e-10)
    np.testing.assert_allclose(sol.eta_coeffs,
                               np.tile([0.0, 0.0, 1.0], (sol.eta_coeffs.shape[0], 1)),
                               rtol=0, atol=1e-10)
    assert sol.omega_residual < 1e-10 and sol.eta_residual < 1e-10
    assert sol.omega_basicness < 1e-10 and sol.eta_basicness < 1e-10
    fresh = redn.quotient_chart.sample(32, seeded_rng(7, "fresh"))
    om, eta, resid = sol.forms_at(fresh)
    assert resid < 1e-10
    np.testing.assert_allclose(om, np.tile([1.0, 0.0, 0.0], (32, 1)),
                               rtol=0, atol=1e-10)
    om2, eta2, _ = sol.forms_at(fresh, section_index=1)
    np.testing.assert_allclose(om, om2, rtol=0, atol=1e-10)
    np.testing.assert_allclose(eta, eta2, rtol=0, atol=1e-10)


def test_bad_section_is_flagged(redn):
    drift = smooth_map(redn.quotient_chart, redn.level_chart,
                       ["q1", "0.7", "p1", "theta + 0.1"], "drifting")
    bad = replace(redn, sections=(redn.sections[0], drift))
    _, rep = solve_reduced_forms(bad, samples=64, seed=42)
    assert "section_1_consistent" in rep.failing()


def test_underdetermined_solve_raises(redn):
    squash = smooth_map(redn.level_chart, redn.quotient_chart,
                        ["q1", "p1", "0"], "squash")
    bad = replace(redn, projection=squash)
    with pytest.raises(GeometryError) as err:
        solve_reduced_forms(bad, samples=32, seed=42)
    assert "underdetermined" in str(err.value)


def test_broken_invariance_is_caught_at_the_action_stage():
    world = load_world(build("broken_invariance"))
    rep = verify_groupoid_reduction(world.reductions["redn"], samples=128, seed=42)
    assert "action.omega_invariant" in rep.failing()


def test_moment_doubled_is_caught_at_the_moment_stage():
    world = load_world(build("moment_doubled"))
    rep = verify_groupoid_reduction(world.reductions["redn"], samples=128, seed=42)
    failing = rep.failing()
    assert "moment.hamiltonian_condition" in failing
    # the level set itself is unchanged, so the level stage stays green
    assert not any(name.startswith("level.") for name in failing)


def test_non_basic_target_is_caught_by_basicness():
    world = load_world(build("non_basic"))
    rep = verify_groupoid_reduction(world.reductions["redn"], samples=128, seed=42)
    assert "reduced_forms.omega_basic" in rep.failing()


def test_leaf_reduction_pipeline():
    world = load_world(build("leaf_reduction"))
    rep = verify_leaf_reduction(world.reductions["redn"], samples=128, seed=42)
    assert rep.failing() == []
    names = [c.name for c in rep.checks]
    assert "restrict_reduce_commutes_omega" in names
    assert "reduced_eta_pulls_to_zero_on_leaf" in names


def test_infinitesimal_square(redn):
    rep = verify_infinitesimal_reduction_square(redn, samples=64, seed=42)
    assert rep.failing() == []
    for name in ("kernel_dimension", "mu_square_commutes", "nu_square_commutes"):
        assert name in [c.name for c in rep.checks]


def test_infinitesimal_square_with_solved_forms(redn):
    solved_only = replace(redn, reduced_omega=None, reduced_eta=None)
    rep = verify_infinitesimal_reduction_square(solved_only, samples=64, seed=42)
    assert rep.failing() == []


def test_infinitesimal_square_needs_the_groupoid_chain(redn):
    stripped = replace(redn, level_groupoid=None, reduced_groupoid=None)
    with pytest.raises(GeometryError):
        verify_infinitesimal_reduction_square(stripped, samples=16, seed=42)


def test_symplectization_correspondence():
    world = load_world(build("symplectization"))
    s = world.structures["S"]
    rep = verify_symplectization_correspondence(
        s, world.actions["act"], world.moments["J"], samples=128, seed=42)
    assert rep.failing() == []
    names = [c.name for c in rep.checks]
    for expected in ("lifted_moment_hamiltonian", "pairing_line_independent",
                     "reeb_pairs_generators_to_zero"):
        assert expected in names
