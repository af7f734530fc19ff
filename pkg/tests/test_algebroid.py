"""IM form layer: exact sections, brackets, induced forms at units."""

import numpy as np
import pytest

import cosymred.expr as ex
from cosymred.algebroid import (
    IMFormPair,
    anchor,
    central_pair,
    exact_section,
    induced_im_forms,
    poisson_base,
    random_polynomial_sections,
    section_bracket,
    verify_algebroid_structure,
    verify_im_1form,
    verify_im_2form,
    verify_infinitesimal_moment,
    verify_reduced_im_forms,
)
from cosymred.actions import GroupModel, group_action
from cosymred.charts import GeometryError, chart, commutator, seeded_rng, smooth_map
from cosymred.gallery import build
from cosymred.manifest import load_world

PLANE = chart("plane", ["q", "p"])


@pytest.fixture(scope="module")
def base():
    return poisson_base(PLANE, {"dq^dp": "1"}, "pi")


@pytest.fixture(scope="module")
def sections():
    return [
        exact_section(PLANE, "q", "0"),
        exact_section(PLANE, "p", "1"),
        exact_section(PLANE, "q*p", "q"),
        exact_section(PLANE, "sin(q)", "cos(p)"),
    ]


def test_anchor_signs(base):
    pts = PLANE.sample(16, seeded_rng(1, "anchor"))
    x_q = anchor(base, exact_section(PLANE, "q", "0"))
    np.testing.assert_allclose(x_q.at_many(pts), np.tile([0.0, 1.0], (16, 1)),
                               rtol=0, atol=1e-14)
    x_p = anchor(base, exact_section(PLANE, "p", "0"))
    np.testing.assert_allclose(x_p.at_many(pts), np.tile([-1.0, 0.0], (16, 1)),
                               rtol=0, atol=1e-14)


def test_algebroid_axioms(base, sections):
    rep = verify_algebroid_structure(base, sections, samples=128, seed=42)
    assert rep.failing() == []


def test_anchor_is_a_bracket_morphism(base, sections):
    """anchor([a, b]) equals the commutator of the anchors; this is an
    independent oracle for section_bracket built on vector field algebra."""
    pts = PLANE.sample(64, seeded_rng(2, "morph"))
    for a in sections:
        for b in sections:
            lhs = anchor(base, section_bracket(base, a, b))
            rhs = commutator(anchor(base, a), anchor(base, b))
            np.testing.assert_allclose(lhs.at_many(pts), rhs.at_many(pts),
                                       rtol=0, atol=1e-10)


def test_bracket_antisymmetry(base, sections):
    from cosymred import engine

    pts = PLANE.sample(64, seeded_rng(3, "anti"))
    for a in sections:
        for b in sections:
            ab = section_bracket(base, a, b)
            ba = section_bracket(base, b, a)
            for lhs, rhs in ((ab.f, ba.f), (ab.g, ba.g)):
                l = engine.eval_expr(lhs, PLANE.coords, pts)
                r = engine.eval_expr(rhs, PLANE.coords, pts)
                np.testing.assert_allclose(l, -r, rtol=0, atol=1e-11)


def test_central_pair_is_im(base, sections):
    pair = central_pair(PLANE)
    assert verify_im_2form(base, pair, sections, samples=128, seed=42).failing() == []
    assert verify_im_1form(base, pair, sections, samples=128, seed=42).failing() == []


def test_corrupted_pair_fails_im_equations(base, sections):
    """mu(a) = df + g dq is not compatible with the bracket: the defect is
    caught by the skew pairing check for sections with nonzero g."""
    d = PLANE.dim
    mu = ((ex.ONE, ex.ZERO, ex.ONE), (ex.ZERO, ex.ONE, ex.ZERO))
    nu = tuple(ex.ZERO for _ in range(d)) + (ex.ONE,)
    bad = IMFormPair(PLANE, mu, nu)
    rep = verify_im_2form(base, bad, sections, samples=128, seed=42)
    assert "im_skew" in rep.failing()


def test_infinitesimal_moment(base, sections):
    act = group_action(GroupModel(1, 0), PLANE, ["g1"], ["q + g1", "p"], "shift")
    pair = central_pair(PLANE)
    rep = verify_infinitesimal_moment(base, act, pair, sections[:3],
                                      samples=128, seed=42)
    assert rep.failing() == []


def test_induced_im_forms_on_the_gallery():
    """Project coordinate fiber directions onto the computed kernel basis and
    compare by linearity; dodging the basis rotation freedom of the SVD."""
    world = load_world(build("cotangent_s1"))
    gp = world.groupoids["G"]
    s = world.structures["S"]
    out = induced_im_forms(gp, s.omega, s.eta, samples=32, seed=42)
    n_arrows = gp.arrows.dim
    assert out.kernel_basis.shape == (32, n_arrows, 3)
    # expected images: mu(d/dp_j) = -dx_j, nu(d/dp_j) = 0, nu(d/dtheta) = 1
    want_mu = {2: [-1.0, 0.0], 3: [0.0, -1.0], 4: [0.0, 0.0]}
    want_nu = {2: 0.0, 3: 0.0, 4: 1.0}
    for axis, mu_img in want_mu.items():
        e = np.zeros(n_arrows)
        e[axis] = 1.0
        coeffs = np.einsum("i,pia->pa", e, out.kernel_basis)
        # e lies in the kernel, so the projection reproduces it
        recon = np.einsum("pa,pia->pi", coeffs, out.kernel_basis)
        np.testing.assert_allclose(recon, np.tile(e, (32, 1)), rtol=0, atol=1e-12)
        mu_e = np.einsum("pa,pak->pk", coeffs, out.mu_vals)
        np.testing.assert_allclose(mu_e, np.tile(mu_img, (32, 1)),
                                   rtol=0, atol=1e-11)
        nu_e = np.einsum("pa,pa->p", coeffs, out.nu_vals)
        np.testing.assert_allclose(nu_e, want_nu[axis], rtol=0, atol=1e-11)


def test_induced_im_rank_error():
    """A source map that is singular at the units trips the kernel
    dimension guard."""
    world = load_world(build("cotangent_s1"))
    gp = world.groupoids["G"]
    s = world.structures["S"]
    broken = smooth_map(gp.arrows, gp.units, ["q1", "q1"], "bad_source")
    from dataclasses import replace

    bad_gp = replace(gp, source=broken)
    with pytest.raises(GeometryError) as err:
        induced_im_forms(bad_gp, s.omega, s.eta, samples=16, seed=42)
    assert "rank error" in str(err.value)


def test_reduced_im_screening():
    world = load_world(build("cotangent_s1"))
    pts_base = world.poisson_bases
    rep = verify_reduced_im_forms(
        pts_base["pi_units"], pts_base["pi_red_units"],
        world.maps["base_projection"],
        world.im_pairs["im_units"], world.im_pairs["im_red_units"],
        reduced_sections=[world.exact_sections[k] for k in ("r_lin", "r_sq", "r_mix")],
        action=world.actions["unit_act"],
        upstairs_sections=[world.exact_sections[k] for k in ("u_basic", "u_bad")],
        samples=128, seed=42)
    assert rep.failing() == []
    screened = next(c for c in rep.checks if c.name == "upstairs_sections_screened")
    assert "not basic" in screened.detail and "1" in screened.detail


def test_random_sections_are_deterministic():
    a = random_polynomial_sections(PLANE, 5, seeded_rng(9, "secs"))
    b = random_polynomial_sections(PLANE, 5, seeded_rng(9, "secs"))
    assert len(a) == 5
    for s, t in zip(a, b):
        assert ex.to_text(s.f) == ex.to_text(t.f)
        assert ex.to_text(s.g) == ex.to_text(t.g)


def test_zero_bivector_degenerates_gracefully(base):
    units = chart("units", ["x1", "x2"])
    zero = poisson_base(units, {}, "zero")
    secs = [exact_section(units, "x1", "0"), exact_section(units, "x2", "1")]
    rep = verify_algebroid_structure(zero, secs, samples=64, seed=42)
    assert rep.failing() == []
    pts = units.sample(8, seeded_rng(4, "zero"))
    np.testing.assert_allclose(anchor(zero, secs[0]).at_many(pts), 0.0,
                               rtol=0, atol=1e-15)
