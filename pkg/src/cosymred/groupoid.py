"""Groupoid presentations in coordinates and multiplicativity of forms.

A presentation consists of an arrow chart and a unit chart with source,
target, unit-section, and inversion maps, plus an explicit chart for the
composable pairs carrying the two projections and the partial product.
Associativity needs a chart of composable triples; when none is supplied the
report records the hypothesis as assumed instead of checking it.

A form theta on the arrows is multiplicative when on composable pairs

    m* theta = pr1* theta + pr2* theta,

which is checked as the residual of (product map)* theta - left* theta -
right* theta on the pair chart.  Two consequences are checked alongside:
theta pulls back to zero along the unit section and to minus itself along
inversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import engine
from . import expr as ex
from .charts import Chart, GeometryError, SmoothMap, compose, identity_map, seeded_rng
from .cosym import CosymplecticStructure, verify_cosymplectic
from .forms import DifferentialForm, pullback_form, two_form_dets
from .report import CheckReport, Tolerances


@dataclass(eq=False)
class PairChart:
    """Chart of composable pairs: left/right projections and the product.

    The convention is m(g, h) = g after h, so pairs are composable when
    source(left) = target(right).  The optional embeddings express the unit
    and inverse laws on the pair chart:

      left_unit(g)  = (unit(target g), g)      right_unit(g) = (g, unit(source g))
      left_inverse(g) = (inverse g, g)         right_inverse(g) = (g, inverse g)
    """

    chart: Chart
    left: SmoothMap
    right: SmoothMap
    product: SmoothMap
    left_unit: SmoothMap | None = None
    right_unit: SmoothMap | None = None
    left_inverse: SmoothMap | None = None
    right_inverse: SmoothMap | None = None


@dataclass(eq=False)
class TripleChart:
    """Chart of composable triples with its projections into the pair chart."""

    chart: Chart
    first: SmoothMap
    second: SmoothMap
    third: SmoothMap
    pair_12: SmoothMap
    pair_23: SmoothMap
    pair_left: SmoothMap   # (product(g1, g2), g3)
    pair_right: SmoothMap  # (g1, product(g2, g3))


@dataclass(eq=False)
class GroupoidPresentation:
    arrows: Chart
    units: Chart
    source: SmoothMap
    target: SmoothMap
    unit: SmoothMap
    inverse: SmoothMap
    pair: PairChart
    triple: TripleChart | None = None
    name: str = ""

    def __post_init__(self):
        def expect(m: SmoothMap, src: Chart, dst: Chart, label: str):
            if m.source != src or m.target != dst:
                raise GeometryError(
                    f"groupoid {self.name or '<anon>'}: {label} must map "
                    f"'{src.name}' to '{dst.name}'"
                )

        expect(self.source, self.arrows, self.units, "source")
        expect(self.target, self.arrows, self.units, "target")
        expect(self.unit, self.units, self.arrows, "unit section")
        expect(self.inverse, self.arrows, self.arrows, "inversion")
        expect(self.pair.left, self.pair.chart, self.arrows, "pair left projection")
        expect(self.pair.right, self.pair.chart, self.arrows, "pair right projection")
        expect(self.pair.product, self.pair.chart, self.arrows, "pair product")
        if self.triple is not None:
            t = self.triple
            for m, label in ((t.first, "first"), (t.second, "second"), (t.third, "third")):
                expect(m, t.chart, self.arrows, f"triple {label} projection")
            for m, label in ((t.pair_12, "pair_12"), (t.pair_23, "pair_23"),
                             (t.pair_left, "pair_left"), (t.pair_right, "pair_right")):
                expect(m, t.chart, self.pair.chart, f"triple {label}")


def _map_residuals(f: SmoothMap, g: SmoothMap, pts: np.ndarray) -> np.ndarray:
    """Componentwise difference of two maps with common source/target,
    wrapped on periodic target coordinates."""
    if f.source != g.source or f.target != g.target:
        raise GeometryError("cannot compare maps with different charts")
    delta = f.apply_many(pts) - g.apply_many(pts)
    return f.target.wrap_deltas(delta)


def _rank_margin(jacs: np.ndarray, rank: int) -> np.ndarray:
    """Smallest of the top `rank` singular values per point (0 if deficient)."""
    sv = np.linalg.svd(jacs, compute_uv=False)
    if sv.shape[1] < rank:
        return np.zeros(sv.shape[0])
    return sv[:, rank - 1]


def verify_groupoid(gp: GroupoidPresentation, samples: int = 128, seed: int = 42,
                    tol: Tolerances = Tolerances()) -> CheckReport:
    """Structure-map identities at seeded samples of the arrow/unit/pair
    charts; submersion margins for source and target; associativity when a
    triple chart is present."""
    rep = CheckReport(f"groupoid:{gp.name or gp.arrows.name}", seed, samples)
    rng = seeded_rng(seed, f"groupoid:{gp.arrows.name}")
    gpts = gp.arrows.sample(samples, rng)
    mpts = gp.units.sample(samples, rng)
    cpts = gp.pair.chart.sample(samples, rng)

    id_units = identity_map(gp.units)
    id_arrows = identity_map(gp.arrows)

    rep.add_residual("unit_section_source",
                     _map_residuals(compose(gp.source, gp.unit), id_units, mpts), tol.solve)
    rep.add_residual("unit_section_target",
                     _map_residuals(compose(gp.target, gp.unit), id_units, mpts), tol.solve)
    rep.add_residual("inverse_involutive",
                     _map_residuals(compose(gp.inverse, gp.inverse), id_arrows, gpts), tol.solve)
    rep.add_residual("inverse_swaps_source",
                     _map_residuals(compose(gp.source, gp.inverse), gp.target, gpts), tol.solve)
    rep.add_residual("inverse_swaps_target",
                     _map_residuals(compose(gp.target, gp.inverse), gp.source, gpts), tol.solve)

    rep.add_residual("pair_chart_composable",
                     _map_residuals(compose(gp.source, gp.pair.left),
                                    compose(gp.target, gp.pair.right), cpts), tol.solve)
    rep.add_residual("product_source",
                     _map_residuals(compose(gp.source, gp.pair.product),
                                    compose(gp.source, gp.pair.right), cpts), tol.solve)
    rep.add_residual("product_target",
                     _map_residuals(compose(gp.target, gp.pair.product),
                                    compose(gp.target, gp.pair.left), cpts), tol.solve)

    pair = gp.pair
    if pair.left_unit is not None:
        lu = pair.left_unit
        rep.add_residual("left_unit_embeds",
                         np.concatenate([
                             _map_residuals(compose(pair.left, lu),
                                            compose(gp.unit, gp.target), gpts),
                             _map_residuals(compose(pair.right, lu), id_arrows, gpts),
                         ], axis=1), tol.solve)
        rep.add_residual("left_unit_law",
                         _map_residuals(compose(pair.product, lu), id_arrows, gpts), tol.solve)
    if pair.right_unit is not None:
        ru = pair.right_unit
        rep.add_residual("right_unit_embeds",
                         np.concatenate([
                             _map_residuals(compose(pair.left, ru), id_arrows, gpts),
                             _map_residuals(compose(pair.right, ru),
                                            compose(gp.unit, gp.source), gpts),
                         ], axis=1), tol.solve)
        rep.add_residual("right_unit_law",
                         _map_residuals(compose(pair.product, ru), id_arrows, gpts), tol.solve)
    if pair.left_inverse is not None:
        rep.add_residual("left_inverse_law",
                         _map_residuals(compose(pair.product, pair.left_inverse),
                                        compose(gp.unit, gp.source), gpts), tol.solve)
    if pair.right_inverse is not None:
        rep.add_residual("right_inverse_law",
                         _map_residuals(compose(pair.product, pair.right_inverse),
                                        compose(gp.unit, gp.target), gpts), tol.solve)

    rep.add_floor("source_submersion",
                  _rank_margin(gp.source.jacobian_many(gpts), gp.units.dim), tol.floor,
                  "singular value margin of ds")
    rep.add_floor("target_submersion",
                  _rank_margin(gp.target.jacobian_many(gpts), gp.units.dim), tol.floor,
                  "singular value margin of dt")
    rep.add_floor("unit_embedding",
                  _rank_margin(gp.unit.jacobian_many(mpts), gp.units.dim), tol.floor,
                  "singular value margin of d(unit)")

    if gp.triple is None:
        rep.assume("associativity (no composable-triple chart supplied)")
    else:
        t = gp.triple
        tpts = t.chart.sample(samples, rng)
        consistency = np.concatenate([
            _map_residuals(compose(pair.left, t.pair_12), t.first, tpts),
            _map_residuals(compose(pair.right, t.pair_12), t.second, tpts),
            _map_residuals(compose(pair.left, t.pair_23), t.second, tpts),
            _map_residuals(compose(pair.right, t.pair_23), t.third, tpts),
            _map_residuals(compose(pair.left, t.pair_left),
                           compose(pair.product, t.pair_12), tpts),
            _map_residuals(compose(pair.right, t.pair_left), t.third, tpts),
            _map_residuals(compose(pair.left, t.pair_right), t.first, tpts),
            _map_residuals(compose(pair.right, t.pair_right),
                           compose(pair.product, t.pair_23), tpts),
        ], axis=1)
        rep.add_residual("triple_chart_consistent", consistency, tol.solve)
        rep.add_residual("associativity",
                         _map_residuals(compose(pair.product, t.pair_left),
                                        compose(pair.product, t.pair_right), tpts),
                         tol.solve)
    return rep


def verify_multiplicative(gp: GroupoidPresentation, form: DifferentialForm,
                          samples: int = 128, seed: int = 42,
                          tol: Tolerances = Tolerances(),
                          label: str = "form") -> CheckReport:
    """Residual of m* theta - pr1* theta - pr2* theta on the pair chart, plus
    the two necessary conditions along units and inversion."""
    if form.chart != gp.arrows:
        raise GeometryError("multiplicativity applies to forms on the arrow chart")
    rep = CheckReport(f"multiplicative:{label}", seed, samples)
    rng = seeded_rng(seed, f"mult:{gp.arrows.name}:{label}")
    cpts = gp.pair.chart.sample(samples, rng)
    gpts = gp.arrows.sample(samples, rng)
    mpts = gp.units.sample(samples, rng)

    defect = pullback_form(gp.pair.product, form) \
        - pullback_form(gp.pair.left, form) - pullback_form(gp.pair.right, form)
    rep.add_residual("pair_additivity", defect.coeff_values(cpts), tol.default)

    if form.degree > gp.units.dim:
        # every form of this degree on the unit chart is zero
        rep.add_exact("unit_pullback_vanishes", True,
                      "degree exceeds unit dimension; pullback is trivially zero")
    else:
        unit_pull = pullback_form(gp.unit, form)
        rep.add_residual("unit_pullback_vanishes", unit_pull.coeff_values(mpts),
                         tol.default)

    inv_defect = pullback_form(gp.inverse, form) + form
    rep.add_residual("inverse_pullback_antisymmetric",
                     inv_defect.coeff_values(gpts), tol.default)
    return rep


def verify_cosymplectic_groupoid(gp: GroupoidPresentation, omega: DifferentialForm,
                                 eta: DifferentialForm, samples: int = 128,
                                 seed: int = 42, tol: Tolerances = Tolerances()
                                 ) -> CheckReport:
    """Groupoid axioms, the arrow/unit dimension count dim G = 2 dim M + 1,
    the cosymplectic conditions on the arrow chart, and multiplicativity of
    both structure forms."""
    rep = CheckReport(f"cosymplectic_groupoid:{gp.name or gp.arrows.name}", seed, samples)
    expected = 2 * gp.units.dim + 1
    rep.add_exact(
        "arrow_unit_dimension",
        gp.arrows.dim == expected,
        f"dim arrows = {gp.arrows.dim}, units need 2*{gp.units.dim}+1 = {expected}",
    )
    rep.merge(verify_groupoid(gp, samples, seed, tol), "groupoid.")
    structure = CosymplecticStructure(gp.arrows, omega, eta, gp.name or gp.arrows.name)
    rep.merge(verify_cosymplectic(structure, samples, seed, tol), "cosymplectic.")
    rep.merge(verify_multiplicative(gp, omega, samples, seed, tol, "omega"),
              "multiplicative_omega.")
    rep.merge(verify_multiplicative(gp, eta, samples, seed, tol, "eta"),
              "multiplicative_eta.")
    return rep


def verify_groupoid_morphism(gp: GroupoidPresentation, components: Sequence[ex.Expr],
                             samples: int = 128, seed: int = 42,
                             tol: Tolerances = Tolerances(),
                             label: str = "J") -> CheckReport:
    """Additive morphism to R^m: J(m(g,h)) = J(g) + J(h), J(unit) = 0,
    J(inverse) = -J."""
    comps = list(components)
    allowed = set(gp.arrows.coords)
    for c in comps:
        stray = ex.free_names(c) - allowed
        if stray:
            raise GeometryError(f"morphism component uses {sorted(stray)}")
    rep = CheckReport(f"morphism:{label}", seed, samples)
    rng = seeded_rng(seed, f"morphism:{gp.arrows.name}:{label}")
    cpts = gp.pair.chart.sample(samples, rng)
    mpts = gp.units.sample(samples, rng)
    gpts = gp.arrows.sample(samples, rng)

    def through(m: SmoothMap, pts: np.ndarray) -> np.ndarray:
        binding = dict(zip(gp.arrows.coords, m.components))
        pulled = [ex.substitute(c, binding) for c in comps]
        return engine.eval_exprs(pulled, m.source.coords, pts)

    additivity = through(gp.pair.product, cpts) \
        - through(gp.pair.left, cpts) - through(gp.pair.right, cpts)
    rep.add_residual("additive_on_pairs", additivity, tol.solve)
    rep.add_residual("units_to_zero", through(gp.unit, mpts), tol.solve)
    inv_sum = through(gp.inverse, gpts) + engine.eval_exprs(comps, gp.arrows.coords, gpts)
    rep.add_residual("inverse_to_minus", inv_sum, tol.solve)
    return rep


@dataclass(eq=False)
class LeafSubgroupoid:
    """A subgroupoid over the same units, included by an explicit embedding;
    built for the symplectic leaf through the unit section."""

    ambient: GroupoidPresentation
    leaf: GroupoidPresentation
    inclusion: SmoothMap
    pair_inclusion: SmoothMap

    def __post_init__(self):
        if self.leaf.units != self.ambient.units:
            raise GeometryError("leaf subgroupoid must share the unit chart")
        if self.inclusion.source != self.leaf.arrows or \
                self.inclusion.target != self.ambient.arrows:
            raise GeometryError("inclusion must map leaf arrows into ambient arrows")
        if self.pair_inclusion.source != self.leaf.pair.chart or \
                self.pair_inclusion.target != self.ambient.pair.chart:
            raise GeometryError("pair inclusion must map leaf pairs into ambient pairs")


def verify_leaf_subgroupoid(ls: LeafSubgroupoid, omega: DifferentialForm | None = None,
                            eta: DifferentialForm | None = None, samples: int = 128,
                            seed: int = 42, tol: Tolerances = Tolerances()) -> CheckReport:
    """The inclusion is an embedding intertwining all structure maps; when the
    ambient structure forms are given, eta pulls back to zero and omega pulls
    back to a nondegenerate (symplectic) form on the leaf arrows."""
    rep = CheckReport("leaf_subgroupoid", seed, samples)
    amb, leaf, inc = ls.ambient, ls.leaf, ls.inclusion
    rng = seeded_rng(seed, f"leafsub:{leaf.arrows.name}")
    lpts = leaf.arrows.sample(samples, rng)
    mpts = leaf.units.sample(samples, rng)
    cpts = leaf.pair.chart.sample(samples, rng)

    rep.merge(verify_groupoid(leaf, samples, seed, tol), "leaf_groupoid.")

    rep.add_floor("inclusion_embedding",
                  _rank_margin(inc.jacobian_many(lpts), leaf.arrows.dim), tol.floor,
                  "singular value margin of d(inclusion)")
    rep.add_residual("source_intertwined",
                     _map_residuals(compose(amb.source, inc), leaf.source, lpts), tol.solve)
    rep.add_residual("target_intertwined",
                     _map_residuals(compose(amb.target, inc), leaf.target, lpts), tol.solve)
    rep.add_residual("unit_factors",
                     _map_residuals(compose(inc, leaf.unit), amb.unit, mpts), tol.solve)
    rep.add_residual("inverse_intertwined",
                     _map_residuals(compose(inc, leaf.inverse),
                                    compose(amb.inverse, inc), lpts), tol.solve)
    pair_consistency = np.concatenate([
        _map_residuals(compose(amb.pair.left, ls.pair_inclusion),
                       compose(inc, leaf.pair.left), cpts),
        _map_residuals(compose(amb.pair.right, ls.pair_inclusion),
                       compose(inc, leaf.pair.right), cpts),
    ], axis=1)
    rep.add_residual("pair_inclusion_consistent", pair_consistency, tol.solve)
    rep.add_residual("product_intertwined",
                     _map_residuals(compose(amb.pair.product, ls.pair_inclusion),
                                    compose(inc, leaf.pair.product), cpts), tol.solve)

    if eta is not None:
        pulled_eta = pullback_form(inc, eta)
        rep.add_residual("eta_pulls_to_zero", pulled_eta.coeff_values(lpts), tol.default)
    if omega is not None:
        pulled = pullback_form(inc, omega)
        rep.add_exact("leaf_even_dimensional", leaf.arrows.dim % 2 == 0,
                      f"leaf arrow dimension {leaf.arrows.dim}")
        if leaf.arrows.dim % 2 == 0:
            rep.add_floor("omega_restricts_symplectic",
                          two_form_dets(pulled, lpts), tol.floor,
                          "det of the restricted 2-form")
    return rep
