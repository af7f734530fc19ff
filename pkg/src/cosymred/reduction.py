"""Reduction of cosymplectic structures and groupoid presentations by free
abelian symmetries at the zero level of a moment map.

The presentation supplies explicit charts and maps for every space in the
chain: the ambient structure, the zero-level set (inclusion iota), the
quotient (projection P with at least one section), and optionally the
groupoid data that descends along the chain, the leaf-restriction data, and
closed-form reduced forms.  Verifiers never construct quotients themselves;
they verify that the supplied presentation has the claimed properties and
solve for the reduced coefficients pointwise:

    sum over i<j of w_ij (P* basis minors) = (iota* omega) at section(r),

a least-squares problem per quotient sample whose residual certifies
P*(solution) = iota* omega and whose dependence on the choice of section
certifies basicness.

The moment sign flag selects between the two Hamiltonian conventions for the
pairing <J, v>: flat(v) = sign * (d<J,v> - reeb<J,v> eta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import engine
from . import expr as ex
from .actions import GroupAction
from .charts import Chart, GeometryError, SmoothMap, VectorField, compose, seeded_rng
from .cosym import (
    CosymplecticStructure,
    Symplectization,
    flat_apply,
    hamiltonian_rhs,
    reeb,
    symplectization,
    verify_cosymplectic,
    verify_symplectization,
)
from .forms import (
    DifferentialForm,
    comb_list,
    exterior_derivative,
    interior_product,
    lie_derivative,
    minor_matrix,
    one_form,
    pullback_form,
    pullback_values,
    two_form_matrices,
    values_as_matrix,
    wedge_values,
)
from .groupoid import (
    GroupoidPresentation,
    LeafSubgroupoid,
    _map_residuals,
    _rank_margin,
    verify_cosymplectic_groupoid,
    verify_groupoid,
    verify_groupoid_morphism,
    verify_leaf_subgroupoid,
    verify_multiplicative,
)
from .report import CheckReport, Tolerances

N_GROUP_SAMPLES = 8


@dataclass(eq=False)
class MomentMap:
    """Components of <J, .> on the structure chart, with the sign convention
    flag: +1 checks flat(v) = d<J,v> - reeb(<J,v>) eta, -1 checks the
    opposite-sign convention (i.e. -J is a moment map for +1)."""

    chart: Chart
    components: tuple[ex.Expr, ...]
    sign: int = 1

    def __post_init__(self):
        self.components = tuple(self.components)
        if self.sign not in (1, -1):
            raise GeometryError("moment sign must be +1 or -1")
        allowed = set(self.chart.coords)
        for c in self.components:
            stray = ex.free_names(c) - allowed
            if stray:
                raise GeometryError(f"moment component uses {sorted(stray)}")

    @property
    def rank(self) -> int:
        return len(self.components)

    def values(self, pts: np.ndarray) -> np.ndarray:
        return engine.eval_exprs(self.components, self.chart.coords, pts)


def moment_map(chart: Chart, components: Sequence[str | ex.Expr], sign: int = 1) -> MomentMap:
    comps = tuple(chart.parse(c) if isinstance(c, str) else c for c in components)
    return MomentMap(chart, comps, sign)


@dataclass(eq=False)
class LeafReductionData:
    """Restriction of the reduction to the leaf through the unit section."""

    subgroupoid: LeafSubgroupoid
    action: GroupAction                 # restricted action on the leaf arrows
    level_chart: Chart                  # zero level inside the leaf
    level_inclusion: SmoothMap          # level -> leaf arrows
    level_to_ambient_level: SmoothMap   # level -> ambient level chart
    quotient_chart: Chart               # reduced leaf
    projection: SmoothMap               # level -> reduced leaf
    into_reduced: SmoothMap             # reduced leaf -> reduced arrow chart
    sections: list[SmoothMap]           # reduced leaf -> level


@dataclass(eq=False)
class ReductionPresentation:
    structure: CosymplecticStructure
    action: GroupAction
    moment: MomentMap
    level_chart: Chart
    level_inclusion: SmoothMap          # level -> structure chart
    quotient_chart: Chart
    projection: SmoothMap               # level -> quotient
    sections: list[SmoothMap]           # quotient -> level
    groupoid: GroupoidPresentation | None = None
    level_groupoid: GroupoidPresentation | None = None
    level_pair_inclusion: SmoothMap | None = None
    reduced_groupoid: GroupoidPresentation | None = None
    base_projection: SmoothMap | None = None    # units -> reduced units
    pair_projection: SmoothMap | None = None    # level pairs -> reduced pairs
    reduced_omega: DifferentialForm | None = None
    reduced_eta: DifferentialForm | None = None
    solve_omega_target: DifferentialForm | None = None
    solve_eta_target: DifferentialForm | None = None
    leaf: LeafReductionData | None = None
    name: str = ""

    def __post_init__(self):
        q = self.structure.chart
        if self.action.space != q:
            raise GeometryError("action must act on the structure chart")
        if self.moment.chart != q:
            raise GeometryError("moment map must live on the structure chart")
        if self.level_inclusion.source != self.level_chart or \
                self.level_inclusion.target != q:
            raise GeometryError("level inclusion must map the level chart into the structure chart")
        if self.projection.source != self.level_chart or \
                self.projection.target != self.quotient_chart:
            raise GeometryError("projection must map the level chart onto the quotient chart")
        if not self.sections:
            raise GeometryError("at least one section of the projection is required")
        for s in self.sections:
            if s.source != self.quotient_chart or s.target != self.level_chart:
                raise GeometryError("sections must map the quotient chart into the level chart")

    def omega_target(self) -> DifferentialForm:
        if self.solve_omega_target is not None:
            return self.solve_omega_target
        return pullback_form(self.level_inclusion, self.structure.omega)

    def eta_target(self) -> DifferentialForm:
        if self.solve_eta_target is not None:
            return self.solve_eta_target
        return pullback_form(self.level_inclusion, self.structure.eta)


def fundamental_vf(action: GroupAction, index: int) -> VectorField:
    """Generator of the index-th group parameter (see GroupAction)."""
    return action.fundamental_field(index)


def verify_cosymplectic_action(s: CosymplecticStructure, action: GroupAction,
                               samples: int = 128, seed: int = 42,
                               tol: Tolerances = Tolerances()) -> CheckReport:
    """phi_0 = id, additivity in the group parameters, invariance of both
    structure forms under sampled group elements, and vanishing Lie
    derivatives along every generator."""
    if action.space != s.chart:
        raise GeometryError("action must act on the structure chart")
    rep = CheckReport(f"action:{s.name or s.chart.name}", seed, samples)
    rng = seeded_rng(seed, f"action:{s.chart.name}")
    pts = s.chart.sample(samples, rng)
    gvals = action.sample_params(N_GROUP_SAMPLES, rng)
    hvals = action.sample_params(N_GROUP_SAMPLES, rng)

    ident = engine.eval_exprs(action.identity_residuals(), s.chart.coords, pts)
    rep.add_residual("identity_at_zero", ident, tol.solve)

    additive = []
    for g, h in zip(gvals, hvals):
        phi_g = action.map_for(g)
        phi_h = action.map_for(h)
        phi_gh = action.map_for(g + h)
        additive.append(_map_residuals(compose(phi_g, phi_h), phi_gh, pts))
    rep.add_residual("group_law", np.concatenate(additive, axis=1), tol.solve,
                     f"{N_GROUP_SAMPLES} sampled pairs of group elements")

    inv_om = []
    inv_eta = []
    for g in gvals:
        phi = action.map_for(g)
        inv_om.append((pullback_form(phi, s.omega) - s.omega).coeff_values(pts))
        inv_eta.append((pullback_form(phi, s.eta) - s.eta).coeff_values(pts))
    rep.add_residual("omega_invariant", np.concatenate(inv_om, axis=1), tol.default,
                     f"{N_GROUP_SAMPLES} sampled group elements")
    rep.add_residual("eta_invariant", np.concatenate(inv_eta, axis=1), tol.default,
                     f"{N_GROUP_SAMPLES} sampled group elements")

    gen_om = []
    gen_eta = []
    for a in range(action.model.dim):
        v = action.fundamental_field(a)
        gen_om.append(lie_derivative(v, s.omega).coeff_values(pts))
        gen_eta.append(lie_derivative(v, s.eta).coeff_values(pts))
    rep.add_residual("generators_preserve_omega",
                     np.concatenate(gen_om, axis=1), tol.default)
    rep.add_residual("generators_preserve_eta",
                     np.concatenate(gen_eta, axis=1), tol.default)
    return rep


def verify_moment_map(s: CosymplecticStructure, action: GroupAction,
                      moment: MomentMap, samples: int = 128, seed: int = 42,
                      tol: Tolerances = Tolerances()) -> CheckReport:
    """Componentwise moment conditions for each generator v with pairing f:

    hamiltonian: flat(v) = sign (df - reeb(f) eta)
    reeb-invariance: reeb(f) = 0
    leaf-tangency: eta(v) = 0 (implied by the first two, checked by name)
    invariance: f(phi_g x) = f(x) for sampled g (abelian equivariance)
    """
    if moment.rank != action.model.dim:
        raise GeometryError("moment map must have one component per group parameter")
    rep = CheckReport(f"moment:{s.name or s.chart.name}", seed, samples)
    rng = seeded_rng(seed, f"moment:{s.chart.name}")
    pts = s.chart.sample(samples, rng)
    xi = reeb(s)

    ham = []
    reeb_inv = []
    tangency = []
    for a in range(action.model.dim):
        v = action.fundamental_field(a)
        f = moment.components[a]
        lhs = flat_apply(s, v)
        rhs = hamiltonian_rhs(s, f)
        if moment.sign < 0:
            rhs = -rhs
        ham.append((lhs - rhs).coeff_values(pts))
        reeb_inv.append(xi.apply_to(f))
        tangency.append(ex.dot(v.components, s.eta_comps()))
    rep.add_residual("hamiltonian_condition", np.concatenate(ham, axis=1), tol.solve)
    rep.add_residual("reeb_invariance",
                     engine.eval_exprs(reeb_inv, s.chart.coords, pts), tol.solve)
    rep.add_residual("generators_tangent_to_leaves",
                     engine.eval_exprs(tangency, s.chart.coords, pts), tol.solve)

    gvals = action.sample_params(N_GROUP_SAMPLES, rng)
    invariance = []
    for g in gvals:
        phi = action.map_for(g)
        binding = dict(zip(s.chart.coords, phi.components))
        moved = [ex.substitute(c, binding) for c in moment.components]
        resid = [ex.sub(m, c) for m, c in zip(moved, moment.components)]
        invariance.append(engine.eval_exprs(resid, s.chart.coords, pts))
    rep.add_residual("invariance", np.concatenate(invariance, axis=1), tol.solve,
                     f"{N_GROUP_SAMPLES} sampled group elements")
    return rep


def verify_regular_value(red: ReductionPresentation, samples: int = 128,
                         seed: int = 42, tol: Tolerances = Tolerances()) -> CheckReport:
    """The level chart presents the zero set of the moment map: J vanishes on
    it, the inclusion is an embedding of the right dimension, the moment
    differential has full rank along it, and the generators give a pointwise
    free (frame-rank) action there."""
    rep = CheckReport(f"regular_value:{red.name}", seed, samples)
    rng = seeded_rng(seed, f"level:{red.level_chart.name}")
    zpts = red.level_chart.sample(samples, rng)
    ipts = red.level_inclusion.apply_many(zpts)
    m = red.moment.rank

    rep.add_exact("level_dimension",
                  red.level_chart.dim == red.structure.dim - m,
                  f"dim level = {red.level_chart.dim}, expected {red.structure.dim} - {m}")
    rep.add_residual("moment_vanishes_on_level", red.moment.values(ipts), tol.solve)
    rep.add_floor("level_embedding",
                  _rank_margin(red.level_inclusion.jacobian_many(zpts), red.level_chart.dim),
                  tol.floor, "singular value margin of d(inclusion)")

    grads = [ex.gradient(c, red.structure.chart.coords) for c in red.moment.components]
    flat_grads = [e for row in grads for e in row]
    dj = engine.eval_exprs(flat_grads, red.structure.chart.coords, ipts)
    dj = dj.reshape(ipts.shape[0], m, red.structure.dim)
    rep.add_floor("moment_submersion_on_level", _rank_margin(dj, m), tol.floor,
                  "singular value margin of dJ")

    frames = np.stack([action_gen.at_many(ipts)
                       for action_gen in red.action.fundamental_fields()], axis=2)
    rep.add_floor("generators_pointwise_free", _rank_margin(frames, red.action.model.dim),
                  tol.floor, "singular value margin of the generator frame")
    rep.assume("action properness (not verified)")
    return rep


@dataclass(eq=False)
class ReducedFormSolution:
    """Pointwise-solved reduced coefficients over quotient samples."""

    presentation: ReductionPresentation
    quotient_pts: np.ndarray
    omega_coeffs: np.ndarray
    eta_coeffs: np.ndarray
    omega_residual: float
    eta_residual: float
    omega_basicness: float | None
    eta_basicness: float | None

    def forms_at(self, rpts: np.ndarray, section_index: int = 0
                 ) -> tuple[np.ndarray, np.ndarray, float]:
        """Re-solve at arbitrary quotient points; returns (omega coefficients,
        eta coefficients, max least-squares residual)."""
        red = self.presentation
        section = red.sections[section_index]
        zpts = section.apply_many(rpts)
        om, eta, resid = _solve_at_level_points(red, zpts)
        return om, eta, resid


def _solve_at_level_points(red: ReductionPresentation, zpts: np.ndarray
                           ) -> tuple[np.ndarray, np.ndarray, float]:
    dim_r = red.quotient_chart.dim
    dim_z = red.level_chart.dim
    jac = red.projection.jacobian_many(zpts)  # (n, dim_r, dim_z)
    om_target = red.omega_target().coeff_values(zpts)
    eta_target = red.eta_target().coeff_values(zpts)

    minors2 = minor_matrix(jac, 2, dim_z, dim_r)   # (n, r_pairs, z_pairs)
    n = zpts.shape[0]
    r_pairs = len(comb_list(dim_r, 2))
    om = np.empty((n, r_pairs))
    eta = np.empty((n, dim_r))
    worst = 0.0
    for p in range(n):
        a2 = minors2[p].T                           # (z_pairs, r_pairs)
        if np.linalg.matrix_rank(a2) < r_pairs:
            raise GeometryError(
                "reduced 2-form is underdetermined: projection minors are "
                f"rank-deficient at quotient sample {p}"
            )
        sol, *_ = np.linalg.lstsq(a2, om_target[p], rcond=None)
        om[p] = sol
        worst = max(worst, float(np.max(np.abs(a2 @ sol - om_target[p]))))
        a1 = jac[p].T                               # (dim_z, dim_r)
        if np.linalg.matrix_rank(a1) < dim_r:
            raise GeometryError(
                "reduced 1-form is underdetermined: projection differential is "
                f"rank-deficient at quotient sample {p}"
            )
        sol1, *_ = np.linalg.lstsq(a1, eta_target[p], rcond=None)
        eta[p] = sol1
        worst = max(worst, float(np.max(np.abs(a1 @ sol1 - eta_target[p]))))
    return om, eta, worst


def solve_reduced_forms(red: ReductionPresentation, samples: int = 128,
                        seed: int = 42, tol: Tolerances = Tolerances()
                        ) -> tuple[ReducedFormSolution, CheckReport]:
    """Solve for reduced coefficients at seeded quotient samples.

    The least-squares residual certifies that the level target forms are
    pullbacks from the quotient; re-solving along a second section (when the
    presentation has one) certifies basicness.  Section consistency
    (projection after section = identity) is checked first."""
    rep = CheckReport(f"solve_reduced_forms:{red.name}", seed, samples)
    rng = seeded_rng(seed, f"quotient:{red.quotient_chart.name}")
    rpts = red.quotient_chart.sample(samples, rng)

    from .charts import identity_map
    for k, section in enumerate(red.sections):
        resid = _map_residuals(compose(red.projection, section),
                               identity_map(red.quotient_chart), rpts)
        rep.add_residual(f"section_{k}_consistent", resid, tol.solve)

    solved = []
    for section in red.sections:
        zpts = section.apply_many(rpts)
        solved.append(_solve_at_level_points(red, zpts))
    om0, eta0, resid0 = solved[0]
    rep.add_residual("pullback_solve_residual", np.asarray([resid0]), tol.solve,
                     "max least-squares residual over quotient samples")

    om_basic = eta_basic = None
    if len(solved) > 1:
        om_basic = max(float(np.max(np.abs(s[0] - om0))) for s in solved[1:])
        eta_basic = max(float(np.max(np.abs(s[1] - eta0))) for s in solved[1:])
        rep.add_residual("omega_basic", np.asarray([om_basic]), tol.default,
                         "solution difference across fiber sections")
        rep.add_residual("eta_basic", np.asarray([eta_basic]), tol.default,
                         "solution difference across fiber sections")
    else:
        rep.assume("basicness (single section supplied, fiber independence not checked)")

    solution = ReducedFormSolution(red, rpts, om0, eta0, resid0,
                                   resid0, om_basic, eta_basic)
    return solution, rep


def _reduced_structure_checks(red: ReductionPresentation, solution: ReducedFormSolution,
                              rep: CheckReport, samples: int, seed: int,
                              tol: Tolerances):
    """Cosymplectic conditions on the quotient, from supplied closed forms
    when available, otherwise pointwise from the solved coefficients with
    closedness certified on the level set."""
    rchart = red.quotient_chart
    if red.reduced_omega is not None and red.reduced_eta is not None:
        structure = CosymplecticStructure(rchart, red.reduced_omega, red.reduced_eta,
                                          f"{red.name}_reduced")
        rep.merge(verify_cosymplectic(structure, samples, seed, tol),
                  "reduced_structure.")
        return

    rep.add_exact("reduced_structure.odd_dimension", rchart.dim % 2 == 1,
                  f"quotient dimension {rchart.dim}")
    d_om = exterior_derivative(red.omega_target()) \
        if red.omega_target().degree < red.level_chart.dim else None
    rng = seeded_rng(seed, f"redstruct:{rchart.name}")
    zpts = red.level_chart.sample(samples, rng)
    if d_om is not None:
        rep.add_residual("reduced_structure.omega_closed_via_level",
                         d_om.coeff_values(zpts), tol.exact,
                         "d of the level target; projection pullback is injective")
    d_eta = exterior_derivative(red.eta_target())
    rep.add_residual("reduced_structure.eta_closed_via_level",
                     d_eta.coeff_values(zpts), tol.exact,
                     "d of the level target; projection pullback is injective")
    rep.assume("projection surjectivity onto the quotient (pointwise solve)")

    om, eta = solution.omega_coeffs, solution.eta_coeffs
    dim_r = rchart.dim
    n_half = (dim_r - 1) // 2
    if n_half == 0:
        top = eta
    else:
        acc, deg = om, 2
        for _ in range(n_half - 1):
            acc = wedge_values(acc, deg, om, 2, dim_r)
            deg += 2
        top = wedge_values(acc, deg, eta, 1, dim_r)
    rep.add_floor("reduced_structure.volume_nonvanishing", top[:, 0], tol.floor,
                  "pointwise top coefficient from solved forms")
    mats = values_as_matrix(om, dim_r) + np.einsum("pi,pj->pij", eta, eta)
    rep.add_floor("reduced_structure.flat_invertible", np.linalg.det(mats),
                  tol.floor, "pointwise flat matrices from solved forms")


def _pointwise_multiplicative(gp: GroupoidPresentation, solution: ReducedFormSolution,
                              degree: int, samples: int, seed: int) -> np.ndarray:
    """Multiplicativity defect of a solved form on the reduced pair chart."""
    rng = seeded_rng(seed, f"pwmult:{gp.arrows.name}:{degree}")
    cpts = gp.pair.chart.sample(samples, rng)
    dim_c = gp.pair.chart.dim
    dim_g = gp.arrows.dim

    def pulled(mp: SmoothMap) -> np.ndarray:
        image = mp.apply_many(cpts)
        om, eta, _ = solution.forms_at(image)
        coeffs = om if degree == 2 else eta
        return pullback_values(coeffs, mp.jacobian_many(cpts), degree, dim_c, dim_g)

    return pulled(gp.pair.product) - pulled(gp.pair.left) - pulled(gp.pair.right)


def verify_groupoid_reduction(red: ReductionPresentation, samples: int = 128,
                              seed: int = 42, tol: Tolerances = Tolerances()
                              ) -> CheckReport:
    """Full reduction pipeline; stage prefixes (in order): action, moment,
    level, wide, reduced_forms, reduced_structure, reduced_groupoid,
    projection."""
    rep = CheckReport(f"groupoid_reduction:{red.name}", seed, samples)
    s = red.structure

    rep.merge(verify_cosymplectic_action(s, red.action, samples, seed, tol), "action.")
    rep.merge(verify_moment_map(s, red.action, red.moment, samples, seed, tol), "moment.")
    rep.merge(verify_regular_value(red, samples, seed, tol), "level.")

    rng = seeded_rng(seed, f"reduction:{red.name}")
    if red.groupoid is not None and red.level_groupoid is not None:
        wide = CheckReport("wide", seed, samples)
        gp, zgp = red.groupoid, red.level_groupoid
        zpts = red.level_chart.sample(samples, rng)
        mpts = gp.units.sample(samples, rng)
        wide.merge(verify_groupoid(zgp, samples, seed, tol), "axioms.")
        if zgp.units != gp.units:
            raise GeometryError("level groupoid must share the unit chart")
        iota = red.level_inclusion
        wide.add_residual("source_intertwined",
                          _map_residuals(compose(gp.source, iota), zgp.source, zpts),
                          tol.solve)
        wide.add_residual("target_intertwined",
                          _map_residuals(compose(gp.target, iota), zgp.target, zpts),
                          tol.solve)
        wide.add_residual("wide_same_units",
                          _map_residuals(compose(iota, zgp.unit), gp.unit, mpts),
                          tol.solve)
        wide.add_residual("inverse_intertwined",
                          _map_residuals(compose(iota, zgp.inverse),
                                         compose(gp.inverse, iota), zpts), tol.solve)
        if red.level_pair_inclusion is not None:
            cpts = zgp.pair.chart.sample(samples, rng)
            zeta = red.level_pair_inclusion
            wide.add_residual(
                "pair_inclusion_consistent",
                np.concatenate([
                    _map_residuals(compose(gp.pair.left, zeta),
                                   compose(iota, zgp.pair.left), cpts),
                    _map_residuals(compose(gp.pair.right, zeta),
                                   compose(iota, zgp.pair.right), cpts),
                ], axis=1), tol.solve)
            wide.add_residual("product_closed_in_level",
                              _map_residuals(compose(gp.pair.product, zeta),
                                             compose(iota, zgp.pair.product), cpts),
                              tol.solve)
            product_moment = engine.eval_exprs(
                [ex.substitute(c, dict(zip(gp.arrows.coords,
                                           compose(gp.pair.product, zeta).components)))
                 for c in red.moment.components],
                zgp.pair.chart.coords, cpts)
            wide.add_residual("moment_vanishes_on_products", product_moment, tol.solve)
        rep.merge(wide, "wide.")

    solution, solve_rep = solve_reduced_forms(red, samples, seed, tol)
    rep.merge(solve_rep, "reduced_forms.")

    if red.reduced_omega is not None:
        expected = [red.reduced_omega.coefficient(i)
                    for i in comb_list(red.quotient_chart.dim, 2)]
        vals = engine.eval_exprs(expected, red.quotient_chart.coords, solution.quotient_pts)
        rep.add_residual("reduced_forms.matches_supplied_omega",
                         vals - solution.omega_coeffs, tol.match)
        consistency = pullback_form(red.projection, red.reduced_omega) - red.omega_target()
        zpts = red.level_chart.sample(samples, rng)
        rep.add_residual("reduced_forms.pullback_consistency_omega",
                         consistency.coeff_values(zpts), tol.default)
    if red.reduced_eta is not None:
        expected = [red.reduced_eta.coefficient((i,))
                    for i in range(red.quotient_chart.dim)]
        vals = engine.eval_exprs(expected, red.quotient_chart.coords, solution.quotient_pts)
        rep.add_residual("reduced_forms.matches_supplied_eta",
                         vals - solution.eta_coeffs, tol.match)
        consistency = pullback_form(red.projection, red.reduced_eta) - red.eta_target()
        zpts = red.level_chart.sample(samples, rng)
        rep.add_residual("reduced_forms.pullback_consistency_eta",
                         consistency.coeff_values(zpts), tol.default)

    _reduced_structure_checks(red, solution, rep, samples, seed, tol)

    if red.reduced_groupoid is not None:
        rgp = red.reduced_groupoid
        rep.merge(verify_groupoid(rgp, samples, seed, tol), "reduced_groupoid.")
        if red.reduced_omega is not None and red.reduced_eta is not None:
            rep.merge(verify_multiplicative(rgp, red.reduced_omega, samples, seed,
                                            tol, "omega"),
                      "reduced_groupoid.multiplicative_omega.")
            rep.merge(verify_multiplicative(rgp, red.reduced_eta, samples, seed,
                                            tol, "eta"),
                      "reduced_groupoid.multiplicative_eta.")
        else:
            rep.add_residual(
                "reduced_groupoid.multiplicative_omega_pointwise",
                _pointwise_multiplicative(rgp, solution, 2, samples, seed), tol.default)
            rep.add_residual(
                "reduced_groupoid.multiplicative_eta_pointwise",
                _pointwise_multiplicative(rgp, solution, 1, samples, seed), tol.default)

        proj = CheckReport("projection", seed, samples)
        zpts = red.level_chart.sample(samples, rng)
        if red.level_groupoid is not None and red.base_projection is not None:
            zgp = red.level_groupoid
            p = red.base_projection
            proj.add_residual("source_descends",
                              _map_residuals(compose(rgp.source, red.projection),
                                             compose(p, zgp.source), zpts), tol.solve)
            proj.add_residual("target_descends",
                              _map_residuals(compose(rgp.target, red.projection),
                                             compose(p, zgp.target), zpts), tol.solve)
            mpts = zgp.units.sample(samples, rng)
            proj.add_residual("units_descend",
                              _map_residuals(compose(red.projection, zgp.unit),
                                             compose(rgp.unit, p), mpts), tol.solve)
            proj.add_residual("inversion_descends",
                              _map_residuals(compose(red.projection, zgp.inverse),
                                             compose(rgp.inverse, red.projection), zpts),
                              tol.solve)
            if red.pair_projection is not None:
                cpts = zgp.pair.chart.sample(samples, rng)
                proj.add_residual(
                    "pair_projection_consistent",
                    np.concatenate([
                        _map_residuals(compose(rgp.pair.left, red.pair_projection),
                                       compose(red.projection, zgp.pair.left), cpts),
                        _map_residuals(compose(rgp.pair.right, red.pair_projection),
                                       compose(red.projection, zgp.pair.right), cpts),
                    ], axis=1), tol.solve)
                proj.add_residual(
                    "products_descend",
                    _map_residuals(compose(rgp.pair.product, red.pair_projection),
                                   compose(red.projection, zgp.pair.product), cpts),
                    tol.solve)
            proj.add_floor("base_projection_submersion",
                           _rank_margin(p.jacobian_many(
                               zgp.units.sample(samples, rng)), rgp.units.dim),
                           tol.floor)
        proj.add_floor("projection_submersion",
                       _rank_margin(red.projection.jacobian_many(zpts),
                                    red.quotient_chart.dim), tol.floor)
        m = red.moment.rank
        proj.add_exact(
            "dimension_bookkeeping",
            red.quotient_chart.dim == red.structure.dim - 2 * m
            and red.quotient_chart.dim == 2 * rgp.units.dim + 1,
            f"dim quotient = {red.quotient_chart.dim}, structure {red.structure.dim}, "
            f"group rank {m}, reduced units {rgp.units.dim}")
        rep.merge(proj, "projection.")

    rep.assume("source-connectedness of the groupoid (not verified)")
    rep.assume("quotient manifold structure (presented, not constructed)")
    return rep


def verify_leaf_reduction(red: ReductionPresentation, samples: int = 128,
                          seed: int = 42, tol: Tolerances = Tolerances()) -> CheckReport:
    """Reduction restricted to the symplectic leaf through the units:
    the subgroupoid checks, the restricted action and its symplectic moment
    condition, the commuting level diagram, and equality of 'restrict then
    reduce' with 'reduce then restrict' for the 2-form."""
    if red.leaf is None:
        raise GeometryError("presentation has no leaf data")
    leaf = red.leaf
    ls = leaf.subgroupoid
    s = red.structure
    rep = CheckReport(f"leaf_reduction:{red.name}", seed, samples)
    rng = seeded_rng(seed, f"leafred:{red.name}")

    rep.merge(verify_leaf_subgroupoid(ls, s.omega, s.eta, samples, seed, tol),
              "subgroupoid.")

    inc = ls.inclusion
    sig_pts = ls.leaf.arrows.sample(samples, rng)
    gvals = red.action.sample_params(N_GROUP_SAMPLES, rng)
    restrict = []
    for g in gvals:
        phi_sigma = leaf.action.map_for(g)
        phi = red.action.map_for(g)
        restrict.append(_map_residuals(compose(inc, phi_sigma),
                                       compose(phi, inc), sig_pts))
    rep.add_residual("restriction.action_intertwined",
                     np.concatenate(restrict, axis=1), tol.solve,
                     f"{N_GROUP_SAMPLES} sampled group elements")

    leaf_omega = pullback_form(inc, s.omega)
    binding = dict(zip(s.chart.coords, inc.components))
    j0 = [ex.substitute(c, binding) for c in red.moment.components]
    sympl = []
    for a in range(red.action.model.dim):
        v = leaf.action.fundamental_field(a)
        lhs = interior_product(v, leaf_omega)
        rhs = one_form(ls.leaf.arrows, ex.gradient(j0[a], ls.leaf.arrows.coords))
        if red.moment.sign < 0:
            rhs = -rhs
        sympl.append((lhs - rhs).coeff_values(sig_pts))
    rep.add_residual("restriction.symplectic_moment_condition",
                     np.concatenate(sympl, axis=1), tol.solve)

    z0pts = leaf.level_chart.sample(samples, rng)
    rep.add_residual("level.diagram_commutes",
                     _map_residuals(compose(red.level_inclusion, leaf.level_to_ambient_level),
                                    compose(inc, leaf.level_inclusion), z0pts), tol.solve)
    rep.add_residual("level.projection_compatible",
                     _map_residuals(compose(leaf.into_reduced, leaf.projection),
                                    compose(red.projection, leaf.level_to_ambient_level),
                                    z0pts), tol.solve)
    j0_level = [ex.substitute(c, dict(zip(ls.leaf.arrows.coords,
                                          leaf.level_inclusion.components)))
                for c in j0]
    rep.add_residual("level.moment_vanishes",
                     engine.eval_exprs(j0_level, leaf.level_chart.coords, z0pts),
                     tol.solve)

    # reduce the leaf 2-form with the leaf-side data
    leaf_target = pullback_form(leaf.level_inclusion, leaf_omega)
    leaf_red = ReductionPresentation(
        structure=s, action=red.action, moment=red.moment,
        level_chart=leaf.level_chart,
        level_inclusion=compose(inc, leaf.level_inclusion),
        quotient_chart=leaf.quotient_chart,
        projection=leaf.projection,
        sections=leaf.sections,
        solve_omega_target=leaf_target,
        solve_eta_target=pullback_form(leaf.level_inclusion, pullback_form(inc, s.eta)),
        name=f"{red.name}_leaf",
    )
    leaf_solution, leaf_solve_rep = solve_reduced_forms(leaf_red, samples, seed, tol)
    rep.merge(leaf_solve_rep, "leaf_forms.")

    ambient_solution, _ = solve_reduced_forms(red, samples, seed, tol)
    spts = leaf_solution.quotient_pts
    image = leaf.into_reduced.apply_many(spts)
    om_amb, eta_amb, resolve_resid = ambient_solution.forms_at(image)
    rep.add_residual("leaf_forms.ambient_resolve_residual",
                     np.asarray([resolve_resid]), tol.solve)
    jac = leaf.into_reduced.jacobian_many(spts)
    dim_s = leaf.quotient_chart.dim
    dim_r = red.quotient_chart.dim
    pulled_om = pullback_values(om_amb, jac, 2, dim_s, dim_r)
    rep.add_residual("restrict_reduce_commutes_omega",
                     pulled_om - leaf_solution.omega_coeffs, tol.default,
                     "pullback of reduced 2-form vs reduction of restricted 2-form")
    pulled_eta = pullback_values(eta_amb, jac, 1, dim_s, dim_r)
    rep.add_residual("reduced_eta_pulls_to_zero_on_leaf", pulled_eta, tol.default)
    return rep


def verify_symplectization_correspondence(s: CosymplecticStructure, action: GroupAction,
                                          moment: MomentMap, samples: int = 128,
                                          seed: int = 42, tol: Tolerances = Tolerances()
                                          ) -> CheckReport:
    """Lift to the product with a line: the lifted action is Hamiltonian for
    the lifted moment map and the product symplectic form, the pairing is
    independent of the line coordinate, and the lifted Reeb direction pairs
    to zero with every generator."""
    sz = symplectization(s)
    rep = CheckReport(f"symplectization:{s.name or s.chart.name}", seed, samples)
    rep.merge(verify_symplectization(sz, samples, seed, tol), "product.")
    rng = seeded_rng(seed, f"szcorr:{s.chart.name}")
    pts = sz.chart.sample(samples, rng)

    lifted_action = GroupAction(
        action.model, sz.chart, action.params,
        tuple(action.components) + (ex.Sym(sz.t_coord),),
        f"{action.name or 'phi'}_lifted",
    )
    binding = dict(zip(s.chart.coords, sz.projection.components))
    lifted_moment = [ex.substitute(c, binding) for c in moment.components]

    ham = []
    line_inv = []
    reeb_pair = []
    xi = reeb(s)
    xi_lift = VectorField(sz.chart, tuple(xi.components) + (ex.ZERO,), "reeb_lift")
    omega_mats = two_form_matrices(sz.form, pts)
    for a in range(action.model.dim):
        v = lifted_action.fundamental_field(a)
        lhs = interior_product(v, sz.form)
        rhs = one_form(sz.chart, ex.gradient(lifted_moment[a], sz.chart.coords))
        if moment.sign < 0:
            rhs = -rhs
        ham.append((lhs - rhs).coeff_values(pts))
        line_inv.append(ex.differentiate(lifted_moment[a], sz.t_coord))
        vvals = v.at_many(pts)
        xvals = xi_lift.at_many(pts)
        reeb_pair.append(np.einsum("pi,pij,pj->p", vvals, omega_mats, xvals))
    rep.add_residual("lifted_moment_hamiltonian", np.concatenate(ham, axis=1), tol.solve)
    rep.add_residual("pairing_line_independent",
                     engine.eval_exprs(line_inv, sz.chart.coords, pts), tol.solve)
    rep.add_residual("reeb_pairs_generators_to_zero",
                     np.column_stack(reeb_pair), tol.solve)
    return rep


def verify_infinitesimal_reduction_square(red: ReductionPresentation,
                                          samples: int = 64, seed: int = 42,
                                          tol: Tolerances = Tolerances()) -> CheckReport:
    """Inducing IM data at units commutes with reduction.

    At sampled units: take the directions u spanning ker(d source) inter
    ker(dJ) at the unit arrow, transport them to the level set (u = d iota w)
    and down to the reduced arrows (u_red = dP w); then the induced pairings
    agree, i.e. p* of (omega_red(u_red, d unit_red .), eta_red(u_red)) equals
    (omega(u, d unit .), eta(u))."""
    if red.groupoid is None or red.reduced_groupoid is None or \
            red.level_groupoid is None or red.base_projection is None:
        raise GeometryError("commuting-square check needs the full groupoid chain")
    gp, rgp, zgp = red.groupoid, red.reduced_groupoid, red.level_groupoid
    s = red.structure
    m = red.moment.rank
    rep = CheckReport(f"im_reduction_square:{red.name}", seed, samples)
    rng = seeded_rng(seed, f"imsquare:{red.name}")
    mpts = gp.units.sample(samples, rng)
    epts = gp.unit.apply_many(mpts)

    ds = gp.source.jacobian_many(epts)
    grads = [ex.gradient(c, s.chart.coords) for c in red.moment.components]
    dj = engine.eval_exprs([e for row in grads for e in row], s.chart.coords, epts)
    dj = dj.reshape(len(epts), m, s.dim)
    stacked = np.concatenate([ds, dj], axis=1)

    fiber = gp.arrows.dim - gp.units.dim - m
    rep.add_exact("kernel_dimension",
                  fiber == rgp.arrows.dim - rgp.units.dim,
                  f"upstairs kernel {fiber}, reduced fiber "
                  f"{rgp.arrows.dim - rgp.units.dim}")

    _, sv, vt = np.linalg.svd(stacked)
    rank_needed = gp.units.dim + m
    rep.add_floor("level_kernel_regular", sv[:, rank_needed - 1], tol.floor,
                  "margin of rank(d source stacked with dJ)")

    # units sit inside the level chart: recover the level point from iota
    zpts_guess = _level_points_for_units(red, mpts, epts)
    diota = red.level_inclusion.jacobian_many(zpts_guess)
    dp_level = red.projection.jacobian_many(zpts_guess)

    mpts_red = red.base_projection.apply_many(mpts)
    epts_red = rgp.unit.apply_many(mpts_red)
    deps = gp.unit.jacobian_many(mpts)
    deps_red = rgp.unit.jacobian_many(mpts_red)
    dp_base = red.base_projection.jacobian_many(mpts)

    omega_up = two_form_matrices(s.omega, epts)
    eta_up = engine.eval_exprs([s.eta.coefficient((i,)) for i in range(s.dim)],
                               s.chart.coords, epts)
    if red.reduced_omega is not None and red.reduced_eta is not None:
        omega_dn = two_form_matrices(red.reduced_omega, epts_red)
        eta_dn = engine.eval_exprs(
            [red.reduced_eta.coefficient((i,)) for i in range(rgp.arrows.dim)],
            rgp.arrows.coords, epts_red)
    else:
        solution, _ = solve_reduced_forms(red, samples, seed, tol)
        om_c, eta_dn, _ = solution.forms_at(epts_red)
        omega_dn = values_as_matrix(om_c, rgp.arrows.dim)

    transport = []
    mu_resid = []
    nu_resid = []
    for p in range(len(mpts)):
        null = vt[p][rank_needed:, :].T          # (dim G, fiber)
        w, *_ = np.linalg.lstsq(diota[p], null, rcond=None)
        transport.append(diota[p] @ w - null)
        u_red = dp_level[p] @ w                   # (dim R, fiber)
        mu_up = null.T @ omega_up[p] @ deps[p]            # (fiber, dim M)
        mu_dn = u_red.T @ omega_dn[p] @ deps_red[p]       # (fiber, dim Mred)
        mu_resid.append(mu_dn @ dp_base[p] - mu_up)
        nu_up = null.T @ eta_up[p]
        nu_dn = u_red.T @ eta_dn[p]
        nu_resid.append(nu_dn - nu_up)
    rep.add_residual("kernel_transports_to_level",
                     np.concatenate([t.ravel() for t in transport]), tol.solve)
    rep.add_residual("mu_square_commutes",
                     np.concatenate([r.ravel() for r in mu_resid]), tol.default,
                     "induce-then-reduce vs reduce-then-induce, 2-form side")
    rep.add_residual("nu_square_commutes",
                     np.concatenate([r.ravel() for r in nu_resid]), tol.default,
                     "induce-then-reduce vs reduce-then-induce, 1-form side")
    return rep


def _level_points_for_units(red: ReductionPresentation, mpts: np.ndarray,
                            epts: np.ndarray) -> np.ndarray:
    """Level-chart points whose inclusion hits the unit arrows.

    Uses the level groupoid's unit section (units embed in the level set for
    a wide subgroupoid); validates the roundtrip through the inclusion."""
    if red.level_groupoid is None:
        raise GeometryError("level groupoid required to locate units in the level set")
    zpts = red.level_groupoid.unit.apply_many(mpts)
    image = red.level_inclusion.apply_many(zpts)
    delta = red.structure.chart.wrap_deltas(image - epts)
    if float(np.max(np.abs(delta))) > 1e-8:
        raise GeometryError("level unit section does not match the ambient unit section")
    return zpts
