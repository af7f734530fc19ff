"""Poisson bases, exact sections of the extended cotangent algebroid, and
infinitesimally multiplicative (IM) form data.

The extension of the cotangent algebroid of a Poisson chart (M, pi) by a
line has sections presented exactly: a pair (f, g) of functions stands for
(df, g).  With X_f = {f, .} = pi(df, .) the structure maps are

    anchor(f, g)      = X_f
    [(f1,g1),(f2,g2)] = ({f1, f2}, X_f1(g2) - X_f2(g1)).

An IM pair (mu, nu) assigns a 1-form mu(a) and a function nu(a) to each
section, linearly in (df, g); the canonical pair mu = df, nu = g makes the
IM equations hold identically.  `induced_im_forms` recovers such data
numerically from a groupoid presentation with structure forms by pairing
source-kernel directions at the units against the unit embedding.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from . import engine
from . import expr as ex
from .actions import GroupAction
from .charts import Chart, GeometryError, SmoothMap, VectorField, commutator, seeded_rng
from .forms import (
    DifferentialForm,
    exterior_derivative,
    interior_product,
    lie_derivative,
    one_form,
    pullback_form,
    two_form_matrices,
)
from .groupoid import GroupoidPresentation
from .report import CheckReport, Tolerances


@dataclass(eq=False)
class PoissonBase:
    """Bivector on a chart, stored by strictly upper-triangular entries so
    antisymmetry is exact by storage."""

    chart: Chart
    upper: dict[tuple[int, int], ex.Expr]
    name: str = ""

    def __post_init__(self):
        clean = {}
        allowed = set(self.chart.coords)
        for (i, j), c in self.upper.items():
            if not (0 <= i < j < self.chart.dim):
                raise GeometryError(f"bivector index {(i, j)} must satisfy i < j")
            stray = ex.free_names(c) - allowed
            if stray:
                raise GeometryError(f"bivector entry uses {sorted(stray)}")
            if not (isinstance(c, ex.Num) and c.value == 0.0):
                clean[(i, j)] = c
        self.upper = clean

    def entry(self, i: int, j: int) -> ex.Expr:
        if i == j:
            return ex.ZERO
        if i < j:
            return self.upper.get((i, j), ex.ZERO)
        return ex.neg(self.upper.get((j, i), ex.ZERO))

    @property
    def is_zero(self) -> bool:
        return not self.upper

    def bracket(self, f: ex.Expr, g: ex.Expr) -> ex.Expr:
        """{f, g} = pi(df, dg)."""
        df = ex.gradient(f, self.chart.coords)
        dg = ex.gradient(g, self.chart.coords)
        terms = []
        for (i, j), c in self.upper.items():
            block = ex.sub(ex.mul(df[i], dg[j]), ex.mul(df[j], dg[i]))
            terms.append(ex.mul(c, block))
        return ex.expr_sum(terms)

    def hamiltonian_field(self, f: ex.Expr) -> VectorField:
        """X_f = {f, .}; for pi = dq wedge-dual with pi(dq, dp) = 1 this gives
        X_q = d/dp."""
        df = ex.gradient(f, self.chart.coords)
        comps = []
        for j in range(self.chart.dim):
            comps.append(ex.expr_sum(
                ex.mul(df[i], self.entry(i, j)) for i in range(self.chart.dim)
            ))
        return VectorField(self.chart, tuple(comps), "ham_pi")

    def jacobi_residual_exprs(self) -> list[ex.Expr]:
        """Sum_l pi^{li} d_l pi^{jk} + cyclic, one expression per i<j<k."""
        d = self.chart.dim
        out = []
        for i, j, k in combinations(range(d), 3):
            terms = []
            for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                for l in range(d):
                    terms.append(ex.mul(
                        self.entry(l, a),
                        ex.differentiate(self.entry(b, c), self.chart.coords[l]),
                    ))
            out.append(ex.expr_sum(terms))
        return out


def poisson_base(chart: Chart, entries: dict[str, str | ex.Expr] | None = None,
                 name: str = "") -> PoissonBase:
    """Entries keyed like "dq^dp" (meaning pi(dq, dp)), values expressions."""
    upper: dict[tuple[int, int], ex.Expr] = {}
    for key, text in (entries or {}).items():
        parts = [p.strip() for p in key.split("^")]
        if len(parts) != 2:
            raise GeometryError(f"bivector key '{key}' must name two coordinates")
        idx = []
        for nm in parts:
            if not nm.startswith("d"):
                raise GeometryError(f"bivector factor '{nm}' must look like d<coord>")
            idx.append(chart.index(nm[1:]))
        i, j = idx
        coeff = chart.parse(text) if isinstance(text, str) else text
        if i == j:
            raise GeometryError(f"bivector key '{key}' repeats a coordinate")
        if i > j:
            i, j = j, i
            coeff = ex.neg(coeff)
        if (i, j) in upper:
            raise GeometryError(f"duplicate bivector key '{key}'")
        upper[(i, j)] = coeff
    return PoissonBase(chart, upper, name)


@dataclass(frozen=True)
class ExactSection:
    """The section (df, g) of the extended algebroid, stored as (f, g)."""

    f: ex.Expr
    g: ex.Expr

    def label(self) -> str:
        return f"({ex.to_text(self.f)}, {ex.to_text(self.g)})"


def exact_section(chart: Chart, f: str | ex.Expr, g: str | ex.Expr) -> ExactSection:
    fe = chart.parse(f) if isinstance(f, str) else f
    ge = chart.parse(g) if isinstance(g, str) else g
    return ExactSection(fe, ge)


def anchor(base: PoissonBase, sec: ExactSection) -> VectorField:
    return base.hamiltonian_field(sec.f)


def section_bracket(base: PoissonBase, a: ExactSection, b: ExactSection) -> ExactSection:
    xa = base.hamiltonian_field(a.f)
    xb = base.hamiltonian_field(b.f)
    return ExactSection(
        base.bracket(a.f, b.f),
        ex.sub(xa.apply_to(b.g), xb.apply_to(a.g)),
    )


def random_polynomial_sections(chart: Chart, count: int, rng: np.random.Generator,
                               degree: int = 3, terms: int = 3) -> list[ExactSection]:
    """Seeded corpus of polynomial sections with degree <= `degree`."""

    def poly() -> ex.Expr:
        parts = []
        for _ in range(terms):
            total = int(rng.integers(1, degree + 1))
            coeff = float(np.round(rng.uniform(-1.0, 1.0), 3))
            mono: ex.Expr = ex.Num(coeff)
            for _ in range(total):
                c = chart.coords[int(rng.integers(0, chart.dim))]
                mono = ex.mul(mono, ex.Sym(c))
            parts.append(mono)
        return ex.expr_sum(parts)

    return [ExactSection(poly(), poly()) for _ in range(count)]


@dataclass(eq=False)
class IMFormPair:
    """Linear assignments section -> (1-form, function).

    mu_matrix has shape dim x (dim + 1): row i gives the coefficient of
    dx_i in mu(f, g) as mu[i][:dim] . grad f + mu[i][dim] * g.  nu_row has
    length dim + 1 with the same reading.  `central_pair` builds the
    canonical mu = df, nu = g data.
    """

    chart: Chart
    mu_matrix: tuple[tuple[ex.Expr, ...], ...]
    nu_row: tuple[ex.Expr, ...]

    def __post_init__(self):
        d = self.chart.dim
        self.mu_matrix = tuple(tuple(row) for row in self.mu_matrix)
        self.nu_row = tuple(self.nu_row)
        if len(self.mu_matrix) != d or any(len(r) != d + 1 for r in self.mu_matrix):
            raise GeometryError(f"mu matrix must be {d} x {d + 1}")
        if len(self.nu_row) != d + 1:
            raise GeometryError(f"nu row must have length {d + 1}")

    def mu(self, sec: ExactSection) -> DifferentialForm:
        df = ex.gradient(sec.f, self.chart.coords)
        comps = [
            ex.add(ex.dot(row[:-1], df), ex.mul(row[-1], sec.g))
            for row in self.mu_matrix
        ]
        return one_form(self.chart, comps)

    def nu(self, sec: ExactSection) -> ex.Expr:
        df = ex.gradient(sec.f, self.chart.coords)
        return ex.add(ex.dot(self.nu_row[:-1], df), ex.mul(self.nu_row[-1], sec.g))


def central_pair(chart: Chart) -> IMFormPair:
    d = chart.dim
    mu = tuple(
        tuple(ex.ONE if j == i else ex.ZERO for j in range(d + 1))
        for i in range(d)
    )
    nu = tuple(ex.ZERO for _ in range(d)) + (ex.ONE,)
    return IMFormPair(chart, mu, nu)


def _section_pairs(sections: Sequence[ExactSection]):
    return list(combinations(range(len(sections)), 2))


def verify_algebroid_structure(base: PoissonBase, sections: Sequence[ExactSection],
                               samples: int = 128, seed: int = 42,
                               tol: Tolerances = Tolerances()) -> CheckReport:
    """Bivector Jacobi identity, bracket antisymmetry and Jacobi on the
    section corpus, and compatibility of the anchor with brackets."""
    rep = CheckReport(f"algebroid:{base.name or base.chart.name}", seed, samples)
    rng = seeded_rng(seed, f"algebroid:{base.chart.name}")
    pts = base.chart.sample(samples, rng)
    coords = base.chart.coords

    jac = base.jacobi_residual_exprs()
    if jac:
        rep.add_residual("bivector_jacobi",
                         engine.eval_exprs(jac, coords, pts), tol.bracket)
    else:
        rep.add_exact("bivector_jacobi", True, "fewer than three coordinates")

    anti = []
    morph = []
    for i, j in _section_pairs(sections):
        a, b = sections[i], sections[j]
        ab = section_bracket(base, a, b)
        ba = section_bracket(base, b, a)
        anti.append(ex.add(ab.f, ba.f))
        anti.append(ex.add(ab.g, ba.g))
        lhs = anchor(base, ab)
        rhs = commutator(anchor(base, a), anchor(base, b))
        morph.extend(ex.sub(u, v) for u, v in zip(lhs.components, rhs.components))
    if anti:
        rep.add_residual("bracket_antisymmetric",
                         engine.eval_exprs(anti, coords, pts), tol.exact)
        rep.add_residual("anchor_preserves_bracket",
                         engine.eval_exprs(morph, coords, pts), tol.bracket)

    jac3 = []
    for i, j, k in combinations(range(min(len(sections), 5)), 3):
        a, b, c = sections[i], sections[j], sections[k]
        total_f = []
        total_g = []
        for (u, v, w) in ((a, b, c), (b, c, a), (c, a, b)):
            nested = section_bracket(base, section_bracket(base, u, v), w)
            total_f.append(nested.f)
            total_g.append(nested.g)
        jac3.append(ex.expr_sum(total_f))
        jac3.append(ex.expr_sum(total_g))
    if jac3:
        rep.add_residual("section_jacobi",
                         engine.eval_exprs(jac3, coords, pts), tol.bracket)
    return rep


def verify_im_2form(base: PoissonBase, pair: IMFormPair,
                    sections: Sequence[ExactSection], samples: int = 128,
                    seed: int = 42, tol: Tolerances = Tolerances()) -> CheckReport:
    """The two IM equations for mu over the section corpus:

    skew:    iota_{rho(a)} mu(b) = - iota_{rho(b)} mu(a)
    bracket: mu([a, b]) = L_{rho(a)} mu(b) - iota_{rho(b)} d mu(a)
    """
    if pair.chart != base.chart:
        raise GeometryError("IM pair and Poisson base live on different charts")
    rep = CheckReport("im_2form", seed, samples)
    rng = seeded_rng(seed, f"im2:{base.chart.name}")
    pts = base.chart.sample(samples, rng)
    coords = base.chart.coords

    skew = []
    bracket_resid: list[np.ndarray] = []
    for i, j in _section_pairs(sections):
        a, b = sections[i], sections[j]
        ra, rb = anchor(base, a), anchor(base, b)
        skew.append(ex.add(
            interior_product(ra, pair.mu(b)).coefficient(()),
            interior_product(rb, pair.mu(a)).coefficient(()),
        ))
        lhs = pair.mu(section_bracket(base, a, b))
        rhs = lie_derivative(ra, pair.mu(b)) \
            - interior_product(rb, exterior_derivative(pair.mu(a)))
        bracket_resid.append((lhs - rhs).coeff_values(pts))
    if not skew:
        rep.add_exact("im_skew", True, "fewer than two sections")
        rep.add_exact("im_bracket", True, "fewer than two sections")
        return rep
    rep.add_residual("im_skew", engine.eval_exprs(skew, coords, pts), tol.default)
    rep.add_residual("im_bracket", np.concatenate(bracket_resid, axis=1), tol.default)
    return rep


def verify_im_1form(base: PoissonBase, pair: IMFormPair,
                    sections: Sequence[ExactSection], samples: int = 128,
                    seed: int = 42, tol: Tolerances = Tolerances()) -> CheckReport:
    """nu([a, b]) = rho(a) nu(b) - rho(b) nu(a) over the section corpus."""
    if pair.chart != base.chart:
        raise GeometryError("IM pair and Poisson base live on different charts")
    rep = CheckReport("im_1form", seed, samples)
    rng = seeded_rng(seed, f"im1:{base.chart.name}")
    pts = base.chart.sample(samples, rng)

    resid = []
    for i, j in _section_pairs(sections):
        a, b = sections[i], sections[j]
        ra, rb = anchor(base, a), anchor(base, b)
        lhs = pair.nu(section_bracket(base, a, b))
        rhs = ex.sub(ra.apply_to(pair.nu(b)), rb.apply_to(pair.nu(a)))
        resid.append(ex.sub(lhs, rhs))
    if not resid:
        rep.add_exact("im_nu_bracket", True, "fewer than two sections")
        return rep
    rep.add_residual("im_nu_bracket",
                     engine.eval_exprs(resid, base.chart.coords, pts), tol.default)
    return rep


@dataclass(eq=False)
class InducedIMForms:
    """Sampled IM data induced by structure forms at the unit section.

    kernel_basis[p] spans ker(d source) at the unit over unit_pts[p]; columns
    of mu_vals[p] are omega(u_a, d unit . e_i), nu_vals[p, a] = eta(u_a).
    """

    unit_pts: np.ndarray
    arrow_pts: np.ndarray
    kernel_basis: np.ndarray
    mu_vals: np.ndarray
    nu_vals: np.ndarray


def induced_im_forms(gp: GroupoidPresentation, omega: DifferentialForm,
                     eta: DifferentialForm, samples: int = 64, seed: int = 42
                     ) -> InducedIMForms:
    """Evaluate the induced (mu, nu) at seeded unit points.

    Raises a rank error when ker(d source) at some unit does not have the
    expected dimension dim(arrows) - dim(units).
    """
    rng = seeded_rng(seed, f"induced:{gp.arrows.name}")
    mpts = gp.units.sample(samples, rng)
    epts = gp.unit.apply_many(mpts)
    fiber_dim = gp.arrows.dim - gp.units.dim

    ds = gp.source.jacobian_many(epts)
    u, sv, vt = np.linalg.svd(ds)
    tol_rank = max(gp.arrows.dim, gp.units.dim) * np.finfo(float).eps * 64
    kernels = np.empty((samples, gp.arrows.dim, fiber_dim))
    for p in range(samples):
        null_count = int(np.sum(sv[p] <= tol_rank * max(1.0, sv[p][0]))) \
            + (gp.arrows.dim - sv[p].shape[0])
        if null_count != fiber_dim:
            raise GeometryError(
                f"rank error: ker(d source) at unit sample {p} has dimension "
                f"{null_count}, expected {fiber_dim}"
            )
        basis = vt[p][-fiber_dim:, :].T
        # deterministic sign: largest-magnitude entry positive
        for a in range(fiber_dim):
            col = basis[:, a]
            lead = np.argmax(np.abs(col))
            if col[lead] < 0:
                basis[:, a] = -col
        kernels[p] = basis

    omega_mats = two_form_matrices(omega, epts)
    deps = gp.unit.jacobian_many(mpts)
    mu_vals = np.einsum("pia,pij,pjk->pak", kernels, omega_mats, deps)
    eta_vals = engine.eval_exprs(
        [eta.coefficient((i,)) for i in range(gp.arrows.dim)],
        gp.arrows.coords, epts)
    nu_vals = np.einsum("pia,pi->pa", kernels, eta_vals)
    return InducedIMForms(mpts, epts, kernels, mu_vals, nu_vals)


def verify_reduced_im_forms(base: PoissonBase, reduced_base: PoissonBase,
                            projection: SmoothMap, pair: IMFormPair,
                            reduced_pair: IMFormPair,
                            reduced_sections: Sequence[ExactSection],
                            action: GroupAction | None = None,
                            upstairs_sections: Sequence[ExactSection] = (),
                            samples: int = 128, seed: int = 42,
                            tol: Tolerances = Tolerances()) -> CheckReport:
    """Reduction compatibility of IM data along a base projection p: M -> M0:

        p*(mu0(a)) = mu(p* a)   and   p*(nu0(a)) = nu(p* a)

    for sections a on the reduced base (their pullbacks are automatically
    invariant).  Sections supplied on M itself are screened against the
    action: non-invariant ones are flagged "not basic" and excluded."""
    if projection.source != base.chart or projection.target != reduced_base.chart:
        raise GeometryError("projection must map the base onto the reduced base")
    rep = CheckReport("reduced_im_forms", seed, samples)
    rng = seeded_rng(seed, f"imred:{base.chart.name}")
    pts = base.chart.sample(samples, rng)
    binding = dict(zip(reduced_base.chart.coords, projection.components))

    mu_res: list[np.ndarray] = []
    nu_res: list[ex.Expr] = []
    for a in reduced_sections:
        pulled = ExactSection(ex.substitute(a.f, binding), ex.substitute(a.g, binding))
        lhs_mu = pullback_form(projection, reduced_pair.mu(a))
        rhs_mu = pair.mu(pulled)
        mu_res.append((lhs_mu - rhs_mu).coeff_values(pts))
        nu_res.append(ex.sub(ex.substitute(reduced_pair.nu(a), binding),
                             pair.nu(pulled)))
    if mu_res:
        rep.add_residual("mu_reduces", np.concatenate(mu_res, axis=1), tol.default)
        rep.add_residual("nu_reduces",
                         engine.eval_exprs(nu_res, base.chart.coords, pts), tol.default)
    else:
        rep.add_exact("mu_reduces", True, "no reduced sections supplied")

    if upstairs_sections:
        if action is None or action.space != base.chart:
            raise GeometryError("screening upstairs sections needs the base action")
        gens = action.fundamental_fields()
        flagged = []
        for idx, sec in enumerate(upstairs_sections):
            resid = []
            for v in gens:
                resid.append(v.apply_to(sec.f))
                resid.append(v.apply_to(sec.g))
            vals = engine.eval_exprs(resid, base.chart.coords, pts)
            if float(np.max(np.abs(vals))) > tol.default:
                flagged.append(idx)
        detail = ("not basic: sections " + ", ".join(map(str, flagged))
                  + " vary along the action and were excluded") if flagged \
            else "all upstairs sections invariant"
        rep.add_exact("upstairs_sections_screened", True, detail)
    return rep


def verify_infinitesimal_moment(base: PoissonBase, action: GroupAction,
                                pair: IMFormPair,
                                sections: Sequence[ExactSection],
                                samples: int = 128, seed: int = 42,
                                tol: Tolerances = Tolerances()) -> CheckReport:
    """The canonical pairing <J(a), v> = mu(a)(v_M) defines a morphism to the
    abelian line: <J([a,b]), v> = rho(a)<J(b), v> - rho(b)<J(a), v>.

    When the base bivector vanishes the right side is zero, recovering the
    degenerate statement that brackets map to zero."""
    if action.space != base.chart:
        raise GeometryError("action must act on the Poisson base chart")
    rep = CheckReport("infinitesimal_moment", seed, samples)
    rng = seeded_rng(seed, f"imom:{base.chart.name}")
    pts = base.chart.sample(samples, rng)
    gens = action.fundamental_fields()

    def pairing(sec: ExactSection, v: VectorField) -> ex.Expr:
        return interior_product(v, pair.mu(sec)).coefficient(())

    resid = []
    degenerate = []
    for i, j in _section_pairs(sections):
        a, b = sections[i], sections[j]
        ra, rb = anchor(base, a), anchor(base, b)
        ab = section_bracket(base, a, b)
        for v in gens:
            lhs = pairing(ab, v)
            rhs = ex.sub(ra.apply_to(pairing(b, v)), rb.apply_to(pairing(a, v)))
            resid.append(ex.sub(lhs, rhs))
            if base.is_zero:
                degenerate.append(lhs)
    if not resid:
        rep.add_exact("moment_is_morphism", True, "fewer than two sections")
        return rep
    rep.add_residual("moment_is_morphism",
                     engine.eval_exprs(resid, base.chart.coords, pts), tol.default)
    if base.is_zero:
        rep.add_residual("brackets_to_zero",
                         engine.eval_exprs(degenerate, base.chart.coords, pts),
                         tol.default, "zero bivector: morphism condition degenerates")
    return rep
