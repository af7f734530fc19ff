"""Cosymplectic structures: a closed 2-form and a closed 1-form on an
odd-dimensional chart whose combined top power is a volume form.

Central object is the pointwise linear isomorphism

    flat(X) = iota_X omega + eta(X) eta,

represented by the matrix F = A^T + eta eta^T where A[i][j] = omega(d_i, d_j).
The distinguished vector field `reeb` is flat^{-1}(eta); Hamiltonian fields
solve flat(X_f) = df - reeb(f) eta, which forces eta(X_f) = 0.  The bracket
convention is {f, g} = omega(X_f, X_g), so {q, p} = +1 for omega = dq^dp
(note {f, .} = -X_f under this convention; the algebroid module uses the
Poisson-side field {f, .} and documents the sign relation).

Fields and brackets are produced both symbolically (Cramer's rule on F, so
bracket-of-bracket identities can be evaluated exactly) and numerically
(batched solves); verifiers cross-check the two routes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import engine
from . import expr as ex
from .actions import GroupAction
from .charts import Chart, GeometryError, Point, SmoothMap, VectorField, seeded_rng
from .forms import (
    DifferentialForm,
    d_coord,
    exterior_derivative,
    form_from_strings,
    interior_product,
    lie_derivative,
    one_form,
    pullback_form,
    two_form_matrices,
    wedge,
    wedge_power,
    zero_form,
)
from .report import CheckReport, Tolerances


class TransversalityError(GeometryError):
    """A supplied vector field fails to be transverse to the hypersurface."""

    def __init__(self, message: str, point: np.ndarray):
        super().__init__(message)
        self.point = point


def sym_det(m: Sequence[Sequence[ex.Expr]]) -> ex.Expr:
    """Determinant by cofactor expansion with zero pruning."""
    n = len(m)
    if n == 0:
        return ex.ONE
    if n == 1:
        return m[0][0]
    terms = []
    for r in range(n):
        entry = m[r][0]
        if isinstance(entry, ex.Num) and entry.value == 0.0:
            continue
        sub = [[m[i][j] for j in range(1, n)] for i in range(n) if i != r]
        cof = ex.mul(entry, sym_det(sub))
        terms.append(cof if r % 2 == 0 else ex.neg(cof))
    return ex.expr_sum(terms)


def sym_solve(m: Sequence[Sequence[ex.Expr]], b: Sequence[ex.Expr]) -> list[ex.Expr]:
    """Cramer's rule; raises on a structurally zero determinant."""
    n = len(m)
    det = sym_det(m)
    if isinstance(det, ex.Num) and det.value == 0.0:
        raise GeometryError("matrix is symbolically singular")
    out = []
    for k in range(n):
        mk = [[b[i] if j == k else m[i][j] for j in range(n)] for i in range(n)]
        out.append(ex.div(sym_det(mk), det))
    return out


@dataclass(eq=False)
class CosymplecticStructure:
    chart: Chart
    omega: DifferentialForm
    eta: DifferentialForm
    name: str = ""
    _flat: tuple[tuple[ex.Expr, ...], ...] | None = field(default=None, repr=False)
    _reeb: VectorField | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.omega.chart != self.chart or self.omega.degree != 2:
            raise GeometryError("omega must be a 2-form on the structure chart")
        if self.eta.chart != self.chart or self.eta.degree != 1:
            raise GeometryError("eta must be a 1-form on the structure chart")

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def n(self) -> int:
        """Half the leaf dimension; the chart should have dimension 2n + 1."""
        return (self.chart.dim - 1) // 2

    def omega_matrix_exprs(self) -> list[list[ex.Expr]]:
        d = self.dim
        a = [[ex.ZERO] * d for _ in range(d)]
        for (i, j), c in self.omega.coeffs.items():
            a[i][j] = c
            a[j][i] = ex.neg(c)
        return a

    def eta_comps(self) -> list[ex.Expr]:
        return [self.eta.coefficient((i,)) for i in range(self.dim)]

    def flat_exprs(self) -> tuple[tuple[ex.Expr, ...], ...]:
        """F[j][i] = omega(d_i, d_j) + eta_i eta_j, so that F X = flat(X)."""
        if self._flat is None:
            a = self.omega_matrix_exprs()
            eta = self.eta_comps()
            self._flat = tuple(
                tuple(ex.add(a[i][j], ex.mul(eta[i], eta[j])) for i in range(self.dim))
                for j in range(self.dim)
            )
        return self._flat

    def flat_matrices(self, pts: np.ndarray) -> np.ndarray:
        rows = self.flat_exprs()
        flat = [e for row in rows for e in row]
        vals = engine.eval_exprs(flat, self.chart.coords, pts)
        return vals.reshape(pts.shape[0], self.dim, self.dim)

    def omega_matrices(self, pts: np.ndarray) -> np.ndarray:
        a = self.omega_matrix_exprs()
        flat = [e for row in a for e in row]
        vals = engine.eval_exprs(flat, self.chart.coords, pts)
        return vals.reshape(pts.shape[0], self.dim, self.dim)


def cosymplectic(chart: Chart, omega: DifferentialForm | dict,
                 eta: DifferentialForm | dict, name: str = "") -> CosymplecticStructure:
    """Coefficient dicts are accepted in place of forms, keyed like
    form_from_strings ("dq^dp" for the 2-form, "dtheta" for the 1-form)."""
    if isinstance(omega, dict):
        omega = form_from_strings(chart, 2, omega)
    if isinstance(eta, dict):
        eta = form_from_strings(chart, 1, eta)
    return CosymplecticStructure(chart, omega, eta, name)


@dataclass
class FlatMatrix:
    """flat at a single point, with its conditioning."""

    point: Point
    matrix: np.ndarray
    det: float
    cond: float


def flat_matrix(s: CosymplecticStructure, p: Point) -> FlatMatrix:
    m = s.flat_matrices(p.values[None, :])[0]
    return FlatMatrix(p, m, float(np.linalg.det(m)), float(np.linalg.cond(m)))


def flat_apply(s: CosymplecticStructure, x: VectorField) -> DifferentialForm:
    """The 1-form flat(X), symbolically."""
    if x.chart != s.chart:
        raise GeometryError("vector field lives on a different chart")
    pairing = interior_product(x, s.omega)
    scale = ex.dot(x.components, s.eta_comps())
    return pairing + s.eta.scale(scale)


def flat_inverse(s: CosymplecticStructure, alpha: DifferentialForm) -> VectorField:
    """Solve flat(X) = alpha symbolically (Cramer's rule)."""
    if alpha.chart != s.chart or alpha.degree != 1:
        raise GeometryError("flat_inverse needs a 1-form on the structure chart")
    b = [alpha.coefficient((i,)) for i in range(s.dim)]
    comps = sym_solve([list(r) for r in s.flat_exprs()], b)
    return VectorField(s.chart, tuple(comps), "flat_inv")


def flat_solve_values(s: CosymplecticStructure, alpha_vals: np.ndarray,
                      pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Batched numeric solve of flat(X) = alpha; returns (X values, max residual)."""
    mats = s.flat_matrices(pts)
    try:
        x = np.linalg.solve(mats, alpha_vals[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"flat map is singular at a sample point: {exc}") from None
    resid = np.einsum("pij,pj->pi", mats, x) - alpha_vals
    return x, float(np.max(np.abs(resid)))


def reeb(s: CosymplecticStructure) -> VectorField:
    """flat^{-1}(eta): the unique field with iota omega = 0, eta-value 1."""
    if s._reeb is None:
        comps = sym_solve([list(r) for r in s.flat_exprs()], s.eta_comps())
        s._reeb = VectorField(s.chart, tuple(comps), "reeb")
    return s._reeb


def hamiltonian_vf(s: CosymplecticStructure, f: ex.Expr) -> VectorField:
    """Solve flat(X_f) = df - reeb(f) eta symbolically."""
    xi = reeb(s)
    df = ex.gradient(f, s.chart.coords)
    xif = xi.apply_to(f)
    eta = s.eta_comps()
    rhs = [ex.sub(df[i], ex.mul(xif, eta[i])) for i in range(s.dim)]
    comps = sym_solve([list(r) for r in s.flat_exprs()], rhs)
    return VectorField(s.chart, tuple(comps), "ham")


def hamiltonian_rhs(s: CosymplecticStructure, f: ex.Expr) -> DifferentialForm:
    """The 1-form df - reeb(f) eta that a Hamiltonian field must flat to."""
    xi = reeb(s)
    df = one_form(s.chart, ex.gradient(f, s.chart.coords))
    return df - s.eta.scale(xi.apply_to(f))


def poisson_bracket(s: CosymplecticStructure, f: ex.Expr, g: ex.Expr) -> ex.Expr:
    """{f, g} = omega(X_f, X_g)."""
    xf = hamiltonian_vf(s, f)
    xg = hamiltonian_vf(s, g)
    terms = []
    for (i, j), c in s.omega.coeffs.items():
        block = ex.sub(
            ex.mul(xf.components[i], xg.components[j]),
            ex.mul(xf.components[j], xg.components[i]),
        )
        terms.append(ex.mul(c, block))
    return ex.expr_sum(terms)


def volume_form(s: CosymplecticStructure) -> DifferentialForm:
    """omega^n wedge eta (just eta when the chart is 1-dimensional)."""
    if s.n == 0:
        return s.eta
    return wedge(wedge_power(s.omega, s.n), s.eta)


def verify_cosymplectic(s: CosymplecticStructure, samples: int = 128, seed: int = 42,
                        tol: Tolerances = Tolerances()) -> CheckReport:
    """Odd dimension, closedness of both forms, volume nonvanishing, and
    invertibility of the flat map at seeded samples."""
    rep = CheckReport(f"cosymplectic:{s.name or s.chart.name}", seed, samples)
    rng = seeded_rng(seed, f"cosym:{s.chart.name}")
    pts = s.chart.sample(samples, rng)

    odd = s.dim % 2 == 1
    rep.add_exact("odd_dimension", odd,
                  f"chart dimension {s.dim} (needs 2n+1)")

    domega = exterior_derivative(s.omega) if s.omega.degree < s.dim else None
    if domega is not None:
        rep.add_residual("omega_closed", domega.coeff_values(pts), tol.exact)
    else:
        rep.add_exact("omega_closed", True, "top degree, d vanishes identically")
    deta = exterior_derivative(s.eta)
    rep.add_residual("eta_closed", deta.coeff_values(pts), tol.exact)

    if not odd:
        return rep

    vol = volume_form(s)
    top = vol.coefficient(tuple(range(s.dim)))
    vol_vals = engine.eval_expr(top, s.chart.coords, pts)
    rep.add_floor("volume_nonvanishing", vol_vals, tol.floor,
                  "top coefficient of omega^n wedge eta")

    mats = s.flat_matrices(pts)
    dets = np.linalg.det(mats)
    conds = np.linalg.cond(mats)
    rep.add_floor("flat_invertible", dets, tol.floor,
                  f"max condition number {float(np.max(conds)):.3e}")
    return rep


def verify_reeb(s: CosymplecticStructure, samples: int = 128, seed: int = 42,
                tol: Tolerances = Tolerances()) -> CheckReport:
    """iota_reeb omega = 0 and eta(reeb) = 1 at seeded samples, plus agreement
    of the symbolic field with the pointwise numeric solve."""
    rep = CheckReport(f"reeb:{s.name or s.chart.name}", seed, samples)
    rng = seeded_rng(seed, f"reeb:{s.chart.name}")
    pts = s.chart.sample(samples, rng)
    xi = reeb(s)

    contraction = interior_product(xi, s.omega)
    rep.add_residual("reeb_flattens_omega", contraction.coeff_values(pts), tol.solve)
    pairing = ex.dot(xi.components, s.eta_comps())
    vals = engine.eval_expr(pairing, s.chart.coords, pts)
    rep.add_residual("reeb_eta_one", vals - 1.0, tol.solve)

    eta_vals = s.eta.coeff_values(pts)
    numeric, _ = flat_solve_values(s, eta_vals, pts)
    sym_vals = xi.at_many(pts)
    rep.add_residual("reeb_matches_numeric_solve", sym_vals - numeric, tol.solve)
    return rep


def leaf_distribution(s: CosymplecticStructure, pts: np.ndarray,
                      tol: Tolerances = Tolerances()) -> tuple[np.ndarray, CheckReport]:
    """Pointwise basis of ker eta (shape (npts, dim, dim-1)) together with a
    report that eta vanishes on it and omega restricts nondegenerately."""
    rep = CheckReport(f"leaf_distribution:{s.name or s.chart.name}", 0, pts.shape[0])
    d = s.dim
    eta_vals = s.eta.coeff_values(pts)
    pivots = np.argmax(np.abs(eta_vals), axis=1)
    pivot_vals = eta_vals[np.arange(len(pts)), pivots]
    rep.add_floor("eta_nonvanishing", pivot_vals, tol.floor,
                  "largest eta component used as pivot")
    basis = np.zeros((pts.shape[0], d, d - 1))
    for p in range(pts.shape[0]):
        m = pivots[p]
        others = [i for i in range(d) if i != m]
        for col, i in enumerate(others):
            basis[p, i, col] = 1.0
            if pivot_vals[p] != 0.0:
                basis[p, m, col] = -eta_vals[p, i] / pivot_vals[p]
    pairing = np.einsum("pic,pij,pjd->pcd", basis, s.omega_matrices(pts), basis)
    dets = np.linalg.det(pairing)
    rep.add_floor("leaf_symplectic", dets, tol.floor,
                  "det of omega restricted to ker eta")
    resid = np.einsum("pi,pic->pc", eta_vals, basis)
    rep.add_residual("eta_annihilates_basis", resid, tol.exact)
    return basis, rep


def from_symplectic_hypersurface(omega_ambient: DifferentialForm, incl: SmoothMap,
                                 transverse: VectorField, samples: int = 128,
                                 seed: int = 42, tol: Tolerances = Tolerances()
                                 ) -> tuple[CosymplecticStructure, CheckReport]:
    """Induced structure (i* omega, i* iota_X omega) on a hypersurface.

    Preconditions checked here: codimension one, ambient form closed and
    nondegenerate at samples, the field preserves the form (L_X omega = 0),
    and X is transverse to the image at sampled points.  Transversality
    failure raises TransversalityError naming the offending sample.
    """
    ambient = incl.target
    surface = incl.source
    if omega_ambient.chart != ambient or omega_ambient.degree != 2:
        raise GeometryError("ambient form must be a 2-form on the inclusion target")
    if transverse.chart != ambient:
        raise GeometryError("transverse field must live on the ambient chart")
    if surface.dim != ambient.dim - 1:
        raise GeometryError(
            f"hypersurface must have dimension {ambient.dim - 1}, got {surface.dim}"
        )
    rep = CheckReport("hypersurface_construction", seed, samples)
    rng = seeded_rng(seed, f"hyp:{surface.name}")
    spts = surface.sample(samples, rng)
    apts = incl.apply_many(spts)

    rep.add_exact("codimension_one", True, f"{surface.dim} inside {ambient.dim}")
    dom = exterior_derivative(omega_ambient)
    rep.add_residual("ambient_closed", dom.coeff_values(apts), tol.exact)

    amb_struct_mats = two_form_matrices(omega_ambient, apts)
    rep.add_floor("ambient_nondegenerate", np.linalg.det(amb_struct_mats), tol.floor)

    inv = lie_derivative(transverse, omega_ambient)
    rep.add_residual("field_preserves_form", inv.coeff_values(apts), tol.exact)

    jac = incl.jacobian_many(spts)
    xvals = transverse.at_many(apts)
    frames = np.concatenate([jac, xvals[:, :, None]], axis=2)
    dets = np.linalg.det(frames)
    bad = np.flatnonzero(np.abs(dets) <= tol.floor)
    if bad.size:
        i = int(bad[0])
        raise TransversalityError(
            f"field is tangent to the hypersurface at sample {i} "
            f"(frame determinant {dets[i]:.3e})",
            spts[i],
        )
    rep.add_floor("transversality", dets, tol.floor,
                  "det of [inclusion differential | X]")

    omega_ind = pullback_form(incl, omega_ambient)
    eta_ind = pullback_form(incl, interior_product(transverse, omega_ambient))
    struct = CosymplecticStructure(surface, omega_ind, eta_ind,
                                   f"{surface.name}_induced")
    return struct, rep


@dataclass(eq=False)
class Symplectization:
    """Product with a line carrying omega + dt wedge eta, which is symplectic
    exactly when the base is cosymplectic."""

    base: CosymplecticStructure
    chart: Chart
    form: DifferentialForm
    projection: SmoothMap
    t_coord: str


def symplectization(s: CosymplecticStructure) -> Symplectization:
    for candidate in ("t", "r", "u", "tau", "t_line"):
        if candidate not in s.chart.coords and candidate not in ex.RESERVED_NAMES:
            t_name = candidate
            break
    else:
        raise GeometryError("no free name for the line coordinate")
    total = Chart(
        f"{s.chart.name}_x_line",
        s.chart.coords + (t_name,),
        s.chart.periodic,
        s.chart.box + ((-1.0, 1.0),),
    )
    proj = SmoothMap(total, s.chart, tuple(ex.Sym(c) for c in s.chart.coords), "proj")
    omega_tilde = pullback_form(proj, s.omega) + wedge(d_coord(total, t_name),
                                                       pullback_form(proj, s.eta))
    return Symplectization(s, total, omega_tilde, proj, t_name)


def verify_symplectization(sz: Symplectization, samples: int = 128, seed: int = 42,
                           tol: Tolerances = Tolerances()) -> CheckReport:
    """The product form is closed and nondegenerate at seeded samples."""
    rep = CheckReport(f"symplectization:{sz.base.name or sz.base.chart.name}", seed, samples)
    rng = seeded_rng(seed, f"symp:{sz.chart.name}")
    pts = sz.chart.sample(samples, rng)
    if sz.form.degree < sz.chart.dim:
        dom = exterior_derivative(sz.form)
        rep.add_residual("product_form_closed", dom.coeff_values(pts), tol.exact)
    mats = two_form_matrices(sz.form, pts)
    rep.add_floor("product_form_nondegenerate", np.linalg.det(mats), tol.floor)
    return rep


def average_one_form(action: GroupAction, form: DifferentialForm,
                     order: int = 64) -> DifferentialForm:
    """Average the pullbacks of a 1-form over a torus action.

    Uses the order-point trapezoidal rule per circle factor (exact for
    trigonometric polynomials of degree < order).  The input need not be
    closed or invariant; averaging commutes with d, so closedness of the
    output is what downstream checks verify.  Raises for group models with
    translation factors, where no normalized average exists.
    """
    if form.chart != action.space or form.degree != 1:
        raise GeometryError("averaging needs a 1-form on the action's chart")
    if action.model.translations:
        raise GeometryError(
            "averaging requires a compact group: model has "
            f"{action.model.translations} translation factor(s)"
        )
    if order < 1:
        raise GeometryError("quadrature order must be positive")
    b = action.model.torus
    nodes = [2.0 * np.pi * j / order for j in range(order)]
    grids = [nodes] * b
    terms: list[DifferentialForm] = []
    weight = 1.0 / float(order**b)

    def rec(prefix: list[float]):
        if len(prefix) == b:
            phi = action.map_for(np.asarray(prefix))
            terms.append(pullback_form(phi, form))
            return
        for v in grids[len(prefix)]:
            rec(prefix + [v])

    rec([])
    coeffs: dict[tuple[int, ...], ex.Expr] = {}
    for idx in form.indices():
        parts = [t.coefficient(idx) for t in terms]
        coeffs[idx] = ex.mul(ex.Num(weight), ex.expr_sum(parts))
    return DifferentialForm(form.chart, 1, coeffs)
