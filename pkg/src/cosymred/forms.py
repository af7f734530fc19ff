"""Differential forms with expression coefficients.

A k-form is stored sparsely on strictly increasing coordinate multi-indices;
antisymmetry is therefore exact by storage.  Operations:

* wedge product, exterior derivative, interior product, Lie derivative
  (Cartan's formula), and pullback along a smooth map, all exact symbolic;
* batched coefficient evaluation through the engine;
* a small pointwise-numeric algebra (`minor_matrix`, `pullback_values`) used
  when a form is known only by sampled coefficients, e.g. solved reduced
  forms on a quotient chart.

Degree conventions: 0-forms are scalar expressions with the empty index.
`exterior_derivative` refuses top-degree input and `interior_product`
refuses 0-forms; the Lie derivative handles those edge degrees internally
(d of a top form and contraction of a 0-form both vanish).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import engine
from . import expr as ex
from .charts import Chart, GeometryError, Point, SmoothMap, VectorField


@dataclass(eq=False)
class DifferentialForm:
    chart: Chart
    degree: int
    coeffs: dict[tuple[int, ...], ex.Expr] = field(default_factory=dict)

    def __post_init__(self):
        if not (0 <= self.degree <= self.chart.dim):
            raise GeometryError(
                f"degree {self.degree} out of range on chart '{self.chart.name}'"
            )
        clean: dict[tuple[int, ...], ex.Expr] = {}
        allowed = set(self.chart.coords)
        for idx, coeff in self.coeffs.items():
            idx = tuple(idx)
            if len(idx) != self.degree:
                raise GeometryError(f"index {idx} does not match degree {self.degree}")
            if list(idx) != sorted(set(idx)):
                raise GeometryError(f"index {idx} must be strictly increasing")
            if idx and not (0 <= idx[0] and idx[-1] < self.chart.dim):
                raise GeometryError(f"index {idx} out of range")
            stray = ex.free_names(coeff) - allowed
            if stray:
                raise GeometryError(f"coefficient at {idx} uses {sorted(stray)}")
            if not (isinstance(coeff, ex.Num) and coeff.value == 0.0):
                clean[idx] = coeff
        self.coeffs = clean

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def indices(self) -> list[tuple[int, ...]]:
        """All increasing multi-indices of this degree, in lexicographic order."""
        return list(combinations(range(self.chart.dim), self.degree))

    def coefficient(self, idx: Sequence[int]) -> ex.Expr:
        return self.coeffs.get(tuple(idx), ex.ZERO)

    def coeff_values(self, pts: np.ndarray) -> np.ndarray:
        """Shape (npts, n_indices), columns in `indices()` order."""
        exprs = [self.coefficient(i) for i in self.indices()]
        return engine.eval_exprs(exprs, self.chart.coords, pts)

    def evaluate(self, p: Point, vectors: Sequence[np.ndarray]) -> float:
        """Value on `degree` many tangent vectors at p."""
        if len(vectors) != self.degree:
            raise GeometryError(f"need {self.degree} vectors, got {len(vectors)}")
        env = p.env()
        mat = np.column_stack([np.asarray(v, dtype=np.float64) for v in vectors]) \
            if vectors else np.zeros((self.chart.dim, 0))
        total = 0.0
        for idx, coeff in self.coeffs.items():
            c = ex.evaluate(coeff, env)
            minor = mat[list(idx), :] if idx else np.eye(0)
            total += c * (np.linalg.det(minor) if idx else 1.0)
        return float(total)

    def map_coeffs(self, fn) -> "DifferentialForm":
        return DifferentialForm(
            self.chart, self.degree, {i: fn(c) for i, c in self.coeffs.items()}
        )

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        _check_same(self, other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = ex.add(out.get(idx, ex.ZERO), c)
        return DifferentialForm(self.chart, self.degree, out)

    def __sub__(self, other: "DifferentialForm") -> "DifferentialForm":
        _check_same(self, other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = ex.sub(out.get(idx, ex.ZERO), c)
        return DifferentialForm(self.chart, self.degree, out)

    def __neg__(self) -> "DifferentialForm":
        return self.map_coeffs(ex.neg)

    def scale(self, factor: ex.ExprLike) -> "DifferentialForm":
        factor = ex.as_expr(factor)
        return self.map_coeffs(lambda c: ex.mul(factor, c))

    def __repr__(self):
        if self.is_zero:
            return f"Form({self.chart.name}, deg {self.degree}, 0)"
        parts = []
        for idx in self.indices():
            if idx in self.coeffs:
                basis = "^".join(f"d{self.chart.coords[i]}" for i in idx) or "1"
                parts.append(f"({ex.to_text(self.coeffs[idx])}) {basis}")
        return f"Form({self.chart.name}: " + " + ".join(parts) + ")"


def _check_same(a: DifferentialForm, b: DifferentialForm):
    if a.chart != b.chart or a.degree != b.degree:
        raise GeometryError("forms live on different charts or degrees")


def zero_form(chart: Chart, degree: int) -> DifferentialForm:
    return DifferentialForm(chart, degree, {})


def form_from_strings(chart: Chart, degree: int,
                      entries: Mapping[str, str | ex.Expr]) -> DifferentialForm:
    """Build from manifest-style keys: "dq^dp" -> coefficient text.

    A 0-form uses the single key "1".
    """
    coeffs: dict[tuple[int, ...], ex.Expr] = {}
    for key, text in entries.items():
        if degree == 0:
            if key.strip() != "1":
                raise GeometryError(f"0-form entries must use key '1', got '{key}'")
            idx: tuple[int, ...] = ()
        else:
            names = [part.strip() for part in key.split("^")]
            if len(names) != degree:
                raise GeometryError(f"key '{key}' does not have degree {degree}")
            raw = []
            for nm in names:
                if not nm.startswith("d"):
                    raise GeometryError(f"basis factor '{nm}' must look like d<coord>")
                raw.append(chart.index(nm[1:]))
            idx = tuple(raw)
            if list(idx) != sorted(set(idx)):
                raise GeometryError(f"key '{key}' must use strictly increasing coordinates")
        coeff = chart.parse(text) if isinstance(text, str) else text
        if idx in coeffs:
            raise GeometryError(f"duplicate key '{key}'")
        coeffs[idx] = coeff
    return DifferentialForm(chart, degree, coeffs)


def one_form(chart: Chart, comps: Sequence[str | ex.ExprLike]) -> DifferentialForm:
    coeffs = {(i,): chart.parse(c) if isinstance(c, str) else ex.as_expr(c)
              for i, c in enumerate(comps)}
    return DifferentialForm(chart, 1, coeffs)


def d_coord(chart: Chart, coord: str) -> DifferentialForm:
    return DifferentialForm(chart, 1, {(chart.index(coord),): ex.ONE})


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted index for dx_left ^ dx_right; 0 on repeats."""
    if set(left) & set(right):
        return 0, ()
    merged = left + right
    inversions = 0
    for i, a in enumerate(merged):
        for b in merged[i + 1:]:
            if a > b:
                inversions += 1
    return (-1) ** inversions, tuple(sorted(merged))


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    if a.chart != b.chart:
        raise GeometryError("wedge needs forms on the same chart")
    deg = a.degree + b.degree
    if deg > a.chart.dim:
        raise GeometryError(
            f"wedge degree {deg} exceeds dimension of chart '{a.chart.name}'"
        )
    out: dict[tuple[int, ...], list[ex.Expr]] = {}
    for ia, ca in a.coeffs.items():
        for ib, cb in b.coeffs.items():
            sign, idx = _merge_sign(ia, ib)
            if sign == 0:
                continue
            term = ex.mul(ca, cb)
            if sign < 0:
                term = ex.neg(term)
            out.setdefault(idx, []).append(term)
    coeffs = {idx: ex.expr_sum(terms) for idx, terms in out.items()}
    return DifferentialForm(a.chart, deg, coeffs)


def wedge_power(a: DifferentialForm, n: int) -> DifferentialForm:
    if n < 1:
        raise GeometryError("wedge power needs n >= 1")
    out = a
    for _ in range(n - 1):
        out = wedge(out, a)
    return out


def exterior_derivative(a: DifferentialForm) -> DifferentialForm:
    if a.degree == a.chart.dim:
        raise GeometryError(
            f"exterior derivative of a top-degree form on chart '{a.chart.name}'"
        )
    return _d_total(a)


def _d_total(a: DifferentialForm) -> DifferentialForm:
    """d, with d(top degree) = 0; used internally by the Lie derivative."""
    if a.degree == a.chart.dim:
        return zero_form(a.chart, a.degree)  # promoted degree would overflow
    out: dict[tuple[int, ...], list[ex.Expr]] = {}
    for idx, coeff in a.coeffs.items():
        for j, cname in enumerate(a.chart.coords):
            if j in idx:
                continue
            dj = ex.differentiate(coeff, cname)
            if isinstance(dj, ex.Num) and dj.value == 0.0:
                continue
            pos = sum(1 for i in idx if i < j)
            term = dj if pos % 2 == 0 else ex.neg(dj)
            key = tuple(sorted(idx + (j,)))
            out.setdefault(key, []).append(term)
    coeffs = {idx: ex.expr_sum(terms) for idx, terms in out.items()}
    return DifferentialForm(a.chart, a.degree + 1, coeffs)


def interior_product(x: VectorField, a: DifferentialForm) -> DifferentialForm:
    if a.degree == 0:
        raise GeometryError("interior product with a 0-form")
    if x.chart != a.chart:
        raise GeometryError("interior product needs matching charts")
    return _interior_total(x, a)


def _interior_total(x: VectorField, a: DifferentialForm) -> DifferentialForm:
    if a.degree == 0:
        return zero_form(a.chart, 0)
    out: dict[tuple[int, ...], list[ex.Expr]] = {}
    for idx, coeff in a.coeffs.items():
        for m, i in enumerate(idx):
            comp = x.components[i]
            if isinstance(comp, ex.Num) and comp.value == 0.0:
                continue
            term = ex.mul(comp, coeff)
            if m % 2 == 1:
                term = ex.neg(term)
            key = idx[:m] + idx[m + 1:]
            out.setdefault(key, []).append(term)
    coeffs = {idx: ex.expr_sum(terms) for idx, terms in out.items()}
    return DifferentialForm(a.chart, a.degree - 1, coeffs)


def lie_derivative(x: VectorField, a: DifferentialForm) -> DifferentialForm:
    """Cartan's formula L_X = d iota_X + iota_X d, total on all degrees."""
    if x.chart != a.chart:
        raise GeometryError("Lie derivative needs matching charts")
    first = _d_total(_interior_total(x, a)) if a.degree > 0 else zero_form(a.chart, 0)
    second = _interior_total(x, _d_total(a))
    return first + second


def pullback_form(f: SmoothMap, a: DifferentialForm) -> DifferentialForm:
    """Pullback along f: substitute into coefficients and wedge differentials."""
    if a.chart != f.target:
        raise GeometryError(
            f"form lives on '{a.chart.name}', not the target of the map ('{f.target.name}')"
        )
    binding = dict(zip(f.target.coords, f.components))
    if a.degree == 0:
        return DifferentialForm(
            f.source, 0,
            {(): ex.substitute(a.coefficient(()), binding)} if not a.is_zero else {},
        )
    if a.degree > f.source.dim:
        raise GeometryError(
            f"pullback of a degree-{a.degree} form to chart "
            f"'{f.source.name}' of dimension {f.source.dim}"
        )
    jac = f.jacobian_exprs()
    differentials = [one_form(f.source, jac[i]) for i in range(f.target.dim)]
    total = zero_form(f.source, a.degree)
    for idx, coeff in a.coeffs.items():
        pulled = ex.substitute(coeff, binding)
        block: DifferentialForm | None = None
        for i in idx:
            block = differentials[i] if block is None else wedge(block, differentials[i])
        assert block is not None
        total = total + block.scale(pulled)
    return total


# ---------------------------------------------------------------------------
# pointwise-numeric algebra for sampled coefficient arrays

def comb_list(dim: int, k: int) -> list[tuple[int, ...]]:
    return list(combinations(range(dim), k))


def minor_matrix(jac: np.ndarray, k: int, source_dim: int, target_dim: int) -> np.ndarray:
    """All k x k minors of each Jacobian in a batch.

    jac has shape (npts, target_dim, source_dim); entry [p, a, b] of the
    result is det(jac[p][rows, cols]) for rows = target combination a and
    cols = source combination b, so pullback of sampled coefficients is
    values_source = values_target @ minors (per point).
    """
    rows = comb_list(target_dim, k)
    cols = comb_list(source_dim, k)
    npts = jac.shape[0]
    out = np.empty((npts, len(rows), len(cols)))
    for a, ridx in enumerate(rows):
        sub = jac[:, ridx, :]
        for b, cidx in enumerate(cols):
            out[:, a, b] = np.linalg.det(sub[:, :, cidx]) if k > 0 else 1.0
    return out


def pullback_values(coeff_vals: np.ndarray, jac: np.ndarray, k: int,
                    source_dim: int, target_dim: int) -> np.ndarray:
    """Numeric pullback of sampled coefficients (see minor_matrix)."""
    minors = minor_matrix(jac, k, source_dim, target_dim)
    return np.einsum("pa,pab->pb", coeff_vals, minors)


def two_form_matrices(form: DifferentialForm, pts: np.ndarray) -> np.ndarray:
    """Evaluate a 2-form as full antisymmetric matrices, shape (npts, d, d)."""
    if form.degree != 2:
        raise GeometryError("two_form_matrices needs a 2-form")
    d = form.chart.dim
    mats = np.zeros((pts.shape[0], d, d))
    for (i, j), c in form.coeffs.items():
        vals = engine.eval_expr(c, form.chart.coords, pts)
        mats[:, i, j] = vals
        mats[:, j, i] = -vals
    return mats


def two_form_dets(form: DifferentialForm, pts: np.ndarray) -> np.ndarray:
    return np.linalg.det(two_form_matrices(form, pts))


def values_as_matrix(coeff_vals: np.ndarray, dim: int) -> np.ndarray:
    """Sampled 2-form coefficients -> full antisymmetric matrices (npts, dim, dim)."""
    pairs = comb_list(dim, 2)
    npts = coeff_vals.shape[0]
    mats = np.zeros((npts, dim, dim))
    for col, (i, j) in enumerate(pairs):
        mats[:, i, j] = coeff_vals[:, col]
        mats[:, j, i] = -coeff_vals[:, col]
    return mats


def wedge_values(a_vals: np.ndarray, ka: int, b_vals: np.ndarray, kb: int,
                 dim: int) -> np.ndarray:
    """Pointwise wedge of sampled coefficient arrays."""
    a_idx = comb_list(dim, ka)
    b_idx = comb_list(dim, kb)
    out_idx = {idx: n for n, idx in enumerate(comb_list(dim, ka + kb))}
    npts = a_vals.shape[0]
    out = np.zeros((npts, len(out_idx)))
    for pa, ia in enumerate(a_idx):
        for pb, ib in enumerate(b_idx):
            sign, merged = _merge_sign(ia, ib)
            if sign == 0:
                continue
            out[:, out_idx[merged]] += sign * a_vals[:, pa] * b_vals[:, pb]
    return out
