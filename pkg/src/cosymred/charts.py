"""Charts, points, smooth maps, and vector fields.

A chart is a named list of coordinates on a single coordinate patch; periodic
coordinates have period 2*pi and are reduced into [0, 2*pi) on point
construction.  Smooth maps and vector fields carry their components as
expressions over the source chart's coordinates, so composition is exact
substitution and Jacobians are exact symbolic derivatives.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import engine
from . import expr as ex

TWO_PI = 2.0 * np.pi
_NAME_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")

DEFAULT_BOX = (-1.0, 1.0)


class GeometryError(Exception):
    """Structural error in charts, maps, forms, or presentations."""


def seeded_rng(seed: int, label: str = "") -> np.random.Generator:
    """Deterministic generator; the label decorrelates independent sweeps."""
    return np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(label.encode())])


@dataclass(frozen=True)
class Chart:
    """An ordered coordinate patch.

    box entries give the sampling interval per coordinate; periodic
    coordinates always sample over [0, 2*pi) regardless of box.
    """

    name: str
    coords: tuple[str, ...]
    periodic: frozenset[str] = frozenset()
    box: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if len(set(self.coords)) != len(self.coords):
            raise GeometryError(f"chart '{self.name}' repeats a coordinate")
        for c in self.coords:
            if not _NAME_RE.match(c):
                raise GeometryError(f"invalid coordinate name '{c}'")
            if c in ex.RESERVED_NAMES:
                raise GeometryError(f"coordinate name '{c}' is reserved")
        extra = self.periodic - set(self.coords)
        if extra:
            raise GeometryError(f"periodic coordinates {sorted(extra)} not in chart '{self.name}'")
        if not self.box:
            object.__setattr__(self, "box", tuple(DEFAULT_BOX for _ in self.coords))
        if len(self.box) != len(self.coords):
            raise GeometryError(f"chart '{self.name}': box does not match coordinates")
        for (lo, hi), c in zip(self.box, self.coords):
            if not (lo < hi):
                raise GeometryError(f"chart '{self.name}': empty box for '{c}'")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, coord: str) -> int:
        try:
            return self.coords.index(coord)
        except ValueError:
            raise GeometryError(f"no coordinate '{coord}' in chart '{self.name}'") from None

    def is_periodic(self, i: int) -> bool:
        return self.coords[i] in self.periodic

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points, uniform over the box (periodic coords over [0, 2*pi))."""
        cols = []
        for i, c in enumerate(self.coords):
            if c in self.periodic:
                cols.append(rng.uniform(0.0, TWO_PI, n))
            else:
                lo, hi = self.box[i]
                cols.append(rng.uniform(lo, hi, n))
        return np.column_stack(cols) if cols else np.zeros((n, 0))

    def parse(self, text: str) -> ex.Expr:
        return ex.parse(text, self.coords)

    def wrap_deltas(self, deltas: np.ndarray) -> np.ndarray:
        """Reduce coordinate differences mod 2*pi on periodic axes so that
        equality of angles is judged on the circle, not on the real line."""
        out = np.array(deltas, dtype=np.float64, copy=True)
        for i, c in enumerate(self.coords):
            if c in self.periodic:
                out[..., i] = (out[..., i] + np.pi) % TWO_PI - np.pi
        return out


def chart(name: str, coords: Sequence[str], periodic: Iterable[str] = (),
          box: Mapping[str, tuple[float, float]] | None = None) -> Chart:
    """Convenience constructor taking the box as a coord -> (lo, hi) mapping."""
    coords = tuple(coords)
    per = frozenset(periodic)
    if box:
        unknown = set(box) - set(coords)
        if unknown:
            raise GeometryError(f"box names {sorted(unknown)} not in chart '{name}'")
        full = tuple(tuple(box.get(c, DEFAULT_BOX)) for c in coords)
    else:
        full = ()
    return Chart(name, coords, per, full)


class Point:
    """A point of a chart; periodic values are reduced on construction."""

    __slots__ = ("chart", "values")

    def __init__(self, chart: Chart, values: Sequence[float]):
        vals = np.asarray(values, dtype=np.float64).reshape(-1)
        if vals.shape[0] != chart.dim:
            raise GeometryError(
                f"point has {vals.shape[0]} values for chart '{chart.name}' of dimension {chart.dim}"
            )
        vals = vals.copy()
        for i, c in enumerate(chart.coords):
            if c in chart.periodic:
                vals[i] = vals[i] % TWO_PI
        self.chart = chart
        self.values = vals

    def env(self) -> dict[str, float]:
        return dict(zip(self.chart.coords, self.values))

    def __repr__(self):
        inside = ", ".join(f"{c}={v:.6g}" for c, v in zip(self.chart.coords, self.values))
        return f"Point({self.chart.name}: {inside})"


def reduce_periodic(chart: Chart, pts: np.ndarray) -> np.ndarray:
    out = np.array(pts, dtype=np.float64, copy=True)
    for i, c in enumerate(chart.coords):
        if c in chart.periodic:
            out[..., i] = out[..., i] % TWO_PI
    return out


@dataclass(eq=False)
class SmoothMap:
    """Map between charts with expression components (one per target coord)."""

    source: Chart
    target: Chart
    components: tuple[ex.Expr, ...]
    name: str = ""
    _jac: tuple[tuple[ex.Expr, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.components = tuple(self.components)
        if len(self.components) != self.target.dim:
            raise GeometryError(
                f"map {self.name or '<anon>'}: {len(self.components)} components "
                f"for target of dimension {self.target.dim}"
            )
        allowed = set(self.source.coords)
        for comp in self.components:
            stray = ex.free_names(comp) - allowed
            if stray:
                raise GeometryError(
                    f"map {self.name or '<anon>'}: component uses {sorted(stray)} "
                    f"outside source chart '{self.source.name}'"
                )

    def jacobian_exprs(self) -> tuple[tuple[ex.Expr, ...], ...]:
        """Row i = gradient of component i over the source coordinates."""
        if self._jac is None:
            self._jac = tuple(
                tuple(ex.differentiate(comp, c) for c in self.source.coords)
                for comp in self.components
            )
        return self._jac

    def apply(self, p: Point) -> Point:
        if p.chart != self.source:
            raise GeometryError(
                f"point of chart '{p.chart.name}' fed to map from '{self.source.name}'"
            )
        env = p.env()
        return Point(self.target, [ex.evaluate(c, env) for c in self.components])

    def apply_many(self, pts: np.ndarray) -> np.ndarray:
        return engine.eval_exprs(self.components, self.source.coords, pts)

    def jacobian_many(self, pts: np.ndarray) -> np.ndarray:
        """Shape (npts, target_dim, source_dim)."""
        rows = self.jacobian_exprs()
        flat = [e for row in rows for e in row]
        vals = engine.eval_exprs(flat, self.source.coords, pts)
        return vals.reshape(pts.shape[0], self.target.dim, self.source.dim)

    def jacobian(self, p: Point) -> np.ndarray:
        return self.jacobian_many(p.values[None, :])[0]


def smooth_map(source: Chart, target: Chart, components: Sequence[str | ex.Expr],
               name: str = "") -> SmoothMap:
    comps = tuple(
        source.parse(c) if isinstance(c, str) else c for c in components
    )
    return SmoothMap(source, target, comps, name)


def identity_map(chart: Chart) -> SmoothMap:
    return SmoothMap(chart, chart, tuple(ex.Sym(c) for c in chart.coords), f"id_{chart.name}")


def compose(outer: SmoothMap, inner: SmoothMap) -> SmoothMap:
    """outer after inner (x -> outer(inner(x))), by exact substitution."""
    if inner.target.coords != outer.source.coords:
        raise GeometryError(
            f"cannot compose {outer.name or '<anon>'} after {inner.name or '<anon>'}: "
            f"charts '{inner.target.name}' vs '{outer.source.name}' differ"
        )
    binding = dict(zip(outer.source.coords, inner.components))
    comps = tuple(ex.substitute(c, binding) for c in outer.components)
    label = f"{outer.name or 'outer'}..{inner.name or 'inner'}"
    return SmoothMap(inner.source, outer.target, comps, label)


@dataclass(eq=False)
class VectorField:
    """Vector field on a chart, components over the chart coordinates."""

    chart: Chart
    components: tuple[ex.Expr, ...]
    name: str = ""

    def __post_init__(self):
        self.components = tuple(self.components)
        if len(self.components) != self.chart.dim:
            raise GeometryError(
                f"vector field {self.name or '<anon>'}: wrong number of components"
            )
        allowed = set(self.chart.coords)
        for comp in self.components:
            stray = ex.free_names(comp) - allowed
            if stray:
                raise GeometryError(
                    f"vector field {self.name or '<anon>'}: component uses {sorted(stray)}"
                )

    def at(self, p: Point) -> np.ndarray:
        if p.chart != self.chart:
            raise GeometryError(
                f"point of chart '{p.chart.name}' fed to field on '{self.chart.name}'"
            )
        env = p.env()
        return np.array([ex.evaluate(c, env) for c in self.components])

    def at_many(self, pts: np.ndarray) -> np.ndarray:
        return engine.eval_exprs(self.components, self.chart.coords, pts)

    def apply_to(self, f: ex.Expr) -> ex.Expr:
        """Directional derivative X(f)."""
        return ex.dot(self.components, ex.gradient(f, self.chart.coords))


def vector_field(chart: Chart, components: Sequence[str | ex.Expr], name: str = "") -> VectorField:
    comps = tuple(chart.parse(c) if isinstance(c, str) else c for c in components)
    return VectorField(chart, comps, name)


def coordinate_field(chart: Chart, coord: str) -> VectorField:
    i = chart.index(coord)
    comps = tuple(ex.ONE if j == i else ex.ZERO for j in range(chart.dim))
    return VectorField(chart, comps, f"d/d{coord}")


def commutator(x: VectorField, y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    if x.chart is not y.chart and x.chart != y.chart:
        raise GeometryError("commutator needs fields on the same chart")
    comps = tuple(
        ex.sub(x.apply_to(yc), y.apply_to(xc))
        for xc, yc in zip(x.components, y.components)
    )
    return VectorField(x.chart, comps, f"[{x.name},{y.name}]")


def pushforward(f: SmoothMap, x: VectorField, p: Point) -> np.ndarray:
    """df_p(X_p), as a tangent vector at f(p) in target coordinates."""
    return f.jacobian(p) @ x.at(p)


def jacobian(f: SmoothMap, p: Point) -> np.ndarray:
    return f.jacobian(p)
