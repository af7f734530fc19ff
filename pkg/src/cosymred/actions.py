"""Actions of abelian groups R^a x T^b given by explicit coordinate formulas.

The action is presented as expressions in the group parameters and the chart
coordinates; parameter value 0 is the identity element.  Translation
parameters range over the sampling box, torus parameters over [0, 2*pi).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .charts import Chart, GeometryError, SmoothMap, VectorField, TWO_PI


@dataclass(frozen=True)
class GroupModel:
    """Abelian model group: `translations` copies of R times `torus` circles."""

    translations: int = 0
    torus: int = 0

    def __post_init__(self):
        if self.translations < 0 or self.torus < 0:
            raise GeometryError("group factor counts must be nonnegative")
        if self.dim == 0:
            raise GeometryError("group model must have at least one factor")

    @property
    def dim(self) -> int:
        return self.translations + self.torus


@dataclass(eq=False)
class GroupAction:
    """phi: G x Q -> Q with components over params + chart coordinates."""

    model: GroupModel
    space: Chart
    params: tuple[str, ...]
    components: tuple[ex.Expr, ...]
    name: str = ""

    def __post_init__(self):
        self.params = tuple(self.params)
        self.components = tuple(self.components)
        if len(self.params) != self.model.dim:
            raise GeometryError(
                f"action {self.name or '<anon>'}: {len(self.params)} parameters "
                f"for a group of dimension {self.model.dim}"
            )
        if set(self.params) & set(self.space.coords):
            raise GeometryError("group parameter names collide with chart coordinates")
        if len(self.components) != self.space.dim:
            raise GeometryError("action must have one component per chart coordinate")
        allowed = set(self.params) | set(self.space.coords)
        for comp in self.components:
            stray = ex.free_names(comp) - allowed
            if stray:
                raise GeometryError(f"action component uses unknown names {sorted(stray)}")

    @property
    def scope(self) -> tuple[str, ...]:
        return self.params + self.space.coords

    def map_for(self, gvals: Sequence[float]) -> SmoothMap:
        """phi_g as a smooth map of the chart, for fixed parameter values."""
        gvals = np.asarray(gvals, dtype=np.float64).reshape(-1)
        if gvals.shape[0] != self.model.dim:
            raise GeometryError("wrong number of group parameter values")
        binding = {p: ex.Num(float(v)) for p, v in zip(self.params, gvals)}
        comps = tuple(ex.substitute(c, binding) for c in self.components)
        return SmoothMap(self.space, self.space, comps, f"{self.name or 'phi'}_g")

    def identity_residuals(self) -> tuple[ex.Expr, ...]:
        """Components of phi_0(x) - x; zero for a genuine action."""
        zero = self.map_for(np.zeros(self.model.dim))
        return tuple(
            ex.sub(c, ex.Sym(name))
            for c, name in zip(zero.components, self.space.coords)
        )

    def fundamental_field(self, a: int) -> VectorField:
        """Infinitesimal generator of parameter a: d/dt phi_(t e_a) at t=0."""
        if not (0 <= a < self.model.dim):
            raise GeometryError(f"no group parameter {a}")
        at_zero = {p: ex.ZERO for p in self.params}
        comps = tuple(
            ex.substitute(ex.differentiate(c, self.params[a]), at_zero)
            for c in self.components
        )
        return VectorField(self.space, comps, f"gen_{self.params[a]}")

    def fundamental_fields(self) -> list[VectorField]:
        return [self.fundamental_field(a) for a in range(self.model.dim)]

    def sample_params(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cols = []
        for i in range(self.model.dim):
            if i < self.model.translations:
                cols.append(rng.uniform(-1.0, 1.0, n))
            else:
                cols.append(rng.uniform(0.0, TWO_PI, n))
        return np.column_stack(cols)


def group_action(model: GroupModel, space: Chart, params: Sequence[str],
                 components: Sequence[str | ex.Expr], name: str = "") -> GroupAction:
    params = tuple(params)
    scope = params + space.coords
    comps = tuple(
        ex.parse(c, scope) if isinstance(c, str) else c for c in components
    )
    return GroupAction(model, space, params, comps, name)
