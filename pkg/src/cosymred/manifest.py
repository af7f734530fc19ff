"""JSON manifests describing worlds of charts, maps, forms and verification
directives.

A manifest is a single JSON object; each entity section is a list of named
records, and names are resolved within their own kind (a chart and a map may
share a name).  Expressions are strings in the small arithmetic grammar of
the expr module, parsed against the owning chart's coordinates (plus group
parameters for actions).  The `checks` list drives the runner; each entry
names a directive, its entity references, and whether the verdict is
expected to pass or fail.

Loading is strict: unknown keys, missing references, or malformed records
raise ManifestError with the JSON path of the offending entry, so the
command line can report usage errors distinctly from verification failures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from . import expr as ex
from .actions import GroupAction, GroupModel
from .algebroid import ExactSection, IMFormPair, PoissonBase, central_pair, poisson_base
from .charts import Chart, GeometryError, SmoothMap, VectorField, chart
from .cosym import CosymplecticStructure, cosymplectic
from .forms import DifferentialForm, form_from_strings
from .groupoid import GroupoidPresentation, LeafSubgroupoid, PairChart, TripleChart
from .reduction import LeafReductionData, MomentMap, ReductionPresentation, moment_map


class ManifestError(Exception):
    """Malformed manifest; carries the JSON path of the offending record."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class World:
    """All entities a manifest defines, keyed by name within each kind."""

    name: str
    description: str = ""
    charts: dict[str, Chart] = field(default_factory=dict)
    forms: dict[str, DifferentialForm] = field(default_factory=dict)
    maps: dict[str, SmoothMap] = field(default_factory=dict)
    fields: dict[str, VectorField] = field(default_factory=dict)
    structures: dict[str, CosymplecticStructure] = field(default_factory=dict)
    actions: dict[str, GroupAction] = field(default_factory=dict)
    moments: dict[str, MomentMap] = field(default_factory=dict)
    groupoids: dict[str, GroupoidPresentation] = field(default_factory=dict)
    leaf_subgroupoids: dict[str, LeafSubgroupoid] = field(default_factory=dict)
    poisson_bases: dict[str, PoissonBase] = field(default_factory=dict)
    exact_sections: dict[str, ExactSection] = field(default_factory=dict)
    im_pairs: dict[str, IMFormPair] = field(default_factory=dict)
    reductions: dict[str, ReductionPresentation] = field(default_factory=dict)
    checks: list[dict] = field(default_factory=list)


_SECTION_KEYS = {
    "name", "description", "charts", "forms", "maps", "fields", "structures",
    "actions", "moments", "groupoids", "leaf_subgroupoids", "poisson_bases",
    "exact_sections", "im_pairs", "reductions", "checks",
}


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise ManifestError(path, message)


def _get(record: dict, key: str, path: str, kind: type | tuple = str):
    _expect(key in record, path, f"missing required key '{key}'")
    value = record[key]
    _expect(isinstance(value, kind), path,
            f"key '{key}' must be {getattr(kind, '__name__', kind)}")
    return value


def _ref(table: dict, name: Any, path: str, kind: str):
    _expect(isinstance(name, str), path, f"{kind} reference must be a string")
    _expect(name in table, path, f"unknown {kind} '{name}'")
    return table[name]


def _records(doc: dict, section: str, required: set[str], optional: set[str]):
    entries = doc.get(section, [])
    _expect(isinstance(entries, list), f"manifest.{section}", "must be a list")
    seen: set[str] = set()
    for i, record in enumerate(entries):
        path = f"manifest.{section}[{i}]"
        _expect(isinstance(record, dict), path, "must be an object")
        unknown = set(record) - required - optional
        _expect(not unknown, path, f"unknown keys {sorted(unknown)}")
        missing = required - set(record)
        _expect(not missing, path, f"missing keys {sorted(missing)}")
        name = record.get("name")
        _expect(isinstance(name, str) and bool(name), path, "needs a nonempty name")
        _expect(name not in seen, path, f"duplicate name '{name}' in {section}")
        seen.add(name)
        yield record, f"{path}({name})"


def _parse_on(chart_: Chart, text: Any, path: str, extra: tuple[str, ...] = ()) -> ex.Expr:
    _expect(isinstance(text, str), path, "expression must be a string")
    try:
        return ex.parse(text, chart_.coords + extra)
    except ex.ExprError as err:
        raise ManifestError(path, f"bad expression {text!r}: {err}") from None


def _load_chart(record: dict, path: str) -> Chart:
    coords = _get(record, "coords", path, list)
    periodic = record.get("periodic", [])
    _expect(isinstance(periodic, list), path, "'periodic' must be a list")
    box_spec = record.get("box", {})
    _expect(isinstance(box_spec, dict), path, "'box' must be an object")
    box = {}
    for cname, rng in box_spec.items():
        _expect(isinstance(rng, list) and len(rng) == 2, path,
                f"box entry '{cname}' must be [lo, hi]")
        box[cname] = (float(rng[0]), float(rng[1]))
    try:
        return chart(record["name"], coords, periodic=periodic, box=box)
    except (GeometryError, TypeError, ValueError) as err:
        raise ManifestError(path, str(err)) from None


def _load_map(world: World, record: dict, path: str) -> SmoothMap:
    src = _ref(world.charts, _get(record, "source", path), path, "chart")
    dst = _ref(world.charts, _get(record, "target", path), path, "chart")
    comps = _get(record, "components", path, list)
    _expect(len(comps) == dst.dim, path,
            f"needs {dst.dim} components for '{dst.name}', got {len(comps)}")
    parsed = tuple(_parse_on(src, c, path) for c in comps)
    return SmoothMap(src, dst, parsed, record["name"])


def _load_pair_chart(world: World, record: dict, path: str) -> PairChart:
    _expect(isinstance(record, dict), path, "'pair' must be an object")
    unknown = set(record) - {"chart", "left", "right", "product", "left_unit",
                             "right_unit", "left_inverse", "right_inverse"}
    _expect(not unknown, path, f"unknown pair keys {sorted(unknown)}")

    def opt_map(key):
        return _ref(world.maps, record[key], path, "map") if key in record else None

    return PairChart(
        chart=_ref(world.charts, _get(record, "chart", path), path, "chart"),
        left=_ref(world.maps, _get(record, "left", path), path, "map"),
        right=_ref(world.maps, _get(record, "right", path), path, "map"),
        product=_ref(world.maps, _get(record, "product", path), path, "map"),
        left_unit=opt_map("left_unit"),
        right_unit=opt_map("right_unit"),
        left_inverse=opt_map("left_inverse"),
        right_inverse=opt_map("right_inverse"),
    )


def _load_triple_chart(world: World, record: dict, path: str) -> TripleChart:
    _expect(isinstance(record, dict), path, "'triple' must be an object")
    keys = {"chart", "first", "second", "third", "pair_12", "pair_23",
            "pair_left", "pair_right"}
    unknown = set(record) - keys
    _expect(not unknown, path, f"unknown triple keys {sorted(unknown)}")
    return TripleChart(
        chart=_ref(world.charts, _get(record, "chart", path), path, "chart"),
        **{k: _ref(world.maps, _get(record, k, path), path, "map")
           for k in keys - {"chart"}},
    )


def _load_reduction(world: World, record: dict, path: str) -> ReductionPresentation:
    def opt(table, key, kind):
        return _ref(table, record[key], path, kind) if key in record else None

    sections = _get(record, "sections", path, list)
    leaf = None
    if "leaf" in record:
        lrec = record["leaf"]
        lpath = f"{path}.leaf"
        _expect(isinstance(lrec, dict), lpath, "must be an object")
        lkeys = {"subgroupoid", "action", "level_chart", "level_inclusion",
                 "level_to_ambient_level", "quotient_chart", "projection",
                 "into_reduced", "sections"}
        unknown = set(lrec) - lkeys
        _expect(not unknown, lpath, f"unknown keys {sorted(unknown)}")
        lsections = _get(lrec, "sections", lpath, list)
        leaf = LeafReductionData(
            subgroupoid=_ref(world.leaf_subgroupoids,
                             _get(lrec, "subgroupoid", lpath), lpath, "leaf subgroupoid"),
            action=_ref(world.actions, _get(lrec, "action", lpath), lpath, "action"),
            level_chart=_ref(world.charts, _get(lrec, "level_chart", lpath), lpath, "chart"),
            level_inclusion=_ref(world.maps, _get(lrec, "level_inclusion", lpath),
                                 lpath, "map"),
            level_to_ambient_level=_ref(world.maps,
                                        _get(lrec, "level_to_ambient_level", lpath),
                                        lpath, "map"),
            quotient_chart=_ref(world.charts, _get(lrec, "quotient_chart", lpath),
                                lpath, "chart"),
            projection=_ref(world.maps, _get(lrec, "projection", lpath), lpath, "map"),
            into_reduced=_ref(world.maps, _get(lrec, "into_reduced", lpath), lpath, "map"),
            sections=[_ref(world.maps, s, lpath, "map") for s in lsections],
        )
    try:
        return ReductionPresentation(
            structure=_ref(world.structures, _get(record, "structure", path),
                           path, "structure"),
            action=_ref(world.actions, _get(record, "action", path), path, "action"),
            moment=_ref(world.moments, _get(record, "moment", path), path, "moment map"),
            level_chart=_ref(world.charts, _get(record, "level_chart", path),
                             path, "chart"),
            level_inclusion=_ref(world.maps, _get(record, "level_inclusion", path),
                                 path, "map"),
            quotient_chart=_ref(world.charts, _get(record, "quotient_chart", path),
                                path, "chart"),
            projection=_ref(world.maps, _get(record, "projection", path), path, "map"),
            sections=[_ref(world.maps, s, path, "map") for s in sections],
            groupoid=opt(world.groupoids, "groupoid", "groupoid"),
            level_groupoid=opt(world.groupoids, "level_groupoid", "groupoid"),
            level_pair_inclusion=opt(world.maps, "level_pair_inclusion", "map"),
            reduced_groupoid=opt(world.groupoids, "reduced_groupoid", "groupoid"),
            base_projection=opt(world.maps, "base_projection", "map"),
            pair_projection=opt(world.maps, "pair_projection", "map"),
            reduced_omega=opt(world.forms, "reduced_omega", "form"),
            reduced_eta=opt(world.forms, "reduced_eta", "form"),
            solve_omega_target=opt(world.forms, "solve_omega_target", "form"),
            solve_eta_target=opt(world.forms, "solve_eta_target", "form"),
            leaf=leaf,
            name=record["name"],
        )
    except GeometryError as err:
        raise ManifestError(path, str(err)) from None


# required keys per check directive (beyond do/expect/name)
DIRECTIVE_KEYS: dict[str, set[str]] = {
    "cosymplectic": {"structure"},
    "reeb": {"structure"},
    "leaf_distribution": {"structure"},
    "hypersurface": {"ambient_form", "inclusion", "transverse"},
    "symplectization": {"structure"},
    "symplectization_correspondence": {"structure", "action", "moment"},
    "groupoid": {"groupoid"},
    "multiplicative": {"groupoid", "form"},
    "cosymplectic_groupoid": {"groupoid", "structure"},
    "leaf_subgroupoid": {"leaf_subgroupoid"},
    "groupoid_reduction": {"reduction"},
    "leaf_reduction": {"reduction"},
    "im_square": {"reduction"},
    "algebroid": {"base", "sections"},
    "im_2form": {"base", "pair", "sections"},
    "im_1form": {"base", "pair", "sections"},
    "reduced_im": {"base", "reduced_base", "projection", "pair", "reduced_pair",
                   "sections"},
    "infinitesimal_moment": {"base", "action", "pair", "sections"},
    "average_one_form": {"action", "form"},
}

# check keys that name world objects, and the section they resolve in
_REFERENCE_SECTIONS: dict[str, str] = {
    "structure": "structures",
    "action": "actions",
    "moment": "moments",
    "form": "forms",
    "ambient_form": "forms",
    "inclusion": "maps",
    "projection": "maps",
    "transverse": "fields",
    "groupoid": "groupoids",
    "leaf_subgroupoid": "leaf_subgroupoids",
    "reduction": "reductions",
    "base": "poisson_bases",
    "reduced_base": "poisson_bases",
    "pair": "im_pairs",
    "reduced_pair": "im_pairs",
    "sections": "exact_sections",
    "upstairs_sections": "exact_sections",
}


def _resolve_references(world: World, record: dict, path: str):
    for key, section in _REFERENCE_SECTIONS.items():
        if key not in record:
            continue
        names = record[key] if isinstance(record[key], list) else [record[key]]
        table = getattr(world, section)
        for n in names:
            _expect(isinstance(n, str), f"{path}.{key}", "references are names")
            _expect(n in table, f"{path}.{key}",
                    f"no {section} entry named '{n}'")


def load_world(doc: dict) -> World:
    """Build a World from a parsed manifest object (see module docstring)."""
    _expect(isinstance(doc, dict), "manifest", "top level must be an object")
    unknown = set(doc) - _SECTION_KEYS
    _expect(not unknown, "manifest", f"unknown sections {sorted(unknown)}")
    name = doc.get("name", "unnamed")
    _expect(isinstance(name, str), "manifest.name", "must be a string")
    world = World(name, doc.get("description", ""))

    for record, path in _records(doc, "charts",
                                 {"name", "coords"}, {"periodic", "box"}):
        world.charts[record["name"]] = _load_chart(record, path)

    for record, path in _records(doc, "forms",
                                 {"name", "chart", "degree", "coeffs"}, set()):
        c = _ref(world.charts, record["chart"], path, "chart")
        degree = _get(record, "degree", path, int)
        coeffs = _get(record, "coeffs", path, dict)
        try:
            world.forms[record["name"]] = form_from_strings(c, degree, coeffs)
        except (GeometryError, ex.ExprError) as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "maps",
                                 {"name", "source", "target", "components"}, set()):
        world.maps[record["name"]] = _load_map(world, record, path)

    for record, path in _records(doc, "fields",
                                 {"name", "chart", "components"}, set()):
        c = _ref(world.charts, record["chart"], path, "chart")
        comps = _get(record, "components", path, list)
        _expect(len(comps) == c.dim, path, f"needs {c.dim} components")
        parsed = tuple(_parse_on(c, comp, path) for comp in comps)
        world.fields[record["name"]] = VectorField(c, parsed, record["name"])

    for record, path in _records(doc, "structures",
                                 {"name", "chart", "omega", "eta"}, set()):
        c = _ref(world.charts, record["chart"], path, "chart")
        om = _ref(world.forms, record["omega"], path, "form")
        eta = _ref(world.forms, record["eta"], path, "form")
        try:
            world.structures[record["name"]] = cosymplectic(c, om, eta, record["name"])
        except GeometryError as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "actions",
                                 {"name", "space", "params", "components"},
                                 {"translations", "torus"}):
        space = _ref(world.charts, record["space"], path, "chart")
        params = _get(record, "params", path, list)
        comps = _get(record, "components", path, list)
        model = GroupModel(int(record.get("translations", 0)),
                           int(record.get("torus", 0)))
        parsed = tuple(_parse_on(space, c, path, tuple(params)) for c in comps)
        try:
            world.actions[record["name"]] = GroupAction(
                model, space, tuple(params), parsed, record["name"])
        except GeometryError as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "moments",
                                 {"name", "chart", "components"}, {"sign"}):
        c = _ref(world.charts, record["chart"], path, "chart")
        comps = _get(record, "components", path, list)
        sign = int(record.get("sign", 1))
        try:
            world.moments[record["name"]] = moment_map(c, comps, sign)
        except (GeometryError, ex.ExprError) as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "groupoids",
                                 {"name", "arrows", "units", "source", "target",
                                  "unit", "inverse", "pair"}, {"triple"}):
        try:
            world.groupoids[record["name"]] = GroupoidPresentation(
                arrows=_ref(world.charts, record["arrows"], path, "chart"),
                units=_ref(world.charts, record["units"], path, "chart"),
                source=_ref(world.maps, record["source"], path, "map"),
                target=_ref(world.maps, record["target"], path, "map"),
                unit=_ref(world.maps, record["unit"], path, "map"),
                inverse=_ref(world.maps, record["inverse"], path, "map"),
                pair=_load_pair_chart(world, record["pair"], f"{path}.pair"),
                triple=(_load_triple_chart(world, record["triple"], f"{path}.triple")
                        if "triple" in record else None),
                name=record["name"],
            )
        except GeometryError as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "leaf_subgroupoids",
                                 {"name", "ambient", "leaf", "inclusion",
                                  "pair_inclusion"}, set()):
        try:
            world.leaf_subgroupoids[record["name"]] = LeafSubgroupoid(
                ambient=_ref(world.groupoids, record["ambient"], path, "groupoid"),
                leaf=_ref(world.groupoids, record["leaf"], path, "groupoid"),
                inclusion=_ref(world.maps, record["inclusion"], path, "map"),
                pair_inclusion=_ref(world.maps, record["pair_inclusion"], path, "map"),
            )
        except GeometryError as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "poisson_bases",
                                 {"name", "chart", "upper"}, set()):
        c = _ref(world.charts, record["chart"], path, "chart")
        upper = _get(record, "upper", path, dict)
        try:
            world.poisson_bases[record["name"]] = poisson_base(c, upper)
        except (GeometryError, ex.ExprError) as err:
            raise ManifestError(path, str(err)) from None

    for record, path in _records(doc, "exact_sections",
                                 {"name", "chart", "f", "g"}, set()):
        c = _ref(world.charts, record["chart"], path, "chart")
        world.exact_sections[record["name"]] = ExactSection(
            _parse_on(c, record["f"], path), _parse_on(c, record["g"], path))

    for record, path in _records(doc, "im_pairs",
                                 {"name", "chart"}, {"central", "mu", "nu"}):
        c = _ref(world.charts, record["chart"], path, "chart")
        if record.get("central"):
            world.im_pairs[record["name"]] = central_pair(c)
            continue
        mu = _get(record, "mu", path, list)
        nu = _get(record, "nu", path, list)
        _expect(len(mu) == c.dim and all(isinstance(r, list) and len(r) == c.dim + 1
                                         for r in mu),
                path, f"'mu' must be a {c.dim} x {c.dim + 1} matrix")
        _expect(len(nu) == c.dim + 1, path, f"'nu' must have {c.dim + 1} entries")
        try:
            world.im_pairs[record["name"]] = IMFormPair(
                c,
                tuple(tuple(_parse_on(c, e, path) for e in row) for row in mu),
                tuple(_parse_on(c, e, path) for e in nu),
            )
        except GeometryError as err:
            raise ManifestError(path, str(err)) from None

    reduction_keys = {
        "name", "structure", "action", "moment", "level_chart", "level_inclusion",
        "quotient_chart", "projection", "sections",
    }
    reduction_optional = {
        "groupoid", "level_groupoid", "level_pair_inclusion", "reduced_groupoid",
        "base_projection", "pair_projection", "reduced_omega", "reduced_eta",
        "solve_omega_target", "solve_eta_target", "leaf",
    }
    for record, path in _records(doc, "reductions", reduction_keys, reduction_optional):
        world.reductions[record["name"]] = _load_reduction(world, record, path)

    checks = doc.get("checks", [])
    _expect(isinstance(checks, list), "manifest.checks", "must be a list")
    for i, record in enumerate(checks):
        path = f"manifest.checks[{i}]"
        _expect(isinstance(record, dict), path, "must be an object")
        do = record.get("do")
        _expect(isinstance(do, str), path, "needs a 'do' directive")
        _expect(do in DIRECTIVE_KEYS, path, f"unknown directive '{do}'")
        missing = DIRECTIVE_KEYS[do] - set(record)
        _expect(not missing, path,
                f"directive '{do}' missing keys {sorted(missing)}")
        expect = record.get("expect", "pass")
        _expect(expect in ("pass", "fail"), path, "'expect' must be 'pass' or 'fail'")
        _resolve_references(world, record, path)
    world.checks = list(checks)
    return world


def load_path(filename: str) -> World:
    """Parse and load a manifest file; JSONDecodeError propagates so callers
    can report line and column."""
    with open(filename, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return load_world(doc)
