"""Execute the check directives of a loaded World and collect a RunReport.

Every directive resolves its entity references, runs the matching verifier,
and records a SectionOutcome comparing the observed verdict against the
manifest's expectation.  Geometric construction failures (rank drops,
transversality) are converted into failing checks rather than aborting the
run, so a manifest can declare an expected failure and still exit cleanly.
"""

from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import engine
from .algebroid import (
    verify_algebroid_structure,
    verify_im_1form,
    verify_im_2form,
    verify_infinitesimal_moment,
    verify_reduced_im_forms,
)
from .charts import GeometryError, seeded_rng
from .cosym import (
    TransversalityError,
    average_one_form,
    from_symplectic_hypersurface,
    leaf_distribution,
    symplectization,
    verify_cosymplectic,
    verify_reeb,
    verify_symplectization,
)
from .forms import exterior_derivative, pullback_form
from .groupoid import (
    verify_cosymplectic_groupoid,
    verify_groupoid,
    verify_leaf_subgroupoid,
    verify_multiplicative,
)
from .manifest import DIRECTIVE_KEYS, ManifestError, World, _ref
from .reduction import (
    verify_groupoid_reduction,
    verify_infinitesimal_reduction_square,
    verify_leaf_reduction,
    verify_symplectization_correspondence,
)
from .report import CheckReport, CheckResult, RunReport, SectionOutcome, Tolerances


def _sections_list(world: World, record: dict, key: str, path: str):
    names = record.get(key, [])
    if not isinstance(names, list):
        raise ManifestError(path, f"'{key}' must be a list of section names")
    return [_ref(world.exact_sections, n, path, "exact section") for n in names]


def _run_average(world: World, record: dict, path: str, samples: int,
                 seed: int, tol: Tolerances) -> CheckReport:
    action = _ref(world.actions, record["action"], path, "action")
    form = _ref(world.forms, record["form"], path, "form")
    order = int(record.get("order", 64))
    compare = int(record.get("compare_order", 2 * order))
    rep = CheckReport(f"average:{record['form']}", seed, samples)
    averaged = average_one_form(action, form, order)
    rng = seeded_rng(seed, f"average:{record['form']}")
    pts = action.space.sample(samples, rng)

    d_in = exterior_derivative(form).coeff_values(pts)
    rep.add(CheckResult(
        "input_closedness_not_assumed", True, float(np.max(np.abs(d_in))),
        float(np.mean(np.abs(d_in))), float("inf"), pts.shape[0],
        "max |d input| at samples; averaging does not require zero"))

    again = average_one_form(action, form, compare)
    rep.add_residual("quadrature_orders_agree",
                     averaged.coeff_values(pts) - again.coeff_values(pts), tol.match,
                     f"orders {order} and {compare}")
    gvals = action.sample_params(8, rng)
    invariance = [
        (pullback_form(action.map_for(g), averaged) - averaged).coeff_values(pts)
        for g in gvals
    ]
    rep.add_residual("output_invariant", np.concatenate(invariance, axis=1),
                     tol.default, "8 sampled group elements")
    rep.add_residual("output_closed",
                     exterior_derivative(averaged).coeff_values(pts), tol.exact)
    twice = average_one_form(action, averaged, order)
    rep.add_residual("idempotent",
                     (twice - averaged).coeff_values(pts), tol.match)
    return rep


def _run_hypersurface(world: World, record: dict, path: str, samples: int,
                      seed: int, tol: Tolerances) -> CheckReport:
    omega = _ref(world.forms, record["ambient_form"], path, "form")
    incl = _ref(world.maps, record["inclusion"], path, "map")
    transverse = _ref(world.fields, record["transverse"], path, "vector field")
    induced, rep = from_symplectic_hypersurface(omega, incl, transverse,
                                                samples, seed, tol)
    rep.merge(verify_cosymplectic(induced, samples, seed, tol), "induced.")
    rep.merge(verify_reeb(induced, samples, seed, tol), "induced.")
    return rep


def _run_leaf_distribution(world: World, record: dict, path: str, samples: int,
                           seed: int, tol: Tolerances) -> CheckReport:
    s = _ref(world.structures, record["structure"], path, "structure")
    rng = seeded_rng(seed, f"leafdist:{s.chart.name}")
    pts = s.chart.sample(samples, rng)
    _, rep = leaf_distribution(s, pts, tol)
    return rep


def _directive(world: World, record: dict, path: str, samples: int, seed: int,
               tol: Tolerances) -> CheckReport:
    do = record["do"]
    if do == "cosymplectic":
        s = _ref(world.structures, record["structure"], path, "structure")
        return verify_cosymplectic(s, samples, seed, tol)
    if do == "reeb":
        s = _ref(world.structures, record["structure"], path, "structure")
        return verify_reeb(s, samples, seed, tol)
    if do == "leaf_distribution":
        return _run_leaf_distribution(world, record, path, samples, seed, tol)
    if do == "hypersurface":
        return _run_hypersurface(world, record, path, samples, seed, tol)
    if do == "symplectization":
        s = _ref(world.structures, record["structure"], path, "structure")
        return verify_symplectization(symplectization(s), samples, seed, tol)
    if do == "symplectization_correspondence":
        s = _ref(world.structures, record["structure"], path, "structure")
        action = _ref(world.actions, record["action"], path, "action")
        moment = _ref(world.moments, record["moment"], path, "moment map")
        return verify_symplectization_correspondence(s, action, moment,
                                                     samples, seed, tol)
    if do == "groupoid":
        gp = _ref(world.groupoids, record["groupoid"], path, "groupoid")
        return verify_groupoid(gp, samples, seed, tol)
    if do == "multiplicative":
        gp = _ref(world.groupoids, record["groupoid"], path, "groupoid")
        form = _ref(world.forms, record["form"], path, "form")
        return verify_multiplicative(gp, form, samples, seed, tol, record["form"])
    if do == "cosymplectic_groupoid":
        gp = _ref(world.groupoids, record["groupoid"], path, "groupoid")
        s = _ref(world.structures, record["structure"], path, "structure")
        return verify_cosymplectic_groupoid(gp, s.omega, s.eta, samples, seed, tol)
    if do == "leaf_subgroupoid":
        ls = _ref(world.leaf_subgroupoids, record["leaf_subgroupoid"], path,
                  "leaf subgroupoid")
        omega = eta = None
        if "structure" in record:
            s = _ref(world.structures, record["structure"], path, "structure")
            omega, eta = s.omega, s.eta
        return verify_leaf_subgroupoid(ls, omega, eta, samples, seed, tol)
    if do == "groupoid_reduction":
        red = _ref(world.reductions, record["reduction"], path, "reduction")
        return verify_groupoid_reduction(red, samples, seed, tol)
    if do == "leaf_reduction":
        red = _ref(world.reductions, record["reduction"], path, "reduction")
        return verify_leaf_reduction(red, samples, seed, tol)
    if do == "im_square":
        red = _ref(world.reductions, record["reduction"], path, "reduction")
        return verify_infinitesimal_reduction_square(red, samples, seed, tol)
    if do == "algebroid":
        base = _ref(world.poisson_bases, record["base"], path, "poisson base")
        return verify_algebroid_structure(base, _sections_list(world, record,
                                                               "sections", path),
                                          samples, seed, tol)
    if do == "im_2form":
        base = _ref(world.poisson_bases, record["base"], path, "poisson base")
        pair = _ref(world.im_pairs, record["pair"], path, "im pair")
        return verify_im_2form(base, pair, _sections_list(world, record,
                                                          "sections", path),
                               samples, seed, tol)
    if do == "im_1form":
        base = _ref(world.poisson_bases, record["base"], path, "poisson base")
        pair = _ref(world.im_pairs, record["pair"], path, "im pair")
        return verify_im_1form(base, pair, _sections_list(world, record,
                                                          "sections", path),
                               samples, seed, tol)
    if do == "reduced_im":
        base = _ref(world.poisson_bases, record["base"], path, "poisson base")
        reduced_base = _ref(world.poisson_bases, record["reduced_base"], path,
                            "poisson base")
        projection = _ref(world.maps, record["projection"], path, "map")
        pair = _ref(world.im_pairs, record["pair"], path, "im pair")
        reduced_pair = _ref(world.im_pairs, record["reduced_pair"], path, "im pair")
        action = (_ref(world.actions, record["action"], path, "action")
                  if "action" in record else None)
        return verify_reduced_im_forms(
            base, reduced_base, projection, pair, reduced_pair,
            _sections_list(world, record, "sections", path), action,
            _sections_list(world, record, "upstairs_sections", path),
            samples, seed, tol)
    if do == "infinitesimal_moment":
        base = _ref(world.poisson_bases, record["base"], path, "poisson base")
        action = _ref(world.actions, record["action"], path, "action")
        pair = _ref(world.im_pairs, record["pair"], path, "im pair")
        return verify_infinitesimal_moment(base, action, pair,
                                           _sections_list(world, record,
                                                          "sections", path),
                                           samples, seed, tol)
    if do == "average_one_form":
        return _run_average(world, record, path, samples, seed, tol)
    raise ManifestError(path, f"unknown directive '{do}'")




def validate_checks(world: World):
    """Reject unknown directives or missing reference keys before running.

    Worlds from load_world arrive pre-validated; this guards programmatic
    construction."""
    for i, record in enumerate(world.checks):
        path = f"manifest.checks[{i}]"
        do = record["do"]
        if do not in DIRECTIVE_KEYS:
            raise ManifestError(path, f"unknown directive '{do}'")
        missing = DIRECTIVE_KEYS[do] - set(record)
        if missing:
            raise ManifestError(path, f"directive '{do}' missing keys {sorted(missing)}")


def run_world(world: World, samples: int = 128, seed: int = 42,
              tol: Tolerances = Tolerances()) -> RunReport:
    validate_checks(world)
    run = RunReport(world.name, seed, samples, engine.backend_name())
    for i, record in enumerate(world.checks):
        path = f"manifest.checks[{i}]"
        label = record.get("name") or _default_label(record)
        expect = record.get("expect", "pass")
        started = time.perf_counter()
        try:
            rep = _directive(world, record, path, samples, seed, tol)
        except TransversalityError as err:
            rep = CheckReport(label, seed, samples)
            rep.add(CheckResult("transversality", False, float("inf"),
                                float("inf"), 0.0, samples, str(err)))
        except GeometryError as err:
            rep = CheckReport(label, seed, samples)
            rep.add(CheckResult("construction", False, float("inf"),
                                float("inf"), 0.0, samples, str(err)))
        run.sections.append(SectionOutcome(label, expect, rep,
                                           time.perf_counter() - started))
    return run


_PRIMARY_REF = {
    "multiplicative": "form",
    "hypersurface": "inclusion",
    "average_one_form": "form",
    "reduced_im": "pair",
    "leaf_subgroupoid": "leaf_subgroupoid",
}


def _default_label(record: dict) -> str:
    do = record["do"]
    keys = (_PRIMARY_REF.get(do, ""), "structure", "groupoid", "reduction",
            "base", "form", "leaf_subgroupoid", "action")
    for key in keys:
        if key in record and isinstance(record[key], str):
            return f"{do}:{record[key]}"
    return do
