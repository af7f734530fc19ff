"""Built-in example manifests.

Each builder returns a plain manifest dict (the same schema `check` loads
from disk), so `examples run` and `check` share one code path and
`examples emit` can write the corpus out for editing.

The mutation variants deliberately break one ingredient each and declare the
breakage via `expect: fail`; their docstrings name the check that catches
the defect.  They exist to demonstrate that the verifiers reject near-miss
presentations, not just accept correct ones.
"""

from __future__ import annotations

from typing import Callable


def _qs(n: int, prefix: str = "q") -> list[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def _zeros(n: int) -> list[str]:
    return ["0"] * n


def _sum2(a: str, b: str) -> str:
    return f"{a} + {b}"


def _check_pair(n: int, k: int):
    if not (1 <= k < n):
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")


def _cotangent_world(n: int, k: int) -> dict:
    """Shared chart/map/form corpus for the translation reduction of the
    cotangent-times-circle groupoid over n configuration coordinates, with k
    pairs kept and n-k translated away."""
    _check_pair(n, k)
    qs, ps = _qs(n), _qs(n, "p")
    xs = _qs(n, "x")
    a_s, b_s, c_s = _qs(n, "a"), _qs(n, "b"), _qs(n, "c")
    qk, pk = qs[:k], ps[:k]
    xk = xs[:k]
    ak, bk = a_s[:k], b_s[:k]
    gs = _qs(n - k, "g")
    translated = qs[k:]

    charts = [
        {"name": "units", "coords": xs},
        {"name": "arrows", "coords": qs + ps + ["theta"], "periodic": ["theta"]},
        {"name": "pairs", "coords": qs + a_s + ["alpha"] + b_s + ["beta"],
         "periodic": ["alpha", "beta"]},
        {"name": "triples",
         "coords": qs + a_s + ["alpha"] + b_s + ["beta"] + c_s + ["gamma"],
         "periodic": ["alpha", "beta", "gamma"]},
        {"name": "level", "coords": qs + pk + ["theta"], "periodic": ["theta"]},
        {"name": "level_pairs", "coords": qs + ak + ["alpha"] + bk + ["beta"],
         "periodic": ["alpha", "beta"]},
        {"name": "reduced_units", "coords": xk},
        {"name": "reduced_arrows", "coords": qk + pk + ["theta"],
         "periodic": ["theta"]},
        {"name": "reduced_pairs", "coords": qk + ak + ["alpha"] + bk + ["beta"],
         "periodic": ["alpha", "beta"]},
        {"name": "leaf_arrows", "coords": qs + ps},
        {"name": "leaf_pairs", "coords": qs + a_s + b_s},
        {"name": "leaf_level", "coords": qs + pk},
        {"name": "leaf_reduced", "coords": qk + pk},
    ]

    maps = [
        {"name": "source", "source": "arrows", "target": "units", "components": qs},
        {"name": "target", "source": "arrows", "target": "units", "components": qs},
        {"name": "unit", "source": "units", "target": "arrows",
         "components": xs + _zeros(n + 1)},
        {"name": "inverse", "source": "arrows", "target": "arrows",
         "components": qs + [f"-{p}" for p in ps] + ["-theta"]},
        {"name": "pair_left", "source": "pairs", "target": "arrows",
         "components": qs + a_s + ["alpha"]},
        {"name": "pair_right", "source": "pairs", "target": "arrows",
         "components": qs + b_s + ["beta"]},
        {"name": "pair_product", "source": "pairs", "target": "arrows",
         "components": qs + [_sum2(a, b) for a, b in zip(a_s, b_s)]
                          + ["alpha + beta"]},
        {"name": "pair_left_unit", "source": "arrows", "target": "pairs",
         "components": qs + _zeros(n + 1) + ps + ["theta"]},
        {"name": "pair_right_unit", "source": "arrows", "target": "pairs",
         "components": qs + ps + ["theta"] + _zeros(n + 1)},
        {"name": "pair_left_inverse", "source": "arrows", "target": "pairs",
         "components": qs + [f"-{p}" for p in ps] + ["-theta"] + ps + ["theta"]},
        {"name": "pair_right_inverse", "source": "arrows", "target": "pairs",
         "components": qs + ps + ["theta"] + [f"-{p}" for p in ps] + ["-theta"]},
        {"name": "triple_first", "source": "triples", "target": "arrows",
         "components": qs + a_s + ["alpha"]},
        {"name": "triple_second", "source": "triples", "target": "arrows",
         "components": qs + b_s + ["beta"]},
        {"name": "triple_third", "source": "triples", "target": "arrows",
         "components": qs + c_s + ["gamma"]},
        {"name": "triple_pair_12", "source": "triples", "target": "pairs",
         "components": qs + a_s + ["alpha"] + b_s + ["beta"]},
        {"name": "triple_pair_23", "source": "triples", "target": "pairs",
         "components": qs + b_s + ["beta"] + c_s + ["gamma"]},
        {"name": "triple_pair_left", "source": "triples", "target": "pairs",
         "components": qs + [_sum2(a, b) for a, b in zip(a_s, b_s)]
                          + ["alpha + beta"] + c_s + ["gamma"]},
        {"name": "triple_pair_right", "source": "triples", "target": "pairs",
         "components": qs + a_s + ["alpha"]
                          + [_sum2(b, c) for b, c in zip(b_s, c_s)]
                          + ["beta + gamma"]},
        # zero momentum level of the moment map, as a wide subgroupoid
        {"name": "level_inclusion", "source": "level", "target": "arrows",
         "components": qs + pk + _zeros(n - k) + ["theta"]},
        {"name": "level_source", "source": "level", "target": "units",
         "components": qs},
        {"name": "level_target", "source": "level", "target": "units",
         "components": qs},
        {"name": "level_unit", "source": "units", "target": "level",
         "components": xs + _zeros(k + 1)},
        {"name": "level_inverse", "source": "level", "target": "level",
         "components": qs + [f"-{p}" for p in pk] + ["-theta"]},
        {"name": "lpair_left", "source": "level_pairs", "target": "level",
         "components": qs + ak + ["alpha"]},
        {"name": "lpair_right", "source": "level_pairs", "target": "level",
         "components": qs + bk + ["beta"]},
        {"name": "lpair_product", "source": "level_pairs", "target": "level",
         "components": qs + [_sum2(a, b) for a, b in zip(ak, bk)]
                          + ["alpha + beta"]},
        {"name": "level_pair_inclusion", "source": "level_pairs", "target": "pairs",
         "components": qs + ak + _zeros(n - k) + ["alpha"]
                          + bk + _zeros(n - k) + ["beta"]},
        # quotient by the translations
        {"name": "projection", "source": "level", "target": "reduced_arrows",
         "components": qk + pk + ["theta"]},
        {"name": "base_projection", "source": "units", "target": "reduced_units",
         "components": xk},
        {"name": "pair_projection", "source": "level_pairs", "target": "reduced_pairs",
         "components": qk + ak + ["alpha"] + bk + ["beta"]},
        {"name": "section_zero", "source": "reduced_arrows", "target": "level",
         "components": qk + _zeros(n - k) + pk + ["theta"]},
        {"name": "section_offset", "source": "reduced_arrows", "target": "level",
         "components": qk + ["0.7"] * (n - k) + pk + ["theta"]},
        {"name": "red_source", "source": "reduced_arrows", "target": "reduced_units",
         "components": qk},
        {"name": "red_target", "source": "reduced_arrows", "target": "reduced_units",
         "components": qk},
        {"name": "red_unit", "source": "reduced_units", "target": "reduced_arrows",
         "components": xk + _zeros(k + 1)},
        {"name": "red_inverse", "source": "reduced_arrows", "target": "reduced_arrows",
         "components": qk + [f"-{p}" for p in pk] + ["-theta"]},
        {"name": "rpair_left", "source": "reduced_pairs", "target": "reduced_arrows",
         "components": qk + ak + ["alpha"]},
        {"name": "rpair_right", "source": "reduced_pairs", "target": "reduced_arrows",
         "components": qk + bk + ["beta"]},
        {"name": "rpair_product", "source": "reduced_pairs", "target": "reduced_arrows",
         "components": qk + [_sum2(a, b) for a, b in zip(ak, bk)]
                          + ["alpha + beta"]},
        # the symplectic leaf through the unit section: theta = 0
        {"name": "leaf_inclusion", "source": "leaf_arrows", "target": "arrows",
         "components": qs + ps + ["0"]},
        {"name": "leaf_pair_inclusion", "source": "leaf_pairs", "target": "pairs",
         "components": qs + a_s + ["0"] + b_s + ["0"]},
        {"name": "leaf_source", "source": "leaf_arrows", "target": "units",
         "components": qs},
        {"name": "leaf_target", "source": "leaf_arrows", "target": "units",
         "components": qs},
        {"name": "leaf_unit", "source": "units", "target": "leaf_arrows",
         "components": xs + _zeros(n)},
        {"name": "leaf_inverse", "source": "leaf_arrows", "target": "leaf_arrows",
         "components": qs + [f"-{p}" for p in ps]},
        {"name": "fpair_left", "source": "leaf_pairs", "target": "leaf_arrows",
         "components": qs + a_s},
        {"name": "fpair_right", "source": "leaf_pairs", "target": "leaf_arrows",
         "components": qs + b_s},
        {"name": "fpair_product", "source": "leaf_pairs", "target": "leaf_arrows",
         "components": qs + [_sum2(a, b) for a, b in zip(a_s, b_s)]},
        {"name": "leaf_level_inclusion", "source": "leaf_level", "target": "leaf_arrows",
         "components": qs + pk + _zeros(n - k)},
        {"name": "leaf_level_to_level", "source": "leaf_level", "target": "level",
         "components": qs + pk + ["0"]},
        {"name": "leaf_projection", "source": "leaf_level", "target": "leaf_reduced",
         "components": qk + pk},
        {"name": "leaf_into_reduced", "source": "leaf_reduced", "target": "reduced_arrows",
         "components": qk + pk + ["0"]},
        {"name": "leaf_section_zero", "source": "leaf_reduced", "target": "leaf_level",
         "components": qk + _zeros(n - k) + pk},
        {"name": "leaf_section_offset", "source": "leaf_reduced", "target": "leaf_level",
         "components": qk + ["0.7"] * (n - k) + pk},
    ]

    forms = [
        {"name": "omega", "chart": "arrows", "degree": 2,
         "coeffs": {f"dq{i}^dp{i}": "1" for i in range(1, n + 1)}},
        {"name": "eta", "chart": "arrows", "degree": 1, "coeffs": {"dtheta": "1"}},
        {"name": "omega_red", "chart": "reduced_arrows", "degree": 2,
         "coeffs": {f"dq{i}^dp{i}": "1" for i in range(1, k + 1)}},
        {"name": "eta_red", "chart": "reduced_arrows", "degree": 1,
         "coeffs": {"dtheta": "1"}},
    ]

    actions = [
        {"name": "act", "space": "arrows", "translations": n - k, "params": gs,
         "components": qk + [f"{q} + {g}" for q, g in zip(translated, gs)]
                          + ps + ["theta"]},
        {"name": "unit_act", "space": "units", "translations": n - k, "params": gs,
         "components": xk + [f"{x} + {g}" for x, g in zip(xs[k:], gs)]},
        {"name": "leaf_act", "space": "leaf_arrows", "translations": n - k,
         "params": gs,
         "components": qk + [f"{q} + {g}" for q, g in zip(translated, gs)] + ps},
    ]

    groupoids = [
        {"name": "G", "arrows": "arrows", "units": "units", "source": "source",
         "target": "target", "unit": "unit", "inverse": "inverse",
         "pair": {"chart": "pairs", "left": "pair_left", "right": "pair_right",
                  "product": "pair_product", "left_unit": "pair_left_unit",
                  "right_unit": "pair_right_unit",
                  "left_inverse": "pair_left_inverse",
                  "right_inverse": "pair_right_inverse"},
         "triple": {"chart": "triples", "first": "triple_first",
                    "second": "triple_second", "third": "triple_third",
                    "pair_12": "triple_pair_12", "pair_23": "triple_pair_23",
                    "pair_left": "triple_pair_left",
                    "pair_right": "triple_pair_right"}},
        {"name": "G_level", "arrows": "level", "units": "units",
         "source": "level_source", "target": "level_target", "unit": "level_unit",
         "inverse": "level_inverse",
         "pair": {"chart": "level_pairs", "left": "lpair_left",
                  "right": "lpair_right", "product": "lpair_product"}},
        {"name": "G_red", "arrows": "reduced_arrows", "units": "reduced_units",
         "source": "red_source", "target": "red_target", "unit": "red_unit",
         "inverse": "red_inverse",
         "pair": {"chart": "reduced_pairs", "left": "rpair_left",
                  "right": "rpair_right", "product": "rpair_product"}},
        {"name": "G_leaf", "arrows": "leaf_arrows", "units": "units",
         "source": "leaf_source", "target": "leaf_target", "unit": "leaf_unit",
         "inverse": "leaf_inverse",
         "pair": {"chart": "leaf_pairs", "left": "fpair_left",
                  "right": "fpair_right", "product": "fpair_product"}},
    ]

    reduced_idx = range(k + 1, n + 1)
    return {
        "charts": charts,
        "maps": maps,
        "forms": forms,
        "structures": [{"name": "S", "chart": "arrows", "omega": "omega",
                        "eta": "eta"}],
        "actions": actions,
        "moments": [{"name": "J", "chart": "arrows",
                     "components": [f"p{i}" for i in reduced_idx], "sign": 1}],
        "groupoids": groupoids,
        "leaf_subgroupoids": [{"name": "leaf_sub", "ambient": "G", "leaf": "G_leaf",
                               "inclusion": "leaf_inclusion",
                               "pair_inclusion": "leaf_pair_inclusion"}],
        "poisson_bases": [
            {"name": "pi_units", "chart": "units", "upper": {}},
            {"name": "pi_red_units", "chart": "reduced_units", "upper": {}},
        ],
        "exact_sections": [
            {"name": "r_lin", "chart": "reduced_units", "f": "x1", "g": "0"},
            {"name": "r_sq", "chart": "reduced_units", "f": "0.5*x1^2", "g": "1"},
            {"name": "r_mix", "chart": "reduced_units", "f": "x1", "g": "x1"},
            {"name": "u_basic", "chart": "units", "f": "x1", "g": "0"},
            {"name": "u_bad", "chart": "units", "f": f"x{k + 1}", "g": "0"},
        ],
        "im_pairs": [
            {"name": "im_units", "chart": "units", "central": True},
            {"name": "im_red_units", "chart": "reduced_units", "central": True},
        ],
        "reductions": [{
            "name": "redn", "structure": "S", "action": "act", "moment": "J",
            "level_chart": "level", "level_inclusion": "level_inclusion",
            "quotient_chart": "reduced_arrows", "projection": "projection",
            "sections": ["section_zero", "section_offset"],
            "groupoid": "G", "level_groupoid": "G_level",
            "level_pair_inclusion": "level_pair_inclusion",
            "reduced_groupoid": "G_red", "base_projection": "base_projection",
            "pair_projection": "pair_projection",
            "reduced_omega": "omega_red", "reduced_eta": "eta_red",
            "leaf": {
                "subgroupoid": "leaf_sub", "action": "leaf_act",
                "level_chart": "leaf_level",
                "level_inclusion": "leaf_level_inclusion",
                "level_to_ambient_level": "leaf_level_to_level",
                "quotient_chart": "leaf_reduced", "projection": "leaf_projection",
                "into_reduced": "leaf_into_reduced",
                "sections": ["leaf_section_zero", "leaf_section_offset"],
            },
        }],
    }


def cotangent_s1(n: int = 2, k: int = 1) -> dict:
    """Momentum-translation reduction of the canonical structure on the
    product of a cotangent space with a circle, presented as a bundle of
    abelian groups over the configuration space.  Reduced forms are supplied
    in closed form, so the solver output is cross-checked against them."""
    doc = _cotangent_world(n, k)
    doc["name"] = "cotangent_s1"
    doc["description"] = (
        f"Translation reduction of T*R^{n} x S^1 over R^{n}: keep {k} momentum "
        f"pair(s), reduce {n - k} by the zero level of the conserved momenta."
    )
    doc["checks"] = [
        {"do": "cosymplectic", "structure": "S", "expect": "pass"},
        {"do": "reeb", "structure": "S", "expect": "pass"},
        {"do": "cosymplectic_groupoid", "groupoid": "G", "structure": "S",
         "expect": "pass"},
        {"do": "groupoid_reduction", "reduction": "redn", "expect": "pass"},
        {"do": "im_square", "reduction": "redn", "expect": "pass"},
        {"do": "reduced_im", "base": "pi_units", "reduced_base": "pi_red_units",
         "projection": "base_projection", "pair": "im_units",
         "reduced_pair": "im_red_units", "sections": ["r_lin", "r_sq", "r_mix"],
         "action": "unit_act", "upstairs_sections": ["u_basic", "u_bad"],
         "expect": "pass"},
    ]
    return doc


def leaf_reduction(n: int = 2, k: int = 1) -> dict:
    """Same corpus as cotangent_s1, restricted to the symplectic leaf through
    the unit section: reducing the restricted 2-form equals restricting the
    reduced one."""
    doc = _cotangent_world(n, k)
    doc["name"] = "leaf_reduction"
    doc["description"] = (
        "Leaf of the cotangent-circle structure at zero angle: reduction of "
        "the leaf symplectic form matches the reduced 2-form."
    )
    doc["checks"] = [
        {"do": "leaf_subgroupoid", "leaf_subgroupoid": "leaf_sub",
         "structure": "S", "expect": "pass"},
        {"do": "leaf_reduction", "reduction": "redn", "expect": "pass"},
    ]
    return doc


def poisson_quotient_counterexample(n: int = 2, k: int = 1) -> dict:
    """Quotient that keeps every momentum while collapsing configuration
    coordinates.  The forms stay multiplicative and the axioms hold, but the
    arrow dimension is n + k + 1 over a k-dimensional unit space, so the
    arrow_unit_dimension count fails: the naive quotient is not the structure
    the reduction produces."""
    _check_pair(n, k)
    qk = _qs(k)
    ps = _qs(n, "p")
    a_s, b_s = _qs(n, "a"), _qs(n, "b")
    xk = _qs(k, "x")
    return {
        "name": "poisson_quotient_counterexample",
        "description": (
            "Collapsing configurations without reducing momenta: every check "
            "passes except the arrow/unit dimension count."
        ),
        "charts": [
            {"name": "bad_units", "coords": xk},
            {"name": "bad_arrows", "coords": qk + ps + ["theta"],
             "periodic": ["theta"]},
            {"name": "bad_pairs", "coords": qk + a_s + ["alpha"] + b_s + ["beta"],
             "periodic": ["alpha", "beta"]},
        ],
        "maps": [
            {"name": "bsource", "source": "bad_arrows", "target": "bad_units",
             "components": qk},
            {"name": "btarget", "source": "bad_arrows", "target": "bad_units",
             "components": qk},
            {"name": "bunit", "source": "bad_units", "target": "bad_arrows",
             "components": xk + _zeros(n + 1)},
            {"name": "binverse", "source": "bad_arrows", "target": "bad_arrows",
             "components": qk + [f"-{p}" for p in ps] + ["-theta"]},
            {"name": "bpair_left", "source": "bad_pairs", "target": "bad_arrows",
             "components": qk + a_s + ["alpha"]},
            {"name": "bpair_right", "source": "bad_pairs", "target": "bad_arrows",
             "components": qk + b_s + ["beta"]},
            {"name": "bpair_product", "source": "bad_pairs", "target": "bad_arrows",
             "components": qk + [_sum2(a, b) for a, b in zip(a_s, b_s)]
                              + ["alpha + beta"]},
        ],
        "forms": [
            {"name": "omega_bad", "chart": "bad_arrows", "degree": 2,
             "coeffs": {f"dq{i}^dp{i}": "1" for i in range(1, k + 1)}},
            {"name": "eta_bad", "chart": "bad_arrows", "degree": 1,
             "coeffs": {"dtheta": "1"}},
        ],
        "structures": [{"name": "S_bad", "chart": "bad_arrows",
                        "omega": "omega_bad", "eta": "eta_bad"}],
        "groupoids": [
            {"name": "G_bad", "arrows": "bad_arrows", "units": "bad_units",
             "source": "bsource", "target": "btarget", "unit": "bunit",
             "inverse": "binverse",
             "pair": {"chart": "bad_pairs", "left": "bpair_left",
                      "right": "bpair_right", "product": "bpair_product"}},
        ],
        "checks": [
            {"do": "groupoid", "groupoid": "G_bad", "expect": "pass"},
            {"do": "multiplicative", "groupoid": "G_bad", "form": "omega_bad",
             "expect": "pass"},
            {"do": "multiplicative", "groupoid": "G_bad", "form": "eta_bad",
             "expect": "pass"},
            {"do": "cosymplectic_groupoid", "groupoid": "G_bad",
             "structure": "S_bad", "expect": "fail"},
        ],
    }


def hypersurface() -> dict:
    """Induced structure on a constant-radius slice of a four-dimensional
    symplectic cotangent space, with the radial direction as the transverse
    field; the induced pair passes every cosymplectic check."""
    return {
        "name": "hypersurface",
        "description": (
            "Slice of a symplectic 4-space along a transverse direction: the "
            "pulled-back 2-form and contracted 1-form are cosymplectic."
        ),
        "charts": [
            {"name": "ambient", "coords": ["x", "r", "px", "pr"]},
            {"name": "slice", "coords": ["x", "px", "pr"]},
        ],
        "forms": [
            {"name": "omega_amb", "chart": "ambient", "degree": 2,
             "coeffs": {"dx^dpx": "1", "dr^dpr": "1"}},
        ],
        "maps": [
            {"name": "incl", "source": "slice", "target": "ambient",
             "components": ["x", "0", "px", "pr"]},
        ],
        "fields": [
            {"name": "radial", "chart": "ambient",
             "components": ["0", "1", "0", "0"]},
        ],
        "checks": [
            {"do": "hypersurface", "ambient_form": "omega_amb",
             "inclusion": "incl", "transverse": "radial", "expect": "pass"},
        ],
    }


def symplectization() -> dict:
    """One-degree-of-freedom structure with a circle factor: the product with
    a line is symplectic, and a translation moment map lifts to a Hamiltonian
    one upstairs."""
    return {
        "name": "symplectization",
        "description": (
            "Product with a line is symplectic; translation momentum lifts to "
            "a line-independent Hamiltonian pairing."
        ),
        "charts": [
            {"name": "arrows", "coords": ["q1", "p1", "theta"],
             "periodic": ["theta"]},
        ],
        "forms": [
            {"name": "omega", "chart": "arrows", "degree": 2,
             "coeffs": {"dq1^dp1": "1"}},
            {"name": "eta", "chart": "arrows", "degree": 1,
             "coeffs": {"dtheta": "1"}},
        ],
        "structures": [{"name": "S", "chart": "arrows", "omega": "omega",
                        "eta": "eta"}],
        "actions": [
            {"name": "act", "space": "arrows", "translations": 1, "params": ["g1"],
             "components": ["q1 + g1", "p1", "theta"]},
        ],
        "moments": [{"name": "J", "chart": "arrows", "components": ["p1"],
                     "sign": 1}],
        "checks": [
            {"do": "cosymplectic", "structure": "S", "expect": "pass"},
            {"do": "leaf_distribution", "structure": "S", "expect": "pass"},
            {"do": "symplectization", "structure": "S", "expect": "pass"},
            {"do": "symplectization_correspondence", "structure": "S",
             "action": "act", "moment": "J", "expect": "pass"},
        ],
    }


def im_forms() -> dict:
    """Exact-section calculus over a symplectic plane: bracket axioms, the
    two defining identities of compatible form pairs, and the infinitesimal
    moment morphism for a translation action."""
    return {
        "name": "im_forms",
        "description": (
            "Symplectic plane with exact sections: bracket axioms, linear "
            "form-pair identities, and the translation moment morphism."
        ),
        "charts": [{"name": "plane", "coords": ["q", "p"]}],
        "poisson_bases": [{"name": "pi", "chart": "plane",
                           "upper": {"dq^dp": "1"}}],
        "exact_sections": [
            {"name": "s_q", "chart": "plane", "f": "q", "g": "0"},
            {"name": "s_p", "chart": "plane", "f": "p", "g": "1"},
            {"name": "s_mix", "chart": "plane", "f": "q*p", "g": "q"},
            {"name": "s_trig", "chart": "plane", "f": "sin(q)", "g": "cos(p)"},
        ],
        "im_pairs": [{"name": "central", "chart": "plane", "central": True}],
        "actions": [
            {"name": "shift", "space": "plane", "translations": 1,
             "params": ["c1"], "components": ["q + c1", "p"]},
        ],
        "checks": [
            {"do": "algebroid", "base": "pi",
             "sections": ["s_q", "s_p", "s_mix", "s_trig"], "expect": "pass"},
            {"do": "im_2form", "base": "pi", "pair": "central",
             "sections": ["s_q", "s_p", "s_mix", "s_trig"], "expect": "pass"},
            {"do": "im_1form", "base": "pi", "pair": "central",
             "sections": ["s_q", "s_p", "s_mix", "s_trig"], "expect": "pass"},
            {"do": "infinitesimal_moment", "base": "pi", "action": "shift",
             "pair": "central", "sections": ["s_q", "s_p", "s_mix"],
             "expect": "pass"},
        ],
    }


def averaging() -> dict:
    """Torus averaging of a non-closed, non-invariant 1-form: the output is
    invariant, closed, identical across quadrature orders, and a fixed point
    of averaging."""
    return {
        "name": "averaging",
        "description": (
            "Circle-averaging a 1-form with a non-invariant coefficient "
            "produces the invariant closed part; quadrature is exact."
        ),
        "charts": [{"name": "cyl", "coords": ["q", "theta"],
                    "periodic": ["theta"]}],
        "forms": [
            {"name": "alpha", "chart": "cyl", "degree": 1,
             "coeffs": {"dq": "sin(theta)", "dtheta": "1"}},
        ],
        "actions": [
            {"name": "rot", "space": "cyl", "torus": 1, "params": ["beta1"],
             "components": ["q", "theta + beta1"]},
        ],
        "checks": [
            {"do": "average_one_form", "action": "rot", "form": "alpha",
             "order": 64, "compare_order": 128, "expect": "pass"},
        ],
    }


def _mutate_product_sign(doc: dict) -> dict:
    """Flips the angle sign in the partial product map.  Caught by the
    composable-triple consistency and inverse-law checks and by the
    multiplicativity defect of the 1-form (multiplicative_eta.pair_additivity)."""
    for m in doc["maps"]:
        if m["name"] == "pair_product":
            m["components"][-1] = "alpha - beta"
    doc["checks"] = [
        {"do": "cosymplectic_groupoid", "groupoid": "G", "structure": "S",
         "expect": "pass"},
    ]
    return doc


def _mutate_omega_zero(doc: dict) -> dict:
    """Replaces the 2-form by zero.  Closedness and multiplicativity hold
    vacuously; caught by volume_nonvanishing (and flat_invertible)."""
    for f in doc["forms"]:
        if f["name"] == "omega":
            f["coeffs"] = {}
    doc["checks"] = [
        {"do": "cosymplectic", "structure": "S", "expect": "pass"},
    ]
    return doc


def _mutate_broken_invariance(doc: dict, n: int, k: int) -> dict:
    """Adds a closed multiplicative perturbation that depends on a translated
    coordinate.  Static structure checks still pass; caught by
    action.omega_invariant in the reduction pipeline."""
    key = f"dq{k + 1}^dp1"
    for f in doc["forms"]:
        if f["name"] == "omega":
            f["coeffs"][key] = f"cos(q{k + 1})"
    doc["checks"] = [
        {"do": "cosymplectic", "structure": "S", "expect": "pass"},
        {"do": "cosymplectic_groupoid", "groupoid": "G", "structure": "S",
         "expect": "pass"},
        {"do": "groupoid_reduction", "reduction": "redn", "expect": "pass"},
    ]
    return doc


def _mutate_moment_doubled(doc: dict, n: int, k: int) -> dict:
    """Doubles the moment components.  The zero level is unchanged, but the
    generators are Hamiltonian for the original pairing; caught by
    moment.hamiltonian_condition."""
    for m in doc["moments"]:
        if m["name"] == "J":
            m["components"] = [f"2 * p{i}" for i in range(k + 1, n + 1)]
    doc["checks"] = [
        {"do": "groupoid_reduction", "reduction": "redn", "expect": "pass"},
    ]
    return doc


def _mutate_non_basic(doc: dict, n: int, k: int) -> dict:
    """Overrides the level-set solve target with a form that varies along the
    orbits.  The pointwise solve still succeeds with zero residual; caught by
    reduced_forms.omega_basic (solutions differ across fiber sections)."""
    doc["forms"].append({
        "name": "drifting_target", "chart": "level", "degree": 2,
        "coeffs": {"dq1^dp1": f"1 + q{k + 1}"},
    })
    for r in doc["reductions"]:
        if r["name"] == "redn":
            r["solve_omega_target"] = "drifting_target"
            r.pop("reduced_omega", None)
            r.pop("reduced_eta", None)
    doc["checks"] = [
        {"do": "groupoid_reduction", "reduction": "redn", "expect": "pass"},
    ]
    return doc


def _mutate_bad_transversality(doc: dict) -> dict:
    """Points the transverse field along the slice instead of across it.
    Caught by the transversality stage, which reports the offending sample."""
    for f in doc["fields"]:
        if f["name"] == "radial":
            f["components"] = ["1", "0", "0", "0"]
    doc["checks"] = [
        {"do": "hypersurface", "ambient_form": "omega_amb", "inclusion": "incl",
         "transverse": "radial", "expect": "pass"},
    ]
    return doc


BUILDERS: dict[str, Callable[..., dict]] = {
    "cotangent_s1": cotangent_s1,
    "poisson_quotient_counterexample": poisson_quotient_counterexample,
    "hypersurface": hypersurface,
    "symplectization": symplectization,
    "leaf_reduction": leaf_reduction,
    "im_forms": im_forms,
    "averaging": averaging,
}

_PARAMETRIC = {"cotangent_s1", "leaf_reduction", "poisson_quotient_counterexample"}

# mutation name -> (base example, expected failing check names)
MUTATIONS: dict[str, tuple[str, tuple[str, ...]]] = {
    "product_sign_flip": ("cotangent_s1",
                          ("multiplicative_eta.pair_additivity",)),
    "omega_zero": ("cotangent_s1", ("volume_nonvanishing",)),
    "broken_invariance": ("cotangent_s1", ("action.omega_invariant",)),
    "moment_doubled": ("cotangent_s1", ("moment.hamiltonian_condition",)),
    "non_basic": ("cotangent_s1", ("reduced_forms.omega_basic",)),
    "bad_transversality": ("hypersurface", ("transversality",)),
}


def names() -> list[str]:
    return sorted(BUILDERS)


def mutation_names() -> list[str]:
    return sorted(MUTATIONS)


def build(name: str, n: int = 2, k: int = 1) -> dict:
    """Build an example or mutation manifest by name.  The n/k parameters are
    honored by the parametric families and ignored elsewhere."""
    if name in BUILDERS:
        if name in _PARAMETRIC:
            return BUILDERS[name](n, k)
        return BUILDERS[name]()
    if name in MUTATIONS:
        base, _ = MUTATIONS[name]
        doc = build(base, n, k)
        doc["name"] = f"{base}__{name}"
        if name == "product_sign_flip":
            doc = _mutate_product_sign(doc)
        elif name == "omega_zero":
            doc = _mutate_omega_zero(doc)
        elif name == "broken_invariance":
            doc = _mutate_broken_invariance(doc, n, k)
        elif name == "moment_doubled":
            doc = _mutate_moment_doubled(doc, n, k)
        elif name == "non_basic":
            doc = _mutate_non_basic(doc, n, k)
        elif name == "bad_transversality":
            doc = _mutate_bad_transversality(doc)
        doc["description"] = f"Deliberate defect '{name}': {doc['description']}"
        return doc
    raise KeyError(f"unknown example '{name}'")
