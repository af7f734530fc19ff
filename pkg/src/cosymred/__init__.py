"""Numeric-symbolic verification of cosymplectic structures on explicit Lie
groupoid presentations: structure checks, multiplicative forms, moment maps,
zero-level reduction, leaf restriction, and the induced linear form data at
units.

Entities are built from small symbolic expressions over named charts and
verified pointwise at seeded samples; see the README for the manifest format
and the `cosymred` command line.
"""

from .actions import GroupAction, GroupModel, group_action
from .algebroid import (
    ExactSection,
    IMFormPair,
    PoissonBase,
    central_pair,
    exact_section,
    induced_im_forms,
    poisson_base,
    section_bracket,
    verify_algebroid_structure,
    verify_im_1form,
    verify_im_2form,
    verify_infinitesimal_moment,
    verify_reduced_im_forms,
)
from .charts import (
    Chart,
    GeometryError,
    Point,
    SmoothMap,
    VectorField,
    chart,
    commutator,
    compose,
    identity_map,
    seeded_rng,
    smooth_map,
    vector_field,
)
from .cosym import (
    CosymplecticStructure,
    Symplectization,
    TransversalityError,
    average_one_form,
    cosymplectic,
    from_symplectic_hypersurface,
    hamiltonian_vf,
    leaf_distribution,
    poisson_bracket,
    reeb,
    symplectization,
    verify_cosymplectic,
    verify_reeb,
    verify_symplectization,
    volume_form,
)
from .expr import Expr, ParseError, differentiate, evaluate, parse, simplify, to_text
from .forms import (
    DifferentialForm,
    d_coord,
    exterior_derivative,
    form_from_strings,
    interior_product,
    lie_derivative,
    one_form,
    pullback_form,
    wedge,
    wedge_power,
)
from .gallery import build as build_example
from .groupoid import (
    GroupoidPresentation,
    LeafSubgroupoid,
    PairChart,
    TripleChart,
    verify_cosymplectic_groupoid,
    verify_groupoid,
    verify_groupoid_morphism,
    verify_leaf_subgroupoid,
    verify_multiplicative,
)
from .manifest import ManifestError, World, load_path, load_world
from .reduction import (
    LeafReductionData,
    MomentMap,
    ReductionPresentation,
    moment_map,
    solve_reduced_forms,
    verify_cosymplectic_action,
    verify_groupoid_reduction,
    verify_infinitesimal_reduction_square,
    verify_leaf_reduction,
    verify_moment_map,
    verify_regular_value,
    verify_symplectization_correspondence,
)
from .report import CheckReport, CheckResult, RunReport, Tolerances, format_report
from .runner import run_world

__version__ = "0.1.0"
