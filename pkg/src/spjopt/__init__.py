"""spjopt: rewrite select-project-join plans for minimum intermediate size growth.

Given an SPJ plan and unary key constraints, the pipeline builds a relational
representation of the plan, chases it, takes its core, and synthesizes a
well-behaved equivalent plan whose intermediate relations grow with the
smallest possible exponent in the input's maximum relation size; every stage
is independently checkable at desk scale.
"""

from .constraints import ChaseResult, KeySet, chase, satisfies_keys
from .colorwidth import (
    ColorClass,
    ColorSolution,
    WidthReport,
    color_number,
    cwidth_of_decomposition,
    optimal_cwidth,
    valid_color_classes,
)
from .errors import (
    ArityError,
    DegenerateInputError,
    FormatError,
    KeyConstraintError,
    PlanSyntaxError,
    ResourceCapError,
    SignatureError,
    SpjError,
    WellBehavedError,
)
from .plans import (
    Basic,
    EvalTrace,
    Join,
    Plan,
    Project,
    Select,
    arity_of,
    evaluate_naive,
    evaluate_well_behaved,
    is_well_behaved,
    parse_plan,
    print_plan,
    subplans,
    theta_of,
)
from .represent import (
    PDecomposition,
    PRepresentation,
    TreeDecomposition,
    build_representation,
    check_containment_property,
    check_tree_decomposition,
)
from .structures import (
    Hypergraph,
    OpenStructure,
    Signature,
    Structure,
    check_isomorphic,
    compute_core,
    find_homomorphism,
    homs_relation,
    hypergraph_of,
)
from .synthesis import (
    Caps,
    FdElimination,
    SynthesisResult,
    UNCAPPED,
    check_equivalence,
    eliminate_fds,
    intermediate_degree_bound,
    optimize,
    optimize_full,
    output_degree,
    synthesize_plan,
)
from .witness import WitnessFamily, bag_witness, product_witness

__version__ = "0.1.0"

__all__ = [
    "ArityError",
    "Basic",
    "Caps",
    "ChaseResult",
    "ColorClass",
    "ColorSolution",
    "DegenerateInputError",
    "EvalTrace",
    "FdElimination",
    "FormatError",
    "Hypergraph",
    "Join",
    "KeyConstraintError",
    "KeySet",
    "OpenStructure",
    "PDecomposition",
    "PRepresentation",
    "Plan",
    "PlanSyntaxError",
    "Project",
    "ResourceCapError",
    "Select",
    "Signature",
    "SignatureError",
    "SpjError",
    "Structure",
    "SynthesisResult",
    "TreeDecomposition",
    "UNCAPPED",
    "WellBehavedError",
    "WidthReport",
    "WitnessFamily",
    "arity_of",
    "bag_witness",
    "build_representation",
    "chase",
    "check_containment_property",
    "check_equivalence",
    "check_isomorphic",
    "check_tree_decomposition",
    "color_number",
    "compute_core",
    "cwidth_of_decomposition",
    "eliminate_fds",
    "evaluate_naive",
    "evaluate_well_behaved",
    "find_homomorphism",
    "homs_relation",
    "hypergraph_of",
    "intermediate_degree_bound",
    "is_well_behaved",
    "optimal_cwidth",
    "optimize",
    "optimize_full",
    "output_degree",
    "parse_plan",
    "print_plan",
    "product_witness",
    "satisfies_keys",
    "subplans",
    "synthesize_plan",
    "theta_of",
    "valid_color_classes",
]
