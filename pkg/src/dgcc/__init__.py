"""Decomposability-guaranteed cooperative coevolution for itinerary planning."""

from .encoding import (
    DecompositionPlan,
    Genome,
    SegmentView,
    decode,
    genome_from_text,
    genome_to_text,
    initial_decomposition,
    segment_of,
    validate,
)
from .framework import (
    ResourceLedger,
    RunConfig,
    RunResult,
    allocate_resources,
    balancing_coefficient,
    component_hv,
    detect_stagnation,
    dynamic_adjust,
    optimization_potential,
    run_dgcc,
    run_global_nsga2,
    write_run_outputs,
)
from .instance import (
    ClusteredInstance,
    DecomposabilityReport,
    GenericObjectiveForm,
    GeneratorSpec,
    InstanceError,
    Poi,
    brute_force_optimal_path,
    check_weak_decomposability,
    generate_instance,
    load_instance,
    path_cost,
    save_instance,
    visit_count,
)
from .objectives import (
    EvalConfig,
    ObjectiveVector,
    evaluate_full,
    evaluate_segment,
    normalized_fitness,
    omega,
)
from .pareto import (
    ParetoArchive,
    RefPolicy,
    ReferencePoint,
    choose_reference_point,
    crowding_distance,
    dominates,
    hv_contribution,
    hypervolume,
    non_dominated_sort,
)

__version__ = "0.1.0"

__all__ = [
    "ClusteredInstance",
    "DecomposabilityReport",
    "DecompositionPlan",
    "EvalConfig",
    "GenericObjectiveForm",
    "GeneratorSpec",
    "Genome",
    "InstanceError",
    "ObjectiveVector",
    "ParetoArchive",
    "Poi",
    "RefPolicy",
    "ReferencePoint",
    "ResourceLedger",
    "RunConfig",
    "RunResult",
    "SegmentView",
    "allocate_resources",
    "balancing_coefficient",
    "brute_force_optimal_path",
    "check_weak_decomposability",
    "choose_reference_point",
    "component_hv",
    "crowding_distance",
    "decode",
    "detect_stagnation",
    "dominates",
    "dynamic_adjust",
    "evaluate_full",
    "evaluate_segment",
    "generate_instance",
    "genome_from_text",
    "genome_to_text",
    "hv_contribution",
    "hypervolume",
    "initial_decomposition",
    "load_instance",
    "normalized_fitness",
    "non_dominated_sort",
    "omega",
    "optimization_potential",
    "path_cost",
    "run_dgcc",
    "run_global_nsga2",
    "save_instance",
    "segment_of",
    "validate",
    "visit_count",
    "write_run_outputs",
]
