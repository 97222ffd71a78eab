"""Robust conditional decision making with kernel ambiguity sets.

Estimate conditional distributions from paired samples as feature-space
expansions, surround them with query-adaptive ambiguity balls, solve the
dualized worst-case problem as a finite conic program, and apply the whole
stack to two-stage power dispatch.
"""

from .conic import (
    ConicProgram,
    ConicSolution,
    ProgramBuilder,
    SolverFailure,
    solve_conic,
    validate_solution,
)
from .dro import (
    CertificationSet,
    CostModel,
    DroSolution,
    assemble_dual,
    build_certification_set,
    evaluate_dual_function,
    solve_ckdro,
)
from .embedding import (
    AmbiguityBall,
    Dataset,
    EmbeddingWeights,
    adaptive_radius,
    ambiguity_ball,
    conditional_weights_augmented,
    conditional_weights_plain,
    mmd,
    regularization_schedule,
)
from .kernels import (
    Composite,
    CyclicGaussian,
    Gaussian,
    GramMatrix,
    Laplacian,
    Polynomial,
    UnboundedKernelError,
    evaluate,
    gram,
    kernel_from_dict,
    kernel_to_dict,
    lipschitz_modulus,
    rkhs_distance,
    rkhs_distances,
    sup_bound,
)
from .opf import (
    DispatchPlan,
    Generator,
    Line,
    OpfResult,
    PowerNetwork,
    RecourseResult,
    load_network,
    opf_cost_model,
    second_stage,
    solve_opf,
    worst_case_cost,
)
from .oracle import (
    DiscreteDistribution,
    embedding_convergence,
    lipschitz_check,
    primal_inner_max,
    subset_check,
    wasserstein_discrete,
)
from .pipeline import (
    BenchmarkReport,
    DatasetSchema,
    ExperimentConfig,
    kernel_interpolation,
    load_dataset,
    run_benchmarks,
    save_dataset,
)
from .report import emit_report
from .synthetic import SyntheticSpec, synth_generate

__version__ = "0.1.0"
