"""Simulation and statistical verification toolkit for random walks on
critical random trees, their trap representations, and the associated
subordinated scaling limits."""

from .trees import (
    OrderedTree,
    SearchDepthCurve,
    ReducedSubtreeIndex,
    search_depth,
    tree_from_search_depth,
    tree_from_parens,
    reduce_tree,
    graph_distance,
)
from .clusters import (
    Substrate,
    PercolationParams,
    CapExceededError,
    sample_cluster,
    sample_cluster_sizes,
    cluster_size_laplace,
    cluster_size_pmf,
    sample_conditioned_cluster,
    sample_uniform_tree,
    dual_parameter,
    extinction_probability,
    scales,
)
from .walks import (
    WalkPath,
    LocalTimeCurve,
    walk,
    local_time_root,
    sample_sigma,
    sample_sigma_tilde,
    expected_exit_time_exact,
    project_walk,
    rtrw,
)
from .infinite import (
    IICInstance,
    IPCInstance,
    EnvelopeProcess,
    build_iic,
    invade,
    estimate_backbone,
    sample_envelope,
    structural_ipc_branches,
)
from .processes import (
    AtomicMeasure,
    SubordinatorPath,
    LatticeReflectedPath,
    sample_stable_ppp,
    sample_inverse_gaussian,
    sample_inverse_gaussian_path,
    ig_laplace,
    mu_ipc,
    psi_epsilon,
    reflected_lattice_bm,
)
from .continuum import (
    ExcursionGrid,
    MetricSkeleton,
    TreeMassMeasure,
    SSBMPath,
    sample_excursion,
    crt_pseudometric,
    reduced_tree_from_excursion,
    line_breaking,
    sample_skeleton_with_masses,
    sample_branch_mass_measure,
    crt_inverse_local_time_sampler,
    ssbm_simulate,
    k_ssbm_simulate,
)
from .rng import substream

__version__ = "0.1.0"
