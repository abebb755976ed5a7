"""Graph-kernel Stein goodness-of-fit tests for inhomogeneous random graphs."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    Graph,
    GraphParseError,
    degree_vector,
    load_graph,
    load_labels,
    pair_from_index,
    pair_index,
    with_edge,
    write_graph,
)
from .kernels import KernelMatrix, KernelSpec, kernel_matrix, perturbation_list  # noqa: E402
from .models import (  # noqa: E402
    DcsbmParams,
    ErmmParams,
    NlpaParams,
    chung_lu_probabilities,
    dcsbm_estimate,
    dcsbm_probabilities,
    er_probabilities,
    ermm_mle,
    ermm_probabilities,
    irg_sample,
    nlpa_sample,
)
from .stein import (  # noqa: E402
    SteinDiagnostics,
    gkss_squared,
    gkss_squared_resampled,
    h_matrix,
    theorem_bound,
)
from .mctest import (  # noqa: E402
    PowerSummary,
    TestResult,
    empirical_quantile,
    power_experiment,
    run_test,
    run_test_estimated,
    run_test_resampled,
    two_sided_pvalue,
)
from .baselines import glr_test, lei_bootstrap_test  # noqa: E402
from .plant import PlantOutcome, plant_clique, plant_hub, plant_hubs  # noqa: E402
from .config import ExperimentConfig, load_config, load_preset  # noqa: E402

__all__ = [
    "__version__",
    "# noqa: E402",
    "Graph",
    "GraphParseError",
    "degree_vector",
    "load_graph",
    "load_labels",
    "pair_from_index",
    "pair_index",
    "with_edge",
    "write_graph",
    "KernelMatrix",
    "KernelSpec",
    "kernel_matrix",
    "perturbation_list",
    "# noqa: E402",
    "DcsbmParams",
    "ErmmParams",
    "NlpaParams",
    "chung_lu_probabilities",
    "dcsbm_estimate",
    "dcsbm_probabilities",
    "er_probabilities",
    "ermm_mle",
    "ermm_probabilities",
    "irg_sample",
    "nlpa_sample",
    "# noqa: E402",
    "SteinDiagnostics",
    "gkss_squared",
    "gkss_squared_resampled",
    "h_matrix",
    "theorem_bound",
    "# noqa: E402",
    "PowerSummary",
    "TestResult",
    "empirical_quantile",
    "power_experiment",
    "run_test",
    "run_test_estimated",
    "run_test_resampled",
    "two_sided_pvalue",
    "glr_test",
    "lei_bootstrap_test",
    "PlantOutcome",
    "plant_clique",
    "plant_hub",
    "plant_hubs",
    "ExperimentConfig",
    "load_config",
    "load_preset",
]
