"""One-shot federated clustering of fragmented, multi-granular client data.

Clients discover fine micro-clusters with competitive penalized learning
and upload only centroids; the server stacks the uploads, explores them at
multiple granularities, re-encodes the levels categorically, and clusters
down to the target count. The package also ships the heterogeneity degree
used to characterize such federations, the partitioner that simulates
them, and a clustering-evaluation suite.
"""

from .client import ClientResult, fcpl_fit
from .config import PartitionSpec, RunConfig, apply_lambda_level
from .cpl import (
    CplResult,
    CplState,
    eliminate,
    gamma,
    run_cpl,
    select_winner_rival,
    similarity,
    update_importance,
    update_weights,
)
from .data import AffiliationMatrix, Dataset, load_csv, minmax_scale
from .encoding import (
    EncodedMatrix,
    FeatureClusterWeights,
    GlobalResult,
    encode,
    match_similarity,
    remc_cluster,
    update_weights_U,
)
from .errors import (
    CompetitionExhausted,
    ConfigError,
    DataFormatError,
    GoldError,
    MetricUndefinedError,
    ValidationError,
)
from .heterogeneity import (
    DensityProfile,
    density_profile,
    js,
    kl,
    non_icd_degree,
    pairwise_js_matrix,
    select_bandwidth,
)
from .messages import CentroidUpload, parse_upload, serialize_upload
from .metrics import (
    ContingencyTable,
    acc,
    all_indices,
    ari,
    calinski_harabasz,
    contingency_table,
    nmi,
    purity,
    silhouette,
)
from .pipeline import (
    BenchResult,
    ExperimentReport,
    GoldRun,
    ablate,
    assign_only_global_eval,
    bench_scaling,
    run_gold,
    run_gold_detailed,
)
from .server import (
    GranularityStack,
    StackedCentroids,
    mcpl_explore,
    normalized_similarity,
    stack_uploads,
)
from .simulate import FederationSplit, even_split, kmeans, simulate_non_icd

__version__ = "0.1.0"

__all__ = [
    "AffiliationMatrix",
    "BenchResult",
    "CentroidUpload",
    "ClientResult",
    "CompetitionExhausted",
    "ConfigError",
    "ContingencyTable",
    "CplResult",
    "CplState",
    "DataFormatError",
    "Dataset",
    "DensityProfile",
    "EncodedMatrix",
    "ExperimentReport",
    "FeatureClusterWeights",
    "FederationSplit",
    "GlobalResult",
    "GoldError",
    "GoldRun",
    "GranularityStack",
    "MetricUndefinedError",
    "PartitionSpec",
    "RunConfig",
    "StackedCentroids",
    "ValidationError",
    "ablate",
    "acc",
    "all_indices",
    "apply_lambda_level",
    "ari",
    "assign_only_global_eval",
    "bench_scaling",
    "calinski_harabasz",
    "contingency_table",
    "density_profile",
    "eliminate",
    "encode",
    "even_split",
    "fcpl_fit",
    "gamma",
    "js",
    "kl",
    "kmeans",
    "load_csv",
    "match_similarity",
    "mcpl_explore",
    "minmax_scale",
    "nmi",
    "non_icd_degree",
    "normalized_similarity",
    "pairwise_js_matrix",
    "parse_upload",
    "purity",
    "remc_cluster",
    "run_cpl",
    "run_gold",
    "run_gold_detailed",
    "select_bandwidth",
    "select_winner_rival",
    "serialize_upload",
    "silhouette",
    "simulate_non_icd",
    "similarity",
    "stack_uploads",
    "update_importance",
    "update_weights",
    "update_weights_U",
]
