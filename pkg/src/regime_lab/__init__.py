"""Market regime clustering on empirical return distributions."""
from ._kernels import BACKEND
from .accuracy import AccuracyReport, accuracy_scores, colouring_series, membership_vectors
from .clustering import Clustering, KMeansConfig, Metric, kmeans_generic, mk_means, total_cluster_variation, within_cluster_variation, wk_means
from .hmm import GaussianHmm, HmmFitConfig, decode, fit_gaussian_hmm
from .measures import (
    EmpiricalMeasure,
    PriceStream,
    WindowConfig,
    empirical_measure,
    lift,
    log_returns,
    mean_variance_projection,
    moment_map,
    standardize_columns,
    window_matrix,
)
from .synthetic import GbmParams, MertonParams, RegimeSchedule, build_schedule, simulate_gbm, simulate_merton, true_moments
from .validation import (
    MmdSamplingConfig,
    between_cluster_mmd,
    davies_bouldin,
    dunn,
    gaussian_kernel,
    mmd_biased,
    silhouette_alpha,
    within_cluster_similarity,
)
from .wasserstein import ot_oracle, wasserstein_barycenter, wasserstein_distance

__version__ = "0.1.0"
