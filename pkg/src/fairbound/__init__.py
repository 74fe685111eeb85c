"""Certified bounds on the fairness cost of differentially private training.

The package trains strongly convex linear classifiers, releases them under
(epsilon, delta)-differential privacy (output perturbation or DP-SGD), and
certifies, with high probability, how far the private model's group-fairness
level can drift from the non-private optimum's.  See README.md for the
pipeline walkthrough and demos/ for narrative examples.
"""

from .bounds import (
    BoundEntry,
    BoundReport,
    MarginProfile,
    bound_report,
    chernoff_term_bound,
    chi,
    gap_bound,
    golden_section,
    margin_profile,
    markov_gap_bound,
    refined_lipschitz_profile,
    theorem3_bound,
    theorem3_report,
    truncated_markov_gap_bound,
)
from .dataset import (
    CellSpec,
    Dataset,
    Example,
    GroupPartition,
    SyntheticSpec,
    load_csv,
    partition,
    split,
    synthesize,
    write_csv,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DataError,
    EmptyDatasetError,
    FairboundError,
    ParseError,
    SchemaError,
)
from .fairness import (
    NOTIONS,
    FairnessSpec,
    aggregate_fairness,
    coefficients,
    conditional_accuracy,
    direct_fairness,
    group_fairness,
    group_fairness_all,
)
from .finite_sample import FiniteSampleParams, dependent_slack, independent_slack
from .model import (
    LinearModel,
    distance,
    load_model,
    margin,
    pointwise_lipschitz,
    predict,
    project,
    save_model,
)
from .privacy import (
    DpSgdBound,
    DpSgdConfig,
    PrivacyParams,
    dpsgd,
    dpsgd_distance_bound,
    dpsgd_noise,
    output_noise_variance,
    output_perturb,
    output_perturb_distance_bound,
)
from .trainer import LossConstants, constants, fit_erm, gradient, loss

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
