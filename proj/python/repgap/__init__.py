from ._core import (
    IoError,
    NumericalError,
    UsageError,
    ValidationError,
    hypothesis_test,
    js_divergence,
    kl_divergence,
    mahalanobis_set,
    mahalanobis_upper_bound,
    p_value,
    read_features,
    run_cli,
    wasserstein2_set,
    within_set_mahalanobis,
)

__all__ = [
    "IoError",
    "NumericalError",
    "UsageError",
    "ValidationError",
    "hypothesis_test",
    "js_divergence",
    "kl_divergence",
    "mahalanobis_set",
    "mahalanobis_upper_bound",
    "p_value",
    "read_features",
    "run_cli",
    "wasserstein2_set",
    "within_set_mahalanobis",
]
