"""Feature extraction: canonical catalog, surrogates, registry, vectors."""

from .registry import (
    BASE_FEATURES,
    SELECTED_CANONICAL,
    FeatureDef,
    FeatureRegistry,
    canonical_registry,
    extract_feature,
    list_features,
    reproduction_registry,
    selected_profile,
)
from .vectors import (
    FeatureVector,
    StandardizationParams,
    extract_matrix,
    extract_vector,
    read_matrix,
    standardize_apply,
    standardize_fit,
    to_arrays,
    write_matrix,
)

__all__ = [
    "BASE_FEATURES",
    "SELECTED_CANONICAL",
    "FeatureDef",
    "FeatureRegistry",
    "FeatureVector",
    "StandardizationParams",
    "canonical_registry",
    "extract_feature",
    "extract_matrix",
    "extract_vector",
    "list_features",
    "read_matrix",
    "reproduction_registry",
    "selected_profile",
    "standardize_apply",
    "standardize_fit",
    "to_arrays",
    "write_matrix",
]
