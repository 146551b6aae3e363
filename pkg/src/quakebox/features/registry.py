"""Feature registry: codes, metadata, and extraction dispatch.

A registry is an ordered, immutable collection of :class:`FeatureDef`.  The
canonical catalog registers the 22 time-series features as C1..C22 (in the
reference package's output order); the reproduction profile prepends the
four W1..W4 surrogate features for 26 inputs in total.  Plugins are just
additional ``FeatureDef`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..errors import DegenerateSeries, UnknownFeature
from . import catalog, surrogates


@dataclass(frozen=True)
class FeatureDef:
    """One registered feature.

    ``standardize_input`` marks features defined on z-scored series (sample
    std, ddof=1); the registry applies the transform before dispatch.
    ``affine_invariant`` declares whether the value is unchanged under
    x -> a*x + b with a > 0, which the property suite asserts.
    """

    code: str
    name: str
    func: Callable[[np.ndarray], float]
    min_length: int
    standardize_input: bool
    affine_invariant: bool
    description: str


class FeatureRegistry:
    """Immutable ordered mapping from feature code to definition."""

    def __init__(self, defs: Iterable[FeatureDef]):
        self._defs: dict[str, FeatureDef] = {}
        for d in defs:
            if d.code in self._defs:
                raise ValueError(f"duplicate feature code {d.code!r}")
            self._defs[d.code] = d

    def codes(self) -> tuple[str, ...]:
        return tuple(self._defs)

    def get(self, code: str) -> FeatureDef:
        try:
            return self._defs[code]
        except KeyError:
            raise UnknownFeature(f"feature code {code!r} is not registered") from None

    def __contains__(self, code: str) -> bool:
        return code in self._defs

    def __len__(self) -> int:
        return len(self._defs)

    def __iter__(self) -> Iterator[FeatureDef]:
        return iter(self._defs.values())

    def merged(self, extra: "FeatureRegistry | Sequence[FeatureDef]") -> "FeatureRegistry":
        """New registry with additional definitions appended."""
        return FeatureRegistry(list(self) + list(extra))

    def extract(self, code: str, samples: np.ndarray) -> float:
        """Compute one feature on one series.

        Rejects series shorter than the feature's documented minimum or with
        zero variance (standardization would be undefined), and refuses to
        return non-finite values.
        """
        d = self.get(code)
        x = np.asarray(samples, dtype=float)
        if x.ndim != 1 or x.size < d.min_length:
            raise DegenerateSeries(
                f"{code} needs a 1-D series of at least {d.min_length} samples, got {x.shape}"
            )
        sd = x.std(ddof=1)
        if not sd > 0:
            raise DegenerateSeries(f"{code} is undefined on a constant series")
        if d.standardize_input:
            x = (x - x.mean()) / sd
        value = float(d.func(x))
        if not np.isfinite(value):
            raise DegenerateSeries(f"{code} produced a non-finite value")
        return value


def list_features(registry: FeatureRegistry) -> tuple[str, ...]:
    """Feature codes in registration order."""
    return registry.codes()


def extract_feature(samples: np.ndarray, code: str, registry: "FeatureRegistry | None" = None) -> float:
    """Compute one feature; defaults to the full reproduction registry."""
    if registry is None:
        registry = reproduction_registry()
    return registry.extract(code, samples)


def _canonical_defs() -> list[FeatureDef]:
    entries = [
        ("C1", "DN_HistogramMode_5", catalog.histogram_mode_5, 10,
         "5-bin histogram mode of the standardized distribution"),
        ("C2", "DN_HistogramMode_10", catalog.histogram_mode_10, 10,
         "10-bin histogram mode of the standardized distribution"),
        ("C3", "CO_f1ecac", catalog.acf_first_1e_crossing, 10,
         "first 1/e crossing of the autocorrelation function"),
        ("C4", "CO_FirstMin_ac", catalog.acf_first_minimum, 10,
         "first local minimum of the autocorrelation function"),
        ("C5", "CO_HistogramAMI_even_2_5", catalog.histogram_ami_even_2_5, 10,
         "automutual information at lag 2, 5 even bins"),
        ("C6", "CO_trev_1_num", catalog.time_reversal_asymmetry, 4,
         "time-reversibility: mean cubed successive difference"),
        ("C7", "MD_hrv_classic_pnn40", catalog.high_delta_fraction, 4,
         "fraction of successive differences exceeding 0.04"),
        ("C8", "SB_BinaryStats_mean_longstretch1", catalog.longest_stretch_above_mean, 10,
         "longest run above the mean"),
        ("C9", "SB_TransitionMatrix_3ac_sumdiagcov", catalog.transition_matrix_trace_cov, 20,
         "trace of covariance of the 3-symbol transition matrix"),
        ("C10", "PD_PeriodicityWang_th0_01", catalog.periodicity_wang, 20,
         "first significant autocorrelation peak after spline detrending"),
        ("C11", "CO_Embed2_Dist_tau_d_expfit_meandiff", catalog.embedding_distance_expfit_diff, 20,
         "exponential-fit mismatch of embedding distance distribution"),
        ("C12", "IN_AutoMutualInfoStats_40_gaussian_fmmi", catalog.ami_gaussian_first_minimum, 10,
         "first minimum of Gaussian automutual information"),
        ("C13", "FC_LocalSimple_mean1_tauresrat", catalog.forecast_mean1_decorrelation_ratio, 10,
         "decorrelation-lag ratio after lag-1 mean forecasting"),
        ("C14", "DN_OutlierInclude_p_001_mdrmd", catalog.outlier_timing_positive, 10,
         "median timing of positive deviations across thresholds"),
        ("C15", "DN_OutlierInclude_n_001_mdrmd", catalog.outlier_timing_negative, 10,
         "median timing of negative deviations across thresholds"),
        ("C16", "SP_Summaries_welch_rect_area_5_1", catalog.spectral_power_lowest_fifth, 16,
         "spectral power in the lowest fifth of frequencies"),
        ("C17", "SB_BinaryStats_diff_longstretch0", catalog.longest_stretch_decreasing, 10,
         "longest run of successive decreases"),
        ("C18", "SB_MotifThree_quantile_hh", catalog.motif_three_pair_entropy, 10,
         "entropy of consecutive pairs in a 3-letter quantile alphabet"),
        ("C19", "SC_FluctAnal_2_dfa_50_1_2_logi_prop_r1", catalog.dfa_scaling_split, 16,
         "DFA fluctuation-scaling breakpoint fraction"),
        ("C20", "SC_FluctAnal_2_rsrangefit_50_1_logi_prop_r1", catalog.range_fit_scaling_split, 16,
         "rescaled-range fluctuation-scaling breakpoint fraction"),
        ("C21", "SP_Summaries_welch_rect_centroid", catalog.spectral_centroid_welch, 16,
         "median-power angular frequency of the spectrum"),
        ("C22", "FC_LocalSimple_mean3_stderr", catalog.forecast_mean3_residual_spread, 8,
         "spread of rolling 3-sample-mean forecast errors"),
    ]
    return [
        FeatureDef(
            code=code,
            name=name,
            func=func,
            min_length=min_len,
            standardize_input=True,
            affine_invariant=True,
            description=desc,
        )
        for code, name, func, min_len, desc in entries
    ]


def _surrogate_defs() -> list[FeatureDef]:
    return [
        FeatureDef("W1", "trace_rms", surrogates.root_mean_square, 4,
                   standardize_input=False, affine_invariant=False,
                   description="RMS amplitude (surrogate for prior-model feature 1)"),
        FeatureDef("W2", "dominant_frequency", surrogates.dominant_frequency, 8,
                   standardize_input=False, affine_invariant=True,
                   description="dominant frequency in cycles/sample (surrogate 2)"),
        FeatureDef("W3", "spectral_centroid", surrogates.spectral_centroid, 8,
                   standardize_input=False, affine_invariant=True,
                   description="spectral centroid in cycles/sample (surrogate 3)"),
        FeatureDef("W4", "short_long_energy_ratio", surrogates.short_long_energy_ratio, 10,
                   standardize_input=False, affine_invariant=False,
                   description="max short/long window energy ratio (surrogate 4)"),
    ]


def canonical_registry() -> FeatureRegistry:
    """The 22-feature canonical catalog, C1..C22."""
    return FeatureRegistry(_canonical_defs())


def reproduction_registry() -> FeatureRegistry:
    """W1..W4 surrogates plus C1..C22: the 26-input discovery profile."""
    return FeatureRegistry(_surrogate_defs() + _canonical_defs())


BASE_FEATURES = ("W1", "W2", "W3", "W4")
SELECTED_CANONICAL = ("C10", "C11", "C14", "C15")


def selected_profile() -> tuple[str, ...]:
    """The 8-input profile: base features plus the four discovered ones."""
    return BASE_FEATURES + SELECTED_CANONICAL
