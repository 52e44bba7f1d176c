"""Weighted conformal prediction with tag swapping (C++ core)."""

from ._nexcp import (
    PredictionRegion,
    WeightProfile,
    changepoint_gap_bound,
    dmix_distance,
    drift_gap_bound,
    exponential_weights,
    full_conformal,
    huber_bound,
    jackknife_plus,
    normalize_weights,
    simulate,
    split_conformal,
    tv_distance,
    weighted_quantile,
)

__all__ = [
    "PredictionRegion",
    "WeightProfile",
    "changepoint_gap_bound",
    "dmix_distance",
    "drift_gap_bound",
    "exponential_weights",
    "full_conformal",
    "huber_bound",
    "jackknife_plus",
    "normalize_weights",
    "simulate",
    "split_conformal",
    "tv_distance",
    "weighted_quantile",
]
