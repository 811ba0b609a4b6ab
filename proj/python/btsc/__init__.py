"""Bayesian time-series classifier for windowed neural features."""

import json as _json

from . import _core
from ._core import (
    BtscError,
    FeatureBank,
    GaussianClassModel,
    TrialSet,
    accuracy_over_time,
    bank_from_feature_set,
    combine_likelihood,
    combine_voting,
    decimate,
    demean,
    evaluate_nested,
    extract_erp,
    extract_hgp,
    feature_count,
    featurize,
    load_dataset,
    remove_line_noise,
    run_cli,
    save_dataset,
    select_minimal_horizon,
    train,
)


def _spec_text(spec):
    return spec if isinstance(spec, str) else _json.dumps(spec)


def synth_features(spec):
    """Feature bank drawn from a synthetic spec (dict or JSON text)."""
    return _core._synth_features(_spec_text(spec))


def synth_dataset(spec):
    """TrialSet (raw or feature content) for a synthetic spec."""
    return _core._synth_dataset(_spec_text(spec))


def bayes_optimal_accuracy(spec, n_mc=100000, seed=0):
    """(estimate, ci_lo, ci_hi) of the true-density decision rule."""
    return _core._bayes_optimal_accuracy(_spec_text(spec), n_mc, seed)

