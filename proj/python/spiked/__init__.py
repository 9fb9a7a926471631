"""Outlier eigenvalues and eigenvector overlaps of spiked sparse non-Hermitian matrices."""

import json

from ._spiked import (
    OVERLAPS_HEADER,
    SpikedError,
    default_k_schedule,
    dense_spectrum,
    hausdorff_distance,
    overlap_limit,
    sample_matrix,
    version,
)
from . import _spiked

__all__ = [
    "OVERLAPS_HEADER",
    "SpikedError",
    "default_k_schedule",
    "dense_spectrum",
    "hausdorff_distance",
    "overlap_limit",
    "run_study",
    "run_trial",
    "sample_matrix",
    "verify_lemmas",
    "version",
]


def _as_config_text(config):
    return config if isinstance(config, str) else json.dumps(config)


def run_trial(n, k, spikes, tau=0.0, seed=0, zero_bulk=False):
    """Run one trial; spikes is a list of (mu, multiplicity). Returns a dict."""
    return json.loads(_spiked.run_trial_json(n, k, [(complex(mu), int(mult)) for mu, mult in spikes],
                                             tau, seed, zero_bulk))


def run_study(config):
    """Run a convergence study from a config dict or JSON string.

    Returns (overlaps_csv_text, trials) where trials is the decoded trials.json.
    """
    csv_text, trials = _spiked.run_study(_as_config_text(config))
    return csv_text, json.loads(trials)


def verify_lemmas(config):
    """Run the resolvent limit checks and return the decoded lemma report."""
    return json.loads(_spiked.verify_lemmas_json(_as_config_text(config)))
