import math

import numpy as np
import pytest

import spiked


def test_version_and_constants():
    assert spiked.version() == "0.3.0"
    assert spiked.OVERLAPS_HEADER.split(",")[0] == "n"
    assert len(spiked.OVERLAPS_HEADER.split(",")) == 12


def test_k_schedule_and_limit():
    assert spiked.default_k_schedule(1500, 0.7) == 168
    assert spiked.overlap_limit(3.0) == pytest.approx(8.0 / 9.0)
    with pytest.raises(ValueError):
        spiked.default_k_schedule(100, 1.0)


def test_hausdorff():
    assert spiked.hausdorff_distance([0.0, 3.0], [1.0]) == pytest.approx(2.0)
    assert math.isinf(spiked.hausdorff_distance([], [2.0]))
    assert spiked.hausdorff_distance([], []) == 0.0


def test_sample_matrix_is_deterministic_and_scaled():
    a = spiked.sample_matrix(4, 4, "rademacher", seed=3)
    b = spiked.sample_matrix(4, 4, "rademacher", seed=3)
    assert a.dtype == np.complex128
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.abs(a), 0.5)


def test_dense_spectrum_of_diagonal():
    eig = sorted(spiked.dense_spectrum(np.diag([2.0, 0.1, -0.3]).astype(complex)), key=lambda z: z.real)
    np.testing.assert_allclose(eig, [-0.3, 0.1, 2.0], atol=1e-14)


def test_zero_bulk_trial_recovers_eigenspace():
    trial = spiked.run_trial(40, 8, [(2.0, 1)], zero_bulk=True, seed=1)
    spike = trial["spikes"][0]
    assert spike["ok"]
    assert spike["overlap_sq"] == pytest.approx(1.0, abs=1e-12)


def test_run_study_writes_schema():
    config = {"n_list": [100], "spikes": [{"re": 2.0}], "trials": 2, "base_seed": 4, "threads": 1}
    csv_text, trials = spiked.run_study(config)
    lines = csv_text.strip().splitlines()
    assert lines[0] == spiked.OVERLAPS_HEADER
    assert len(lines) == 2
    assert csv_text == spiked.run_study(config)[0]
    assert trials


def test_config_errors_raise_value_error():
    with pytest.raises(ValueError, match="delta-floor"):
        spiked.run_study({"n_list": [100], "spikes": [{"re": 1.01}]})


def test_verify_lemmas_zero_bulk():
    report = spiked.verify_lemmas({"n_list": [60], "spikes": [{"re": 2.0}], "zero_bulk": True,
                                   "lemma": {"seeds": 2}})
    assert report["deterministic_ok"]
    assert "empirical_winner" in report["resolvent_norm"]
