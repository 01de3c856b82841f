from typing import Any

import numpy as np
import pytest
from _headgrow.harness.checks import _relative
from _headgrow.harness.checks import check_assignment_variations
from _headgrow.harness.checks import check_corrupted_assignments
from _headgrow.harness.checks import check_gate
from _headgrow.harness.checks import check_identities
from _headgrow.harness.checks import check_prototype_gradient
from _headgrow.harness.checks import check_spectral
from _headgrow.harness.checks import check_step_size_ordering
from _headgrow.harness.checks import check_temperature_gradient
from headgrow import CheckResult
from headgrow import RunConfig
from headgrow import make_rng
from headgrow import run_checks
from headgrow import run_gradcheck


@pytest.mark.parametrize(
    ("worst", "tolerance", "passed"),
    ((0.0, 0.0, True), (1e-6, 1e-5, True), (2e-5, 1e-5, False)),
)
def test_check_result(worst: float, tolerance: float, passed: bool) -> None:
    assert CheckResult("x", worst, tolerance, 1).passed is passed


def test_gradient_checks() -> None:
    rng = make_rng(5)
    assert check_prototype_gradient(rng, instances=5).passed
    assert check_temperature_gradient(rng, instances=5).passed
    first, second = check_assignment_variations(rng, instances=5)
    assert first.passed and second.passed


def test_identity_checks() -> None:
    results = check_identities(make_rng(6), instances=50)
    assert [r.name for r in results] == [
        "loss_decomposition",
        "separation_nonnegative",
        "separation_gradient_rows",
        "separation_force_identity",
        "assignment_covariance_psd",
        "assignment_covariance_trace",
    ]
    assert all(r.passed for r in results)


def test_spectral_checks() -> None:
    assert all(r.passed for r in check_spectral(make_rng(8), instances=10))


def test_gate_check() -> None:
    result = check_gate(seeds=5, seed=3)
    assert result.passed
    assert result.instances == 5


def test_refusal_checks(small_config: RunConfig, capsys: Any) -> None:
    rng = make_rng(9)
    assert check_step_size_ordering(small_config, rng).passed
    assert check_corrupted_assignments(rng).passed
    _, stderr = capsys.readouterr()
    assert "bug" not in stderr


def test_gradcheck_report(small_config: RunConfig) -> None:
    report = run_gradcheck(small_config)
    assert report.name == "gradcheck"
    assert set(report.flags) == {
        "prototype_gradient",
        "temperature_gradient",
        "assignment_first_variation",
        "assignment_second_variation",
    }
    assert report.passed
    assert report.metrics["prototype_gradient"]["instances"] == 100


def test_full_checks_report(small_config: RunConfig) -> None:
    report = run_checks(small_config)
    assert report.name == "checks"
    for name in (
        "loss_decomposition",
        "eigenvalue_interlacing",
        "block_telescoping",
        "gate_alignment",
        "step_size_ordering_refused",
        "corrupted_rows_caught",
        "free_energy_audit",
        "dominance_win_rate",
        "dominance_gain_bound",
        "dominance_literal_gain_bound",
    ):
        assert name in report.flags
    assert report.flags["corrupted_rows_caught"]
    assert report.audit is not None
    assert len(report.metrics["dominance"]["trials"]) == small_config.trials


@pytest.mark.parametrize(
    ("error", "reference", "expected"),
    ((1e-6, 1e-3, 1e-3), (1e-6, 10.0, 1e-7), (0.0, 0.0, 0.0)),
)
def test_relative_error_tracks_small_references(
    error: float, reference: float, expected: float
) -> None:
    measured = _relative(np.array([error]), np.array([reference]))
    assert measured == pytest.approx(expected, rel=1e-12)
