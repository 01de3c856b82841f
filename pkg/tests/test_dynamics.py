from dataclasses import replace
from typing import List
from typing import Tuple

import numpy as np
import pytest
from headgrow import ArchitectureState
from headgrow import ConfigError
from headgrow import DirectionalSignal
from headgrow import Matrix
from headgrow import ParameterError
from headgrow import PrototypeBank
from headgrow import PruneRefusalError
from headgrow import ResidualReport
from headgrow import RunConfig
from headgrow import RunTrace
from headgrow import StepSizes
from headgrow import audit_monotone
from headgrow import classify_heads
from headgrow import coverage
from headgrow import growth_event
from headgrow import head_view
from headgrow import orthonormality_error
from headgrow import pruning_event
from headgrow import run
from headgrow import s_star
from headgrow import train_step
from headgrow import validate_step_sizes

Data = Tuple[Matrix, DirectionalSignal]


@pytest.fixture
def trace(small_config: RunConfig, synthetic: Data) -> RunTrace:
    z, sig = synthetic
    return run(small_config, z, sig)


def _seeded(
    cfg: RunConfig, data: Data, rng: np.random.Generator
) -> ArchitectureState:
    z, sig = data
    arch, event = growth_event(
        ArchitectureState.empty(sig.dim),
        z,
        sig,
        StepSizes.from_config(cfg),
        cfg.theta_w,
        cfg.k_protos,
        rng,
        force=True,
    )
    assert event is not None and event.kind == "growth"
    return arch


@pytest.mark.parametrize(
    ("t_init", "t_min", "eta_t", "sigma0", "expected"),
    (
        (1.0, 0.5, 0.125, 0.5, 6),
        (2.0, 1.0, 0.25, 1.0, 11),
    ),
)
def test_s_star(
    t_init: float, t_min: float, eta_t: float, sigma0: float, expected: int
) -> None:
    assert s_star(t_init, t_min, eta_t, sigma0) == expected


def test_s_star_rejects_zero_scale() -> None:
    with pytest.raises(ParameterError):
        s_star(1.0, 0.1, 0.01, 0.0)


def test_coverage_and_head_view(synthetic: Data) -> None:
    z, sig = synthetic
    plane = np.eye(sig.dim)[:, :2]
    heads = [
        PrototypeBank(np.zeros((2, sig.dim)), 1.0, plane, birth_lambda=lam)
        for lam in (2.0, 1.0)
    ]
    assert coverage(heads, sig) == pytest.approx(10.0 / sig.frob**2)
    view = head_view(z, plane)
    np.testing.assert_array_equal(view[:, 2:], 0.0)
    np.testing.assert_array_equal(view[:, :2], z[:, :2])


def test_step_sizes_ordering(small_config: RunConfig) -> None:
    s = StepSizes.from_config(small_config)
    assert s.ordered
    assert not StepSizes(0.1, 0.1, 1.0, 10, 0.1, 1.0).ordered


def test_validate_step_sizes(
    small_config: RunConfig, synthetic: Data, rng: np.random.Generator
) -> None:
    z, sig = synthetic
    s = StepSizes.from_config(small_config)
    report = validate_step_sizes(s, z, sig, 4, rng, n_inits=8, n_pairs=8)
    assert set(report.conditions) == {"E1", "E2", "E3", "E4", "E5", "E6"}
    assert report.conditions["E4"].status == "relaxed"
    assert report.conditions["E5"].status == "pass"
    assert report.hard_failures == []
    assert report.sigma0 > 0.0
    assert report.s_star == s_star(s.t_init, s.t_min, s.eta_t, report.sigma0)
    assert report.to_dict()["conditions"]["E4"]["status"] == "relaxed"


def test_validate_step_sizes_refuses_disorder(
    synthetic: Data, rng: np.random.Generator
) -> None:
    z, sig = synthetic
    s = StepSizes(0.1, 0.1, 1.0, 20, 0.1, 1.0)
    report = validate_step_sizes(s, z, sig, 4, rng, n_inits=4, n_pairs=4)
    assert report.hard_failures == ["E5"]
    assert not report.all_pass


def test_train_step_cools_and_stays_in_plane(
    small_config: RunConfig, synthetic: Data, rng: np.random.Generator
) -> None:
    z, sig = synthetic
    s = StepSizes.from_config(small_config)
    arch = _seeded(small_config, synthetic, rng)
    temps = [arch.heads[0].temperature]
    for _ in range(30):
        arch, metrics = train_step(arch, z, sig, s)
        temps.append(arch.heads[0].temperature)
        assert metrics.step == arch.step
    assert arch.step == 30
    assert all(b <= a for a, b in zip(temps, temps[1:]))
    assert min(temps) >= s.t_min
    head = arch.heads[0]
    np.testing.assert_allclose(
        head.p @ head.plane @ head.plane.T, head.p, atol=1e-12
    )
    assert arch.gate is not None
    assert np.linalg.norm(arch.gate) == pytest.approx(1.0)


def test_train_step_needs_heads(
    small_config: RunConfig, synthetic: Data
) -> None:
    z, sig = synthetic
    with pytest.raises(ParameterError):
        train_step(
            ArchitectureState.empty(sig.dim),
            z,
            sig,
            StepSizes.from_config(small_config),
        )


def test_growth_waits_for_dwell(
    small_config: RunConfig, synthetic: Data, rng: np.random.Generator
) -> None:
    z, sig = synthetic
    s = StepSizes.from_config(small_config)
    arch = _seeded(small_config, synthetic, rng)
    assert arch.heads[0].birth_lambda == pytest.approx(2.0)
    same, event = growth_event(arch, z, sig, s, 0.2, 4, rng)
    assert event is None and same is arch
    for _ in range(small_config.n_min):
        arch, _ = train_step(arch, z, sig, s)
    grown, event = growth_event(arch, z, sig, s, 0.2, 4, rng)
    assert event is not None
    assert event.lambda_at_event == pytest.approx(1.0)
    assert event.absorbed_energy > 0.0
    assert event.added_energy > 0.0
    assert event.free_energy_after - event.free_energy_before == (
        pytest.approx(event.added_energy, rel=1e-12)
    )
    assert len(grown.heads) == 2
    assert orthonormality_error(grown.subspace.q_basis) < 1e-10


def test_pruning_removes_weak_heads(
    small_config: RunConfig, synthetic: Data, rng: np.random.Generator
) -> None:
    z, sig = synthetic
    s = StepSizes.from_config(small_config)
    arch = _seeded(small_config, synthetic, rng)
    for _ in range(small_config.n_min):
        arch, _ = train_step(arch, z, sig, s)
    arch, _ = growth_event(arch, z, sig, s, 0.2, 4, rng)
    kept, events = pruning_event(arch, z, sig, s, 0.01)
    assert kept is arch and events == []
    pruned, events = pruning_event(arch, z, sig, s, 0.5)
    assert [e.head_id for e in events] == [1]
    assert [h.head_id for h in pruned.heads] == [0]
    event = events[0]
    assert event.free_energy_before - event.free_energy_after == (
        pytest.approx(event.removed_energy, rel=1e-12)
    )
    with pytest.raises(PruneRefusalError):
        pruning_event(arch, z, sig, s, 0.9)


def test_run_grows_in_spectral_order(
    small_config: RunConfig, trace: RunTrace
) -> None:
    lambdas = trace.growth_lambdas()
    np.testing.assert_allclose(lambdas, [2.0, 1.0, 0.5, 0.25], rtol=1e-8)
    assert [b.step for b in trace.births] == [0, 20, 40, 60]
    assert [e.kind for e in trace.events] == ["growth"] * 3
    assert len(trace.heads) == 4
    basis = np.column_stack([h.plane for h in trace.heads])
    assert orthonormality_error(basis) < 1e-10
    assert trace.steps[0].step == 0
    assert trace.n_steps == trace.steps[-1].step


def test_run_temperatures(small_config: RunConfig, trace: RunTrace) -> None:
    for birth in trace.births:
        temps = [t for _, t in trace.temperature_series(birth.head_id)]
        assert temps[0] == small_config.t_init
        assert all(b <= a for a, b in zip(temps, temps[1:]))
        assert min(temps) >= small_config.t_min
    classes = classify_heads(trace, small_config.t_min)
    assert classes.local | classes.global_ == {h.head_id for h in trace.heads}
    assert not classes.local & classes.global_
    assert set(classes.first_reach) == {h.head_id for h in trace.heads}


def test_run_audit(small_config: RunConfig, trace: RunTrace) -> None:
    audit = audit_monotone(
        trace, small_config.lambda_barrier, trace.step_sizes, 4
    )
    assert audit.f1_holds
    assert audit.f1_bound == pytest.approx(1.2)
    assert audit.dwell_ok
    assert audit.growth_ok
    assert audit.prune_ok
    assert audit.added_total == pytest.approx(
        sum(e.added_energy for e in trace.events)
    )
    assert audit.removed_total == 0.0
    assert audit.w_end_within_events
    assert audit.to_dict()["passed"] == audit.passed


def test_audit_flags_unaccounted_growth_jump(
    small_config: RunConfig, trace: RunTrace
) -> None:
    first, *rest = trace.events
    padded = first.free_energy_after
    padded += 1e-6 * (1.0 + abs(padded))
    events = [replace(first, free_energy_after=padded), *rest]
    audit = audit_monotone(
        replace(trace, events=events),
        small_config.lambda_barrier,
        trace.step_sizes,
        4,
    )
    assert not audit.growth_ok
    assert audit.max_growth_mismatch > 1e-7
    assert not audit.passed


def test_run_is_deterministic(
    small_config: RunConfig, synthetic: Data, trace: RunTrace
) -> None:
    z, sig = synthetic
    again = run(small_config, z, sig)
    assert again.steps == trace.steps

    def summary(t: RunTrace) -> list:
        return [(e.step, e.head_id, e.free_energy_after) for e in t.events]

    assert summary(again) == summary(trace)


def test_run_calls_observer_before_growth(
    small_config: RunConfig, synthetic: Data
) -> None:
    z, sig = synthetic
    seen: List[Tuple[int, int]] = []

    def observe(arch: ArchitectureState, report: ResidualReport) -> None:
        seen.append((arch.step, len(arch.heads)))

    run(small_config.replace(max_steps=70), z, sig, observe)
    assert seen == [(20, 1), (40, 2), (60, 3)]


def test_run_refuses_regrowing_prune_threshold(
    small_config: RunConfig, synthetic: Data
) -> None:
    z, sig = synthetic
    with pytest.raises(ConfigError):
        run(small_config.replace(phi_g=0.1), z, sig)


@pytest.mark.parametrize(("phi_g", "refused"), ((0.06, False), (0.07, True)))
def test_prune_threshold_guard_boundary(
    small_config: RunConfig, synthetic: Data, phi_g: float, refused: bool
) -> None:
    z, sig = synthetic
    assert 0.06 < small_config.theta_w / sig.frob < 0.07
    cfg = small_config.replace(phi_g=phi_g, max_steps=30)
    if refused:
        with pytest.raises(ConfigError):
            run(cfg, z, sig)
    else:
        trace = run(cfg, z, sig)
        assert all(e.kind == "growth" for e in trace.events)
