"""Checks: Property suites over the numerical kernels and a full run.

Each suite draws its own random instances, measures the worst deviation
from the property it checks and compares it with a fixed tolerance.
Relative deviations are taken against ``‖reference‖``, floored at
``RELATIVE_FLOOR`` so that an exactly zero reference stays finite.
"""

import contextlib
import io
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Tuple

import numpy as np

from _headgrow.baseline import compare_info_loss
from _headgrow.dynamics import GATE_CAP
from _headgrow.dynamics import StepSizes
from _headgrow.dynamics import gate_steps
from _headgrow.dynamics import run
from _headgrow.dynamics import validate_step_sizes
from _headgrow.growth import CapturedSubspace
from _headgrow.growth import DirectionalSignal
from _headgrow.growth import block_magnitudes
from _headgrow.growth import residual_matrix
from _headgrow.harness.config import RunConfig
from _headgrow.harness.experiments import ExperimentReport
from _headgrow.harness.synthetic import gen_synthetic
from _headgrow.harness.synthetic import rotation_signal
from _headgrow.lyapunov import audit_monotone
from _headgrow.numerics import Matrix
from _headgrow.numerics import Rng
from _headgrow.numerics import antisym_dominant_plane
from _headgrow.numerics import central_differences
from _headgrow.numerics import finite_diff
from _headgrow.numerics import random_orthonormal
from _headgrow.numerics import spawn_rngs
from _headgrow.prototypes import PrototypeBank
from _headgrow.prototypes import assignment_first_variation
from _headgrow.prototypes import assignment_second_variation
from _headgrow.prototypes import expand_tokens
from _headgrow.prototypes import gini_trace
from _headgrow.prototypes import grad_prototypes
from _headgrow.prototypes import grad_temperature
from _headgrow.prototypes import grad_v
from _headgrow.prototypes import loss_decomposition
from _headgrow.prototypes import loss_lq
from _headgrow.prototypes import separation_force
from _headgrow.prototypes import sigma_q
from _headgrow.prototypes import soft_assign
from _headgrow.utils.common import strict_mode
from _headgrow.utils.exceptions import ConfigError
from _headgrow.utils.exceptions import InvariantError
from _headgrow.utils.logging import get_logger

__all__ = ["CheckResult", "run_checks", "run_gradcheck"]

log = get_logger(__name__)

GRADIENT_INSTANCES = 100
IDENTITY_INSTANCES = 1000
SPECTRAL_INSTANCES = 100
GATE_SEEDS = 100
GATE_ALIGNMENT = 0.999
DOMINANCE_WIN_RATE = 0.99
RELATIVE_FLOOR = 1e-12


class CheckResult(NamedTuple):
    """Worst measured deviation of one property."""

    name: str
    worst: float
    tolerance: float
    instances: int

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def _relative(error: Matrix, reference: Matrix) -> float:
    scale = max(RELATIVE_FLOOR, float(np.linalg.norm(reference)))
    return float(np.linalg.norm(error)) / scale


def _instance(rng: Rng) -> Tuple[Matrix, PrototypeBank]:
    n = int(rng.integers(5, 51))
    k = int(rng.integers(2, 9))
    d = int(rng.integers(2, 17))
    z = 0.5 * rng.standard_normal((n, d))
    p = 0.5 * rng.standard_normal((k, d))
    return z, PrototypeBank(p, float(rng.uniform(1.0, 2.0)))


def _unit_vector(rng: Rng, d: int) -> np.ndarray:
    u = rng.standard_normal(d)
    return u / np.linalg.norm(u)


def check_prototype_gradient(
    rng: Rng, instances: int = GRADIENT_INSTANCES
) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        z, bank = _instance(rng)

        def loss(p: Matrix) -> float:
            return loss_lq(z, PrototypeBank(p, bank.temperature))

        numeric = finite_diff(loss, bank.p)
        analytic = grad_prototypes(z, bank)
        worst = max(worst, _relative(analytic - numeric, numeric))
    return CheckResult("prototype_gradient", worst, 1e-5, instances)


def check_temperature_gradient(
    rng: Rng, instances: int = GRADIENT_INSTANCES
) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        z, bank = _instance(rng)

        def loss(t: Matrix) -> float:
            return loss_lq(z, PrototypeBank(bank.p, float(t[0])))

        numeric = finite_diff(loss, [bank.temperature])
        analytic = np.array([grad_temperature(z, bank)])
        worst = max(worst, _relative(analytic - numeric, numeric))
    return CheckResult("temperature_gradient", worst, 1e-5, instances)


def _assignment_curve(
    z: Matrix, bank: PrototypeBank, u: np.ndarray
) -> Callable[[float], Matrix]:
    def curve(eps: float) -> Matrix:
        return soft_assign(expand_tokens(z, u, eps), bank)

    return curve


def check_assignment_variations(
    rng: Rng, instances: int = GRADIENT_INSTANCES
) -> Tuple[CheckResult, CheckResult]:
    first_worst, second_worst = 0.0, 0.0
    for _ in range(instances):
        z, bank = _instance(rng)
        u = _unit_vector(rng, z.shape[1])
        curve = _assignment_curve(z, bank, u)
        first, _ = central_differences(curve, 1e-5)
        _, second = central_differences(curve, 1e-4)
        analytic1 = assignment_first_variation(z, bank, u)
        analytic2 = assignment_second_variation(z, bank, u)
        first_worst = max(first_worst, _relative(analytic1 - first, first))
        second_worst = max(
            second_worst, _relative(analytic2 - second, second)
        )
    return (
        CheckResult(
            "assignment_first_variation", first_worst, 1e-5, instances
        ),
        CheckResult(
            "assignment_second_variation", second_worst, 1e-4, instances
        ),
    )


def _pull(bank: PrototypeBank, q: Matrix) -> Matrix:
    mu = q @ bank.p
    return np.stack(
        [q[:, k] @ (bank.p[k] - mu) for k in range(bank.k)], axis=0
    )


def check_identities(
    rng: Rng, instances: int = IDENTITY_INSTANCES
) -> List[CheckResult]:
    """Decomposition, separation gradient and assignment covariance."""

    decomposition, negative, rows, force, psd, trace = (0.0,) * 6
    for _ in range(instances):
        z, bank = _instance(rng)
        parts = loss_decomposition(z, bank)
        total = loss_lq(z, bank)
        gap = abs(total - (parts.l_fit + parts.v_sep)) / max(1.0, total)
        decomposition = max(decomposition, gap)
        negative = max(negative, -parts.v_sep)
        q = soft_assign(z, bank)
        sq = sigma_q(q)
        pull = 2.0 * _pull(bank, q)
        rows = max(rows, _relative(grad_v(bank, sq) - pull, pull))
        expected = float(np.sum(pull**2))
        force = max(
            force,
            abs(separation_force(z, bank) - expected) / max(1.0, expected),
        )
        psd = max(psd, -float(np.linalg.eigvalsh(sq)[0]) / z.shape[0])
        gini = gini_trace(q)
        trace = max(trace, abs(float(np.trace(sq)) - gini) / max(1.0, gini))
    return [
        CheckResult("loss_decomposition", decomposition, 1e-10, instances),
        CheckResult("separation_nonnegative", negative, 0.0, instances),
        CheckResult("separation_gradient_rows", rows, 1e-12, instances),
        CheckResult("separation_force_identity", force, 1e-10, instances),
        CheckResult("assignment_covariance_psd", psd, 1e-12, instances),
        CheckResult("assignment_covariance_trace", trace, 1e-12, instances),
    ]


def _raw_signal(m: Matrix) -> DirectionalSignal:
    return DirectionalSignal(m_a=m, c_half=np.eye(m.shape[0]), m_tilde=m)


def check_spectral(
    rng: Rng, instances: int = SPECTRAL_INSTANCES
) -> List[CheckResult]:
    """Interlacing under plane capture and exact block telescoping."""

    interlace, telescope = 0.0, 0.0
    for _ in range(instances):
        d = int(rng.integers(4, 17))
        g = rng.standard_normal((d, d))
        sig = _raw_signal(g - g.T)
        tol_scale = max(1.0, sig.frob)
        sub = CapturedSubspace.empty(d)
        report = residual_matrix(sig, sub)
        before = block_magnitudes(report.matrix)
        for _ in range(d // 2 - 1):
            sub = sub.extend(report.plane)
            nxt = residual_matrix(sig, sub)
            after = block_magnitudes(nxt.matrix)
            upper = np.max(after[:-1] - before[:-1])
            lower = np.max(before[1:] - after[:-1])
            interlace = max(interlace, float(max(upper, lower)) / tol_scale)
            drop = report.frob_sq - nxt.frob_sq
            gap = abs(drop - 2.0 * report.lambda_max**2)
            telescope = max(telescope, gap / max(1.0, sig.frob**2))
            report, before = nxt, after
    return [
        CheckResult("eigenvalue_interlacing", interlace, 1e-9, instances),
        CheckResult("block_telescoping", telescope, 1e-9, instances),
    ]


def check_gate(seeds: int = GATE_SEEDS, seed: int = 0) -> CheckResult:
    """Power iteration of the gate reaches 0.999 plane alignment."""

    worst = 0
    magnitudes = 2.0 * 0.7 ** np.arange(8)
    for rng in spawn_rngs(seed, seeds):
        m = rotation_signal(magnitudes, random_orthonormal(16, rng))
        _, plane = antisym_dominant_plane(m)
        steps = gate_steps(m, plane, 1.0, rng, target=GATE_ALIGNMENT)
        worst = max(worst, steps)
    return CheckResult("gate_alignment", float(worst), GATE_CAP - 1, seeds)


def check_step_size_ordering(cfg: RunConfig, rng: Rng) -> CheckResult:
    """Equal ``eta_t`` and ``eta_p`` must be refused at load and at run."""

    missed = 0.0
    try:
        cfg.replace(eta_t=cfg.eta_p)
        missed += 1.0
    except ConfigError:
        pass
    small = cfg.replace(n_tokens=60, dim=8, n_blocks=4)
    z, sig = gen_synthetic(small, rng)
    s = StepSizes(
        eta_t=cfg.eta_p,
        eta_p=cfg.eta_p,
        eta_plus=cfg.eta_plus,
        n_min=cfg.n_min,
        t_min=cfg.t_min,
        t_init=cfg.t_init,
    )
    report = validate_step_sizes(s, z, sig, cfg.k_protos, rng)
    missed += "E5" not in report.hard_failures
    return CheckResult("step_size_ordering_refused", missed, 0.0, 2)


def check_corrupted_assignments(rng: Rng) -> CheckResult:
    """Strict mode must reject assignment rows that do not sum to one."""

    z, bank = _instance(rng)
    saturated = soft_assign(z, bank)
    saturated[0] = 1.0
    shrunk = soft_assign(z, bank)
    shrunk[0] *= 0.5
    missed = 0.0
    for q in (saturated, shrunk):
        with strict_mode(), contextlib.redirect_stderr(io.StringIO()):
            try:
                sigma_q(q)
                missed += 1.0
            except InvariantError:
                pass
    return CheckResult("corrupted_rows_caught", missed, 0.0, 2)


def check_run(
    cfg: RunConfig,
) -> Tuple[List[CheckResult], Dict[str, Any], Dict[str, Any]]:
    """Free-energy audit of a full run and the dominance trials."""

    data_rng = spawn_rngs(cfg.seed, 3)[0]
    z, sig = gen_synthetic(cfg, data_rng)
    trace = run(cfg, z, sig)
    audit = audit_monotone(
        trace, cfg.lambda_barrier, trace.step_sizes, cfg.k_protos
    )
    dominance = compare_info_loss(
        sig,
        cfg.trials,
        2,
        seed=cfg.seed,
        ratio=cfg.mlp_ratio,
        sigma_sq=cfg.mlp_sigma_sq,
    )
    win_shortfall = 0.0
    if dominance.trials:
        win_shortfall = max(0.0, DOMINANCE_WIN_RATE - dominance.win_rate)
    bound_misses = sum(not t.bound_holds for t in dominance.trials)
    results = [
        CheckResult(
            "free_energy_audit", float(not audit.passed), 0.0, trace.n_steps
        ),
        CheckResult(
            "dominance_win_rate", win_shortfall, 0.0, len(dominance.trials)
        ),
        CheckResult(
            "dominance_gain_bound",
            float(bound_misses),
            0.0,
            len(dominance.trials),
        ),
        CheckResult(
            "dominance_literal_gain_bound",
            float(dominance.literal_bound_misses),
            0.0,
            len(dominance.trials),
        ),
    ]
    return results, audit.to_dict(), dominance.to_dict()


def _report(
    name: str, cfg: RunConfig, results: List[CheckResult]
) -> ExperimentReport:
    report = ExperimentReport(name=name, config=cfg)
    for result in results:
        report.flags[result.name] = result.passed
        report.metrics[result.name] = {
            "worst": result.worst,
            "tolerance": result.tolerance,
            "instances": result.instances,
        }
        if not result.passed:
            log.warning(
                "Check failed",
                check=result.name,
                worst=result.worst,
                tolerance=result.tolerance,
            )
    return report


def _gradient_suite(rng: Rng) -> List[CheckResult]:
    return [
        check_prototype_gradient(rng),
        check_temperature_gradient(rng),
        *check_assignment_variations(rng),
    ]


def run_gradcheck(cfg: RunConfig) -> ExperimentReport:
    """Analytic gradients and assignment variations only."""

    rng = spawn_rngs(cfg.seed, 3)[2]
    return _report("gradcheck", cfg, _gradient_suite(rng))


def run_checks(cfg: RunConfig) -> ExperimentReport:
    """Every property suite, the full-run audit and the dominance trials."""

    rng = spawn_rngs(cfg.seed, 3)[2]
    results = _gradient_suite(rng)
    results += check_identities(rng)
    results += check_spectral(rng)
    results.append(check_gate(seed=cfg.seed))
    results.append(check_step_size_ordering(cfg, rng))
    results.append(check_corrupted_assignments(rng))
    run_results, audit, dominance = check_run(cfg)
    results += run_results
    report = _report("checks", cfg, results)
    report.audit = audit
    report.metrics["dominance"] = dominance
    log.info(
        "Checks finished",
        passed=sum(r.passed for r in results),
        total=len(results),
    )
    return report
