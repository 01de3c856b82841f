"""Dynamics: Coupled discrete-time training loop with growth and pruning.

Each step moves three streams at once: prototypes descend their head's
loss, temperatures cool by their effective scale, and a gate vector
runs one power step towards the dominant residual direction. Growth and
pruning events are only acted on once the dwell time ``n_min`` has
elapsed since the previous event.
"""

import math
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import TYPE_CHECKING
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Set
from typing import Tuple

import numpy as np

from _headgrow.growth import CapturedSubspace
from _headgrow.growth import DirectionalSignal
from _headgrow.growth import ResidualReport
from _headgrow.growth import directional_info_loss
from _headgrow.growth import gamma_h
from _headgrow.growth import gate_alignment
from _headgrow.growth import gate_update
from _headgrow.growth import growth_trigger
from _headgrow.growth import prune_check
from _headgrow.growth import residual_matrix
from _headgrow.growth import spawn_head
from _headgrow.lyapunov import barrier_gradient
from _headgrow.lyapunov import free_energy
from _headgrow.numerics import Matrix
from _headgrow.numerics import Rng
from _headgrow.numerics import as_matrix
from _headgrow.numerics import spawn_rngs
from _headgrow.prototypes import PrototypeBank
from _headgrow.prototypes import effective_scale
from _headgrow.prototypes import grad_prototypes
from _headgrow.prototypes import phi_curve
from _headgrow.prototypes import prototype_spread
from _headgrow.prototypes import separation_force
from _headgrow.utils.common import strict_checks
from _headgrow.utils.exceptions import ConfigError
from _headgrow.utils.exceptions import DegenerateDirectionError
from _headgrow.utils.exceptions import InvariantError
from _headgrow.utils.exceptions import NumericError
from _headgrow.utils.exceptions import ParameterError
from _headgrow.utils.exceptions import PruneRefusalError
from _headgrow.utils.logging import get_logger

if TYPE_CHECKING:
    from _headgrow.harness.config import RunConfig

__all__ = [
    "ArchitectureState",
    "Birth",
    "ConditionResult",
    "EventRecord",
    "HeadClasses",
    "RunTrace",
    "StepMetrics",
    "StepSizeReport",
    "StepSizes",
    "classify_heads",
    "coverage",
    "gate_steps",
    "growth_event",
    "head_view",
    "pruning_event",
    "run",
    "s_star",
    "train_step",
    "validate_step_sizes",
]

log = get_logger(__name__)

GrowthObserver = Callable[["ArchitectureState", ResidualReport], None]

STABLE_WINDOW = 50
STABLE_TOL = 1e-8
QUIET_FACTOR = 4
GATE_TARGET = 0.99
GATE_CAP = 100_000
RATIO_RANGE = (0.01, 0.1)
CURVATURE_TOL = 1e-6


@dataclass(frozen=True)
class StepSizes:
    """Step sizes of the three streams and the temperature schedule."""

    eta_t: float
    eta_p: float
    eta_plus: float
    n_min: int
    t_min: float
    t_init: float

    @classmethod
    def from_config(cls, config: "RunConfig") -> "StepSizes":
        return cls(
            eta_t=config.eta_t,
            eta_p=config.eta_p,
            eta_plus=config.eta_plus,
            n_min=config.n_min,
            t_min=config.t_min,
            t_init=config.t_init,
        )

    @property
    def ordered(self) -> bool:
        """True when ``eta_t < eta_p < eta_plus``."""
        return self.eta_t < self.eta_p < self.eta_plus


@dataclass
class ArchitectureState:
    """Heads of the layer, their captured subspace and the gate.

    :var heads: Heads in birth order.
    :var subspace: Concatenation of the head planes.
    :var step: Index of the last completed step.
    :var last_event_step: Step of the last growth or pruning event.
    :var gate: Unit gate vector, ``None`` before the first head.
    :var next_head_id: Identifier for the next spawned head.

    """

    heads: List[PrototypeBank]
    subspace: CapturedSubspace
    step: int = 0
    last_event_step: int = 0
    gate: Optional[np.ndarray] = None
    next_head_id: int = 0
    residual: Optional[ResidualReport] = field(
        default=None, repr=False, compare=False
    )

    @classmethod
    def empty(cls, dim: int) -> "ArchitectureState":
        return cls(heads=[], subspace=CapturedSubspace.empty(dim))

    def residual_report(self, sig: DirectionalSignal) -> ResidualReport:
        """Residual of ``sig`` against the captured subspace, cached."""
        if self.residual is None:
            self.residual = residual_matrix(sig, self.subspace)
        return self.residual

    def dwell_elapsed(self, n_min: int) -> bool:
        return self.step - self.last_event_step >= n_min

    def check_planes(self) -> None:
        """Raise when head planes stop being mutually orthonormal."""
        if not self.heads:
            return
        basis = np.column_stack([h.plane for h in self.heads])
        gap = float(np.linalg.norm(basis.T @ basis - np.eye(basis.shape[1])))
        if gap > 1e-8:
            raise InvariantError(
                name="orthogonal head planes",
                detail=f"deviation {gap:.3e} at step {self.step}",
                valid=False,
            )


@dataclass(frozen=True)
class EventRecord:
    """One growth or pruning event.

    ``added_energy`` is the free energy of a grown head and
    ``removed_energy`` that of a pruned head. ``absorbed_energy`` is the
    residual token energy ``‖Z·B‖_F²`` taken up by a grown plane.
    """

    step: int
    kind: str
    head_id: int
    lambda_at_event: float
    free_energy_before: float
    free_energy_after: float
    coverage_after: float
    added_energy: float = 0.0
    absorbed_energy: float = 0.0
    removed_energy: float = 0.0
    gamma: float = math.nan


@dataclass(frozen=True)
class StepMetrics:
    """Measurements taken at the end of a step, keyed by head id."""

    step: int
    loss: float
    loss_per_head: Dict[int, float]
    f_sep: Dict[int, float]
    temperature: Dict[int, float]
    sigma: Dict[int, float]
    lambda_max: float
    free_energy: float
    info_loss: float
    gate_alignment: float
    min_spread: float


@dataclass(frozen=True)
class Birth:
    """Birth of a head, the initial one included."""

    head_id: int
    step: int
    lam: float
    sigma0: float


class ConditionResult(NamedTuple):
    """Outcome of one step-size condition."""

    status: str
    value: float
    bound: float
    detail: str = ""


@dataclass
class StepSizeReport:
    """Outcome of :py:func:`validate_step_sizes`.

    Status is one of ``pass``, ``warn``, ``fail``, ``n/a`` and
    ``relaxed``; only ``fail`` stops a run.
    """

    conditions: Dict[str, ConditionResult]
    sigma0: float
    sigma_max: float
    l_p: float
    n_gate: int
    s_star: int

    @property
    def hard_failures(self) -> List[str]:
        return [k for k, c in self.conditions.items() if c.status == "fail"]

    @property
    def all_pass(self) -> bool:
        return all(
            c.status in ("pass", "n/a", "relaxed")
            for c in self.conditions.values()
        )

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["conditions"] = {
            k: c._asdict() for k, c in self.conditions.items()
        }
        return out


@dataclass
class RunTrace:
    """Complete record of a run."""

    steps: List[StepMetrics]
    events: List[EventRecord]
    births: List[Birth]
    heads: List[PrototypeBank]
    step_sizes: StepSizes
    validation: Optional[StepSizeReport]
    first_reach: Dict[int, int]
    frob: float
    stop_reason: str

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    def growth_lambdas(self) -> List[float]:
        """Birth residual strengths in birth order."""
        return [b.lam for b in self.births]

    def temperature_series(self, head_id: int) -> List[Tuple[int, float]]:
        return [
            (m.step, m.temperature[head_id])
            for m in self.steps
            if head_id in m.temperature
        ]


class HeadClasses(NamedTuple):
    """Partition of heads by final temperature."""

    local: Set[int]
    global_: Set[int]
    first_reach: Dict[int, Optional[int]]


def head_view(z: Matrix, plane: Matrix) -> Matrix:
    """Tokens as seen by a head, ``B·Bᵀ·z_n`` for every row."""

    return z @ plane @ plane.T


def coverage(heads: List[PrototypeBank], sig: DirectionalSignal) -> float:
    """Directional energy share ``Σ_h 2·λ_h² / ‖m_tilde‖_F²``."""

    frob = sig.frob
    if frob == 0.0:
        return 0.0
    captured = math.fsum(2.0 * h.birth_lambda**2 for h in heads)
    return min(1.0, captured / frob**2)


def s_star(t_init: float, t_min: float, eta_t: float, sigma0: float) -> int:
    """Steps after which a cooling head has surely reached ``T_min``.

    ``ceil((T_init³ − T_min³)/(3·η_T·σ₀)) + 1``.
    """

    if not sigma0 > 0.0:
        raise ParameterError(name="sigma0", value=sigma0, reason="> 0")
    return math.ceil((t_init**3 - t_min**3) / (3.0 * eta_t * sigma0)) + 1


def gate_steps(
    a_res: Matrix,
    plane: Matrix,
    eta_plus: float,
    rng: Rng,
    target: float = GATE_TARGET,
    cap: int = GATE_CAP,
) -> int:
    """Count gate steps until the gate aligns with ``plane``."""

    u = rng.standard_normal(plane.shape[0])
    u /= np.linalg.norm(u)
    for step in range(cap):
        if gate_alignment(u, plane) >= target:
            return step
        u = gate_update(u, a_res, eta_plus)
    return cap


def _plane_radius(view: Matrix) -> float:
    centred = view - view.mean(axis=0)
    dof = max(view.shape[0] - 1, 1)
    return math.sqrt(float(np.sum(centred**2)) / (2 * dof))


def validate_step_sizes(
    s: StepSizes,
    z: Matrix,
    sig: DirectionalSignal,
    k_protos: int,
    rng: Rng,
    n_inits: int = 32,
    n_pairs: int = 64,
) -> StepSizeReport:
    """Check the discrete step-size conditions on a data instance.

    Estimates are taken on the dominant residual plane: the largest
    effective scale at ``T_min`` over ``n_inits`` random prototype
    draws, a gradient Lipschitz constant from ``n_pairs`` perturbed
    draws, and the dwell requirement from a trial head.
    """

    z = as_matrix(z, "validate_step_sizes")
    n = z.shape[0]
    empty = CapturedSubspace.empty(sig.dim)
    report0 = residual_matrix(sig, empty)
    plane = report0.plane
    view = z @ plane
    radius = _plane_radius(view)
    conditions: Dict[str, ConditionResult] = {}

    def draw() -> Matrix:
        return radius * rng.standard_normal((k_protos, 2))

    sigma_max = max(
        effective_scale(view, PrototypeBank(draw(), s.t_min))
        for _ in range(n_inits)
    )
    e1 = s.t_min**3 / (3.0 * sigma_max) if sigma_max > 0.0 else math.inf
    conditions["E1"] = ConditionResult(
        "pass" if s.eta_t < e1 else "warn", s.eta_t, e1, "sigma_max at T_min"
    )

    l_p = 0.0
    for _ in range(n_pairs):
        c1 = draw()
        c2 = c1 + 0.1 * radius * rng.standard_normal(c1.shape)
        g1 = grad_prototypes(view, PrototypeBank(c1, s.t_min)) / n
        g2 = grad_prototypes(view, PrototypeBank(c2, s.t_min)) / n
        ratio = np.linalg.norm(g1 - g2) / np.linalg.norm(c1 - c2)
        l_p = max(l_p, float(ratio))
    e2 = 2.0 / l_p if l_p > 0.0 else math.inf
    conditions["E2"] = ConditionResult(
        "pass" if s.eta_p < e2 else "warn", s.eta_p, e2, "2 / L_P"
    )

    trial = spawn_head(report0, z, k_protos, s.t_init, rng)
    trial_view = trial.in_plane(trial.coords())
    sigma0 = effective_scale(view, trial_view)
    next_sub = empty.extend(plane)
    report1 = residual_matrix(sig, next_sub)
    curvature, floor = 0.0, 0.0
    if report1.lambda_max > 0.0:
        curve = phi_curve(z, trial, report1.plane[:, 0], [0.0, 1.0])
        curvature = curve.d2
        floor = CURVATURE_TOL * max(1.0, abs(curve.values[0]))
    if curvature > floor:
        grad = grad_prototypes(view, trial_view) / n
        e3 = math.sqrt(curvature / (l_p * float(np.sum(grad**2))))
        status = "pass" if s.eta_p < e3 else "warn"
        conditions["E3"] = ConditionResult(status, s.eta_p, e3)
    else:
        conditions["E3"] = ConditionResult(
            "n/a", s.eta_p, math.inf, f"phi''(0) = {curvature:.3e}"
        )

    conditions["E4"] = ConditionResult(
        "relaxed",
        s.eta_plus,
        math.inf,
        "constant gate step over a finite horizon",
    )

    if not s.ordered:
        conditions["E5"] = ConditionResult(
            "fail", s.eta_t, s.eta_p, "need eta_t < eta_p < eta_plus"
        )
    else:
        ratios = (s.eta_p / s.eta_plus, s.eta_t / s.eta_p)
        low, high = RATIO_RANGE
        inside = all(low <= r <= high for r in ratios)
        conditions["E5"] = ConditionResult(
            "pass" if inside else "warn",
            max(ratios),
            high,
            "ratios eta_p/eta_plus={:.3g}, eta_t/eta_p={:.3g}".format(*ratios),
        )

    steps_needed = s_star(s.t_init, s.t_min, s.eta_t, sigma0)
    if report1.lambda_max > 0.0:
        n_gate = gate_steps(
            report1.matrix, report1.plane, s.eta_plus, rng
        )
    else:
        n_gate = 0
    e6 = float(max(n_gate, steps_needed))
    conditions["E6"] = ConditionResult(
        "pass" if s.n_min > e6 else "warn",
        float(s.n_min),
        e6,
        f"N_gate={n_gate}, s*={steps_needed}",
    )
    for name, result in conditions.items():
        if result.status in ("warn", "fail"):
            log.warning(
                "Step-size condition not met",
                condition=name,
                status=result.status,
                value=result.value,
                bound=result.bound,
            )
    return StepSizeReport(
        conditions=conditions,
        sigma0=sigma0,
        sigma_max=sigma_max,
        l_p=l_p,
        n_gate=n_gate,
        s_star=steps_needed,
    )


def _measure(
    arch: ArchitectureState,
    z: Matrix,
    sig: DirectionalSignal,
    s: StepSizes,
    lambda_barrier: float,
    anchor: str,
    sigma: Optional[Dict[int, float]] = None,
) -> StepMetrics:
    energy = free_energy(arch, z, lambda_barrier, s, anchor)
    f_sep: Dict[int, float] = {}
    scales: Dict[int, float] = {}
    for bank in arch.heads:
        view = z @ bank.plane
        local = bank.in_plane(bank.coords())
        f_sep[bank.head_id] = separation_force(view, local)
        if sigma is None or bank.head_id not in sigma:
            scales[bank.head_id] = effective_scale(view, local)
        else:
            scales[bank.head_id] = sigma[bank.head_id]
    report = arch.residual_report(sig)
    info = directional_info_loss(sig, arch.subspace) if sig.frob else 0.0
    align = math.nan
    if arch.gate is not None:
        align = gate_alignment(arch.gate, report.plane)
    return StepMetrics(
        step=arch.step,
        loss=energy.loss_total,
        loss_per_head={h.head_id: h.loss for h in energy.heads},
        f_sep=f_sep,
        temperature={h.head_id: h.temperature for h in arch.heads},
        sigma=scales,
        lambda_max=report.lambda_max,
        free_energy=energy.total,
        info_loss=info,
        gate_alignment=align,
        min_spread=min(prototype_spread(h) for h in arch.heads),
    )


def train_step(
    arch: ArchitectureState,
    z: Matrix,
    sig: DirectionalSignal,
    s: StepSizes,
    *,
    lambda_barrier: float = 2.0,
    barrier_descent: bool = True,
    anchor: str = "floor",
) -> Tuple[ArchitectureState, StepMetrics]:
    """Advance every head and the gate by one step.

    Per head, on its plane coordinates ``y = Z·B`` and ``c = P·B``::

        c ← c − (η_P/N)·∇_c(L_q + barrier)
        T ← max(T − η_T·σ/T², T_min)

    Both updates use the state at the start of the step. Prototypes are
    mapped back through the plane so they never leave it.

    :raises ParameterError: If the architecture has no head.
    :raises NumericError: On a non-finite gradient or scale.

    """

    if not arch.heads:
        raise ParameterError(name="heads", value=0, reason="need >= 1 head")
    z = as_matrix(z, "train_step")
    n = z.shape[0]
    step = arch.step + 1
    heads: List[PrototypeBank] = []
    sigma: Dict[int, float] = {}
    for bank in arch.heads:
        view = z @ bank.plane
        coords = bank.coords()
        local = bank.in_plane(coords)
        grad = grad_prototypes(view, local)
        if barrier_descent:
            grad = grad + barrier_gradient(coords, lambda_barrier)
        scale = effective_scale(view, local)
        if not (np.all(np.isfinite(grad)) and math.isfinite(scale)):
            raise NumericError(
                op="train_step",
                detail=f"head {bank.head_id} at step {step}",
            )
        coords = coords - (s.eta_p / n) * grad
        cooled = bank.temperature - s.eta_t * scale / bank.temperature**2
        sigma[bank.head_id] = scale
        heads.append(
            replace(
                bank,
                p=coords @ bank.plane.T,
                temperature=max(cooled, s.t_min),
            )
        )
    gate = arch.gate
    if gate is not None:
        gate = gate_update(gate, arch.residual_report(sig).matrix, s.eta_plus)
    new = replace(arch, heads=heads, step=step, gate=gate)
    if strict_checks():
        new.check_planes()
    metrics = _measure(new, z, sig, s, lambda_barrier, anchor, sigma)
    log.debug(
        "Step",
        step=step,
        loss=round(metrics.loss, 6),
        W=round(metrics.free_energy, 6),
    )
    return new, metrics


def growth_event(
    arch: ArchitectureState,
    z: Matrix,
    sig: DirectionalSignal,
    s: StepSizes,
    theta_w: float,
    k_protos: int,
    rng: Rng,
    *,
    max_heads: int = 8,
    lambda_barrier: float = 2.0,
    anchor: str = "floor",
    force: bool = False,
) -> Tuple[ArchitectureState, Optional[EventRecord]]:
    """Grow a head on the dominant residual plane when warranted.

    Nothing happens before the dwell time has elapsed, when the residual
    strength is at most ``theta_w`` or when ``max_heads`` is reached.
    ``force`` skips those checks and is used for the initial head.
    Degenerate planes are logged and skipped.
    """

    z = as_matrix(z, "growth_event")
    report = arch.residual_report(sig)
    if not force:
        if not arch.dwell_elapsed(s.n_min) or len(arch.heads) >= max_heads:
            return arch, None
        if not growth_trigger(report, theta_w):
            return arch, None
    before = 0.0
    if arch.heads:
        before = free_energy(arch, z, lambda_barrier, s, anchor).total
    try:
        subspace = arch.subspace.extend(report.plane)
        plane = subspace.last_plane()
        bank = spawn_head(
            report._replace(plane=plane),
            z,
            k_protos,
            s.t_init,
            rng,
            head_id=arch.next_head_id,
            birth_step=arch.step,
        )
    except DegenerateDirectionError as error:
        log.warning("Growth skipped", step=arch.step, reason=str(error))
        return arch, None
    gate = rng.standard_normal(sig.dim)
    grown = ArchitectureState(
        heads=arch.heads + [bank],
        subspace=subspace,
        step=arch.step,
        last_event_step=arch.step,
        gate=gate / np.linalg.norm(gate),
        next_head_id=arch.next_head_id + 1,
    )
    breakdown = free_energy(grown, z, lambda_barrier, s, anchor)
    added = next(
        h.total for h in breakdown.heads if h.head_id == bank.head_id
    )
    event = EventRecord(
        step=arch.step,
        kind="growth",
        head_id=bank.head_id,
        lambda_at_event=report.lambda_max,
        free_energy_before=before,
        free_energy_after=breakdown.total,
        coverage_after=coverage(grown.heads, sig),
        added_energy=added,
        absorbed_energy=float(np.sum((z @ plane) ** 2)),
    )
    log.info(
        "Grew head",
        step=arch.step,
        head=bank.head_id,
        lam=round(report.lambda_max, 6),
        heads=len(grown.heads),
    )
    return grown, event


def pruning_event(
    arch: ArchitectureState,
    z: Matrix,
    sig: DirectionalSignal,
    s: StepSizes,
    phi_g: float,
    *,
    gate: str = "gamma",
    lambda_barrier: float = 2.0,
    anchor: str = "floor",
) -> Tuple[ArchitectureState, List[EventRecord]]:
    """Remove every head failing the pruning gate.

    Heads are removed one at a time in ascending order of their
    directional share, each with its own event record. Surviving heads
    are carried over untouched.

    :raises PruneRefusalError: If every head fails the gate.

    """

    if len(arch.heads) < 2 or (gate == "gamma" and sig.frob == 0.0):
        return arch, []
    failing = [h for h in arch.heads if prune_check(h, sig, phi_g, gate)]
    if not failing:
        return arch, []
    if len(failing) == len(arch.heads):
        raise PruneRefusalError(count=len(arch.heads), step=arch.step)

    def share(bank: PrototypeBank) -> float:
        if sig.frob == 0.0:
            return prototype_spread(bank)
        return gamma_h(bank, sig)

    failing.sort(key=lambda h: (share(h), h.head_id))
    events: List[EventRecord] = []
    for victim in failing:
        energy = free_energy(arch, z, lambda_barrier, s, anchor)
        removed = next(
            h.total for h in energy.heads if h.head_id == victim.head_id
        )
        heads = [h for h in arch.heads if h.head_id != victim.head_id]
        arch = replace(
            arch,
            heads=heads,
            subspace=CapturedSubspace.from_planes(
                [h.plane for h in heads], sig.dim
            ),
            last_event_step=arch.step,
            residual=None,
        )
        after = free_energy(arch, z, lambda_barrier, s, anchor).total
        events.append(
            EventRecord(
                step=arch.step,
                kind="prune",
                head_id=victim.head_id,
                lambda_at_event=victim.birth_lambda,
                free_energy_before=energy.total,
                free_energy_after=after,
                coverage_after=coverage(heads, sig),
                removed_energy=removed,
                gamma=share(victim),
            )
        )
        log.info(
            "Pruned head",
            step=arch.step,
            head=victim.head_id,
            share=round(share(victim), 6),
        )
    return arch, events


def _stable(steps: List[StepMetrics], heads: List[PrototypeBank]) -> bool:
    if len(steps) <= STABLE_WINDOW:
        return False
    now, then = steps[-1], steps[-1 - STABLE_WINDOW]
    for bank in heads:
        if bank.head_id not in then.loss_per_head:
            return False
        a = now.loss_per_head[bank.head_id]
        b = then.loss_per_head[bank.head_id]
        if abs(a - b) > STABLE_TOL * max(1.0, abs(b)):
            return False
    return True


def run(
    config: "RunConfig",
    z: Matrix,
    sig: DirectionalSignal,
    observer: Optional[GrowthObserver] = None,
) -> RunTrace:
    """Train a self-growing layer on frozen tokens until convergence.

    The run starts from one head on the dominant plane of the full
    signal. It stops once growth is exhausted (residual at most
    ``theta_w`` or the head cap reached), no event happened for
    ``4·n_min`` steps and every head's loss moved less than 1e-8
    relative over the last 50 steps; otherwise at ``max_steps``.

    :param config: Run configuration.
    :param z: N×d tokens.
    :param sig: Directional signal of the layer.
    :param observer: Called with the architecture and residual report
        right before every growth after the initial head.
    :raises ConfigError: On step-size hard failures or a pruning
        threshold that would let pruned heads regrow.

    """

    s = StepSizes.from_config(config)
    z = as_matrix(z, "run")
    if not s.ordered:
        raise ConfigError(
            source="step sizes", reason="need eta_t < eta_p < eta_plus"
        )
    frob = sig.frob
    if config.prune_gate == "gamma" and frob > 0.0:
        if not config.phi_g < config.theta_w / frob:
            raise ConfigError(
                source="phi_g",
                reason=(
                    f"{config.phi_g} must be below theta_w/|m_tilde|_F = "
                    f"{config.theta_w / frob:.6g}"
                ),
            )
    _, rng, rng_check = spawn_rngs(config.seed, 3)
    validation = validate_step_sizes(s, z, sig, config.k_protos, rng_check)
    if validation.hard_failures:
        raise ConfigError(
            source="step sizes",
            reason=f"failed {', '.join(validation.hard_failures)}",
        )
    settings = dict(
        lambda_barrier=config.lambda_barrier, anchor=config.potential_anchor
    )
    arch, _ = growth_event(
        ArchitectureState.empty(sig.dim),
        z,
        sig,
        s,
        config.theta_w,
        config.k_protos,
        rng,
        max_heads=config.max_heads,
        force=True,
        **settings,
    )
    if not arch.heads:
        raise DegenerateDirectionError(op="run", residual=0.0)
    steps = [_measure(arch, z, sig, s, **settings)]
    births = [
        Birth(h.head_id, 0, h.birth_lambda, steps[0].sigma[h.head_id])
        for h in arch.heads
    ]
    events: List[EventRecord] = []
    first_reach: Dict[int, int] = {}
    stop_reason = "max_steps"
    log.info("Run started", seed=config.seed, frob=round(frob, 6))
    for _ in range(config.max_steps):
        arch, metrics = train_step(
            arch, z, sig, s, barrier_descent=config.barrier_descent, **settings
        )
        fired: List[EventRecord] = []
        report = arch.residual_report(sig)
        ready = (
            arch.dwell_elapsed(s.n_min)
            and len(arch.heads) < config.max_heads
            and growth_trigger(report, config.theta_w)
        )
        if ready and observer is not None:
            observer(arch, report)
        arch, grown = growth_event(
            arch,
            z,
            sig,
            s,
            config.theta_w,
            config.k_protos,
            rng,
            max_heads=config.max_heads,
            **settings,
        )
        if grown is not None:
            fired.append(grown)
            bank = arch.heads[-1]
            view = bank.in_plane(bank.coords())
            births.append(
                Birth(
                    bank.head_id,
                    arch.step,
                    bank.birth_lambda,
                    effective_scale(z @ bank.plane, view),
                )
            )
        if arch.dwell_elapsed(s.n_min):
            try:
                arch, pruned = pruning_event(
                    arch,
                    z,
                    sig,
                    s,
                    config.phi_g,
                    gate=config.prune_gate,
                    **settings,
                )
                fired.extend(pruned)
            except PruneRefusalError as error:
                log.warning("Pruning refused", reason=str(error))
        if fired:
            events.extend(fired)
            metrics = _measure(
                arch, z, sig, s, sigma=metrics.sigma, **settings
            )
        steps.append(metrics)
        for bank in arch.heads:
            if bank.temperature <= s.t_min and bank.head_id not in first_reach:
                first_reach[bank.head_id] = arch.step
        report = arch.residual_report(sig)
        exhausted = (
            report.lambda_max <= config.theta_w
            or len(arch.heads) >= config.max_heads
        )
        quiet = arch.dwell_elapsed(QUIET_FACTOR * s.n_min)
        if exhausted and quiet and _stable(steps, arch.heads):
            stop_reason = "converged"
            break
    log.info(
        "Run finished",
        steps=arch.step,
        heads=len(arch.heads),
        reason=stop_reason,
    )
    return RunTrace(
        steps=steps,
        events=events,
        births=births,
        heads=arch.heads,
        step_sizes=s,
        validation=validation,
        first_reach=first_reach,
        frob=frob,
        stop_reason=stop_reason,
    )


def classify_heads(trace: RunTrace, t_min: float) -> HeadClasses:
    """Split final heads into local (at ``T_min``) and global ones."""

    local: Set[int] = set()
    global_: Set[int] = set()
    reach: Dict[int, Optional[int]] = {}
    for bank in trace.heads:
        if abs(bank.temperature - t_min) <= 1e-9:
            local.add(bank.head_id)
        else:
            global_.add(bank.head_id)
        reach[bank.head_id] = trace.first_reach.get(bank.head_id)
    if not global_:
        log.info("All heads reached T_min", heads=len(local))
    return HeadClasses(local=local, global_=global_, first_reach=reach)
