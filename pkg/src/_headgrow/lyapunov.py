"""Lyapunov: Piecewise free energy and its monotonicity audit.

The free energy of an architecture adds, over all heads, the prototype
loss on the head's plane view, an inverse-square barrier between the
prototypes of a head and a temperature potential::

    W = Σ_h [ L_q(h) + λ·Σ_{k<k'} ‖p_k − p_k'‖⁻² + Φ(T_h) ]

Sums are taken with :py:func:`math.fsum` so that dropping a head changes
``W`` by exactly that head's terms.
"""

import math
from dataclasses import asdict
from dataclasses import dataclass
from typing import TYPE_CHECKING
from typing import Any
from typing import Dict
from typing import Iterable
from typing import List
from typing import NamedTuple
from typing import Tuple
from typing import Union

import numpy as np
from scipy.spatial import distance

from _headgrow.numerics import Matrix
from _headgrow.prototypes import PrototypeBank
from _headgrow.prototypes import loss_lq
from _headgrow.utils.exceptions import CollapseError
from _headgrow.utils.exceptions import ParameterError

if TYPE_CHECKING:
    from _headgrow.dynamics import ArchitectureState
    from _headgrow.dynamics import RunTrace
    from _headgrow.dynamics import StepSizes

__all__ = [
    "AuditReport",
    "FreeEnergyBreakdown",
    "HeadEnergy",
    "POTENTIAL_ANCHORS",
    "audit_monotone",
    "barrier",
    "barrier_gradient",
    "f1_bound",
    "free_energy",
    "head_energy",
    "temperature_potential",
]

POTENTIAL_ANCHORS = ("floor", "init")
AUDIT_TOL = 1e-8
EVENT_TOL = 1e-12
COLLAPSE_SPREAD = 1e-6


def temperature_potential(t: float, t_init: float, eta_t: float) -> float:
    """Temperature potential ``Φ(T) = (T_init³ − T³)/(3·η_T)``.

    :raises ParameterError: For ``T > T_init`` or non-positive inputs.

    """

    if not (t > 0.0 and t_init > 0.0 and eta_t > 0.0):
        raise ParameterError(
            name="temperature_potential",
            value=(t, t_init, eta_t),
            reason="all arguments must be > 0",
        )
    if t > t_init * (1.0 + 1e-12):
        raise ParameterError(name="t", value=t, reason=f"exceeds {t_init}")
    return (t_init**3 - t**3) / (3.0 * eta_t)


def _floor_potential(t: float, t_min: float, eta_t: float) -> float:
    return (t**3 - t_min**3) / (3.0 * eta_t)


def barrier(bank: PrototypeBank, lambda_barrier: float) -> float:
    """Inverse-square barrier ``(λ/2)·Σ_{k≠k'} ‖p_k − p_k'‖⁻²``.

    Ordered pairs are summed with weight ``λ/2``, one ``λ`` per
    unordered pair.

    :raises CollapseError: If two prototypes coincide.

    """

    if bank.k < 2:
        return 0.0
    d2 = distance.pdist(bank.p, "sqeuclidean")
    spread = math.sqrt(float(d2.min()))
    if spread == 0.0 or not math.isfinite(spread):
        raise CollapseError(head_id=bank.head_id, spread=spread)
    return lambda_barrier * math.fsum(1.0 / d2)


def barrier_gradient(p: Matrix, lambda_barrier: float) -> Matrix:
    """Gradient of the barrier with respect to each prototype row."""

    p = np.asarray(p, dtype=np.float64)
    diff = p[:, None, :] - p[None, :, :]
    d2 = np.einsum("kjd,kjd->kj", diff, diff)
    np.fill_diagonal(d2, np.inf)
    if np.any(d2 == 0.0):
        raise CollapseError(head_id=-1, spread=0.0)
    weights = -2.0 * lambda_barrier / d2**2
    return np.einsum("kj,kjd->kd", weights, diff)


def f1_bound(eta_p: float, k_max: int) -> float:
    """Right-hand side ``2·η_P·C(K_max, 2)`` of the barrier condition."""

    return 2.0 * eta_p * math.comb(k_max, 2)


class HeadEnergy(NamedTuple):
    """Free-energy terms of one head."""

    head_id: int
    loss: float
    barrier: float
    potential: float

    @property
    def total(self) -> float:
        return math.fsum((self.loss, self.barrier, self.potential))


class FreeEnergyBreakdown(NamedTuple):
    """Free energy split into its parts, with the per-head terms."""

    loss_total: float
    barrier: float
    temp_potential: float
    total: float
    lambda_barrier: float
    heads: Tuple[HeadEnergy, ...]


def head_energy(
    bank: PrototypeBank,
    z: Matrix,
    lambda_barrier: float,
    s: "StepSizes",
    anchor: str = "floor",
) -> HeadEnergy:
    """Free-energy terms of a single head on its plane view of ``z``."""

    if bank.plane is None:
        view, coords = z, bank.p
    else:
        view, coords = z @ bank.plane, bank.coords()
    loss = loss_lq(view, bank.in_plane(coords))
    if anchor == "floor":
        potential = _floor_potential(bank.temperature, s.t_min, s.eta_t)
    elif anchor == "init":
        potential = temperature_potential(bank.temperature, s.t_init, s.eta_t)
    else:
        raise ParameterError(
            name="potential_anchor",
            value=anchor,
            reason=f"expected one of {POTENTIAL_ANCHORS}",
        )
    return HeadEnergy(
        head_id=bank.head_id,
        loss=loss,
        barrier=barrier(bank, lambda_barrier),
        potential=potential,
    )


def free_energy(
    arch: Union["ArchitectureState", Iterable[PrototypeBank]],
    z: Matrix,
    lambda_barrier: float,
    s: "StepSizes",
    anchor: str = "floor",
) -> FreeEnergyBreakdown:
    """Piecewise free energy of an architecture.

    :param arch: Architecture state, or any iterable of heads.
    :param z: N×d tokens.
    :param lambda_barrier: Barrier coefficient ``λ``.
    :param s: Step sizes; ``t_init``, ``t_min`` and ``eta_t`` shape the
        temperature potential.
    :param anchor: ``"floor"`` measures each potential from ``T_min``,
        giving ``(T³ − T_min³)/(3η_T)``; ``"init"`` uses
        :py:func:`temperature_potential`.
    :raises CollapseError: If any head has coincident prototypes.

    """

    heads = getattr(arch, "heads", arch)
    parts = tuple(
        head_energy(bank, z, lambda_barrier, s, anchor) for bank in heads
    )
    loss_total = math.fsum(h.loss for h in parts)
    barrier_total = math.fsum(h.barrier for h in parts)
    potential = math.fsum(h.potential for h in parts)
    total = math.fsum(
        term for h in parts for term in (h.loss, h.barrier, h.potential)
    )
    return FreeEnergyBreakdown(
        loss_total=loss_total,
        barrier=barrier_total,
        temp_potential=potential,
        total=total,
        lambda_barrier=lambda_barrier,
        heads=parts,
    )


@dataclass
class AuditReport:
    """Outcome of the free-energy monotonicity audit.

    A growth jump must equal the new head's own terms and a pruning drop
    the removed head's terms. ``w_end_le_w0`` is the literal comparison
    and is informational only; every growth raises ``W``.
    """

    f1_holds: bool
    f1_bound: float
    max_dwell_increase: float
    max_growth_jump: float
    max_growth_mismatch: float
    max_prune_jump: float
    max_prune_mismatch: float
    w0: float
    w_end: float
    added_total: float
    removed_total: float
    absorbed_total: float
    w_end_le_w0: bool
    w_end_within_events: bool
    min_spread: float
    collapse_warning: bool
    dwell_ok: bool
    growth_ok: bool
    prune_ok: bool

    @property
    def passed(self) -> bool:
        return all(
            (
                self.f1_holds,
                self.dwell_ok,
                self.growth_ok,
                self.prune_ok,
                self.w_end_within_events,
            )
        )

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _relative(value: float, scale: float) -> float:
    return value / max(1.0, abs(scale))


def audit_monotone(
    trace: "RunTrace", lambda_barrier: float, s: "StepSizes", k_max: int
) -> AuditReport:
    """Check that the free energy never rises beyond its allowances.

    Between events every step must not raise ``W`` by more than 1e-8
    relative. A growth event must raise ``W`` by exactly the grown
    head's terms and a pruning event must lower it by exactly the
    removed head's terms. Over the whole run ``W`` may end no higher
    than ``W(0)`` plus the added minus the removed head energies.
    """

    bound = f1_bound(s.eta_p, k_max)
    energies = [m.free_energy for m in trace.steps]
    by_step: Dict[int, List[Any]] = {}
    for event in trace.events:
        by_step.setdefault(event.step, []).append(event)

    dwell: List[float] = [0.0]
    for t in range(1, len(energies)):
        events = by_step.get(trace.steps[t].step, [])
        current = events[0].free_energy_before if events else energies[t]
        dwell.append(_relative(current - energies[t - 1], energies[t - 1]))

    growth_jump: List[float] = [0.0]
    growth_mismatch: List[float] = [0.0]
    prune_jump: List[float] = [0.0]
    prune_mismatch: List[float] = [0.0]
    for event in trace.events:
        jump = event.free_energy_after - event.free_energy_before
        scale = max(abs(event.free_energy_before), abs(event.added_energy))
        if event.kind == "growth":
            growth_jump.append(_relative(jump, scale))
            mismatch = abs(jump - event.added_energy)
            growth_mismatch.append(_relative(mismatch, scale))
        else:
            prune_jump.append(_relative(jump, scale))
            mismatch = abs(jump + event.removed_energy)
            prune_mismatch.append(_relative(mismatch, scale))

    added = math.fsum(e.added_energy for e in trace.events)
    removed = math.fsum(e.removed_energy for e in trace.events)
    absorbed = math.fsum(e.absorbed_energy for e in trace.events)
    w0 = energies[0] if energies else 0.0
    w_end = energies[-1] if energies else 0.0
    slack = AUDIT_TOL * max(1.0, abs(w0), abs(w_end))
    spreads = [m.min_spread for m in trace.steps]
    min_spread = min(spreads) if spreads else math.inf
    report = AuditReport(
        f1_holds=lambda_barrier > bound,
        f1_bound=bound,
        max_dwell_increase=max(dwell),
        max_growth_jump=max(growth_jump),
        max_growth_mismatch=max(growth_mismatch),
        max_prune_jump=max(prune_jump),
        max_prune_mismatch=max(prune_mismatch),
        w0=w0,
        w_end=w_end,
        added_total=added,
        removed_total=removed,
        absorbed_total=absorbed,
        w_end_le_w0=w_end <= w0 + AUDIT_TOL * max(1.0, abs(w0)),
        w_end_within_events=w_end <= w0 + added - removed + slack,
        min_spread=min_spread,
        collapse_warning=min_spread < COLLAPSE_SPREAD,
        dwell_ok=max(dwell) <= AUDIT_TOL,
        growth_ok=max(growth_mismatch) <= EVENT_TOL,
        prune_ok=max(prune_jump) <= AUDIT_TOL
        and max(prune_mismatch) <= EVENT_TOL,
    )
    return report
