"""Baseline: Fixed random-basis MLP comparator.

An MLP layer only ever sees the directional signal through the row space
of its first weight matrix, drawn once from ``N(0, σ²/d)``. The
comparator grants the MLP its best case at a given rank: the rows most
aligned with the signal, orthonormalised.
"""

import math
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import List
from typing import Optional

import numpy as np

from _headgrow.growth import CapturedSubspace
from _headgrow.growth import DirectionalSignal
from _headgrow.growth import directional_info_loss
from _headgrow.growth import greedy_direction_capture
from _headgrow.growth import residual_matrix
from _headgrow.numerics import Matrix
from _headgrow.numerics import Rng
from _headgrow.numerics import gram_schmidt_extend
from _headgrow.numerics import spawn_rngs
from _headgrow.utils.exceptions import ParameterError
from _headgrow.utils.logging import get_logger

__all__ = [
    "DominanceReport",
    "DominanceTrial",
    "RandomMlpBasis",
    "compare_info_loss",
    "mlp_alignment",
    "mlp_captured_subspace",
]

log = get_logger(__name__)

GAIN_TOL = 1e-9


@dataclass(frozen=True)
class RandomMlpBasis:
    """First-layer weights of a random MLP, one row per hidden unit."""

    w1: Matrix
    d_ff: int
    sigma_sq: float

    @classmethod
    def draw(
        cls, dim: int, rng: Rng, ratio: int = 4, sigma_sq: float = 1.0
    ) -> "RandomMlpBasis":
        """Draw ``ratio·dim`` rows with entries from ``N(0, σ²/d)``."""
        if dim < 1 or ratio < 1 or not sigma_sq > 0.0:
            raise ParameterError(
                name="RandomMlpBasis",
                value=(dim, ratio, sigma_sq),
                reason="need dim >= 1, ratio >= 1 and sigma_sq > 0",
            )
        d_ff = ratio * dim
        w1 = rng.normal(0.0, math.sqrt(sigma_sq / dim), size=(d_ff, dim))
        return cls(w1=w1, d_ff=d_ff, sigma_sq=sigma_sq)

    def unit_rows(self) -> Matrix:
        return self.w1 / np.linalg.norm(self.w1, axis=1, keepdims=True)


def mlp_alignment(basis: RandomMlpBasis, v: Matrix) -> float:
    """Best squared alignment of a unit row with ``v``.

    ``v`` is a unit vector or a d×2 orthonormal plane; for a plane the
    alignment of a row is its squared projection norm onto the plane.

    :raises ParameterError: If ``v`` is not unit norm (or orthonormal).

    """

    v = np.asarray(v, dtype=np.float64)
    cols = v[:, None] if v.ndim == 1 else v
    if np.linalg.norm(cols.T @ cols - np.eye(cols.shape[1])) > 1e-10:
        raise ParameterError(
            name="v", value=cols.shape, reason="must be unit / orthonormal"
        )
    return float(np.max(np.sum((basis.unit_rows() @ cols) ** 2, axis=1)))


def mlp_captured_subspace(
    basis: RandomMlpBasis,
    r: int,
    sig: Optional[DirectionalSignal] = None,
) -> CapturedSubspace:
    """Orthonormalised span of the ``r`` rows best aligned with ``sig``.

    Rows are ranked by ``‖m_tilde·ŵ_i‖²``; without a signal the first
    ``r`` rows are taken.

    :raises ParameterError: For ``r`` outside ``[0, d]``.
    :raises DegenerateDirectionError: If the chosen rows are rank
        deficient.

    """

    dim = basis.w1.shape[1]
    if not 0 <= r <= min(dim, basis.d_ff):
        raise ParameterError(name="r", value=r, reason=f"need 0 <= r <= {dim}")
    if r == 0:
        return CapturedSubspace.empty(dim)
    rows = basis.unit_rows()
    if sig is None:
        chosen = rows[:r]
    else:
        energy = np.sum((rows @ sig.m_tilde.T) ** 2, axis=1)
        order = np.argsort(-energy, kind="stable")
        chosen = rows[order[:r]]
    return CapturedSubspace(
        q_basis=gram_schmidt_extend(np.zeros((dim, 0)), chosen.T)
    )


@dataclass(frozen=True)
class DominanceTrial:
    """One paired comparison at matched rank."""

    seed_index: int
    i_ddcl: float
    i_mlp: float
    alignment: float
    gain: float
    energy_gain: float
    gain_bound: float

    @property
    def ddcl_wins(self) -> bool:
        return self.i_ddcl < self.i_mlp

    @property
    def bound_holds(self) -> bool:
        return self.energy_gain >= self.gain_bound - GAIN_TOL

    @property
    def literal_bound_holds(self) -> bool:
        """Unsquared gain ``I_MLP − I_DDCL`` against the same bound."""
        return self.gain >= self.gain_bound - GAIN_TOL


@dataclass
class DominanceReport:
    """Aggregate of :py:func:`compare_info_loss` trials."""

    rank: int
    degenerate: bool
    trials: List[DominanceTrial] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(t.ddcl_wins for t in self.trials)

    @property
    def win_rate(self) -> float:
        return self.wins / len(self.trials) if self.trials else math.nan

    @property
    def bound_holds(self) -> bool:
        return all(t.bound_holds for t in self.trials)

    @property
    def literal_bound_misses(self) -> int:
        return sum(not t.literal_bound_holds for t in self.trials)

    @property
    def never_worse(self) -> bool:
        return all(t.i_ddcl <= t.i_mlp + GAIN_TOL for t in self.trials)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out.update(
            wins=self.wins,
            win_rate=self.win_rate,
            bound_holds=self.bound_holds,
            literal_bound_misses=self.literal_bound_misses,
            never_worse=self.never_worse,
        )
        return out


def compare_info_loss(
    sig: DirectionalSignal,
    seeds: int,
    rank: int,
    *,
    seed: int = 0,
    ratio: int = 4,
    sigma_sq: float = 1.0,
) -> DominanceReport:
    """Compare directional information loss of DDCL and a random MLP.

    DDCL captures ``rank`` directions greedily, one dominant residual
    direction per growth trigger; every trial draws a fresh MLP basis
    and takes its best-aligned rows of the same rank. The gain bound is
    ``(λ_max²/‖m_tilde‖_F²)·(1 − a)``, ``a`` being the best row
    alignment with the dominant plane. It is checked against the energy
    gain ``I_MLP² − I_DDCL²`` and, separately, against the unsquared
    gain ``I_MLP − I_DDCL``.

    :raises ParameterError: For a rank outside ``[1, d]``.

    """

    if not 1 <= rank <= sig.dim:
        raise ParameterError(
            name="rank", value=rank, reason=f"need 1 <= r <= {sig.dim}"
        )
    report = DominanceReport(rank=rank, degenerate=sig.frob == 0.0)
    if report.degenerate:
        log.warning("Zero directional signal, comparison skipped")
        return report
    dominant = residual_matrix(sig, CapturedSubspace.empty(sig.dim))
    ddcl = directional_info_loss(sig, greedy_direction_capture(sig, rank))
    share = dominant.lambda_max**2 / sig.frob**2
    for index, rng in enumerate(spawn_rngs(seed, seeds)):
        basis = RandomMlpBasis.draw(sig.dim, rng, ratio, sigma_sq)
        mlp = directional_info_loss(
            sig, mlp_captured_subspace(basis, rank, sig)
        )
        align = mlp_alignment(basis, dominant.plane)
        report.trials.append(
            DominanceTrial(
                seed_index=index,
                i_ddcl=ddcl,
                i_mlp=mlp,
                alignment=align,
                gain=mlp - ddcl,
                energy_gain=mlp**2 - ddcl**2,
                gain_bound=share * (1.0 - align),
            )
        )
    if not report.never_worse:
        log.warning("MLP beat the greedy capture", rank=rank)
    log.info(
        "Dominance trials",
        rank=rank,
        wins=report.wins,
        trials=len(report.trials),
        literal_misses=report.literal_bound_misses,
    )
    return report
