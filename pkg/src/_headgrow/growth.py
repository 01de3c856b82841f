"""Growth: Residual directional signal and the grow/prune controller.

The directional signal of a layer is the antisymmetric part ``M_a`` of
its query-key product, weighted by the token second moment::

    m_tilde = C^½ · M_a · C^½,   C = ZᵀZ / N

Heads capture 2-D rotation planes of ``m_tilde``. Whatever is left once
the captured planes are projected out is the residual matrix; its
spectral norm decides whether another head is grown.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple
from typing import Optional
from typing import Sequence

import numpy as np

from _headgrow.numerics import Matrix
from _headgrow.numerics import Rng
from _headgrow.numerics import antisym_dominant_plane
from _headgrow.numerics import as_matrix
from _headgrow.numerics import gram_schmidt_extend
from _headgrow.numerics import orthonormality_error
from _headgrow.numerics import sqrt_psd
from _headgrow.prototypes import PrototypeBank
from _headgrow.prototypes import prototype_spread
from _headgrow.utils.common import strict_checks
from _headgrow.utils.exceptions import DegenerateDirectionError
from _headgrow.utils.exceptions import InvariantError
from _headgrow.utils.exceptions import NumericError
from _headgrow.utils.exceptions import ParameterError
from _headgrow.utils.exceptions import ShapeError
from _headgrow.utils.logging import get_logger

__all__ = [
    "CapturedSubspace",
    "DirectionalSignal",
    "PRUNE_GATES",
    "ResidualReport",
    "SIGNAL_WEIGHTINGS",
    "block_magnitudes",
    "directional_info_loss",
    "gamma_h",
    "gate_alignment",
    "gate_update",
    "greedy_capture",
    "greedy_direction_capture",
    "growth_trigger",
    "prune_check",
    "residual_matrix",
    "spawn_head",
]

log = get_logger(__name__)

SIGNAL_WEIGHTINGS = ("second_moment", "identity")
PRUNE_GATES = ("gamma", "spread")
ANTISYMMETRY_TOL = 1e-12
JITTER = 1e-3


def _antisymmetric(m: Matrix, op: str, tol: float) -> Matrix:
    m = as_matrix(m, op)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(op=op, expected="a square matrix", shape=m.shape)
    if np.linalg.norm(m + m.T) > tol * max(1.0, float(np.linalg.norm(m))):
        raise ShapeError(
            op=op, expected="an antisymmetric matrix", shape=m.shape
        )
    return m


@dataclass(frozen=True)
class DirectionalSignal:
    """Antisymmetric attention product and its token weighting.

    :var m_a: d×d antisymmetric query-key product.
    :var c_half: Symmetric square root of the token second moment.
    :var m_tilde: ``c_half · m_a · c_half``, antisymmetric.

    """

    m_a: Matrix
    c_half: Matrix
    m_tilde: Matrix

    @classmethod
    def from_tokens(
        cls, m_a: Matrix, z: Matrix, weighting: str = "second_moment"
    ) -> "DirectionalSignal":
        """Weight ``m_a`` by the second moment of tokens ``z``.

        :param m_a: d×d antisymmetric matrix.
        :param z: N×d tokens.
        :param weighting: ``"second_moment"`` conjugates by ``C^½``,
            ``"identity"`` leaves ``m_a`` unweighted.
        :raises ShapeError: For non-antisymmetric ``m_a`` or mismatched
            token dimension.
        :raises ParameterError: For an unknown weighting.

        """

        m_a = _antisymmetric(m_a, "DirectionalSignal", ANTISYMMETRY_TOL)
        z = as_matrix(z, "DirectionalSignal")
        if z.shape[1] != m_a.shape[0]:
            raise ShapeError(
                op="DirectionalSignal",
                expected=f"N×{m_a.shape[0]} tokens",
                shape=z.shape,
            )
        if weighting == "second_moment":
            c_half = sqrt_psd(z.T @ z / z.shape[0])
        elif weighting == "identity":
            c_half = np.eye(m_a.shape[0])
        else:
            raise ParameterError(
                name="signal_weighting",
                value=weighting,
                reason=f"expected one of {SIGNAL_WEIGHTINGS}",
            )
        m_tilde = c_half @ m_a @ c_half
        m_tilde = 0.5 * (m_tilde - m_tilde.T)
        return cls(m_a=m_a, c_half=c_half, m_tilde=m_tilde)

    @property
    def dim(self) -> int:
        """Ambient dimension ``d``."""
        return int(self.m_tilde.shape[0])

    @property
    def frob(self) -> float:
        """Frobenius norm of ``m_tilde``."""
        return float(np.linalg.norm(self.m_tilde))


@dataclass(frozen=True)
class CapturedSubspace:
    """Orthonormal basis of every plane captured so far.

    Two columns per head, in head order.
    """

    q_basis: Matrix

    @classmethod
    def empty(cls, dim: int) -> "CapturedSubspace":
        """Return the subspace of a layer without heads."""
        return cls(q_basis=np.zeros((dim, 0)))

    @classmethod
    def from_planes(
        cls, planes: Sequence[Matrix], dim: int
    ) -> "CapturedSubspace":
        """Rebuild the basis from a sequence of d×2 head planes."""
        if not planes:
            return cls.empty(dim)
        basis = np.column_stack(list(planes))
        if orthonormality_error(basis) > 1e-10:
            raise ShapeError(
                op="CapturedSubspace",
                expected="mutually orthonormal planes",
                shape=basis.shape,
            )
        return cls(q_basis=basis)

    @property
    def n_planes(self) -> int:
        """Number of captured planes."""
        return int(self.q_basis.shape[1] // 2)

    def extend(self, plane: Matrix) -> "CapturedSubspace":
        """Return a new subspace with ``plane`` appended."""
        basis = gram_schmidt_extend(self.q_basis, plane)
        return CapturedSubspace(q_basis=basis)

    def last_plane(self) -> Matrix:
        """Return the most recently captured plane."""
        return self.q_basis[:, -2:]

    def projector_perp(self) -> Matrix:
        """Return ``I − Q·Qᵀ``."""
        d = self.q_basis.shape[0]
        return np.eye(d) - self.q_basis @ self.q_basis.T


class ResidualReport(NamedTuple):
    """Residual matrix with its spectral summary."""

    lambda_max: float
    plane: Matrix
    frob_sq: float
    matrix: Matrix


def residual_matrix(
    sig: DirectionalSignal, sub: CapturedSubspace
) -> ResidualReport:
    """Project the captured planes out of the directional signal.

    :return: Report with ``A_res = P⊥·m_tilde·P⊥``, its spectral norm,
        dominant plane and squared Frobenius norm.

    """

    if sub.q_basis.shape[0] != sig.dim:
        raise ShapeError(
            op="residual_matrix",
            expected=f"a basis of dimension {sig.dim}",
            shape=sub.q_basis.shape,
        )
    perp = sub.projector_perp()
    a_res = perp @ sig.m_tilde @ perp
    a_res = 0.5 * (a_res - a_res.T)
    lam, plane = antisym_dominant_plane(a_res)
    frob_sq = float(np.sum(a_res**2))
    if strict_checks() and lam > math.sqrt(frob_sq) + 1e-9:
        raise InvariantError(
            name="residual spectral norm",
            detail=f"{lam:.6g} exceeds Frobenius {math.sqrt(frob_sq):.6g}",
            valid=False,
        )
    return ResidualReport(
        lambda_max=lam, plane=plane, frob_sq=frob_sq, matrix=a_res
    )


def growth_trigger(report: ResidualReport, theta_w: float) -> bool:
    """Return True iff the residual strength strictly exceeds ``theta_w``."""

    if not theta_w > 0.0:
        raise ParameterError(name="theta_w", value=theta_w, reason="> 0")
    return bool(report.lambda_max > theta_w)


def spawn_head(
    report: ResidualReport,
    z: Matrix,
    k_protos: int,
    t_init: float,
    rng: Rng,
    *,
    head_id: int = 0,
    birth_step: int = 0,
) -> PrototypeBank:
    """Initialise a prototype bank on the residual's dominant plane.

    Prototypes sit at angles ``2πj/K`` on a circle around the mean token
    projection. The radius is the pooled standard deviation of the
    projections, and every point gets an in-plane jitter of
    ``1e-3·radius`` in a random direction.

    :raises ParameterError: For ``k_protos < 2`` or ``t_init <= 0``.
    :raises DegenerateDirectionError: If tokens have no variance in the
        plane.

    """

    if k_protos < 2:
        raise ParameterError(name="k_protos", value=k_protos, reason=">= 2")
    if not t_init > 0.0:
        raise ParameterError(name="t_init", value=t_init, reason="> 0")
    plane = report.plane
    coords = as_matrix(z, "spawn_head") @ plane
    centre = coords.mean(axis=0)
    dof = max(coords.shape[0] - 1, 1)
    radius = math.sqrt(float(np.sum((coords - centre) ** 2)) / (2 * dof))
    if radius <= 1e-12:
        raise DegenerateDirectionError(op="spawn_head", residual=radius)
    angles = 2.0 * np.pi * np.arange(k_protos) / k_protos
    ring = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    jitter_angles = rng.uniform(0.0, 2.0 * np.pi, size=k_protos)
    jitter = JITTER * radius * np.column_stack(
        [np.cos(jitter_angles), np.sin(jitter_angles)]
    )
    p = (centre + ring + jitter) @ plane.T
    log.debug(
        "Spawned head",
        head=head_id,
        step=birth_step,
        radius=round(radius, 6),
        lam=round(report.lambda_max, 6),
    )
    return PrototypeBank(
        p=p,
        temperature=float(t_init),
        plane=plane.copy(),
        birth_lambda=float(report.lambda_max),
        birth_step=int(birth_step),
        head_id=int(head_id),
    )


def gamma_h(head: PrototypeBank, sig: DirectionalSignal) -> float:
    """Share of directional energy held by the head's plane.

    ``Γ_h = ‖planeᵀ·m_tilde·plane‖₂ / ‖m_tilde‖_F``.

    :raises ParameterError: If the directional signal is zero.

    """

    frob = sig.frob
    if frob == 0.0:
        raise ParameterError(
            name="m_tilde", value=0.0, reason="zero directional signal"
        )
    if head.plane is None:
        raise ShapeError(op="gamma_h", expected="a head plane", shape=None)
    block = head.plane.T @ sig.m_tilde @ head.plane
    return min(1.0, float(np.linalg.norm(block, 2)) / frob)


def prune_check(
    head: PrototypeBank,
    sig: DirectionalSignal,
    phi_g: float,
    gate: str = "gamma",
) -> bool:
    """Return True when ``head`` should be removed.

    :param gate: ``"gamma"`` compares the directional share ``Γ_h`` with
        ``phi_g``; ``"spread"`` compares the prototype spread instead.

    """

    if not phi_g > 0.0:
        raise ParameterError(name="phi_g", value=phi_g, reason="> 0")
    if gate == "gamma":
        return gamma_h(head, sig) < phi_g
    if gate == "spread":
        return prototype_spread(head) < phi_g
    raise ParameterError(
        name="prune_gate", value=gate, reason=f"expected one of {PRUNE_GATES}"
    )


def gate_update(
    u: np.ndarray, report_matrix: Matrix, eta_plus: float
) -> np.ndarray:
    """One normalised power step ``u ← (u + η⁺·G·u)/‖·‖``.

    ``G = AᵀA`` for the residual matrix ``A``.

    :raises ParameterError: If ``eta_plus`` is not positive.
    :raises NumericError: If the gate state is zero or not finite.

    """

    if not eta_plus > 0.0:
        raise ParameterError(name="eta_plus", value=eta_plus, reason="> 0")
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(u))
    if norm == 0.0 or not math.isfinite(norm):
        raise NumericError(op="gate_update", detail=f"state norm {norm}")
    a = np.asarray(report_matrix, dtype=np.float64)
    step = u + eta_plus * (a.T @ (a @ u))
    return step / np.linalg.norm(step)


def gate_alignment(u: np.ndarray, plane: Matrix) -> float:
    """Squared norm of the projection of unit ``u`` onto ``plane``."""

    u = np.asarray(u, dtype=np.float64).reshape(-1)
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim == 1:
        plane = plane[:, None]
    return float(np.sum((plane.T @ u) ** 2) / (u @ u))


def directional_info_loss(
    sig: DirectionalSignal, sub: CapturedSubspace
) -> float:
    """Uncaptured share ``‖P⊥·m_tilde·P⊥‖_F / ‖m_tilde‖_F``."""

    frob = sig.frob
    if frob == 0.0:
        raise ParameterError(
            name="m_tilde", value=0.0, reason="zero directional signal"
        )
    perp = sub.projector_perp()
    return min(1.0, float(np.linalg.norm(perp @ sig.m_tilde @ perp)) / frob)


def block_magnitudes(m: Matrix) -> np.ndarray:
    """Rotation-block magnitudes of an antisymmetric matrix, descending.

    Singular values of an antisymmetric matrix come in equal pairs, one
    pair per rotation block; one value of each pair is returned.
    """

    m = _antisymmetric(m, "block_magnitudes", 1e-10)
    s = np.linalg.svd(m, compute_uv=False)
    return s[0 : 2 * (m.shape[0] // 2) : 2].copy()


def _complement(sub: CapturedSubspace, width: int = 2) -> Matrix:
    basis = sub.q_basis
    for i in range(basis.shape[0]):
        try:
            basis = gram_schmidt_extend(basis, np.eye(basis.shape[0])[:, i])
        except DegenerateDirectionError:
            continue
        if basis.shape[1] == sub.q_basis.shape[1] + width:
            return basis[:, -width:]
    raise DegenerateDirectionError(op="greedy_capture", residual=0.0)


def greedy_capture(
    sig: DirectionalSignal,
    n_planes: int,
    sub: Optional[CapturedSubspace] = None,
) -> CapturedSubspace:
    """Capture ``n_planes`` residual planes in dominance order.

    Once the residual vanishes, further planes are taken from the
    orthogonal complement so the rank always equals ``2·n_planes``.
    """

    if not 0 <= 2 * n_planes <= sig.dim:
        raise ParameterError(
            name="n_planes", value=n_planes, reason=f"need 2·n <= {sig.dim}"
        )
    sub = sub if sub is not None else CapturedSubspace.empty(sig.dim)
    for _ in range(n_planes):
        report = residual_matrix(sig, sub)
        if report.lambda_max > 0.0:
            try:
                sub = sub.extend(report.plane)
                continue
            except DegenerateDirectionError:
                pass
        sub = sub.extend(_complement(sub))
    return sub


def greedy_direction_capture(
    sig: DirectionalSignal,
    rank: int,
    sub: Optional[CapturedSubspace] = None,
) -> CapturedSubspace:
    """Capture ``rank`` single directions, one per growth trigger.

    Each step projects out one unit vector of the residual's dominant
    plane, which removes ``2·λ_max²`` of residual energy and leaves the
    partner vector to join the next block. After ``r`` steps the
    uncaptured energy is ``2·Σ_{i>r} λ_i²``, the least any rank-``r``
    subspace can leave behind.
    """

    if not 0 <= rank <= sig.dim:
        raise ParameterError(
            name="rank", value=rank, reason=f"need 0 <= r <= {sig.dim}"
        )
    sub = sub if sub is not None else CapturedSubspace.empty(sig.dim)
    for _ in range(rank):
        report = residual_matrix(sig, sub)
        if report.lambda_max > 0.0:
            try:
                sub = sub.extend(report.plane[:, 0])
                continue
            except DegenerateDirectionError:
                pass
        sub = sub.extend(_complement(sub, 1))
    return sub
