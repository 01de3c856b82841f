"""Prototypes: Soft-assignment prototype layer and its diagnostics.

A head is a bank of ``K`` prototypes living in a 2-D plane of the token
space. Tokens are softly assigned to prototypes through a softmax over
negative squared distances at temperature ``T``::

    q[n, k] = exp(-|z_n - p_k|² / T) / Σ_j exp(-|z_n - p_j|² / T)

Everything in this module is a pure function of ``(z, bank)``; the
functions are generic in the ambient dimension so they can be fed either
full tokens or plane coordinates.
"""

import math
from dataclasses import dataclass
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from scipy.spatial import distance

from _headgrow.numerics import Matrix
from _headgrow.numerics import central_differences
from _headgrow.utils.common import strict_checks
from _headgrow.utils.exceptions import InvariantError
from _headgrow.utils.exceptions import ParameterError
from _headgrow.utils.exceptions import ShapeError

__all__ = [
    "LossDecomposition",
    "PhiCurve",
    "PrototypeBank",
    "assignment_entropy",
    "assignment_first_variation",
    "assignment_second_variation",
    "effective_scale",
    "expand_tokens",
    "gini_trace",
    "grad_prototypes",
    "grad_temperature",
    "grad_v",
    "loss_decomposition",
    "loss_lq",
    "phi_curve",
    "phi_second_lower_bound",
    "prototype_spread",
    "residual_covariance_ck",
    "separation_force",
    "sigma_q",
    "soft_assign",
    "soft_centroids",
    "squared_distances",
]

UNIT_TOL = 1e-10
ROW_SUM_TOL = 1e-12
PHI_STEP = 1e-4


@dataclass
class PrototypeBank:
    """State of one head.

    :var p: K×d prototype matrix, rows inside ``span(plane)``.
    :var temperature: Current softmax temperature ``T``.
    :var plane: d×2 orthonormal basis of the owned subspace. Optional
        for free-standing banks used in diagnostics.
    :var birth_lambda: Residual strength at the head's birth.
    :var birth_step: Step index of the birth.
    :var head_id: Stable identifier, unique within a run.

    """

    p: Matrix
    temperature: float
    plane: Optional[Matrix] = None
    birth_lambda: float = 0.0
    birth_step: int = 0
    head_id: int = 0

    def __post_init__(self) -> None:
        self.p = np.atleast_2d(np.asarray(self.p, dtype=np.float64))
        if self.plane is not None:
            self.plane = np.asarray(self.plane, dtype=np.float64)

    @property
    def k(self) -> int:
        """Number of prototypes."""
        return int(self.p.shape[0])

    def coords(self) -> Matrix:
        """Prototype coordinates in the head plane (K×2)."""
        if self.plane is None:
            raise ShapeError(
                op="coords", expected="a bank with a plane", shape=None
            )
        return self.p @ self.plane

    def in_plane(self, coords: Matrix) -> "PrototypeBank":
        """Return a plane-coordinate copy of this bank."""
        return PrototypeBank(
            p=np.asarray(coords, dtype=np.float64),
            temperature=self.temperature,
            birth_lambda=self.birth_lambda,
            birth_step=self.birth_step,
            head_id=self.head_id,
        )


class LossDecomposition(NamedTuple):
    """Fit term, separation term and hard-assignment loss."""

    l_fit: float
    v_sep: float
    l_ols: float


class PhiCurve(NamedTuple):
    """Separation force along the token expansion and its derivatives."""

    values: List[float]
    d1: float
    d2: float
    d2_lower_bound: float


def _tokens(z: Matrix, bank: PrototypeBank, op: str) -> Matrix:
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.ndim != 2 or z.shape[1] != bank.p.shape[1]:
        raise ShapeError(
            op=op,
            expected=f"N×{bank.p.shape[1]} tokens",
            shape=z.shape,
        )
    return z


def squared_distances(z: Matrix, p: Matrix) -> Matrix:
    """Return the N×K matrix of squared token-prototype distances."""

    diff = z[:, None, :] - p[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _softmax(d2: Matrix, temperature: float) -> Matrix:
    logits = -d2 / temperature
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=1, keepdims=True)


def _check_temperature(temperature: float) -> None:
    if not temperature > 0.0:
        raise ParameterError(
            name="temperature", value=temperature, reason="must be > 0"
        )


def soft_assign(z: Matrix, bank: PrototypeBank) -> Matrix:
    """Soft assignment of tokens to prototypes.

    :param z: N×d tokens.
    :param bank: Prototype bank with positive temperature.
    :return: N×K row-stochastic assignment matrix.
    :raises ParameterError: If the temperature is not positive.

    """

    _check_temperature(bank.temperature)
    z = _tokens(z, bank, "soft_assign")
    q = _softmax(squared_distances(z, bank.p), bank.temperature)
    if strict_checks():
        worst = float(np.max(np.abs(q.sum(axis=1) - 1.0)))
        if worst > ROW_SUM_TOL or np.any(q < 0.0):
            raise InvariantError(
                name="assignment rows",
                detail=f"row sum deviation {worst:.3e}",
                valid=False,
            )
    return q


def soft_centroids(q: Matrix, bank: PrototypeBank) -> Matrix:
    """Return the N×d matrix of soft centroids ``μ_n = Σ_k q_nk p_k``."""

    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != bank.k:
        raise ShapeError(
            op="soft_centroids", expected=f"N×{bank.k} weights", shape=q.shape
        )
    return q @ bank.p


def loss_lq(z: Matrix, bank: PrototypeBank) -> float:
    """Expected squared distance of each token from its prototypes."""

    z = _tokens(z, bank, "loss_lq")
    d2 = squared_distances(z, bank.p)
    return float(np.sum(_softmax(d2, bank.temperature) * d2))


def loss_decomposition(z: Matrix, bank: PrototypeBank) -> LossDecomposition:
    """Split ``loss_lq`` into a fit term and a separation term.

    ``loss_lq = l_fit + v_sep`` holds exactly; ``l_ols`` is the hard
    nearest-prototype loss that ``l_fit`` approaches as ``T → 0``.
    """

    z = _tokens(z, bank, "loss_decomposition")
    d2 = squared_distances(z, bank.p)
    q = _softmax(d2, bank.temperature)
    mu = q @ bank.p
    l_fit = float(np.sum((z - mu) ** 2))
    v_sep = float(np.sum(q * squared_distances(mu, bank.p)))
    l_ols = float(np.sum(d2.min(axis=1)))
    return LossDecomposition(l_fit=l_fit, v_sep=v_sep, l_ols=l_ols)


def sigma_q(q: Matrix) -> Matrix:
    """Aggregated assignment covariance ``Σ_n diag(q_n) − q_n q_nᵀ``."""

    q = np.asarray(q, dtype=np.float64)
    out = np.diag(q.sum(axis=0)) - q.T @ q
    if strict_checks():
        smallest = float(np.linalg.eigvalsh(out)[0])
        rows = float(np.max(np.abs(q.sum(axis=1) - 1.0), initial=0.0))
        if smallest < -1e-12 * max(1.0, q.shape[0]) or rows > ROW_SUM_TOL:
            detail = f"min eigenvalue {smallest:.3e}, row sum gap {rows:.3e}"
            raise InvariantError(
                name="assignment covariance",
                detail=detail,
                valid=False,
            )
    return out


def gini_trace(q: Matrix) -> float:
    """Total Gini diversity ``Σ_n Σ_k q_nk (1 − q_nk)``."""

    q = np.asarray(q, dtype=np.float64)
    return float(np.sum(q * (1.0 - q)))


def assignment_entropy(q: Matrix) -> np.ndarray:
    """Shannon entropy of every assignment row, in nats."""

    q = np.asarray(q, dtype=np.float64)
    logs = np.log(np.where(q > 0.0, q, 1.0))
    return -np.sum(q * logs, axis=1)


def grad_prototypes(z: Matrix, bank: PrototypeBank) -> Matrix:
    """Analytic gradient of ``loss_lq`` with respect to the prototypes.

    The softmax dependence of ``q`` on ``P`` is included, which gives
    the per-token weight ``q_nk (1 − (d_nk − d̄_n)/T)`` on
    ``2(p_k − z_n)``.
    """

    z = _tokens(z, bank, "grad_prototypes")
    d2 = squared_distances(z, bank.p)
    q = _softmax(d2, bank.temperature)
    mean_d2 = np.sum(q * d2, axis=1, keepdims=True)
    weights = q * (1.0 - (d2 - mean_d2) / bank.temperature)
    return 2.0 * (weights.sum(axis=0)[:, None] * bank.p - weights.T @ z)


def grad_v(bank: PrototypeBank, sq: Matrix) -> Matrix:
    """Gradient of the separation term, ``2·Σ_q·P`` (K×d)."""

    sq = np.asarray(sq, dtype=np.float64)
    if sq.shape != (bank.k, bank.k):
        raise ShapeError(
            op="grad_v", expected=f"{bank.k}×{bank.k} matrix", shape=sq.shape
        )
    return 2.0 * sq @ bank.p


def separation_force(z: Matrix, bank: PrototypeBank) -> float:
    """Squared Frobenius norm of the separation gradient."""

    q = soft_assign(z, bank)
    return float(np.sum(grad_v(bank, sigma_q(q)) ** 2))


def prototype_spread(bank: PrototypeBank) -> float:
    """Minimum pairwise prototype distance.

    :raises ParameterError: If the bank holds fewer than two prototypes.

    """

    if bank.k < 2:
        raise ParameterError(name="K", value=bank.k, reason="need >= 2")
    return float(distance.pdist(bank.p).min())


def _variance_of_distances(z: Matrix, bank: PrototypeBank) -> float:
    d2 = squared_distances(z, bank.p)
    q = _softmax(d2, bank.temperature)
    centred = d2 - np.sum(q * d2, axis=1, keepdims=True)
    return float(np.sum(q * centred**2))


def effective_scale(z: Matrix, bank: PrototypeBank) -> float:
    """Mean q-weighted variance of squared prototype distances."""

    z = _tokens(z, bank, "effective_scale")
    return _variance_of_distances(z, bank) / z.shape[0]


def grad_temperature(z: Matrix, bank: PrototypeBank) -> float:
    """Derivative of ``loss_lq`` with respect to ``T`` (non-negative)."""

    _check_temperature(bank.temperature)
    z = _tokens(z, bank, "grad_temperature")
    return _variance_of_distances(z, bank) / bank.temperature**2


def _unit(u_star: Sequence[float], d: int) -> np.ndarray:
    u = np.asarray(u_star, dtype=np.float64).reshape(-1)
    if u.shape != (d,):
        raise ShapeError(op="u_star", expected=f"length {d}", shape=u.shape)
    if abs(float(np.linalg.norm(u)) - 1.0) > UNIT_TOL:
        raise ParameterError(
            name="u_star",
            value=float(np.linalg.norm(u)),
            reason="direction must have unit norm",
        )
    return u


def _projections(
    z: Matrix, bank: PrototypeBank, u: np.ndarray
) -> Tuple[Matrix, np.ndarray, np.ndarray, np.ndarray]:
    q = soft_assign(z, bank)
    alpha = z @ u
    p_star = bank.p @ u
    p_bar = q @ p_star
    return q, alpha, p_star, p_bar


def expand_tokens(
    z: Matrix, u_star: Sequence[float], eps: float
) -> Matrix:
    """Return ``Z + ε·diag(α)·u*ᵀ`` with ``α = Z·u*``."""

    u = np.asarray(u_star, dtype=np.float64).reshape(-1)
    return z + eps * np.outer(z @ u, u)


def assignment_first_variation(
    z: Matrix, bank: PrototypeBank, u_star: Sequence[float]
) -> Matrix:
    """Derivative of ``q`` along the token expansion at ``ε = 0``."""

    z = _tokens(z, bank, "assignment_first_variation")
    u = _unit(u_star, z.shape[1])
    q, alpha, p_star, p_bar = _projections(z, bank, u)
    scale = 2.0 * alpha / bank.temperature
    return scale[:, None] * q * (p_star[None, :] - p_bar[:, None])


def assignment_second_variation(
    z: Matrix, bank: PrototypeBank, u_star: Sequence[float]
) -> Matrix:
    """Second derivative of ``q`` along the token expansion at ``ε = 0``."""

    z = _tokens(z, bank, "assignment_second_variation")
    u = _unit(u_star, z.shape[1])
    q, alpha, p_star, p_bar = _projections(z, bank, u)
    dev = p_star[None, :] - p_bar[:, None]
    var = np.sum(q * dev**2, axis=1, keepdims=True)
    scale = 4.0 * alpha**2 / bank.temperature**2
    return scale[:, None] * q * (dev**2 - var)


def phi_curve(
    z: Matrix,
    bank: PrototypeBank,
    u_star: Sequence[float],
    epsilons: Sequence[float],
) -> PhiCurve:
    """Separation force on expanded tokens ``Z(ε)``.

    :param z: N×d tokens.
    :param bank: Prototype bank, prototypes kept fixed.
    :param u_star: Unit expansion direction.
    :param epsilons: Expansion amounts, must contain 0 and 1.
    :return: Curve values, central-difference ``φ'(0)`` and ``φ''(0)``
        at step 1e-4 and the curvature lower bound.

    """

    z = _tokens(z, bank, "phi_curve")
    u = _unit(u_star, z.shape[1])
    eps_list = [float(e) for e in epsilons]
    if 0.0 not in eps_list or 1.0 not in eps_list:
        raise ParameterError(
            name="epsilons", value=eps_list, reason="must contain 0 and 1"
        )

    def phi(eps: float) -> float:
        return separation_force(expand_tokens(z, u, eps), bank)

    values = [phi(eps) for eps in eps_list]
    d1, d2 = central_differences(phi, PHI_STEP)
    return PhiCurve(
        values=values,
        d1=float(d1),
        d2=float(d2),
        d2_lower_bound=phi_second_lower_bound(z, bank, u),
    )


def phi_second_lower_bound(
    z: Matrix, bank: PrototypeBank, u_star: Sequence[float]
) -> float:
    """Lower bound on ``φ''(0)`` from spread, residual energy and variance.

    ``(32/T²)·[(s₀²/K²)·‖Z u*‖²·mean Var_q[p*] − C₀]`` with
    ``C₀ = ‖α‖∞²·max Var_q[p*]·N·D²`` and ``D = max ‖p_k − μ_n‖``.
    """

    u = _unit(u_star, z.shape[1])
    q, alpha, p_star, p_bar = _projections(z, bank, u)
    var = np.sum(q * (p_star[None, :] - p_bar[:, None]) ** 2, axis=1)
    mu = q @ bank.p
    reach = math.sqrt(float(squared_distances(mu, bank.p).max()))
    s0 = prototype_spread(bank) if bank.k >= 2 else 0.0
    lam = float(alpha @ alpha)
    c0 = float(np.max(np.abs(alpha))) ** 2 * float(var.max())
    c0 *= z.shape[0] * reach**2
    lead = (s0**2 / bank.k**2) * lam * float(var.mean())
    return 32.0 / bank.temperature**2 * (lead - c0)


def residual_covariance_ck(
    z: Matrix, bank: PrototypeBank, u_star: Sequence[float]
) -> List[float]:
    """Return ``C_k = Σ_n α_n (p_k* − p̄_n*)`` for every prototype."""

    z = _tokens(z, bank, "residual_covariance_ck")
    u = _unit(u_star, z.shape[1])
    _, alpha, p_star, p_bar = _projections(z, bank, u)
    ck = alpha @ (p_star[None, :] - p_bar[:, None])
    return [float(c) for c in ck]
