"""Synthetic: Token matrices with a prescribed rotation spectrum."""

from typing import Tuple

import numpy as np

from _headgrow.growth import DirectionalSignal
from _headgrow.harness.config import RunConfig
from _headgrow.numerics import Matrix
from _headgrow.numerics import Rng
from _headgrow.numerics import random_orthonormal

__all__ = [
    "block_spectrum",
    "gen_synthetic",
    "rotation_signal",
    "token_scales",
]


def block_spectrum(cfg: RunConfig) -> np.ndarray:
    """Rotation magnitudes ``λ_k = λ₁·ρ^(k−1)`` for every block."""

    return cfg.lambda1 * cfg.rho ** np.arange(cfg.n_blocks, dtype=np.float64)


def rotation_signal(magnitudes: np.ndarray, basis: Matrix) -> Matrix:
    """Antisymmetric matrix with one rotation block per magnitude.

    Block ``k`` acts on columns ``2k`` and ``2k + 1`` of ``basis``.
    """

    first = basis[:, 0 : 2 * len(magnitudes) : 2]
    second = basis[:, 1 : 2 * len(magnitudes) : 2]
    m = (first * magnitudes) @ second.T
    return m - m.T


def token_scales(cfg: RunConfig) -> np.ndarray:
    """Per-basis-column token scale of the ``spectrum`` scaling.

    Both columns of plane ``k`` get ``sqrt(λ_k/λ₁)``; columns outside
    every block take the weakest block's scale.
    """

    ratios = np.sqrt(block_spectrum(cfg) / cfg.lambda1)
    scales = np.full(cfg.dim, ratios[-1])
    scales[0 : 2 * cfg.n_blocks : 2] = ratios
    scales[1 : 2 * cfg.n_blocks : 2] = ratios
    return scales


def gen_synthetic(
    cfg: RunConfig, rng: Rng
) -> Tuple[Matrix, DirectionalSignal]:
    """Draw centred Gaussian tokens and a rotation-block signal.

    Tokens are drawn first and the orthonormal basis second, so a fixed
    generator state fixes both. Under ``token_scaling = spectrum`` the
    token coordinates along the basis are scaled by
    :py:func:`token_scales` before centring.
    """

    z = rng.standard_normal((cfg.n_tokens, cfg.dim))
    basis = random_orthonormal(cfg.dim, rng)
    if cfg.token_scaling == "spectrum":
        z = (z * token_scales(cfg)) @ basis.T
    z -= z.mean(axis=0)
    m_a = rotation_signal(block_spectrum(cfg), basis)
    return z, DirectionalSignal.from_tokens(m_a, z, cfg.signal_weighting)
