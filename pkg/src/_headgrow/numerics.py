"""Numerics: Dense linear algebra, seeded randomness and oracles.

Every array in Headgrow is a 64-bit ``numpy`` array. Eigen problems go
through the symmetric LAPACK solver with a deterministic sign convention
so that event logs are reproducible.
"""

from typing import Callable
from typing import List
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy import stats

from _headgrow.utils.exceptions import DegenerateDirectionError
from _headgrow.utils.exceptions import NumericError
from _headgrow.utils.exceptions import ParameterError
from _headgrow.utils.exceptions import ShapeError

__all__ = [
    "Matrix",
    "Rng",
    "antisym_dominant_plane",
    "as_matrix",
    "canonical_signs",
    "central_differences",
    "finite_diff",
    "gram_schmidt_extend",
    "make_rng",
    "orthonormality_error",
    "random_orthonormal",
    "spearman",
    "spawn_rngs",
    "sqrt_psd",
    "sym_eig",
]

Matrix = NDArray[np.float64]
Rng = np.random.Generator

SIGN_EPS = 1e-12
SYMMETRY_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10
SPAN_TOL = 1e-8


def make_rng(seed: int) -> Rng:
    """Return a PCG64 generator seeded with ``seed``.

    PCG64 streams are identical across platforms for a given seed.
    """

    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, count: int) -> List[Rng]:
    """Return ``count`` independent generators derived from ``seed``."""

    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def as_matrix(a: ArrayLike, op: str = "as_matrix") -> Matrix:
    """Return ``a`` as a finite 2-D float64 array.

    :param a: Array-like input.
    :param op: Name of the calling operation, used in error messages.
    :raises ShapeError: If ``a`` is not two dimensional or is empty.
    :raises NumericError: If ``a`` has non-finite entries.

    """

    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise ShapeError(op=op, expected="a non-empty matrix", shape=out.shape)
    if not np.all(np.isfinite(out)):
        raise NumericError(op=op, detail="matrix entries")
    return out


def canonical_signs(v: Matrix) -> Matrix:
    """Flip columns so their first entry above 1e-12 in size is positive."""

    out = np.array(v, dtype=np.float64, copy=True)
    for j in range(out.shape[1]):
        nonzero = np.flatnonzero(np.abs(out[:, j]) > SIGN_EPS)
        if nonzero.size and out[nonzero[0], j] < 0.0:
            out[:, j] = -out[:, j]
    return out


def _check_square(a: Matrix, op: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(op=op, expected="a square matrix", shape=a.shape)


def sym_eig(a: ArrayLike) -> Tuple[NDArray[np.float64], Matrix]:
    """Eigen-decompose a symmetric matrix.

    :param a: Symmetric matrix, symmetric to within 1e-12 relative.
    :return: Eigenvalues in descending order and the matching
        orthonormal eigenvectors as columns, sign-canonicalised.
    :raises ShapeError: For non-square or asymmetric input.

    """

    m = as_matrix(a, "sym_eig")
    _check_square(m, "sym_eig")
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.linalg.norm(m - m.T) > SYMMETRY_TOL * scale:
        raise ShapeError(
            op="sym_eig", expected="a symmetric matrix", shape=m.shape
        )
    values, vectors = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(values, kind="stable")[::-1]
    return values[order], canonical_signs(vectors[:, order])


def sqrt_psd(c: ArrayLike) -> Matrix:
    """Return the symmetric square root of a PSD matrix.

    Eigenvalues below zero (roundoff) are clipped to zero.
    """

    values, vectors = sym_eig(c)
    root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T
    return 0.5 * (root + root.T)


def antisym_dominant_plane(a: ArrayLike) -> Tuple[float, Matrix]:
    """Return the spectral norm and dominant rotation plane of ``a``.

    An antisymmetric matrix decomposes into 2-D rotation blocks. The
    dominant plane is spanned by the top right singular vector ``v`` and
    ``a·v/‖a·v‖``; it is an exact invariant plane of ``a`` even when the
    top magnitude is repeated.

    :param a: Antisymmetric d×d matrix (d ≥ 2).
    :return: Tuple ``(sigma1, plane)`` with ``plane`` a d×2 orthonormal
        matrix.
    :raises ShapeError: If ``a`` is not square or not antisymmetric.

    """

    m = as_matrix(a, "antisym_dominant_plane")
    _check_square(m, "antisym_dominant_plane")
    d = m.shape[0]
    if d < 2:
        raise ShapeError(
            op="antisym_dominant_plane", expected="d >= 2", shape=m.shape
        )
    scale = float(np.linalg.norm(m))
    if np.linalg.norm(m + m.T) > SYMMETRY_TOL * max(1.0, scale):
        raise ShapeError(
            op="antisym_dominant_plane",
            expected="an antisymmetric matrix",
            shape=m.shape,
        )
    if scale == 0.0:
        return 0.0, np.eye(d)[:, :2].copy()
    values, vectors = sym_eig(m.T @ m)
    sigma1 = float(np.sqrt(max(values[0], 0.0)))
    v = vectors[:, 0]
    w = m @ v
    w = w - (v @ w) * v
    w = canonical_signs((w / np.linalg.norm(w))[:, None])[:, 0]
    return sigma1, np.column_stack([v, w])


def orthonormality_error(q: Matrix) -> float:
    """Return ``‖qᵀq − I‖_F`` (0 for an empty basis)."""

    if q.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))


def gram_schmidt_extend(basis: ArrayLike, new_cols: ArrayLike) -> Matrix:
    """Extend an orthonormal basis by new columns.

    Each new column is orthogonalised twice against the running basis
    and normalised. The first ``k`` columns are returned untouched.

    :param basis: d×k orthonormal matrix (k may be 0).
    :param new_cols: d×r matrix of candidate directions.
    :return: d×(k+r) orthonormal matrix.
    :raises DegenerateDirectionError: If a candidate lies in the span to
        within 1e-8 of its own norm.

    """

    q = np.asarray(basis, dtype=np.float64)
    cols = np.asarray(new_cols, dtype=np.float64)
    if cols.ndim == 1:
        cols = cols[:, None]
    if q.ndim != 2 or cols.ndim != 2 or q.shape[0] != cols.shape[0]:
        raise ShapeError(
            op="gram_schmidt_extend",
            expected="d×k basis and d×r columns",
            shape=(q.shape, cols.shape),
        )
    if orthonormality_error(q) > ORTHONORMAL_TOL:
        raise ShapeError(
            op="gram_schmidt_extend",
            expected="an orthonormal basis",
            shape=q.shape,
        )
    out = [q[:, j] for j in range(q.shape[1])]
    for j in range(cols.shape[1]):
        c = cols[:, j].copy()
        norm0 = float(np.linalg.norm(c))
        for _ in range(2):
            for e in out:
                c -= (e @ c) * e
        residual = float(np.linalg.norm(c))
        if norm0 == 0.0 or residual <= SPAN_TOL * norm0:
            raise DegenerateDirectionError(
                op="gram_schmidt_extend", residual=residual
            )
        out.append(c / residual)
    if not out:
        return np.zeros((q.shape[0], 0))
    return np.column_stack(out)


def random_orthonormal(d: int, rng: Rng) -> Matrix:
    """Draw a Haar-distributed d×d orthogonal matrix."""

    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0.0, -1.0, 1.0)


def finite_diff(
    f: Callable[[NDArray[np.float64]], float],
    x: ArrayLike,
    h: float = 1e-5,
) -> NDArray[np.float64]:
    """Central-difference gradient of a scalar function.

    ``x`` may have any shape; the gradient has the same shape.

    :param f: Scalar function of an array.
    :param x: Evaluation point.
    :param h: Step, must be positive.
    :raises ParameterError: If ``h`` is not positive.
    :raises NumericError: If any evaluation of ``f`` is not finite.

    """

    if not h > 0.0:
        raise ParameterError(name="h", value=h, reason="step must be > 0")
    x0 = np.array(x, dtype=np.float64, copy=True)
    flat = x0.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        up = float(f(x0))
        flat[i] = saved - h
        down = float(f(x0))
        flat[i] = saved
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(op="finite_diff", detail=f"component {i}")
        grad[i] = (up - down) / (2.0 * h)
    return grad.reshape(x0.shape)


Derivative = Union[float, NDArray[np.float64]]


def central_differences(
    g: Callable[[float], ArrayLike], h: float = 1e-4
) -> Tuple[Derivative, Derivative]:
    """First and second central differences of ``g`` at 0.

    :param g: Function of a scalar returning a scalar or an array.
    :param h: Step, must be positive.
    :return: ``((g(h) − g(−h))/2h, (g(h) − 2g(0) + g(−h))/h²)``.

    """

    if not h > 0.0:
        raise ParameterError(name="h", value=h, reason="step must be > 0")
    up = np.asarray(g(h), dtype=np.float64)
    mid = np.asarray(g(0.0), dtype=np.float64)
    down = np.asarray(g(-h), dtype=np.float64)
    if not all(np.all(np.isfinite(v)) for v in (up, mid, down)):
        raise NumericError(op="central_differences", detail=f"step {h}")
    first = (up - down) / (2.0 * h)
    second = (up - 2.0 * mid + down) / (h * h)
    if first.ndim == 0:
        return float(first), float(second)
    return first, second


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties.

    :raises ShapeError: On length mismatch.
    :raises ParameterError: For fewer than two points, NaN entries or a
        constant sequence (correlation undefined).

    """

    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(
            op="spearman",
            expected="equal-length sequences",
            shape=(x.shape, y.shape),
        )
    if x.size < 2:
        raise ParameterError(name="length", value=x.size, reason="need >= 2")
    if np.isnan(x).any() or np.isnan(y).any():
        raise ParameterError(name="values", value="nan", reason="NaN entries")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ParameterError(
            name="values", value="constant", reason="ranks are all tied"
        )
    rho = float(stats.spearmanr(x, y)[0])
    return min(1.0, max(-1.0, rho))
