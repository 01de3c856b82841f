import math
from typing import Any
from typing import Tuple

import numpy as np
import pytest
from headgrow import InvariantError
from headgrow import Matrix
from headgrow import ParameterError
from headgrow import PrototypeBank
from headgrow import ShapeError
from headgrow import assignment_entropy
from headgrow import assignment_first_variation
from headgrow import assignment_second_variation
from headgrow import central_differences
from headgrow import effective_scale
from headgrow import expand_tokens
from headgrow import finite_diff
from headgrow import gini_trace
from headgrow import grad_prototypes
from headgrow import grad_temperature
from headgrow import grad_v
from headgrow import loss_decomposition
from headgrow import loss_lq
from headgrow import phi_curve
from headgrow import prototype_spread
from headgrow import residual_covariance_ck
from headgrow import separation_force
from headgrow import sigma_q
from headgrow import soft_assign
from headgrow import soft_centroids
from headgrow import squared_distances
from headgrow import strict_mode

Instance = Tuple[Matrix, PrototypeBank]


def test_soft_assign_is_row_stochastic(bank: Instance) -> None:
    z, b = bank
    q = soft_assign(z, b)
    assert q.shape == (20, 4)
    assert np.all(q > 0.0)
    np.testing.assert_allclose(q.sum(axis=1), 1.0, rtol=0, atol=1e-12)


def test_soft_assign_survives_extreme_temperature(bank: Instance) -> None:
    z, b = bank
    q = soft_assign(1e3 * z, PrototypeBank(b.p, 1e-6))
    assert np.all(np.isfinite(q))
    np.testing.assert_allclose(q.sum(axis=1), 1.0, rtol=0, atol=1e-12)


@pytest.mark.parametrize("temperature", (0.0, -1.0))
def test_soft_assign_rejects_temperature(
    bank: Instance, temperature: float
) -> None:
    z, b = bank
    with pytest.raises(ParameterError):
        soft_assign(z, PrototypeBank(b.p, temperature))


def test_soft_assign_rejects_dimension(bank: Instance) -> None:
    z, b = bank
    with pytest.raises(ShapeError):
        soft_assign(z[:, :2], b)


def test_loss_decomposition_is_exact(bank: Instance) -> None:
    z, b = bank
    parts = loss_decomposition(z, b)
    assert parts.v_sep >= 0.0
    assert parts.l_fit + parts.v_sep == pytest.approx(
        loss_lq(z, b), rel=1e-12
    )


def test_cold_loss_approaches_hard_assignment() -> None:
    z = np.array([[0.0, 0.1], [5.0, 0.0], [0.1, 5.0], [-0.1, 0.0]])
    p = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    parts = loss_decomposition(z, PrototypeBank(p, 1e-3))
    assert parts.l_fit == pytest.approx(parts.l_ols, rel=1e-9)
    assert parts.v_sep == pytest.approx(0.0, abs=1e-12)


def test_soft_centroids(bank: Instance) -> None:
    z, b = bank
    q = soft_assign(z, b)
    np.testing.assert_allclose(soft_centroids(q, b), q @ b.p)
    with pytest.raises(ShapeError):
        soft_centroids(q[:, :3], b)


def test_prototype_gradient_matches_finite_differences(
    bank: Instance,
) -> None:
    z, b = bank

    def loss(p: Matrix) -> float:
        return loss_lq(z, PrototypeBank(p, b.temperature))

    np.testing.assert_allclose(
        grad_prototypes(z, b), finite_diff(loss, b.p), rtol=1e-6, atol=1e-8
    )


def test_temperature_gradient_matches_finite_differences(
    bank: Instance,
) -> None:
    z, b = bank

    def loss(t: Matrix) -> float:
        return loss_lq(z, PrototypeBank(b.p, float(t[0])))

    analytic = grad_temperature(z, b)
    assert analytic >= 0.0
    assert analytic == pytest.approx(
        float(finite_diff(loss, [b.temperature])[0]), rel=1e-6
    )


def test_effective_scale_is_normalised(bank: Instance) -> None:
    z, b = bank
    scale = effective_scale(z, b)
    assert scale >= 0.0
    assert scale * z.shape[0] == pytest.approx(
        grad_temperature(z, b) * b.temperature**2
    )


def test_assignment_covariance(bank: Instance) -> None:
    z, b = bank
    q = soft_assign(z, b)
    sq = sigma_q(q)
    np.testing.assert_allclose(sq, sq.T, atol=1e-14)
    assert np.linalg.eigvalsh(sq)[0] >= -1e-12
    assert np.trace(sq) == pytest.approx(gini_trace(q), rel=1e-12)
    np.testing.assert_allclose(sq.sum(axis=1), 0.0, atol=1e-12)


def test_separation_force_is_gradient_norm(bank: Instance) -> None:
    z, b = bank
    q = soft_assign(z, b)
    mu = q @ b.p
    pull = 2.0 * np.stack([q[:, k] @ (b.p[k] - mu) for k in range(b.k)])
    np.testing.assert_allclose(grad_v(b, sigma_q(q)), pull, atol=1e-12)
    assert separation_force(z, b) == pytest.approx(float(np.sum(pull**2)))


def test_grad_v_rejects_shape(bank: Instance) -> None:
    _, b = bank
    with pytest.raises(ShapeError):
        grad_v(b, np.eye(3))


def test_strict_mode_rejects_corrupted_rows(
    bank: Instance, capsys: Any
) -> None:
    z, b = bank
    q = soft_assign(z, b)
    q[0] = 1.0
    with strict_mode(), pytest.raises(InvariantError):
        sigma_q(q)
    _, stderr = capsys.readouterr()
    assert "bug" in stderr


@pytest.mark.parametrize("scale", (0.5, 0.999))
def test_strict_mode_rejects_rows_off_simplex(
    bank: Instance, capsys: Any, scale: float
) -> None:
    z, b = bank
    q = soft_assign(z, b)
    q[0] *= scale
    assert np.linalg.eigvalsh(np.diag(q.sum(axis=0)) - q.T @ q)[0] > -1e-12
    with strict_mode(), pytest.raises(InvariantError) as excinfo:
        sigma_q(q)
    assert "row sum gap" in str(excinfo.value)
    _, stderr = capsys.readouterr()
    assert "bug" in stderr


def test_prototype_spread() -> None:
    p = np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]])
    assert prototype_spread(PrototypeBank(p, 1.0)) == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        prototype_spread(PrototypeBank(p[:1], 1.0))


def test_assignment_entropy() -> None:
    q = np.array([[0.25, 0.25, 0.25, 0.25], [1.0, 0.0, 0.0, 0.0]])
    np.testing.assert_allclose(assignment_entropy(q), [math.log(4.0), 0.0])


def test_squared_distances() -> None:
    z = np.array([[0.0, 0.0], [1.0, 1.0]])
    p = np.array([[1.0, 0.0]])
    np.testing.assert_array_equal(squared_distances(z, p), [[1.0], [1.0]])


def test_assignment_variations(bank: Instance) -> None:
    z, b = bank
    u = np.array([1.0, 2.0, -2.0]) / 3.0

    def curve(eps: float) -> Matrix:
        return soft_assign(expand_tokens(z, u, eps), b)

    first, _ = central_differences(curve, 1e-5)
    _, second = central_differences(curve, 1e-4)
    np.testing.assert_allclose(
        assignment_first_variation(z, b, u), first, atol=1e-8
    )
    np.testing.assert_allclose(
        assignment_second_variation(z, b, u), second, atol=1e-5
    )


def test_variations_sum_to_zero(bank: Instance) -> None:
    z, b = bank
    u = np.array([0.0, 0.6, 0.8])
    np.testing.assert_allclose(
        assignment_first_variation(z, b, u).sum(axis=1), 0.0, atol=1e-12
    )
    np.testing.assert_allclose(
        assignment_second_variation(z, b, u).sum(axis=1), 0.0, atol=1e-12
    )


def test_variation_rejects_non_unit_direction(bank: Instance) -> None:
    z, b = bank
    with pytest.raises(ParameterError):
        assignment_first_variation(z, b, [1.0, 1.0, 0.0])


def test_phi_curve(bank: Instance) -> None:
    z, b = bank
    u = np.array([0.0, 0.6, 0.8])
    curve = phi_curve(z, b, u, [0.0, 0.5, 1.0])
    assert len(curve.values) == 3
    assert curve.values[0] == pytest.approx(separation_force(z, b))
    assert curve.values[2] == pytest.approx(
        separation_force(expand_tokens(z, u, 1.0), b)
    )
    assert math.isfinite(curve.d1)
    assert math.isfinite(curve.d2_lower_bound)


def test_phi_flat_when_direction_misses_prototypes(bank: Instance) -> None:
    z, b = bank
    p = b.p.copy()
    p[:, 2] = 0.0
    flat = PrototypeBank(p, b.temperature)
    curve = phi_curve(z, flat, [0.0, 0.0, 1.0], [0.0, 1.0])
    assert curve.values[1] == pytest.approx(curve.values[0], rel=1e-12)
    assert abs(curve.d1) <= 1e-6 * max(1.0, curve.values[0])


def test_phi_curve_needs_both_ends(bank: Instance) -> None:
    z, b = bank
    with pytest.raises(ParameterError):
        phi_curve(z, b, [1.0, 0.0, 0.0], [0.0, 0.5])


def test_residual_covariance_ck(bank: Instance) -> None:
    z, b = bank
    u = np.array([1.0, 0.0, 0.0])
    q = soft_assign(z, b)
    alpha = z @ u
    expected = [
        float(alpha @ (b.p[k, 0] - q @ b.p[:, 0])) for k in range(b.k)
    ]
    np.testing.assert_allclose(residual_covariance_ck(z, b, u), expected)


def test_bank_plane_coordinates() -> None:
    plane = np.eye(3)[:, :2]
    p = np.array([[1.0, 2.0, 0.0], [-1.0, 0.5, 0.0]])
    b = PrototypeBank(p, 1.0, plane=plane, head_id=4)
    local = b.in_plane(b.coords())
    np.testing.assert_array_equal(local.p, p[:, :2])
    assert local.plane is None
    assert local.head_id == 4
    with pytest.raises(ShapeError):
        local.coords()
