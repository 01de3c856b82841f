import numpy as np
import pytest
from headgrow import CollapseError
from headgrow import ParameterError
from headgrow import PrototypeBank
from headgrow import StepSizes
from headgrow import barrier
from headgrow import barrier_gradient
from headgrow import f1_bound
from headgrow import finite_diff
from headgrow import free_energy
from headgrow import head_energy
from headgrow import loss_lq
from headgrow import temperature_potential

STEPS = StepSizes(
    eta_t=0.01, eta_p=0.1, eta_plus=1.0, n_min=10, t_min=0.1, t_init=1.0
)


@pytest.mark.parametrize(
    ("t", "expected"),
    (
        (1.0, 0.0),
        (0.5, (1.0 - 0.125) / 0.03),
        (0.1, (1.0 - 0.001) / 0.03),
    ),
)
def test_temperature_potential(t: float, expected: float) -> None:
    assert temperature_potential(t, 1.0, 0.01) == pytest.approx(expected)


@pytest.mark.parametrize(
    ("t", "t_init", "eta_t"),
    ((1.5, 1.0, 0.01), (0.0, 1.0, 0.01), (0.5, 1.0, 0.0)),
)
def test_temperature_potential_rejects(
    t: float, t_init: float, eta_t: float
) -> None:
    with pytest.raises(ParameterError):
        temperature_potential(t, t_init, eta_t)


def test_barrier_counts_unordered_pairs() -> None:
    p = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    bank = PrototypeBank(p, 1.0)
    assert barrier(bank, 2.0) == pytest.approx(2.0 * (0.25 + 1.0 + 0.2))
    assert barrier(PrototypeBank(p[:1], 1.0), 2.0) == 0.0


def test_barrier_collapse() -> None:
    p = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(CollapseError):
        barrier(PrototypeBank(p, 1.0, head_id=5), 2.0)
    with pytest.raises(CollapseError):
        barrier_gradient(p, 2.0)


def test_barrier_gradient(rng: np.random.Generator) -> None:
    p = rng.standard_normal((4, 2))

    def energy(x: np.ndarray) -> float:
        return barrier(PrototypeBank(x, 1.0), 2.0)

    np.testing.assert_allclose(
        barrier_gradient(p, 2.0),
        finite_diff(energy, p),
        rtol=1e-6,
        atol=1e-8,
    )


@pytest.mark.parametrize(
    ("eta_p", "k_max", "expected"),
    ((0.1, 4, 1.2), (0.1, 2, 0.2), (0.05, 8, 2.8)),
)
def test_f1_bound(eta_p: float, k_max: int, expected: float) -> None:
    assert f1_bound(eta_p, k_max) == pytest.approx(expected)


def _heads(rng: np.random.Generator) -> list:
    planes = np.linalg.qr(rng.standard_normal((6, 4)))[0]
    return [
        PrototypeBank(
            rng.standard_normal((3, 2)) @ planes[:, 2 * i : 2 * i + 2].T,
            0.5 + 0.2 * i,
            plane=planes[:, 2 * i : 2 * i + 2],
            head_id=i,
        )
        for i in range(2)
    ]


def test_free_energy_is_additive(rng: np.random.Generator) -> None:
    z = rng.standard_normal((30, 6))
    heads = _heads(rng)
    both = free_energy(heads, z, 2.0, STEPS)
    single = free_energy(heads[:1], z, 2.0, STEPS)
    assert both.total - single.total == pytest.approx(
        both.heads[1].total, rel=1e-12
    )
    assert both.total == pytest.approx(
        both.loss_total + both.barrier + both.temp_potential, rel=1e-12
    )


def test_head_energy_uses_plane_view(rng: np.random.Generator) -> None:
    z = rng.standard_normal((30, 6))
    bank = _heads(rng)[1]
    energy = head_energy(bank, z, 2.0, STEPS)
    view = z @ bank.plane
    assert energy.loss == pytest.approx(
        loss_lq(view, bank.in_plane(bank.coords()))
    )
    assert energy.potential == pytest.approx((0.7**3 - 0.1**3) / 0.03)


def test_potential_anchors(rng: np.random.Generator) -> None:
    z = rng.standard_normal((30, 6))
    bank = _heads(rng)[0]
    floor = head_energy(bank, z, 2.0, STEPS, "floor")
    init = head_energy(bank, z, 2.0, STEPS, "init")
    assert floor.potential + init.potential == pytest.approx(
        (1.0 - 0.001) / 0.03
    )
    with pytest.raises(ParameterError):
        head_energy(bank, z, 2.0, STEPS, "origin")
