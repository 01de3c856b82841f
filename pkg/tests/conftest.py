import logging
from typing import Iterator
from typing import Tuple

import numpy as np
import pytest
from headgrow import DirectionalSignal
from headgrow import Matrix
from headgrow import PrototypeBank
from headgrow import RunConfig
from headgrow import gen_synthetic
from headgrow import make_rng
from headgrow import spawn_rngs


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(7)


@pytest.fixture
def small_config(tmp_path: object) -> RunConfig:
    """Six rotation blocks halving in strength, four above threshold."""

    return RunConfig(
        n_tokens=80,
        dim=12,
        n_blocks=6,
        rho=0.5,
        lambda1=2.0,
        theta_w=0.2,
        phi_g=0.01,
        max_heads=8,
        n_min=20,
        max_steps=250,
        signal_weighting="identity",
        trials=5,
        out_dir=str(tmp_path),
    )


@pytest.fixture
def synthetic(small_config: RunConfig) -> Tuple[Matrix, DirectionalSignal]:
    return gen_synthetic(small_config, spawn_rngs(small_config.seed, 3)[0])


@pytest.fixture
def bank(rng: np.random.Generator) -> Tuple[Matrix, PrototypeBank]:
    z = 0.5 * rng.standard_normal((20, 3))
    p = 0.5 * rng.standard_normal((4, 3))
    return z, PrototypeBank(p, 1.5)


@pytest.fixture(autouse=True)
def reset_root_logger() -> Iterator[None]:
    yield
    root = logging.getLogger()
    for handler in root.handlers[:]:
        if type(handler).__module__.startswith("_pytest"):
            continue
        root.removeHandler(handler)
        handler.close()
