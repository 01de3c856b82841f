from typing import Any
from typing import Dict

import pytest
from headgrow import ConfigError
from headgrow import RunConfig
from headgrow import load_config
from headgrow import parse_config


def test_defaults() -> None:
    cfg = RunConfig()
    assert (cfg.n_tokens, cfg.dim, cfg.n_blocks) == (500, 64, 32)
    assert (cfg.eta_t, cfg.eta_p, cfg.eta_plus) == (0.01, 0.1, 1.0)
    assert cfg.seed == 0
    assert cfg.to_dict()["signal_weighting"] == "second_moment"
    assert cfg.token_scaling == "isotropic"


def test_parse_config_types() -> None:
    text = (
        "# Experiment 1\n"
        "\n"
        "n_tokens = 200   # fewer tokens\n"
        "theta_w=0.1\n"
        "barrier_descent = off\n"
        "prune_gate = spread\n"
    )
    assert parse_config(text) == {
        "n_tokens": 200,
        "theta_w": 0.1,
        "barrier_descent": False,
        "prune_gate": "spread",
    }


@pytest.mark.parametrize(
    ("text", "where", "reason"),
    (
        ("n_tokens = 10\nbogus = 1\n", "<string>:2", "unknown key"),
        ("seed = 1\nseed = 2\n", "<string>:2", "duplicate key"),
        ("theta_w\n", "<string>:1", "malformed line"),
        ("\n\nn_tokens = 1.5\n", "<string>:3", "bad int"),
        ("theta_w = nan\n", "<string>:1", "bad float"),
        ("barrier_descent = maybe\n", "<string>:1", "bad bool"),
    ),
)
def test_parse_config_errors(text: str, where: str, reason: str) -> None:
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.source == where
    assert reason in info.value.reason


@pytest.mark.parametrize(
    "changes",
    (
        {"eta_t": 0.1},
        {"eta_p": 2.0},
        {"rho": 1.0},
        {"t_min": 1.0},
        {"k_protos": 1},
        {"n_blocks": 33},
        {"phi_g": 0.05},
        {"theta_w": 0.0},
        {"seed": -1},
        {"signal_weighting": "whitened"},
        {"token_scaling": "whitened"},
        {"n_min": -1},
    ),
)
def test_validation(changes: Dict[str, Any]) -> None:
    with pytest.raises(ConfigError):
        RunConfig(**changes)


def test_ratio_outside_range_only_warns(caplog: Any) -> None:
    cfg = RunConfig(eta_t=0.09)
    assert cfg.eta_t == 0.09
    assert "Step-size ratio outside" in caplog.text


def test_load_config_with_overrides(tmp_path: Any) -> None:
    path = tmp_path / "exp.cfg"
    path.write_text("seed = 3\nn_min = 50\n", encoding="utf-8")
    cfg = load_config(path, seed=None, out_dir=str(tmp_path))
    assert (cfg.seed, cfg.n_min, cfg.out_dir) == (3, 50, str(tmp_path))
    assert load_config(path, seed=11).seed == 11
    assert load_config().seed == 0


def test_load_config_reports_file(tmp_path: Any) -> None:
    path = tmp_path / "bad.cfg"
    path.write_text("eta_t = 0.5\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.source == str(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        load_config(colour="red")


def test_replace_validates() -> None:
    cfg = RunConfig()
    assert cfg.replace(seed=5).seed == 5
    with pytest.raises(ConfigError):
        cfg.replace(eta_plus=0.05)
