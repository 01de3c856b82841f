from typing import Any
from typing import Dict
from typing import Type

import pytest
from headgrow import CollapseError
from headgrow import ConfigError
from headgrow import DegenerateDirectionError
from headgrow import HeadgrowError
from headgrow import InvariantError
from headgrow import ParameterError
from headgrow import PruneRefusalError
from headgrow import ShapeError


@pytest.mark.parametrize(
    ("error", "kwargs", "expected"),
    (
        (
            ShapeError,
            {"op": "sym_eig", "expected": "a square matrix", "shape": (2, 3)},
            "sym_eig expected a square matrix, got shape (2, 3)",
        ),
        (
            ParameterError,
            {"name": "h", "value": 0.0, "reason": "step must be > 0"},
            "Invalid h = 0.0: step must be > 0",
        ),
        (
            DegenerateDirectionError,
            {"op": "spawn_head", "residual": 0.0},
            "spawn_head: degenerate direction (residual norm 0.000e+00)",
        ),
        (
            CollapseError,
            {"head_id": 3, "spread": 0.0},
            "Prototype collapse in head 3: spread 0.000e+00",
        ),
        (
            PruneRefusalError,
            {"count": 2, "step": 40},
            "Pruning would remove all 2 heads at step 40",
        ),
        (
            ConfigError,
            {"source": "exp1.cfg:3", "reason": "unknown key 'x'"},
            "Config exp1.cfg:3: unknown key 'x'",
        ),
    ),
)
def test_messages(
    error: Type[HeadgrowError], kwargs: Dict[str, Any], expected: str
) -> None:
    with pytest.raises(HeadgrowError) as info:
        raise error(**kwargs)
    assert str(info.value) == expected
    for name, value in kwargs.items():
        assert getattr(info.value, name) == value


def test_invalid_error_reports_bug(capsys: Any) -> None:
    error = InvariantError(name="rows", detail="sum 2", valid=False)
    _, stderr = capsys.readouterr()
    assert "YIKES! There's a bug!" in stderr
    assert str(error) == "Invariant 'rows' violated: sum 2"


def test_valid_error_is_quiet(capsys: Any) -> None:
    InvariantError(name="rows", detail="sum 2")
    _, stderr = capsys.readouterr()
    assert stderr == ""
