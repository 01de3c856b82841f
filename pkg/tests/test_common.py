import os

import pytest
from headgrow import TTYPalette
from headgrow import fmt_real
from headgrow import strict_checks
from headgrow import strict_mode


@pytest.mark.parametrize(
    ("color", "expected"),
    (
        ("GREEN_3", "\u001b[38;5;40m"),
        ("RED_1", "\u001b[38;5;196m"),
        ("YELLOW_3", "\u001b[38;5;184m"),
        ("DEFAULT", "\u001b[0m"),
    ),
)
def test_ttypalette(color: str, expected: str) -> None:
    assert getattr(TTYPalette, color) == expected


@pytest.mark.parametrize(
    ("value", "expected"),
    (
        (0.1, "0.10000000000000001"),
        (2.0, "2"),
        (1e-20, "9.9999999999999995e-21"),
    ),
)
def test_fmt_real(value: float, expected: str) -> None:
    assert fmt_real(value) == expected
    assert float(fmt_real(value)) == value


def test_strict_mode_restores_environment(monkeypatch: object) -> None:
    monkeypatch.delenv("HEADGROW_STRICT", raising=False)  # type: ignore
    assert not strict_checks()
    with strict_mode():
        assert strict_checks()
        with strict_mode(False):
            assert not strict_checks()
        assert strict_checks()
    assert "HEADGROW_STRICT" not in os.environ
