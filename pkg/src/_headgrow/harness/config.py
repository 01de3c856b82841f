"""Config: Run configuration and its flat ``key = value`` file format.

A config file lists ``RunConfig`` field names, one per line::

    # Experiment 1
    n_tokens = 500
    theta_w = 0.05
    signal_weighting = second_moment

Blank lines and ``#`` comments are ignored; anything else that is not a
known ``key = value`` pair is an error.
"""

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Any
from typing import Dict
from typing import Optional
from typing import Union

from _headgrow.growth import PRUNE_GATES
from _headgrow.growth import SIGNAL_WEIGHTINGS
from _headgrow.lyapunov import POTENTIAL_ANCHORS
from _headgrow.utils.exceptions import ConfigError
from _headgrow.utils.logging import get_logger

__all__ = ["RunConfig", "TOKEN_SCALINGS", "load_config", "parse_config"]

log = get_logger(__name__)

TOKEN_SCALINGS = ("isotropic", "spectrum")

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")
_CHOICES = {
    "signal_weighting": SIGNAL_WEIGHTINGS,
    "prune_gate": PRUNE_GATES,
    "potential_anchor": POTENTIAL_ANCHORS,
    "token_scaling": TOKEN_SCALINGS,
}


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a synthetic run.

    Defaults reproduce the spectral-ordering experiment: 500 tokens in
    64 dimensions, 32 rotation blocks decaying as ``2.0·0.7^(k−1)``.
    ``token_scaling = spectrum`` draws tokens whose variance in rotation
    plane ``k`` is ``λ_k/λ₁`` instead of isotropic ones.
    """

    n_tokens: int = 500
    dim: int = 64
    rho: float = 0.7
    lambda1: float = 2.0
    n_blocks: int = 32
    theta_w: float = 0.05
    phi_g: float = 0.01
    k_protos: int = 4
    t_init: float = 1.0
    t_min: float = 0.1
    eta_t: float = 0.01
    eta_p: float = 0.1
    eta_plus: float = 1.0
    n_min: int = 100
    lambda_barrier: float = 2.0
    max_heads: int = 8
    max_steps: int = 2000
    seed: int = 0
    out_dir: str = "runs"
    signal_weighting: str = "second_moment"
    token_scaling: str = "isotropic"
    prune_gate: str = "gamma"
    barrier_descent: bool = True
    potential_anchor: str = "floor"
    mlp_ratio: int = 4
    mlp_sigma_sq: float = 1.0
    trials: int = 100

    def __post_init__(self) -> None:
        self.validate()

    def validate(self, source: str = "RunConfig") -> None:
        """Check the static invariants of the configuration.

        :raises ConfigError: On the first violated invariant.

        """

        def fail(reason: str) -> None:
            raise ConfigError(source=source, reason=reason)

        positive = (
            "n_tokens", "dim", "lambda1", "n_blocks", "theta_w", "phi_g",
            "t_init", "t_min", "eta_t", "eta_p", "eta_plus",
            "lambda_barrier", "max_heads", "mlp_ratio", "mlp_sigma_sq",
        )  # fmt: skip
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                fail(f"{name} must be > 0, got {value!r}")
        for name in ("n_min", "max_steps", "trials"):
            if getattr(self, name) < 0:
                fail(f"{name} must be >= 0")
        if self.n_tokens < 2:
            fail("n_tokens must be >= 2")
        if not 0.0 < self.rho < 1.0:
            fail(f"rho must lie in (0, 1), got {self.rho}")
        if not self.t_min < self.t_init:
            fail("t_min must be below t_init")
        if self.k_protos < 2:
            fail("k_protos must be >= 2")
        if 2 * self.n_blocks > self.dim:
            fail(f"2·n_blocks = {2 * self.n_blocks} exceeds dim {self.dim}")
        if not self.phi_g < self.theta_w:
            fail("phi_g must be below theta_w")
        if not 0 <= self.seed < 2**64:
            fail("seed must be an unsigned 64-bit integer")
        if not self.eta_t < self.eta_p < self.eta_plus:
            fail("step sizes must satisfy eta_t < eta_p < eta_plus")
        for name, options in _CHOICES.items():
            if getattr(self, name) not in options:
                fail(f"{name} must be one of {options}")
        for label, ratio in (
            ("eta_p/eta_plus", self.eta_p / self.eta_plus),
            ("eta_t/eta_p", self.eta_t / self.eta_p),
        ):
            if not 0.01 <= ratio <= 0.1:
                log.warning(
                    "Step-size ratio outside [0.01, 0.1]",
                    ratio=label,
                    value=ratio,
                )

    def replace(self, **changes: Any) -> "RunConfig":
        """Return a copy with ``changes`` applied."""
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str, where: str) -> Any:
    kind = type(getattr(RunConfig(), name))
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw, 10)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
        return raw
    except ValueError:
        raise ConfigError(
            source=where, reason=f"bad {kind.__name__} for {name}: {raw!r}"
        ) from None


def parse_config(text: str, source: str = "<string>") -> Dict[str, Any]:
    """Parse ``key = value`` lines into typed field values.

    :raises ConfigError: Naming the line of an unknown, duplicate or
        malformed entry.

    """

    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        where = f"{source}:{lineno}"
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key or not raw:
            raise ConfigError(source=where, reason=f"malformed line {line!r}")
        if key not in _FIELDS:
            raise ConfigError(source=where, reason=f"unknown key {key!r}")
        if key in values:
            raise ConfigError(source=where, reason=f"duplicate key {key!r}")
        values[key] = _coerce(key, raw, where)
    return values


def load_config(
    path: Optional[Union[str, "os.PathLike[str]"]] = None, **overrides: Any
) -> RunConfig:
    """Read a config file and apply ``overrides`` on top.

    ``None`` overrides are ignored so that unset CLI flags fall through
    to the file or the defaults.

    :raises ConfigError: For unreadable files, bad entries or violated
        invariants.

    """

    values: Dict[str, Any] = {}
    source = "defaults"
    if path is not None:
        source = str(path)
        try:
            with open(path, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as error:
            raise ConfigError(source=source, reason=str(error)) from None
        values.update(parse_config(text, source))
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(source="overrides", reason=f"unknown {key!r}")
        values[key] = value
    try:
        return RunConfig(**values)
    except ConfigError as error:
        raise ConfigError(source=source, reason=error.reason) from None
