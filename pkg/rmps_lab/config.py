"""
Experiment configuration: defaults < config file < command-line flags.

Config files are flat TOML (or JSON) whose keys are the ExperimentConfig
field names, e.g.

    kind = "extensivity"
    d = 2
    n = 8
    D = 4
    k = 4
    samples = 2000
    seed = 7
"""

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union
import json
import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

KINDS = ("equilibration", "norm-concentration", "extensivity", "max-entropy",
         "local-obs", "frame-potential", "exact", "selftest")
BOUNDARIES = ("periodic", "open")

# extra field each kind cannot run without
REQUIRED_BY_KIND = {
    "extensivity": ("k",),
    "max-entropy": ("l",),
    "norm-concentration": ("epsilon",),
}

DEFAULTS: Dict[str, Any] = {
    "samples": 1000,
    "seed": 0,
    "observable": "pauli-z",
    "boundary": "periodic",
    "output_dir": "rmps-out",
}


class ConfigError(ValueError):
    """Invalid or incomplete configuration; `field` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    d: Optional[int] = None
    n: Optional[int] = None
    D: Optional[int] = None
    k: Optional[int] = None
    l: Optional[int] = None
    samples: int = 1000
    seed: int = 0
    epsilon: Optional[float] = None
    observable: str = "pauli-z"
    boundary: str = "periodic"
    output_dir: str = "rmps-out"
    sweep: Optional[Tuple[int, ...]] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.kind != "selftest":
            for name in ("d", "n", "D"):
                if getattr(self, name) is None:
                    raise ConfigError(name, f"required for {self.kind}")
        for name in REQUIRED_BY_KIND.get(self.kind, ()):
            if getattr(self, name) is None:
                raise ConfigError(name, f"required for {self.kind}")

        if self.d is not None and self.d < 2:
            raise ConfigError("d", f"physical dimension must be >= 2, got {self.d}")
        if self.n is not None and self.n < 1:
            raise ConfigError("n", f"number of sites must be >= 1, got {self.n}")
        if self.D is not None and self.D < 1:
            raise ConfigError("D", f"bond dimension must be >= 1, got {self.D}")
        if self.k is not None and self.k < 2:
            raise ConfigError("k", f"block size must be >= 2, got {self.k}")
        if self.l is not None and self.l < 1:
            raise ConfigError("l", f"block length must be >= 1, got {self.l}")
        if self.samples < 2:
            raise ConfigError("samples", f"need at least 2 samples, got {self.samples}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ConfigError("epsilon", f"must lie in (0, 1), got {self.epsilon}")
        if self.boundary not in BOUNDARIES:
            raise ConfigError("boundary", f"must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if self.sweep is not None:
            if not self.sweep or any(x < 1 for x in self.sweep):
                raise ConfigError("sweep", f"needs positive site counts, got {self.sweep}")


FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))
INT_FIELDS = ("d", "n", "D", "k", "l", "samples", "seed", "workers")


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if name in INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if name == "epsilon":
            return float(value)
        if name == "sweep":
            if isinstance(value, str):
                value = [x for x in value.split(",") if x.strip()]
            return tuple(int(x) for x in value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot interpret {value!r}")


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Flat key/value mapping from a .json or TOML file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file {path} does not exist")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError("config", f"cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must hold a flat table")
    return data


def parse_config(path: Optional[Union[str, Path]] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Build a validated config.

    Args:
        path: Optional TOML/JSON file
        overrides: Flag values; None entries are ignored so they never mask the file
    """
    merged: Dict[str, Any] = dict(DEFAULTS)
    if path is not None:
        file_values = read_config_file(path)
        logger.debug("config file %s: %s", path, file_values)
        merged.update(file_values)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    unknown = sorted(set(merged) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(unknown[0], f"unknown configuration key (known: {FIELD_NAMES})")
    if merged.get("kind") is None:
        raise ConfigError("kind", "no experiment kind given")
    return ExperimentConfig(**{k: _coerce(k, v) for k, v in merged.items()})


def serialize_config(cfg: ExperimentConfig) -> str:
    """Flat TOML; parse_config reads it back to an equal config."""
    lines = []
    for key, value in asdict(cfg).items():
        if value is None:
            continue
        if isinstance(value, str):
            lines.append(f"{key} = {json.dumps(value)}")
        elif isinstance(value, int) and value >= 2 ** 63:
            # TOML integers are signed 64-bit
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, (tuple, list)):
            lines.append(f"{key} = [{', '.join(str(int(x)) for x in value)}]")
        elif isinstance(value, float):
            lines.append(f"{key} = {value!r}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
