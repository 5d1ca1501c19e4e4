from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any

import yaml

from klt import logger
from klt.errors import ConfigError
from klt.policies import ZeroPolicy

log = logger.get()

"""Environment variable naming a YAML configuration file."""
CONFIG_ENV = "KLT_CONFIG"

DEFAULT_PRECISION = 256
DEFAULT_C0 = 0.2
DEFAULT_K0 = 1
DEFAULT_ENUMERATION_CAP = 10**9
DEFAULT_SUPPORT_CAP = 10**6
DEFAULT_SCAN_CAP = 10**9
DEFAULT_QUAD_RTOL = 1e-10


@dataclass
class RunConfig:
    """
    Settings shared by every command of a run.
    """

    """Working precision of frequency evaluation, in bits."""
    precision: int = DEFAULT_PRECISION
    """Constant of the lower bound P{S_k = 0} >= C0/(m sqrt(k))."""
    c0: float = DEFAULT_C0
    """Smallest k for which the lower bound is asserted."""
    k0: int = DEFAULT_K0
    """Zero-detection policy; None selects it from the frequency kinds."""
    zero_policy: ZeroPolicy | None = None
    """Maximum number of nodes visited by a lattice enumeration."""
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    """Maximum half-width of an exact distribution support."""
    support_cap: int = DEFAULT_SUPPORT_CAP
    """Maximum number of grid points scanned by a witness search."""
    scan_cap: int = DEFAULT_SCAN_CAP
    """Grid slack of the witness search; None means 0.1/omega."""
    grid_slack: float | None = None
    """Relative tolerance of adaptive quadratures."""
    quad_rtol: float = DEFAULT_QUAD_RTOL
    """Directory receiving the JSON reports and CSV tables."""
    output_dir: str = "."
    """Seed of every sampler."""
    seed: int = 0
    """Worker count for partitioned enumerations and scans."""
    workers: int = 1
    """Mirror every float of a report as a hex literal."""
    hex_mirror: bool = True
    """Where the values were loaded from, for the report echo."""
    source: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """
        Function that checks every field against its admissible range.

        :raises ConfigError: on the first invalid field.
        """

        if isinstance(self.zero_policy, str):
            try:
                self.zero_policy = ZeroPolicy.from_string(self.zero_policy)
            except ValueError as e:
                raise ConfigError(str(e)) from None

        if self.precision < 64:
            raise ConfigError(f"precision must be at least 64 bits, got {self.precision}")
        if not 0 < self.c0 < 0.25:
            raise ConfigError(f"c0 must lie in (0, 1/4), got {self.c0}")
        if self.k0 < 1:
            raise ConfigError(f"k0 must be positive, got {self.k0}")
        for name in ("enumeration_cap", "support_cap", "scan_cap", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.grid_slack is not None and self.grid_slack <= 0:
            raise ConfigError(f"grid_slack must be positive, got {self.grid_slack}")
        if not 0 < self.quad_rtol < 1:
            raise ConfigError(f"quad_rtol must lie in (0, 1), got {self.quad_rtol}")

    def slack_for(self, omega: int) -> float:
        return self.grid_slack if self.grid_slack is not None else 0.1 / omega

    def override(self, **values: Any) -> RunConfig:
        """
        Function that returns a copy with the non-None values replaced.

        :param values: the fields to override, None values are ignored.
        :return: the new configuration.
        """

        changes = {k: v for k, v in values.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["zero_policy"] = self.zero_policy.label if self.zero_policy else "auto"
        out.pop("source")
        return out


def load_config(path: str | None = None) -> RunConfig:
    """
    Function that loads a flat YAML configuration.

    When no path is given the KLT_CONFIG environment variable is consulted; with neither,
    the defaults are returned.

    :param path: the path to the YAML file.
    :return: the configuration.
    :raises ConfigError: if the file is not a flat mapping or holds unknown keys.
    """

    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return RunConfig()

    try:
        with open(path, "r") as yml_file:
            raw = yaml.safe_load(yml_file)
    except OSError as e:
        raise ConfigError(f"Cannot read configuration {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed configuration {path}: {e}") from None

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"Configuration {path} must be a flat mapping")

    known = {f.name for f in dataclasses.fields(RunConfig)} - {"source"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
    for key, value in raw.items():
        if isinstance(value, (dict, list)):
            raise ConfigError(f"Configuration key {key} must hold a scalar")

    if raw.get("zero_policy") == "auto":
        raw["zero_policy"] = None

    log.debug(f"Configuration read from {path}")
    return RunConfig(**raw, source=path)
