"""Network configuration for the K-user MIMO interference channel."""

from __future__ import annotations

import dataclasses
import math
import warnings
from collections.abc import Mapping, Sequence
from pathlib import Path

import yaml

__all__ = [
    "ConfigError",
    "DimensionError",
    "StreamCountError",
    "PropernessWarning",
    "NetworkConfig",
    "validate_config",
    "db_to_linear",
    "linear_to_db",
    "read_config_file",
    "network_config_from_mapping",
]


class ConfigError(ValueError):
    """Base class for invalid configuration values."""


class DimensionError(ConfigError):
    """An antenna/stream dimension inequality is violated."""


class StreamCountError(ConfigError):
    """Stream counts are missing, non-positive or the wrong length."""


class PropernessWarning(UserWarning):
    """Properness cannot be decided for this configuration."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclasses.dataclass(frozen=True)
class NetworkConfig:
    """Homogeneous K-user network.

    Parameters
    ----------
    K : int
        Number of source/sink pairs.
    Nt, Nr : int
        Antennas per source and per sink.
    d : tuple of int
        Streams per user, ``d[i] <= min(Nt, Nr)``.
    P : float
        Forward transmit power (linear).
    Pf : float
        Pilot and feedback transmit power (linear).
    sigma2 : float
        Noise variance.
    proper : bool or None
        Set by :func:`validate_config`. ``None`` means the symmetric
        properness test does not apply (unequal stream counts).
    """

    K: int
    Nt: int
    Nr: int
    d: tuple[int, ...]
    P: float = 1.0
    Pf: float = 1.0
    sigma2: float = 1.0
    proper: bool | None = dataclasses.field(default=None, compare=False)

    def __post_init__(self):
        d = self.d
        if isinstance(d, int):
            d = (d,) * self.K
        object.__setattr__(self, "d", tuple(int(x) for x in d))

    @property
    def alpha(self) -> float:
        """Ratio ``P / Pf`` of forward to feedback power."""
        return self.P / self.Pf

    def feedback_exponent(self, scale: float = 1.0) -> float:
        """Exponent ``beta`` such that ``Pf = scale * P**beta``."""
        return math.log(self.Pf / scale) / math.log(self.P)

    @property
    def total_streams(self) -> int:
        return sum(self.d)

    @property
    def d_max(self) -> int:
        return max(self.d)

    def with_powers(self, P: float | None = None, Pf: float | None = None) -> "NetworkConfig":
        changes = {}
        if P is not None:
            changes["P"] = P
        if Pf is not None:
            changes["Pf"] = Pf
        return dataclasses.replace(self, **changes)


def validate_config(config: NetworkConfig) -> NetworkConfig:
    """Check every invariant of ``config`` and attach the properness flag.

    Raises
    ------
    StreamCountError
        Wrong number of stream counts or a count below one.
    DimensionError
        ``d_i > min(Nt, Nr)``, ``K*Nt < Nr``, a non-positive power, or an
        improper symmetric configuration. The message names the violated
        inequality.
    """
    for name in ("K", "Nt", "Nr"):
        value = getattr(config, name)
        if int(value) != value or value < 1:
            raise DimensionError(f"{name} >= 1 violated ({name}={value})")
    K, Nt, Nr = config.K, config.Nt, config.Nr
    if len(config.d) != K:
        raise StreamCountError(f"expected {K} stream counts, got {len(config.d)}")
    if any(di < 1 for di in config.d):
        raise StreamCountError(f"d_i >= 1 violated (d={list(config.d)})")
    for i, di in enumerate(config.d):
        if di > min(Nt, Nr):
            raise DimensionError(f"d_{i} <= min(Nt, Nr) violated ({di} > {min(Nt, Nr)})")
    if K * Nt < Nr:
        raise DimensionError(f"K*Nt >= Nr violated ({K * Nt} < {Nr})")
    for name in ("P", "Pf", "sigma2"):
        value = getattr(config, name)
        if not value > 0:
            raise DimensionError(f"{name} > 0 violated ({name}={value})")

    if len(set(config.d)) == 1:
        d = config.d[0]
        margin = Nt + Nr - (K + 1) * d
        if margin < 0:
            raise DimensionError(
                f"Nt + Nr - (K+1)*d >= 0 violated ({Nt} + {Nr} - {K + 1}*{d} = {margin}); "
                "configuration is improper"
            )
        proper = True
    else:
        warnings.warn(
            f"properness undecided for unequal stream counts d={list(config.d)}; "
            "solver convergence is the deciding signal",
            PropernessWarning,
            stacklevel=2,
        )
        proper = None
    return dataclasses.replace(config, proper=proper)


def read_config_file(path: str | Path) -> dict:
    """Parse a YAML configuration file into a plain dict."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return dict(data)


def network_config_from_mapping(data: Mapping) -> NetworkConfig:
    """Build and validate a :class:`NetworkConfig` from config-file keys.

    Powers are read as ``P_dB`` / ``Pf_dB`` and converted to linear scale.
    ``d`` may be a single integer (same count for every user) or a list.
    """
    missing = [k for k in ("K", "Nt", "Nr", "d") if k not in data]
    if missing:
        raise ConfigError(f"missing network keys: {', '.join(missing)}")
    K = int(data["K"])
    d = data["d"]
    if isinstance(d, Sequence) and not isinstance(d, str):
        d = tuple(int(x) for x in d)
    else:
        d = (int(d),) * K
    config = NetworkConfig(
        K=K,
        Nt=int(data["Nt"]),
        Nr=int(data["Nr"]),
        d=d,
        P=db_to_linear(float(data.get("P_dB", 0.0))),
        Pf=db_to_linear(float(data.get("Pf_dB", 0.0))),
        sigma2=float(data.get("sigma2", 1.0)),
    )
    return validate_config(config)
