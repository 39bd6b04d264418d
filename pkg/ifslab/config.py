"""Experiment configuration: one JSON document per experiment."""

from dataclasses import asdict, dataclass, fields
import hashlib
import json
import logging

from .exceptions import InvalidConfig, InvalidIFSSpec
from .ifs_model import MULTIPLICATIVE, IFSSpec, MapSpec

LOG = logging.getLogger("ifslab")

REQUIRED_KEYS = ("maps", "probabilities", "seed")
# Keys which do not change any computed value and are left out of the config hash.
RUNTIME_KEYS = ("threads", "out_dir")


@dataclass(frozen=True)
class ExperimentConfig:
    """Effective configuration of an experiment run."""

    maps: tuple
    probabilities: tuple
    seed: int
    perturbation: str = MULTIPLICATIVE
    epsilon: float = 0.01
    m: int = 10
    sigma: float = 0.5
    n_samples: int = 100000
    depth: int = None
    bins: int = 200
    r_ladder: tuple = tuple(0.05 * 2.0**-j for j in range(7))
    epsilon_ladder: tuple = (0.2, 0.1, 0.05, 0.025)
    m_ladder: tuple = (4, 8, 12)
    n_points: int = 2000
    n_steps: int = 100
    slice_bins: int = 16
    trials: int = 10000
    jacobian_points: int = 1000
    lyapunov_samples: int = 100000
    threads: int = 1
    out_dir: str = "ifslab-out"

    def to_dict(self):
        """Return JSON representation."""
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    def replace(self, **overrides):
        """Return a copy with the non-None overrides applied."""
        data = asdict(self)
        data.update({key: value for key, value in overrides.items() if value is not None})
        return from_dict(data)


_POSITIVE_INTS = (
    "m",
    "n_samples",
    "bins",
    "n_points",
    "n_steps",
    "slice_bins",
    "trials",
    "jacobian_points",
    "lyapunov_samples",
    "threads",
)


def _check_values(data):
    for key in _POSITIVE_INTS:
        if not isinstance(data[key], int) or data[key] < 1:
            raise InvalidConfig("'%s' must be a positive integer, got %r" % (key, data[key]))
    if data["depth"] is not None and (not isinstance(data["depth"], int) or data["depth"] < 1):
        raise InvalidConfig("'depth' must be a positive integer or null")
    if not isinstance(data["seed"], int) or data["seed"] < 0:
        raise InvalidConfig("'seed' must be a non-negative integer, got %r" % (data["seed"],))
    if not data["epsilon"] >= 0.0:
        raise InvalidConfig("'epsilon' must be non-negative, got %r" % (data["epsilon"],))
    m_ladder = list(data["m_ladder"])
    if not m_ladder or any(not isinstance(m, int) or m < 1 for m in m_ladder):
        raise InvalidConfig("'m_ladder' must be a non-empty list of positive integers")
    eps_ladder = list(data["epsilon_ladder"])
    if not eps_ladder or any(
        not isinstance(eps, (int, float)) or not eps > 0.0 for eps in eps_ladder
    ):
        raise InvalidConfig("'epsilon_ladder' must be a non-empty list of positive numbers")
    ladder = list(data["r_ladder"])
    if not ladder or any(b >= a for a, b in zip(ladder, ladder[1:])) or ladder[-1] <= 0.0:
        raise InvalidConfig("'r_ladder' must be strictly decreasing and positive")


def from_dict(data):
    """
    Create a configuration from a parsed JSON document.

    Raises:
        InvalidConfig:
            When a required key is missing, a key is unknown or a value is out of range.
    """
    for key in REQUIRED_KEYS:
        if key not in data:
            raise InvalidConfig("'{0}' must be present in the config.".format(key))
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidConfig("Unknown config keys: %s" % ", ".join(unknown))

    values = {f.name: f.default for f in fields(ExperimentConfig) if f.name not in REQUIRED_KEYS}
    values.update(data)
    for key in ("maps", "probabilities", "r_ladder", "epsilon_ladder", "m_ladder"):
        values[key] = tuple(values[key])
    values["maps"] = tuple(dict(map_data) for map_data in values["maps"])
    _check_values(values)
    config = ExperimentConfig(**values)
    to_ifs(config)
    return config


def load_config(path, overrides=None):
    """
    Load a JSON config file and apply command-line overrides.

    Args:
        path (str):
            Config file.
        overrides (dict):
            Values replacing the file's ones; None values are ignored.
    Returns (ExperimentConfig):
        The effective configuration.
    """
    LOG.info("Loading config %s", path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise InvalidConfig("Cannot read config %s: %s" % (path, e))
    if not isinstance(data, dict):
        raise InvalidConfig("Config %s must hold a JSON object" % path)
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    return from_dict(data)


def config_hash(config):
    """SHA-256 of the canonical JSON of the configuration, without runtime-only keys."""
    data = {k: v for k, v in config.to_dict().items() if k not in RUNTIME_KEYS}
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def to_ifs(config, epsilon=None):
    """
    Build the iterated function system of a configuration.

    Raises:
        InvalidConfig:
            When the maps or probabilities are malformed.
    """
    try:
        return IFSSpec(
            maps=[MapSpec.from_dict(map_data) for map_data in config.maps],
            probabilities=config.probabilities,
            perturbation=config.perturbation,
            epsilon=config.epsilon if epsilon is None else epsilon,
        )
    except InvalidIFSSpec as e:
        raise InvalidConfig("Invalid system definition: %s" % e)
