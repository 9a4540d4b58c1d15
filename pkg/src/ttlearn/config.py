"""Experiment configuration: defaults, JSON loading, and range validation.

Every numeric range restates the invariant of the module that owns the
parameter, so a bad value is rejected at load time with its field name.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .penalties import KINDS as PENALTY_KINDS
from .solver import GOLDEN_STEP_LIMIT

TASKS = ("complete", "classify")
TRANSFORMS = ("identity", "dct", "data")

# rho differs between the two tasks; everything else shares one default
TASK_RHO = {"complete": 10.0, "classify": 100.0}


class ConfigError(ValueError):
    def __init__(self, fieldname: str, message: str):
        super().__init__(f"config field {fieldname!r}: {message}")
        self.fieldname = fieldname


@dataclass
class ExperimentConfig:
    task: str = "complete"
    penalty: str = "mcp"
    lam: float = 0.5
    gamma: float = 2.7
    transform: str = "dct"
    beta: float = 1.0
    rho: float | None = None  # task default when None
    xi: float = 0.1
    box_c: float | None = None  # auto from data (complete) / 10 (classify)
    eta: float = 10.0
    tau: float = 1.618
    max_outer: int = 100
    tol_outer: float = 5e-4
    max_inner: int = 100
    tol_inner: float = 3e-3
    sr: float = 0.4
    sigma: float = 0.01
    seed: int = 0
    n_train: int = 500
    n_test: int = 200
    rank: int = 2
    dims: tuple[int, int, int] = (30, 30, 10)
    pilot_max_outer: int | None = None
    paths: dict = field(default_factory=dict)

    def resolved_rho(self) -> float:
        return TASK_RHO[self.task] if self.rho is None else self.rho

    def resolved_box_c(self) -> float | None:
        if self.box_c is None and self.task == "classify":
            return 10.0
        return self.box_c

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASKS:
            raise ConfigError("task", f"must be one of {TASKS}")
        if self.penalty not in PENALTY_KINDS:
            raise ConfigError("penalty", f"must be one of {PENALTY_KINDS}")
        if not self.lam > 0:
            raise ConfigError("lambda", "must be positive")
        if self.penalty in ("mcp", "log") and not self.gamma > 0:
            raise ConfigError("gamma", f"must be positive for {self.penalty}")
        if self.penalty == "scad" and not self.gamma > 1:
            raise ConfigError("gamma", "must exceed 1 for scad")
        if self.transform not in TRANSFORMS:
            raise ConfigError("transform", f"must be one of {TRANSFORMS}")
        if self.beta < 0:
            raise ConfigError("beta", "must be nonnegative")
        if self.rho is not None and not self.rho > 0:
            raise ConfigError("rho", "must be positive")
        if not 0 < self.xi < 0.5:
            raise ConfigError("xi", "must lie in (0, 1/2)")
        if self.box_c is not None and not self.box_c > 0:
            raise ConfigError("box_c", "must be positive")
        if not self.eta > 0:
            raise ConfigError("eta", "must be positive")
        if not 0 < self.tau < GOLDEN_STEP_LIMIT:
            raise ConfigError("tau", f"must lie in (0, {GOLDEN_STEP_LIMIT:.9f})")
        if self.max_outer < 0:
            raise ConfigError("max_outer", "must be nonnegative")
        if not self.tol_outer > 0:
            raise ConfigError("tol_outer", "must be positive")
        if self.max_inner < 1:
            raise ConfigError("max_inner", "must be at least 1")
        if not self.tol_inner > 0:
            raise ConfigError("tol_inner", "must be positive")
        if not 0 < self.sr <= 1:
            raise ConfigError("sr", "must lie in (0, 1]")
        if self.sigma < 0:
            raise ConfigError("sigma", "must be nonnegative")
        if self.n_train < 1:
            raise ConfigError("n_train", "must be at least 1")
        if self.n_test < 0:
            raise ConfigError("n_test", "must be nonnegative")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ConfigError("dims", "must be three positive integers")
        if not 0 <= self.rank <= min(self.dims[0], self.dims[1]):
            raise ConfigError("rank", "must lie in [0, min(n1, n2)]")
        if self.pilot_max_outer is not None and self.pilot_max_outer < 0:
            raise ConfigError("pilot_max_outer", "must be nonnegative")
        allowed_paths = {
            "observed", "mask", "truth", "output", "results",
            "train_samples", "train_labels", "test_samples", "test_labels",
        }
        for key in self.paths:
            if key not in allowed_paths:
                raise ConfigError(f"paths.{key}", f"must be one of {sorted(allowed_paths)}")
        return self

    def echo(self) -> dict:
        """JSON-ready view with task defaults resolved (box_c may stay null)."""
        data = asdict(self)
        data["lambda"] = data.pop("lam")
        data["rho"] = self.resolved_rho()
        data["box_c"] = self.resolved_box_c()
        data["dims"] = list(self.dims)
        return data


# JSON key -> dataclass attribute (only where they differ)
_KEY_ALIASES = {"lambda": "lam"}


def config_from_dict(raw: dict, **overrides) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    for key, value in raw.items():
        attr = _KEY_ALIASES.get(key, key)
        if attr not in known:
            raise ConfigError(key, "unknown field")
        values[attr] = value
    values.update(overrides)
    if "dims" in values:
        values["dims"] = tuple(int(d) for d in values["dims"])
    cfg = ExperimentConfig(**values)
    return cfg.validate()


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON config file; unspecified fields take the documented defaults."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be a JSON object")
    return config_from_dict(raw, **overrides)
