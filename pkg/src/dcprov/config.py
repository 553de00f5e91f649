"""Experiment configuration for the sweep harness.

A config file holds ``key = value`` lines; list values are comma separated
and ``#`` starts a comment.  Cost keys (``run_cost_per_slot``,
``switch_on_wear`` and friends) override the default cents figures.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .aggregation import METHODS, MODES
from .costs import CONFIG_KEYS, read_key_value, run_cost
from .workload import DISTRIBUTIONS

WORKLOADS = ("sinusoidal",) + DISTRIBUTIONS
MODELS = ("hom", "het", "hh")
DEFAULT_SEEDS = tuple(range(101))


@dataclass(frozen=True)
class ExperimentConfig:
    workload: str = "sinusoidal"
    servers: int = 100
    clusters: int = 1
    slots: int = 96
    slot_minutes: float = 5.0
    utilization: float = 0.2
    sinusoid_grid: str = "index"
    seeds: tuple = DEFAULT_SEEDS
    alphas: tuple = (1,)
    betas: tuple = (None,)
    model: str = "hom"
    methods: tuple = ("static",)
    modes: tuple = ("max",)
    S: int | None = None
    baselines: bool = True
    time_limit: float | None = None
    node_limit: int | None = None
    cost_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.workload not in WORKLOADS:
            raise ValueError(f"unknown workload {self.workload!r}; expected one of {WORKLOADS}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        for name in ("seeds", "alphas", "betas", "methods", "modes"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if any(int(a) != a or a < 1 for a in self.alphas):
            raise ValueError("alpha values must be integers >= 1")
        if any(b is not None and not 0 <= b <= 1 for b in self.betas):
            raise ValueError("beta values must lie in [0, 1]")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown aggregation method(s) {sorted(bad)}")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ValueError(f"unknown aggregation mode(s) {sorted(bad)}")
        if self.servers < 1 or self.slots < 1 or not 1 <= self.clusters <= self.servers:
            raise ValueError("need servers >= 1, slots >= 1 and 1 <= clusters <= servers")
        if self.sinusoid_grid not in ("index", "linspace"):
            raise ValueError("sinusoid_grid must be 'index' or 'linspace'")
        if not self.slot_minutes > 0:
            raise ValueError("slot_minutes must be positive")

    @property
    def run_cost_per_slot(self) -> float:
        return run_cost(minutes=self.slot_minutes)


PRESETS = {
    "sinusoid-baselines": ExperimentConfig(
        workload="sinusoidal", servers=100, seeds=(0,), model="hom",
        sinusoid_grid="linspace"),
    "desk-500": ExperimentConfig(
        workload="sinusoidal", servers=500, clusters=10, seeds=(0,), model="hh",
        alphas=(1, 2, 3, 6, 8, 12), baselines=False),
    "full-5000": ExperimentConfig(
        workload="sinusoidal", servers=5000, clusters=50, seeds=(0,), model="hh",
        alphas=(1, 2, 3, 6, 8, 12), baselines=False),
    "random-baselines": ExperimentConfig(
        workload="hyperexp2", servers=100, seeds=tuple(range(11)), model="hom"),
    "beta-sweep": ExperimentConfig(
        workload="hyperexp2", servers=100, seeds=tuple(range(11)), model="hom",
        alphas=(1, 12, 96), betas=tuple(k / 10 for k in range(11)), baselines=False),
}


def _list(value, cast):
    return tuple(cast(v.strip()) for v in value.split(",") if v.strip())


def _beta(v):
    return None if v.lower() in ("", "default", "none") else float(v)


def _bool(v):
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _opt(cast):
    return lambda v: None if v.lower() in ("", "none") else cast(v)


_PARSERS = {
    "workload": str, "servers": int, "clusters": int, "slots": int,
    "slot_minutes": float, "utilization": float, "sinusoid_grid": str,
    "seeds": lambda v: _seeds(v), "alphas": lambda v: _list(v, int),
    "betas": lambda v: _list(v, _beta), "model": str,
    "methods": lambda v: _list(v, str), "modes": lambda v: _list(v, str),
    "S": _opt(int), "baselines": _bool, "time_limit": _opt(float),
    "node_limit": _opt(int),
}
_ALIASES = {"alpha": "alphas", "beta": "betas", "method": "methods", "mode": "modes",
            "seed": "seeds", "I": "servers", "J": "clusters", "T": "slots"}


def _seeds(value: str) -> tuple:
    """``"0-10"`` is an inclusive range; otherwise a comma list."""
    value = value.strip()
    if "-" in value and "," not in value:
        lo, hi = (int(p) for p in value.split("-", 1))
        if hi < lo:
            raise ValueError(f"empty seed range {value!r}")
        return tuple(range(lo, hi + 1))
    return _list(value, int)


def apply_settings(config: ExperimentConfig, settings: dict) -> ExperimentConfig:
    """Return ``config`` updated from string-valued ``settings``."""
    updates = {}
    costs = dict(config.cost_overrides)
    for raw_key, value in settings.items():
        key = _ALIASES.get(raw_key, raw_key)
        if key in CONFIG_KEYS:
            costs[key] = float(value)
        elif key in _PARSERS:
            try:
                updates[key] = _PARSERS[key](value)
            except ValueError as exc:
                raise ValueError(f"bad value for {raw_key}: {exc}") from None
        else:
            raise ValueError(f"unknown config key {raw_key!r}")
    return replace(config, cost_overrides=costs, **updates)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return apply_settings(base or ExperimentConfig(), read_key_value(path))


def config_keys() -> list[str]:
    return [f.name for f in fields(ExperimentConfig) if f.name != "cost_overrides"]
