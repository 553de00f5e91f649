"""Cost coefficients, all in US cents.

Default values describe a 100 W server billed at 7 cents/kWh and profiled
every 5 minutes.  The switching figures come from amortizing a $2,000
server's disk wear (60,000 on/off cycles, $100 repair plus 10% replacement)
into 0.5 cents per cycle, split 0.3 on / 0.2 off, plus the energy drawn by
the transition itself and by 77 s of extra run time during consolidation.
Those derivations are fixed constants here; nothing is recomputed from
hardware parameters at run time.

Any field may be a ``fractions.Fraction``; the arithmetic below is then exact.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

RUN_WATTS = 100.0
CENTS_PER_KWH = 7.0
BASE_SLOT_MINUTES = 5.0
RATIONAL_DENOMINATOR = 10 ** 9


@dataclass(frozen=True)
class CostParams:
    """Per-server cost coefficients (one record per server, class or cluster)."""

    run_cost_per_base_slot: float = 7 / 120
    switch_on_wear: float = 0.3
    switch_off_wear: float = 0.2
    switch_on_power: float = 0.02
    switch_off_power: float = 0.005
    consolidation_power: float = 0.015

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) >= 0:
                raise ValueError(f"{f.name} must be >= 0")

    @property
    def switch_on_total(self):
        return self.switch_on_wear + self.switch_on_power

    @property
    def switch_off_total(self):
        return self.switch_off_wear + self.switch_off_power + self.consolidation_power

    @property
    def switch_off_power_total(self):
        """Energy part of a switch-off: transition power plus consolidation."""
        return self.switch_off_power + self.consolidation_power

    def exact(self) -> "CostParams":
        return CostParams(*(rational(getattr(self, f.name)) for f in fields(self)))


def rational(value) -> Fraction:
    """Nearest small-denominator fraction, so 0.3 + 0.02 and 0.32 agree exactly."""
    if isinstance(value, Fraction):
        return value
    return Fraction(float(value)).limit_denominator(RATIONAL_DENOMINATOR)


def default_cost_params() -> CostParams:
    return CostParams()


def run_cost(watts: float = RUN_WATTS, cents_per_kwh: float = CENTS_PER_KWH,
             minutes: float = BASE_SLOT_MINUTES) -> float:
    """Cents to keep one server running for ``minutes``."""
    return watts / 1000.0 * cents_per_kwh * minutes / 60.0


def beta_cost_params(beta) -> CostParams:
    """Weight energy prices by ``beta`` and wear-and-tear by ``1 - beta``.

    Running a server for 5 minutes costs beta*7/60, a switch-on totals
    0.6 - 0.56*beta and a switch-off 0.4 - 0.36*beta.
    """
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    exact = isinstance(beta, Fraction)
    k = (lambda num, den=1: Fraction(num, den)) if exact else (lambda num, den=1: num / den)
    return CostParams(
        run_cost_per_base_slot=beta * 7 / 60,
        switch_on_wear=(1 - beta) * k(6, 10),
        switch_off_wear=(1 - beta) * k(4, 10),
        switch_on_power=beta * k(4, 100),
        switch_off_power=beta * k(1, 100),
        consolidation_power=beta * k(3, 100),
    )


CONFIG_KEYS = {
    "run_cost_per_slot": "run_cost_per_base_slot",
    "switch_on_wear": "switch_on_wear",
    "switch_off_wear": "switch_off_wear",
    "switch_on_power": "switch_on_power",
    "switch_off_power": "switch_off_power",
    "consolidation_power": "consolidation_power",
}


def cost_params_from_mapping(values: dict, base: CostParams | None = None) -> CostParams:
    """Apply config-file overrides.  ``beta`` (if present) is applied first."""
    params = base or default_cost_params()
    if "beta" in values:
        params = beta_cost_params(float(values["beta"]))
    overrides = {CONFIG_KEYS[k]: float(v) for k, v in values.items() if k in CONFIG_KEYS}
    return replace(params, **overrides) if overrides else params


def read_key_value(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{n}: empty key")
        out[key] = value
    return out
