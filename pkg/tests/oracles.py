"""Independent reference computations used across the test suite.

These enumerate running-count paths directly and price them by hand, without
touching the program builders or any solver.
"""

import itertools
from fractions import Fraction

from dcprov.costs import rational


def path_cost(paths, fleet, sizes=None):
    """Exact cost of per-class running-count paths (all off before slot 1)."""
    total = Fraction(0)
    for k, path in enumerate(paths):
        c = fleet.costs[k].exact()
        prev = 0
        for t, y in enumerate(path):
            size = 1 if sizes is None else int(sizes[t])
            total += c.run_cost_per_base_slot * size * y
            if y > prev:
                total += (c.switch_on_wear + c.switch_on_power) * (y - prev)
            else:
                total += (c.switch_off_wear + c.switch_off_power + c.consolidation_power) * (prev - y)
            prev = y
    return total


def enumerate_optimum(demands, fleet, sizes=None):
    """Minimum exact cost over every running-count path that covers demand."""
    T = len(demands)
    best = None
    per_slot = list(itertools.product(*[range(n + 1) for n in fleet.counts]))
    covering = [[v for v in per_slot
                 if sum(a * b for a, b in zip(v, fleet.capacities)) >= d - 1e-9]
                for d in demands]
    for choice in itertools.product(*covering):
        paths = [[choice[t][k] for t in range(T)] for k in range(fleet.n_classes)]
        cost = path_cost(paths, fleet, sizes)
        if best is None or cost < best[0]:
            best = (cost, paths)
    return best


def to_float(value):
    return float(rational(value)) if not isinstance(value, Fraction) else float(value)
