"""Minimum-cost on/off provisioning for server fleets, with workload aggregation."""

from .aggregation import (AggregatedTrace, constrained_local_smooth, expand_schedule,
                          improved_local_smooth, local_smooth, optimal_partition,
                          overprovisioning_cost, rearrangement_amount, static_aggregate)
from .costs import CostParams, beta_cost_params, default_cost_params
from .models import (FleetSpec, InfeasibleDemand, MilpInstance, Schedule, build, build_het,
                     build_hh, build_hom, evaluate_cost, fixed_configuration, local_optimum)
from .solver import (Solution, SolveOptions, brute_force, solve_hom_dp, solve_lp,
                     solve_milp, solve_model)
from .workload import (RandomWorkloadSpec, WorkloadTrace, gen_random, gen_sinusoidal,
                       load_trace, experiment_workload, save_trace)

__version__ = "0.1.0"
