"""Seeded simulation, aggregation, bound overlays, export and property suites."""

from .bounds import BoundReport, bound_report, ntc_theoretical_bound, solve_quadratic_bound, term1_bound
from .export import export_csv, export_json, read_csv
from .metrics import Summary, aggregate, regret_decomposition
from .runner import RunLog, run_experiment, run_many
