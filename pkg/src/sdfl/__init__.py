"""Facility placement under a queue-based social-distancing objective."""

from sdfl.errors import (
    ConfigError,
    EnumerationCapError,
    InvalidBudgetError,
    InvalidSizeError,
    NetworkError,
    NoFacilityError,
    SdflError,
    UnstableQueueError,
)
from sdfl.ilpmodel import AssignmentTensor, FeasibilityReport, check_feasibility, objective_from_tensor, trace_to_tensor
from sdfl.network import (
    RoadNetwork,
    WeightSpec,
    generate_complete,
    generate_grid,
    neighbors_within,
    shortest_distances,
)
from sdfl.oracle import brute_force_best, enumerate_placements, mm1_mean_number
from sdfl.placement import (
    Placement,
    heuristic_placement,
    random_placement,
    run_heuristic,
    simulation_search,
    snake_assignment,
)
from sdfl.queuesim import (
    CustomerAssignment,
    SimOutcome,
    assign_customers,
    crn_draws,
    evaluate_placement,
    generate_arrivals,
    simulate_queue,
)
from sdfl.scenario import QueueParams, Scenario, SdParams, build_scenario, derive_stream, parse_config_text
from sdfl.socdist import sd_value
from sdfl.sweep import run_sweep, validate_run

__version__ = "0.1.0"
