"""Belief updating from partial counts plus a shared moment constraint.

A die with k sides is rolled n times; agents see some of the per-side
counts and all share one expected-value constraint on the side
probabilities.  Each agent's updated belief is the prior times the
likelihood of what it saw, exponentially tilted so the constraint holds.
"""
from .engine import (
    ConstraintSpec,
    ConvergenceError,
    EntropyReport,
    GridEngine,
    InfeasibleConstraintError,
    McEngine,
    PosteriorModel,
    PosteriorSummary,
    PriorSpec,
    SolvedConstraint,
    default_engine,
    expected_f,
    log_zeta,
    me_entropy,
    posterior,
    posterior_no_constraint,
    posterior_summary,
    solve_beta,
)
from .fileio import EngineSettings, ExperimentConfig
from .multinomial import (
    IMPOSSIBLE_LOG_PROB,
    AgentView,
    CountVector,
    log_factorial,
    log_multinomial,
    log_view_likelihood,
    simulate_rolls,
)
from .network import (
    AgentNetwork,
    BeliefEntry,
    BeliefTable,
    belief_divergence,
    build_network,
    complete_network,
    explicit_network,
    infer_all,
    triangle_lattice_network,
    views_at_round,
)
from .simplex import (
    McEstimate,
    NodeBudgetError,
    SimplexGrid,
    ThetaPoint,
    build_grid,
    expect_grid,
    expect_mc,
)

__all__ = [
    "AgentNetwork",
    "AgentView",
    "BeliefEntry",
    "BeliefTable",
    "ConstraintSpec",
    "ConvergenceError",
    "CountVector",
    "EngineSettings",
    "EntropyReport",
    "ExperimentConfig",
    "GridEngine",
    "IMPOSSIBLE_LOG_PROB",
    "InfeasibleConstraintError",
    "McEngine",
    "McEstimate",
    "NodeBudgetError",
    "PosteriorModel",
    "PosteriorSummary",
    "PriorSpec",
    "SimplexGrid",
    "SolvedConstraint",
    "ThetaPoint",
    "belief_divergence",
    "build_grid",
    "build_network",
    "complete_network",
    "default_engine",
    "expect_grid",
    "expect_mc",
    "expected_f",
    "explicit_network",
    "infer_all",
    "log_factorial",
    "log_multinomial",
    "log_view_likelihood",
    "log_zeta",
    "me_entropy",
    "posterior",
    "posterior_no_constraint",
    "posterior_summary",
    "simulate_rolls",
    "solve_beta",
    "triangle_lattice_network",
    "views_at_round",
]

__version__ = "0.1.0"
