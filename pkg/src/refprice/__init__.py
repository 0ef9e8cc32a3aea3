"""Markdown pricing under running-average reference effects.

Simulation and optimization tools for a demand model where customers compare
the posted price to the average of all past prices: closed-form markdown
curves, baseline and learning pricing policies, and a seeded regret harness.
"""

from .curve import (
    FocSystem,
    PriceCurve,
    SolverError,
    curve_from_markdown_start,
    curve_value,
    dense_solve,
    foc_residual,
    solve_curve,
    solve_segment,
)
from .harness import (
    EpisodeRecord,
    RegretRecord,
    SimEnv,
    clairvoyant_value,
    regret_sweep,
    run_episode,
)
from .model import (
    DomainError,
    Instance,
    NoiseSpec,
    PolicyParams,
    expected_demand,
    greedy_price,
    revenue,
    sample_demand,
    true_policy_params,
)
from .policies import (
    LearnGreedyState,
    LearnThenEarn,
    MarkdownOracle,
    learn_greedy,
    make_policy,
    myopic_greedy_step,
    optimal_fixed_price,
    reset_ref,
    two_price_policy,
)
from .reference import ReferenceState

__all__ = [
    "DomainError",
    "EpisodeRecord",
    "FocSystem",
    "Instance",
    "LearnGreedyState",
    "LearnThenEarn",
    "MarkdownOracle",
    "NoiseSpec",
    "PolicyParams",
    "PriceCurve",
    "ReferenceState",
    "RegretRecord",
    "SimEnv",
    "SolverError",
    "clairvoyant_value",
    "curve_from_markdown_start",
    "curve_value",
    "dense_solve",
    "expected_demand",
    "foc_residual",
    "greedy_price",
    "learn_greedy",
    "make_policy",
    "myopic_greedy_step",
    "optimal_fixed_price",
    "regret_sweep",
    "reset_ref",
    "revenue",
    "run_episode",
    "sample_demand",
    "solve_curve",
    "solve_segment",
    "true_policy_params",
    "two_price_policy",
]

__version__ = "0.1.0"
