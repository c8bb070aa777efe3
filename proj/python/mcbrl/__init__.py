"""Python access to the mcbrl solvers, beliefs, agents and experiment harness."""

from ._core import (
    Belief,
    FiniteMdp,
    agent_names,
    bootstrap_ci,
    curve_svg,
    domain_mdp,
    domain_names,
    evaluate,
    mcbrl_plan,
    policy_evaluation,
    run,
    tune,
    umcbrl_plan,
    value_iteration,
)

__all__ = [
    "Belief",
    "FiniteMdp",
    "agent_names",
    "bootstrap_ci",
    "curve_svg",
    "domain_mdp",
    "domain_names",
    "evaluate",
    "mcbrl_plan",
    "policy_evaluation",
    "run",
    "tune",
    "umcbrl_plan",
    "value_iteration",
]
