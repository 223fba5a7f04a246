"""Dynamic action interpolation lab (C++ core)."""

from ._core import (
    Env,
    alpha,
    cli,
    collect_demonstrations,
    evaluate_expert,
    evaluate_policy,
    interpolate,
    mixture_gap,
    resolve_config,
    run_config_keys,
    scripted_expert_action,
    total_variation,
    train,
    visitation_grid,
)

__all__ = [
    "Env",
    "alpha",
    "cli",
    "collect_demonstrations",
    "evaluate_expert",
    "evaluate_policy",
    "interpolate",
    "mixture_gap",
    "resolve_config",
    "run_config_keys",
    "scripted_expert_action",
    "total_variation",
    "train",
    "visitation_grid",
]
