"""Grammatical evolution of decision-tree policies with Q-learning leaves."""

from ._core import (
    DecisionTree,
    Env,
    Grammar,
    complexity,
    decode_text,
    evaluate_tree,
    mann_whitney,
    noise_sweep,
    run_training,
    simplify_tree,
    stability_trace,
    tree_from_genotype,
)

__version__ = "0.1.0"

__all__ = [
    "DecisionTree",
    "Env",
    "Grammar",
    "complexity",
    "decode_text",
    "evaluate_tree",
    "mann_whitney",
    "noise_sweep",
    "run_training",
    "simplify_tree",
    "stability_trace",
    "tree_from_genotype",
]
