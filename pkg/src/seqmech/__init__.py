"""Implementability of social choice functions by sequential-move mechanisms."""
from .model import Environment, StateSet, conditional_belief, validate_environment
from .notions import NotionId, eval_notion, properties_of
from .deciders import (
    decide_generic,
    decide_maxmin,
    decide_osp,
    decide_pbe,
    decide_sosp,
    decide_sp,
)

__all__ = [
    "Environment",
    "StateSet",
    "NotionId",
    "conditional_belief",
    "validate_environment",
    "eval_notion",
    "properties_of",
    "decide_generic",
    "decide_sp",
    "decide_pbe",
    "decide_maxmin",
    "decide_osp",
    "decide_sosp",
]
