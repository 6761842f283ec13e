"""Systems of sequential and nondeterministic strategies, the configuration
machine that applies them, and a PCF front end compiled onto them."""

from .machine import Machine, SearchBudget, derived_strategy, eval_ground
from .strategy import BOTTOM, HASH, Query, Strategy, System, Value, tab
from .terms import NAT, fn, format_term, parse_type

__all__ = [
    "Machine", "SearchBudget", "derived_strategy", "eval_ground",
    "BOTTOM", "HASH", "Query", "Strategy", "System", "Value", "tab",
    "NAT", "fn", "format_term", "parse_type",
]
__version__ = "0.1.0"
