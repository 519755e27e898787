"""Exact construction and classification of the 48 Fibonacci direct-product-variation tilings."""

from .num import TAU, ZTau, ZTauVec2
from .rules import ALL_RULES, DP_RULE, RuleId

__version__ = "0.1.0"

__all__ = ["ALL_RULES", "DP_RULE", "RuleId", "TAU", "ZTau", "ZTauVec2", "__version__"]
