"""Linear temporal logic over machine behaviours."""

from .buchi import Buchi, to_buchi
from .checker import LtlVerdict, check_all, check_ltl, validate_formula
from .formula import Formula, normalize, parse_ltl
from .oracle import eval_lasso, oracle_check

__all__ = ["Buchi", "Formula", "LtlVerdict", "check_all", "check_ltl", "eval_lasso",
           "normalize", "oracle_check", "parse_ltl", "to_buchi", "validate_formula"]
