"""Quantum while-programs with labelled Dirac notation and a checker for quantum Hoare triples."""

from . import dirac, group, hoare, linalg, qtypes, qwhile, semantics
from .assertion import evaluate, format_operator, parse_assertion
from .casestudies import EXAMPLES, CaseStudy, build, run_suite
from .config import Config, get_default, set_default
from .dirac import LabelledOperator, Variable, VarTable
from .errors import (BadHidingFunction, CounterexampleFound, NoConvergence, NotNormalized, QWhileSyntaxError,
                     QWhileTypeError, QWVError, SideConditionViolated, StepFailed)
from .hoare import Judgment, Validity, apply_rule, check_valid, is_valid, state_judgment, wlp, wp
from .outline import ProofOutline, check_outline
from .parser import parse, parse_with_sidecar, pretty
from .semantics import SuperOperator, denote, evolve, quality

__version__ = "0.1.0"

__all__ = [
    "BadHidingFunction", "CaseStudy", "Config", "CounterexampleFound", "EXAMPLES", "Judgment", "LabelledOperator",
    "NoConvergence", "NotNormalized", "ProofOutline", "QWVError", "QWhileSyntaxError", "QWhileTypeError",
    "SideConditionViolated", "StepFailed", "SuperOperator", "Validity", "VarTable", "Variable", "apply_rule",
    "build", "check_outline", "check_valid", "denote", "dirac", "evaluate", "evolve", "format_operator",
    "get_default", "group", "hoare", "is_valid", "linalg", "parse", "parse_assertion", "parse_with_sidecar",
    "pretty", "qtypes", "quality", "qwhile", "run_suite", "semantics", "set_default", "state_judgment", "wlp", "wp",
]
