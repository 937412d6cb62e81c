"""Numerical toolkit for h-convexity and related generalized-convexity classes."""

__version__ = "0.1.0"

from .exprkit import EvalDomain, evaluate, evaluate_array, parse, to_text  # noqa: E402
from .funclasses import ClassSpec, ModulatingFn, class_residual  # noqa: E402
from .certify import ScanConfig, Verdict, scan_class, refine_witness  # noqa: E402

__all__ = [
    "__version__",
    "EvalDomain",
    "parse",
    "evaluate",
    "evaluate_array",
    "to_text",
    "ClassSpec",
    "ModulatingFn",
    "class_residual",
    "ScanConfig",
    "Verdict",
    "scan_class",
    "refine_witness",
]
