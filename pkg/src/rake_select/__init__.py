"""Finger selection for MMSE selective Rake receivers in TH-IR multiuser channels."""

__version__ = "0.1.0"

from .channel import ConfigError, SystemConfig, build_mai_signature, draw_realization  # noqa: E402
from .selectors import BudgetExceeded, SelectorKind, run_selectors  # noqa: E402
from .sinr import approx_sinr, build_sinr_problem, exact_sinr  # noqa: E402

__all__ = [
    "__version__",
    "BudgetExceeded",
    "ConfigError",
    "SelectorKind",
    "SystemConfig",
    "approx_sinr",
    "build_mai_signature",
    "build_sinr_problem",
    "draw_realization",
    "exact_sinr",
    "run_selectors",
]
