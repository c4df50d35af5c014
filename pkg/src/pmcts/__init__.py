"""Parallel particle-based Monte Carlo Tree Search.

Weighted and unweighted particle search with sequential-importance
correction, classical sequential and virtual-visit baselines, exact dynamic
programming oracles for verification, and an evaluation harness.
"""

from .engine import SearchConfig, SearchResult, run_search
from .envs import make_env
from ._kernels import BACKEND as kernel_backend, available_backends

__version__ = "0.1.0"

__all__ = [
    "SearchConfig",
    "SearchResult",
    "run_search",
    "make_env",
    "kernel_backend",
    "available_backends",
    "__version__",
]
