"""Numerical laboratory for index pairings of truncated spectral triples."""

__version__ = "0.1.0"

from . import chern, hochschild, models, operator_core, regulators, singular_trace  # noqa: E402,F401
from .models import build_model, double  # noqa: E402,F401
