"""Contour-integral resummation of Taylor series, special sums and divergent series."""
from .complexfn import BranchedFunction, Side, parse_expr, pretty
from .quadrature import LoopContour, QuadratureResult

__all__ = ["BranchedFunction", "Side", "parse_expr", "pretty", "LoopContour", "QuadratureResult"]
__version__ = "0.1.0"
