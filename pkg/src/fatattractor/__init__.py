"""Upper boundary of the fat attractor of ``F(x, s) = (d x mod 1, lam s + A(x))``.

The boundary is the graph of the lambda-calibrated subaction ``b``. It is
computed two ways: by value iteration on a grid (``solver``) and as the upper
envelope of symbolic series ``S(x, a)`` (``series``). The two checks meet in
``transport`` and ``attractor``.
"""

__version__ = "0.1.0"

from .potentials import Potential, parse_potential
from .series import Envelope, candidates, envelope, s_value, validate_envelope
from .solver import GridFunction, SolverError, solve_subaction
from .symbolic import SymbolSeq

__all__ = [
    "Envelope",
    "GridFunction",
    "Potential",
    "SolverError",
    "SymbolSeq",
    "candidates",
    "envelope",
    "parse_potential",
    "s_value",
    "solve_subaction",
    "validate_envelope",
]
