"""Controllability analysis and simulation for piecewise-linear Markov switch systems.

A finite-mode jump chain selects the linear dynamics of a controlled state;
the package decides approximate (null-)controllability through algebraic
invariant-subspace criteria and cross-validates the verdicts by simulating
the controlled process, its dual, minimal-energy steering policies, and
penalty Riccati flows.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ConstantSystem,
    Mode,
    NotConstantError,
    SpecFormatError,
    SwitchSystem,
    as_constant,
    parse_spec,
    serialize_spec,
    system_digest,
    validate,
)
from .subspace import DEFAULT_RANK_TOL, Subspace  # noqa: F401
