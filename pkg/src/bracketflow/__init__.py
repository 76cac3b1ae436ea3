"""Isospectral bracket flows ``H' = [H, G(H)]`` on dense real matrices."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketFlowError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DriftError,
    InsufficientDataError,
    NotDiagonalizableError,
    NumericalError,
    RankError,
    StateError,
    StiffnessError,
    SymmetryError,
)
from .generators import GeneratorKind, GeneratorSpec, apply_generator, vector_field  # noqa: E402
from .integrator import FlowState, IntegratorConfig, Trajectory, integrate  # noqa: E402
