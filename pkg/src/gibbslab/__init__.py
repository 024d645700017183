"""Gibbsian and non-Gibbsian lattice measures at desk scale.

Exact finite-volume specifications, stochastic spin dynamics, site-wise
transformations and curve-valued diagnostics of quasilocality.
"""

__version__ = "0.1.0"

from .engines import CapacityError
from .interaction import (
    Interaction,
    ModelParams,
    Term,
    alpha_norm,
    b1_norm,
    builtin,
    energy,
    flip_delta,
    ising_afm,
    ising_ferro,
    parse_interaction,
    zero,
)
from .lattice import (
    ALTERNATING,
    CHECKERBOARD2X2,
    ISING,
    MINUS,
    PLUS,
    Alphabet,
    Configuration,
    Pattern,
    Periodic,
    RandomPattern,
    Uniform,
    Volume,
    box,
    fill,
    parse_pattern,
    pattern_value,
    strip,
)
from .specification import (
    ConditionalQuery,
    Empirical,
    Gibbs,
    MeasureModel,
    UndefinedConditional,
    conditional,
    gamma,
    log_partition_function,
    partition_function,
    pressure,
    product_model,
)

__all__ = [
    "CapacityError",
    "Interaction",
    "ModelParams",
    "Term",
    "alpha_norm",
    "b1_norm",
    "builtin",
    "energy",
    "flip_delta",
    "ising_afm",
    "ising_ferro",
    "parse_interaction",
    "zero",
    "ALTERNATING",
    "CHECKERBOARD2X2",
    "ISING",
    "MINUS",
    "PLUS",
    "Alphabet",
    "Configuration",
    "Pattern",
    "Periodic",
    "RandomPattern",
    "Uniform",
    "Volume",
    "box",
    "fill",
    "parse_pattern",
    "pattern_value",
    "strip",
    "ConditionalQuery",
    "Empirical",
    "Gibbs",
    "MeasureModel",
    "UndefinedConditional",
    "conditional",
    "gamma",
    "log_partition_function",
    "partition_function",
    "pressure",
    "product_model",
]
