"""Pseudo-spectral laboratory for dissipative active scalar equations with
multiplier couplings, plus Littlewood-Paley / Fourier-Besov-Morrey norms."""
__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CatalogError, ConfigError, DimensionError, DomainError, FbmError,
    NonContractionError, NumericalBlowupError, PreconditionError, RangeError,
)
from .kernels import BACKEND  # noqa: F401
from .lp_analysis import (  # noqa: F401
    DyadicPartition, FNNorm, NormParams, bernstein_check, dyadic_block, fbm_norm,
    fbm_report, holder_young_check, low_pass, morrey_norm, paraproduct_decompose,
    theorem_violations,
)
from .spectral_core import (  # noqa: F401
    Grid, Semigroup, SpectralField, apply_semigroup, forward_transform,
    fractional_symbol, inverse_transform, read_snapshot, write_snapshot,
)
from .symbols import (  # noqa: F401
    CouplingSymbol, builtin_symbol, check_homogeneity, classify_criticality,
    velocity_from_scalar,
)

