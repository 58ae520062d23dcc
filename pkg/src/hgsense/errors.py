"""Exception types shared across the package.

Most derive from ValueError as well so callers that only know stdlib
semantics still catch precondition failures.
"""


class HgSenseError(Exception):
    """Base class for package errors."""


class UnsupportedOrderError(HgSenseError, ValueError):
    """Polynomial or mode order above the supported bound."""


class CoverageError(HgSenseError, ValueError):
    """Sampling window too small for the requested beam size."""


class GridMismatchError(HgSenseError, ValueError):
    """Two field grids do not share shape and sampling."""


class DegeneratePostSelectionError(HgSenseError, ValueError):
    """Pre- and post-selection are (numerically) orthogonal."""


class WeakRegimeError(HgSenseError, ValueError):
    """|alpha * A_w| exceeds the configured weak-coupling guard."""


class TotalExtinctionError(HgSenseError, ArithmeticError):
    """Post-selected pointer norm underflowed to zero."""


class NoCarrierError(HgSenseError, ValueError):
    """The fundamental mode carries no rotation signal."""


class NoSensitivityError(NoCarrierError):
    """Requested sensitivity bound is undefined for this mode."""


class StepSizeError(HgSenseError, ArithmeticError):
    """Finite-difference stencils disagree; step size unusable."""


class InvalidStateError(HgSenseError, ValueError):
    """Matrix fails Hermiticity/positivity/trace checks."""


class UnreachableAmplitudeError(HgSenseError, ValueError):
    """Requested modulation depth outside the invertible Bessel branch."""


class SeparationError(HgSenseError, ValueError):
    """Diffraction orders cannot be separated on this grid."""


class ExpansionInvalidError(HgSenseError, ValueError):
    """Small-signal expansion guard (alpha << alpha0 << 1) violated."""


class ConfigError(HgSenseError, ValueError):
    """Invalid run configuration."""


class SmallProbabilityWarning(UserWarning):
    """An outcome probability fell below the Fisher-sum floor."""


class SaturationWarning(UserWarning):
    """Detected optical power exceeds the detector's linear range."""
