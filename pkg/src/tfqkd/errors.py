"""Exception types shared across the package."""


class TfqkdError(Exception):
    """Base class for all package-specific errors."""


class DegenerateIntensityError(TfqkdError):
    """Two decoy intensities of one party coincide (or nearly coincide).

    The analytical yield bounds divide by pairwise intensity differences and
    become ill-conditioned well before the differences reach zero, so inputs
    with a relative gap below ~1e-6 are rejected instead of regularized.
    """


class InconsistentGainsError(TfqkdError):
    """Observed gains cannot be produced by any yield profile in [0, 1]."""


class InfeasibleFluctuationError(TfqkdError):
    """A fluctuation box violates the strict ordering of the decoy sets."""


class SaturationError(TfqkdError):
    """A special-function evaluation exceeded the floating-point range."""


class ConfigError(TfqkdError):
    """Invalid scenario configuration (CLI / config-file layer)."""
