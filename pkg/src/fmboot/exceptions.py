"""Exception and warning classes raised across the package."""


class FMBError(Exception):
    """Base class for all errors raised by fmboot."""

    code = "fmb_error"


class NonConvergenceError(FMBError):
    """Jacobi sweeps exhausted before the off-diagonal mass vanished."""

    code = "non_convergence"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotPSDError(FMBError):
    code = "not_psd"

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NoRootError(FMBError):
    code = "no_root"

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DegenerateVarianceError(FMBError):
    code = "degenerate_variance"


class DomainViolation(FMBError, ValueError):
    """An argument lies outside the domain of the function evaluated."""

    code = "domain_violation"

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MonotonicityViolated(FMBError):
    code = "monotonicity_violated"


class QuantileOutOfRange(FMBError):
    code = "quantile_out_of_range"


class InnerDiverged(FMBError):
    code = "inner_diverged"


class DomainUnreachable(FMBError):
    code = "domain_unreachable"


class OuterDiverged(FMBError):
    code = "outer_diverged"


class ReplicateFailed(FMBError):
    code = "replicate_failed"


class EmptySlice(FMBError):
    code = "empty_slice"


class PropagationError(FMBError):
    """Non-finite values produced by a smoothing pass."""

    code = "non_finite"

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ConfigError(FMBError, ValueError):
    code = "invalid_config"


class BandwidthWarning(UserWarning):
    """Bandwidth outside the (T^{1/4}, T^{1/2}) window."""
