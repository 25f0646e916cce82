"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI:
  ConfigError                  -> 2
  data errors (parse/shape)    -> 3
  numerical failures           -> 4
"""


class SvyError(Exception):
    """Base class for all package errors."""


class ConfigError(SvyError):
    """Invalid configuration (unknown scenario, bad divisibility, missing column)."""


class EmptyInput(SvyError):
    """An operation received an empty vector or zero-row sample."""


class InvalidWeight(SvyError):
    """A sampling weight is zero, negative, or non-finite."""


class ShapeError(SvyError):
    """Dimension mismatch between inputs."""


class ParseError(SvyError):
    """A data file could not be parsed."""


class SingletonStratum(SvyError):
    """A stratum contains a single PSU, so PSU resampling is undefined."""

    def __init__(self, stratum_id):
        self.stratum_id = stratum_id
        super().__init__(f"stratum {stratum_id!r} has a single PSU; "
                         "replicate resampling requires >= 2 PSUs per stratum")


class CertaintyUnit(SvyError):
    """A PPS inclusion probability exceeds 1."""

    def __init__(self, unit_ids):
        self.unit_ids = list(unit_ids)
        super().__init__(f"inclusion probability > 1 for unit(s) {self.unit_ids}")


class InitFailure(SvyError):
    """The sampler's log density is non-finite at its starting point."""


class InsufficientChains(SvyError):
    """Convergence diagnostics need at least two chains."""


class NonPDMatrix(SvyError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index):
        self.pivot_index = pivot_index
        super().__init__(f"matrix is not positive definite (pivot {pivot_index})")


class NonPDHessian(SvyError):
    """The estimated curvature matrix is not positive definite."""


class ReplicateFailure(SvyError):
    """A replicate evaluation produced non-finite values."""

    def __init__(self, replicate_index):
        self.replicate_index = replicate_index
        super().__init__(f"replicate {replicate_index} produced non-finite values")


class SingularCovariance(SvyError):
    """The draw covariance matrix is singular."""


#: Errors the CLI reports as bad input data (exit code 3).
DATA_ERRORS = (ParseError, InvalidWeight, ShapeError, EmptyInput,
               SingletonStratum, CertaintyUnit)

#: Errors the CLI reports as numerical failures (exit code 4).
NUMERICAL_ERRORS = (InitFailure, NonPDMatrix, NonPDHessian,
                    ReplicateFailure, SingularCovariance, InsufficientChains)
