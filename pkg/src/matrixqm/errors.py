"""Exception hierarchy shared by all matrixqm modules."""


class MatrixQMError(Exception):
    """Base class for all matrixqm errors."""


class UnsupportedGroup(MatrixQMError):
    """Requested gauge group SU(N) is outside the supported set."""


class DimensionMismatch(MatrixQMError):
    """Operator/state dimensions are inconsistent."""


class NonHermitianInput(MatrixQMError):
    """A Hermitian operator was required but the input is not Hermitian."""


class NoConvergence(MatrixQMError):
    """Iterative eigensolver failed to converge within max iterations."""


class NonNegligibleImaginaryPart(MatrixQMError):
    """Expectation of a Hermitian operator came out measurably complex."""


class MemoryGuard(MatrixQMError):
    """Requested Hilbert-space dimension exceeds the configured guard."""


class NonPowerOfTwoDimension(MatrixQMError):
    """Qubit encoding requires operator dimension to be a power of two."""


class ParameterCountMismatch(MatrixQMError):
    """Circuit parameter vector length does not match the ansatz spec."""


class ObjectiveNotFinite(MatrixQMError):
    """Optimization objective returned NaN or infinity."""


class InvariantViolation(MatrixQMError):
    """A lattice state violated its structural invariants."""


class IntegratorDiverged(MatrixQMError):
    """Leapfrog energy change exploded (|dH| > threshold)."""


class SeriesTooShort(MatrixQMError):
    """Time series too short for autocorrelation analysis."""


class NoMeasurements(MatrixQMError):
    """A chain schedule produced no measurements."""


class InsufficientData(MatrixQMError):
    """Not enough data points for the requested fit."""


class SingularDesign(MatrixQMError):
    """Weighted least-squares design matrix is singular."""


class NonFiniteOutput(MatrixQMError):
    """A wave-function evaluation produced a non-finite number."""


class DegenerateDenominator(MatrixQMError):
    """Reweighted estimator denominator is statistically consistent with 0."""


class Diverged(MatrixQMError):
    """Variational training diverged."""


class ConfigError(MatrixQMError):
    """Invalid run configuration (unknown keys, bad version, bad values)."""
