class PatchKppError(Exception):
    """Base class for every error raised by patchkpp."""


class ConfigurationError(PatchKppError, ValueError):
    pass


class NumericalFailure(PatchKppError, RuntimeError):
    pass


class NotPersistent(PatchKppError):
    """Raised when an operation needs an unstable zero state (lambda1 < 0)."""


# Configuration / precondition errors


class NonPositiveParameter(ConfigurationError):
    pass


class AlphaOutOfRange(ConfigurationError):
    pass


class InconsistentInterfaceValues(ConfigurationError):
    pass


class NegativeInitialData(ConfigurationError):
    pass


class ResolutionTooCoarse(ConfigurationError):
    pass


class WindowTooSmall(ConfigurationError):
    pass


class NotSourceSink(ConfigurationError):
    pass


class DegenerateRates(ConfigurationError):
    pass


class UnstableStepSize(ConfigurationError):
    pass


# Numerical failures


class NoRootInBracket(NumericalFailure):
    pass


class IterationDiverged(NumericalFailure):
    pass


class NonPositiveEigenvector(NumericalFailure):
    pass


class BranchSelectionFailed(NumericalFailure):
    pass


class MethodsDisagree(NumericalFailure):
    pass


class NewtonDiverged(NumericalFailure):
    pass


class LinearSolveFailed(NumericalFailure):
    pass


class BoundViolated(NumericalFailure):
    pass


class ConvergenceStalled(NumericalFailure):
    pass


class EigenInconsistent(NumericalFailure):
    pass


class NonUniqueLimit(NumericalFailure):
    pass


class BracketNotFound(NumericalFailure):
    pass


class AsymmetricSpeeds(NumericalFailure):
    pass


class FrontHitBoundary(NumericalFailure):
    pass


class NoCrossingFound(NumericalFailure):
    pass
