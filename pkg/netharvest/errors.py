from typing import Optional


class NetharvestError(Exception):
    """Base class for every error raised by the engine."""


class ValidationError(NetharvestError, ValueError):
    """Input does not describe a valid network, model or scenario."""


class NegativeWeight(ValidationError):
    def __init__(self, source: int, target: int, weight: float):
        self.source = source
        self.target = target
        self.weight = weight
        super().__init__(f"Negative weight {weight} on edge {source}->{target}")


class NonzeroDiagonal(ValidationError):
    def __init__(self, node: int, weight: float):
        self.node = node
        self.weight = weight
        super().__init__(f"Nonzero diagonal weight {weight} at node {node}")


class NotStronglyConnected(ValidationError):
    def __init__(self, source: int, target: int):
        self.source = source
        self.target = target
        self.node = source
        super().__init__(f"Network is not strongly connected: no path {source}->{target}")


class NotSymmetric(ValidationError):
    def __init__(self, source: int, target: int):
        self.source = source
        self.target = target
        super().__init__(f"Fick weights are not symmetric: w[{source},{target}] != w[{target},{source}]")


class DimensionMismatch(ValidationError):
    pass


class NonpositiveMass(ValidationError):
    pass


class NonpositiveConsumption(ValidationError):
    pass


class ZeroTotalMass(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class NotGloballyAdmissible(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class PolicyError(NetharvestError):
    pass


class NoninteriorPolicy(PolicyError):
    pass


class SideConditionViolated(PolicyError):
    pass


class SpectralError(NetharvestError):
    pass


class DominantEigenvalueNotZero(SpectralError):
    pass


class DominantVectorNotPositive(SpectralError):
    pass


class NullSpaceDimensionNot1(SpectralError):
    pass


class MatchingFailed(SpectralError):
    pass


class IntegrationError(NetharvestError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class HorizonNonpositive(IntegrationError):
    pass


class NonconvergentTail(NetharvestError):
    pass


class InadmissibleDeviation(NetharvestError):
    pass


class VerificationFailed(NetharvestError):
    def __init__(self, failed: list[str]):
        self.failed = failed
        super().__init__(f"{len(failed)} verification checks failed: {failed}")


class NegativeStockWarning(UserWarning):
    """Long-run stock has no positive solution; the resource is driven to extinction."""
