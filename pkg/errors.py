from typing import Any, List, Optional


class BuildingError(Exception):
    """Base class for all twinwall errors"""
    pass


class StructuralError(BuildingError):
    """Constructed data violates an invariant or axiom"""
    pass


class DomainError(BuildingError):
    """Operation called outside its precondition"""
    pass


class UnsupportedInstanceError(DomainError):
    """Valid instance the operation does not handle"""
    def __init__(self, operation: str, reason: str):
        self.operation = operation
        self.reason = reason
        super().__init__(f"{operation} is not supported here: {reason}")


class ConstructionError(StructuralError):
    """A twin building failed its axiom check while being built"""
    def __init__(self, axiom: str, witness: Any):
        self.axiom = axiom
        self.witness = witness
        super().__init__(f"Axiom {axiom} failed during construction, witness {witness}")


class CoefficientOverflowError(StructuralError):
    """Checked integer arithmetic left the int64 range"""
    def __init__(self, bound: int):
        self.bound = bound
        super().__init__(f"Integer coefficients would exceed {bound}; aborting instead of wrapping")


class ExtensionError(StructuralError):
    """Isometry propagation reached a dead end or a conflict"""
    def __init__(self, chamber: int, generator: Optional[int], detail: str):
        self.chamber = chamber
        self.generator = generator
        self.detail = detail
        super().__init__(f"Extension failed at chamber {chamber} (generator {generator}): {detail}")


class FixtureValidationError(BuildingError):
    """Malformed or invalid input file"""
    def __init__(self, source: str, messages: List[str], witness: Any = None):
        self.source = source
        self.messages = list(messages)
        self.witness = witness
        text = "; ".join(self.messages)
        if witness is not None:
            text = f"{text} (witness: {witness})"
        super().__init__(f"Invalid {source}: {text}")


class UsageError(BuildingError):
    """Unknown instance name or misconfigured bound"""
    pass
