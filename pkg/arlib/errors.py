__all__ = [
    "ArlibError",
    "ExprError",
    "ParseError",
    "UnknownSymbol",
    "DivisionByZero",
    "DomainError",
    "ConfigError",
    "StructureError",
    "H1Violation",
    "OriginNotSingular",
    "MeasureNotPositive",
    "StronglyRegularMismatch",
    "StepUndetected",
    "CharacteristicPoint",
    "LeftChart",
    "StiffnessFailure",
    "FitConditioning",
    "SingularB0",
    "WrongRegularityClass",
    "SamplingFailure",
    "InsufficientTail",
    "NoDivergence",
    "ReportError",
]


class ArlibError(Exception):
    pass


# expressions

class ExprError(ArlibError):
    pass


class ParseError(ExprError):
    def __init__(self, message, source="", position=0):
        super().__init__(f"{message} at position {position}: {source!r}")
        self.source = source
        self.position = position


class UnknownSymbol(ExprError):
    def __init__(self, name, position=None):
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown symbol {name!r}{where}")
        self.name = name
        self.position = position


class DivisionByZero(ExprError):
    def __init__(self, expr):
        super().__init__(f"division by zero in {expr}")
        self.expr = expr


class DomainError(ExprError):
    def __init__(self, expr, value=None):
        super().__init__(f"argument {value!r} outside the domain of {expr}")
        self.expr = expr
        self.value = value


# structures

class ConfigError(ArlibError):
    pass


class StructureError(ArlibError):
    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class H1Violation(StructureError):
    pass


class OriginNotSingular(StructureError):
    pass


class MeasureNotPositive(StructureError):
    pass


class StronglyRegularMismatch(StructureError):
    pass


class StepUndetected(ArlibError):
    pass


# geodesics

class CharacteristicPoint(ArlibError):
    def __init__(self, q, beta):
        super().__init__(f"beta({list(q)}) = {beta!r}: the initial covector degenerates")
        self.q = q
        self.beta = beta


class LeftChart(ArlibError):
    pass


class StiffnessFailure(ArlibError):
    pass


# densities

class FitConditioning(ArlibError):
    pass


class SingularB0(ArlibError):
    pass


class WrongRegularityClass(ArlibError):
    pass


# verdicts

class SamplingFailure(ArlibError):
    pass


class InsufficientTail(ArlibError):
    pass


class NoDivergence(ArlibError):
    def __init__(self, verdict):
        super().__init__("the sampled curve does not certify divergence: inconclusive")
        self.verdict = verdict


class ReportError(ArlibError):
    pass
