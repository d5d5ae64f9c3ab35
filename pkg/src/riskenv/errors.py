"""Exception hierarchy shared by every module of the package."""


class RiskEnvError(Exception):
    """Base class for all errors raised by riskenv."""


class InvalidInput(RiskEnvError, ValueError):
    pass


# probability spaces and positions
class EmptySpace(InvalidInput):
    pass


class NonPositiveProbability(InvalidInput):
    pass


class IrrationalProbability(InvalidInput):
    pass


class RefinementTooLarge(InvalidInput):
    pass


class SpaceMismatch(InvalidInput):
    pass


class NonUniformSpace(InvalidInput):
    pass


class LevelOutOfRange(InvalidInput):
    pass


# measures
class InvalidSpec(InvalidInput):
    pass


class SpecSpaceMismatch(InvalidInput):
    pass


class InvalidCapacity(InvalidInput):
    pass


class CapacityTooLarge(InvalidInput):
    pass


class InvalidWeight(InvalidInput):
    pass


class WeightKindUnsupported(InvalidWeight):
    pass


class MassNotOne(InvalidWeight):
    pass


class NotConcave(InvalidWeight):
    pass


class NotNormalized(InvalidWeight):
    pass


class NonPositiveTheta(InvalidInput):
    pass


# duality
class DimensionTooLarge(InvalidInput):
    pass


class Infeasible(RiskEnvError):
    pass


class InfeasibleScenarioSet(Infeasible):
    pass


class GeneratorNotAccepted(InvalidInput):
    pass


# axioms
class SpecNotPositivelyHomogeneous(InvalidInput):
    pass


class NoWitnessFound(RiskEnvError):
    pass
