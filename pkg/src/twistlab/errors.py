"""Exception hierarchy shared by every twistlab module."""


class TwistlabError(Exception):
    """Base class for all errors raised by twistlab."""


class NonHermitian(TwistlabError, ValueError):
    pass


class SingularFunction(TwistlabError, ValueError):
    pass


class SingularOperator(TwistlabError, ValueError):
    pass


class OutOfRange(TwistlabError, ValueError):
    pass


class DegenerateFit(TwistlabError, ValueError):
    pass


class DimensionMismatch(TwistlabError, ValueError):
    pass


class NonHermitianPerturbation(TwistlabError, ValueError):
    pass


class ZeroOperator(TwistlabError, ValueError):
    pass


class ScalingDefectTooLarge(TwistlabError, ValueError):
    pass


class NonCommutativeAlgebra(TwistlabError, ValueError):
    pass


class ContextMismatch(TwistlabError, ValueError):
    pass


class NotACocycle(TwistlabError, ValueError):
    pass


class IncompatibleDerivation(TwistlabError, ValueError):
    pass


class ChangeOfVariableFails(TwistlabError, ValueError):
    pass


class NotCovariant(TwistlabError, ValueError):
    pass


class NotADiffeo(TwistlabError, ValueError):
    pass


class FloorExhausted(TwistlabError, ValueError):
    pass


class DegreeZero(TwistlabError, ValueError):
    pass


class DegreeMismatch(TwistlabError, ValueError):
    pass


class OddDegree(TwistlabError, ValueError):
    pass


class NotIdempotent(TwistlabError, ValueError):
    pass


class SingularBlock(TwistlabError, ValueError):
    pass


class Inconclusive(TwistlabError, RuntimeError):
    pass


class ConditionFailed(TwistlabError, RuntimeError):
    pass


class NonConvergentResidue(TwistlabError, RuntimeError):
    pass


class RuleMissing(TwistlabError, ValueError):
    pass


class QuadratureNotConverged(TwistlabError, RuntimeError):
    pass


class ConfigInvalid(TwistlabError, ValueError):
    pass


class ScenarioBuildFailed(TwistlabError, RuntimeError):
    pass
