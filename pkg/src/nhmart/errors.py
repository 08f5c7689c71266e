"""Exception types shared across the package."""


class NhmartError(ValueError):
    pass


class LatticeError(NhmartError):
    """Structural problem in a lattice description."""


class MeasureMismatch(LatticeError):
    pass


class CycleDetected(LatticeError):
    pass


class NonPositiveMeasure(LatticeError):
    pass


class GenerationOrder(LatticeError):
    pass


class SingleChild(LatticeError):
    pass


class UnknownParent(LatticeError):
    pass


class DuplicateId(LatticeError):
    pass


class UnknownNode(NhmartError, KeyError):
    pass


class LeafNode(NhmartError):
    pass


class LatticeMismatch(NhmartError):
    pass


class ZeroMeanViolated(NhmartError):
    pass


class NegativeInput(NhmartError):
    pass


class ExponentError(NhmartError):
    pass


class SupportViolation(NhmartError):
    pass


class NoParent(NhmartError):
    pass


class NoBlock(NhmartError):
    pass


class ParameterError(NhmartError):
    pass


LATTICE_RULES = {
    cls.__name__: cls
    for cls in (MeasureMismatch, CycleDetected, NonPositiveMeasure, GenerationOrder,
                SingleChild, UnknownParent, DuplicateId)
}
