"""Martingale calculus, sequence-space norms and operator estimates on finite measured lattices."""
from .errors import NhmartError
from .lattice import Lattice, LatticeSpec, NodeSpec, build_lattice, random_lattice, uniform_radic, validate
from .mfunc import MartDecomp, StepFunction, decompose, reconstruct
from .linop import LinearOp

__all__ = [
    "NhmartError", "Lattice", "LatticeSpec", "NodeSpec", "build_lattice", "random_lattice",
    "uniform_radic", "validate", "MartDecomp", "StepFunction", "decompose", "reconstruct", "LinearOp",
]
