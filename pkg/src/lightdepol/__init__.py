"""Depolarization of quantized light fields under Lindblad dynamics."""

from .density import DensityMatrix, InvalidStateError
from .fock import FockBasis, OperatorMatrix, annihilation_op, creation_op, enumerate_basis, number_op
from .lindblad import ModelKind, ModelSpec, build_generator, build_liouvillian, lindblad_apply, rhs
from .observables import degree_of_polarization, expectation, polarization_vector, purity
from .polarization import block_decompose, build_polarization_ops, unpolarized_state, UnpolarizedWeights
from .propagate import InvariantDriftError, TimeGrid, Trajectory, evolve_exact, evolve_rk4

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "FockBasis",
    "InvalidStateError",
    "InvariantDriftError",
    "ModelKind",
    "ModelSpec",
    "OperatorMatrix",
    "TimeGrid",
    "Trajectory",
    "UnpolarizedWeights",
    "annihilation_op",
    "block_decompose",
    "build_generator",
    "build_liouvillian",
    "build_polarization_ops",
    "creation_op",
    "degree_of_polarization",
    "enumerate_basis",
    "evolve_exact",
    "evolve_rk4",
    "expectation",
    "lindblad_apply",
    "number_op",
    "polarization_vector",
    "purity",
    "rhs",
    "unpolarized_state",
]
