"""Random two-qubit Clifford circuits: Pauli weight dynamics, scrambling depth and decoupling."""
from importlib import metadata

from .circuits import Gate, InteractionGraph, LayeredCircuit, parallelize, read_circuit, write_circuit
from .kernels import BACKEND
from .moment_gap import GapReport, build_chain, spectral_gap
from .pauli import PauliPair, PauliString, weight
from .rng import RandomSource
from .stabilizer import DecouplingSetup, StabilizerTableau
from .subset_chain import SupportState

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DecouplingSetup",
    "GapReport",
    "Gate",
    "InteractionGraph",
    "LayeredCircuit",
    "PauliPair",
    "PauliString",
    "RandomSource",
    "StabilizerTableau",
    "SupportState",
    "build_chain",
    "parallelize",
    "read_circuit",
    "spectral_gap",
    "weight",
    "write_circuit",
]
