"""Fourier-based learning from random walks and noise-sensitivity examples."""

from walklearn.domain import (
    DNF, TOP, UBOX, Alphabet, FreqIndex, Parity, Rectangle, TargetFunction, TruthTable, random_instance)
from walklearn.errors import ContractViolation, LearningFailure, ParameterError, ResourceError, WalkLearnError
from walklearn.fourier import Spectrum, inverse_transform, noise_operator, transform
from walklearn.oracles import OracleSession, SQOracle

__version__ = "0.1.0"

__all__ = [
    "DNF", "TOP", "UBOX", "Alphabet", "FreqIndex", "Parity", "Rectangle", "TargetFunction", "TruthTable",
    "random_instance", "ContractViolation", "LearningFailure", "ParameterError", "ResourceError",
    "WalkLearnError", "Spectrum", "inverse_transform", "noise_operator", "transform", "OracleSession", "SQOracle",
]
