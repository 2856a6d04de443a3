"""Random feature models under spiked-covariance inputs and their Hermite surrogates."""
from . import activations, datagen, equivalence, hermite, ridge, seeding
from ._jit import BACKEND

__version__ = "0.1.0"

__all__ = ["activations", "datagen", "equivalence", "hermite", "ridge", "seeding", "BACKEND"]
