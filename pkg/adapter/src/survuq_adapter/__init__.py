"""Survival-model adapter: trains forest and neural multi-task models on
survuq interchange files and exports survival curves on the shared grid."""

__version__ = "0.1.0"

from .forest import ForestSurvival
from .neural import NeuralSurvival

__all__ = ["ForestSurvival", "NeuralSurvival"]
