"""Toy suspect-model trainer: learns a fingerprint table by gradient
descent and serves it over the suspect-model wire protocol."""

from .data import TrainPair, load_pairs
from .model import CondSeqModel, ModelConfig, generate, load_checkpoint, save_checkpoint
from .server import SuspectServer, serve
from .train import DivergenceError, TrainConfig, exact_reconstruction_rate, train

__all__ = [
    "CondSeqModel",
    "DivergenceError",
    "ModelConfig",
    "SuspectServer",
    "TrainConfig",
    "TrainPair",
    "exact_reconstruction_rate",
    "generate",
    "load_checkpoint",
    "load_pairs",
    "save_checkpoint",
    "serve",
    "train",
]

__version__ = "0.1.0"
