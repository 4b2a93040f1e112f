"""Stabilizer codes, syndrome decoders, neural decoders and DQN code search on numpy."""

from __future__ import annotations

from .codes import StabilizerCode, five_qubit_code, hypergraph_product, hypergraph_product_code, syndrome, syndromes
from .decoders import SmallSetFlip, build_lookup_table, build_map_table, exact_failure_rate, small_set_flip
from .dqn import RewardBudget, RLConfig, learn_code
from .gf2 import BinaryMatrix, hamming_parity_check, mat_mul, rank
from .harness import ExperimentConfig, run_sweep
from .nn import MlpModel, TrainConfig
from .nn_decoder import NeuralDecoder, evaluate_decoder, train_decoder
from .pauli import ChannelParams, PauliString

__version__ = "0.1.0"

__all__ = [
    "BinaryMatrix",
    "ChannelParams",
    "ExperimentConfig",
    "MlpModel",
    "NeuralDecoder",
    "PauliString",
    "RLConfig",
    "RewardBudget",
    "SmallSetFlip",
    "StabilizerCode",
    "TrainConfig",
    "build_lookup_table",
    "build_map_table",
    "evaluate_decoder",
    "exact_failure_rate",
    "five_qubit_code",
    "hamming_parity_check",
    "hypergraph_product",
    "hypergraph_product_code",
    "learn_code",
    "mat_mul",
    "rank",
    "run_sweep",
    "small_set_flip",
    "syndrome",
    "syndromes",
    "train_decoder",
]
