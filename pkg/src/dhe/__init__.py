"""Deep hash embeddings: universal hashing, categorical-feature encoders,
a from-scratch dense network engine, memory-efficient embedding schemes,
recommendation backbones, encoding-property analysis, and a training and
benchmark harness."""

from .encoders import (DenseHashEncoderConfig, DomainError, Encoding,
                       dense_hash_encode, dense_hash_encode_batch,
                       encode_binary, encode_identity, encode_multi_onehot,
                       encode_onehot, encode_onehot_hash, enhance_with_side,
                       transform_gaussian, transform_uniform)
from .hashing import (ConfigError, HashFamily, UniversalHashParams,
                      hash_int, hash_int_batch, hash_string, make_hash_family)
from .neuralnet import Mlp, MlpConfig, ParamStore
from .schemes import (DHE, SCHEME_KINDS, BloomEmbedding,
                      CompositionalEmbedding, EmbeddingScheme, FullEmbedding,
                      HashEmbedding, HashingTrick, HybridHashing,
                      build_scheme, expected_param_count, scheme_from_meta,
                      size_for_budget)
from .training import (RunResult, TrainConfig, TrainingDiverged, benchmark,
                       evaluate_sampled_auc, load_model, save_model, train)

__version__ = "0.1.0"

__all__ = [
    "BloomEmbedding", "CompositionalEmbedding", "ConfigError", "DHE",
    "DenseHashEncoderConfig", "DomainError", "EmbeddingScheme", "Encoding",
    "FullEmbedding", "HashEmbedding", "HashFamily", "HashingTrick",
    "HybridHashing", "Mlp", "MlpConfig", "ParamStore", "RunResult",
    "SCHEME_KINDS", "TrainConfig", "TrainingDiverged",
    "UniversalHashParams", "benchmark", "build_scheme", "dense_hash_encode",
    "dense_hash_encode_batch", "encode_binary", "encode_identity",
    "encode_multi_onehot", "encode_onehot", "encode_onehot_hash",
    "enhance_with_side", "evaluate_sampled_auc", "expected_param_count",
    "hash_int", "hash_int_batch", "hash_string", "load_model",
    "make_hash_family", "save_model", "scheme_from_meta", "size_for_budget",
    "train", "transform_gaussian", "transform_uniform",
]
