"""Visually aligned word embeddings.

Thin package wrapper around the compiled ``_vawe`` extension: synthetic data
generation, neighborhood consistency, triplet mining, the mapping network,
and the ESZSL/ConSE zero-shot evaluators.
"""

from ._vawe import (
    Model,
    SynthConfig,
    TrainConfig,
    VaweError,
    consistency,
    detect_hubs,
    generate_synthetic,
    load_embeddings,
    mine_triplets,
    save_embeddings,
    top_k_neighbors,
    train,
    visual_signatures,
    zsl_evaluate,
)

__all__ = [
    "Model",
    "SynthConfig",
    "TrainConfig",
    "VaweError",
    "consistency",
    "detect_hubs",
    "generate_synthetic",
    "load_embeddings",
    "mine_triplets",
    "save_embeddings",
    "top_k_neighbors",
    "train",
    "visual_signatures",
    "zsl_evaluate",
]
