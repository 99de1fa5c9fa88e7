"""Joint word and paragraph embeddings trained on the unit hypersphere."""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    EncodedCorpus,
    NegativeSampler,
    TrainingTuple,
    Vocabulary,
    build_vocabulary,
    encode_corpus,
    tuple_stream,
)
from .model import EmbeddingMatrices, TrainConfig, TrainStats, train  # noqa: E402

__all__ = [
    "EncodedCorpus",
    "EmbeddingMatrices",
    "NegativeSampler",
    "TrainConfig",
    "TrainStats",
    "TrainingTuple",
    "Vocabulary",
    "build_vocabulary",
    "encode_corpus",
    "train",
    "tuple_stream",
]
