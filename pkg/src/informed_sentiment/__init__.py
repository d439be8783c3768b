"""Multi-task sentiment/sarcasm/dialect classification where the sentiment
head is informed by the model's own sarcasm and dialect predictions."""

from .dataset import (
    DIALECT_CLASSES,
    SARCASM_CLASSES,
    SENTIMENT_CLASSES,
    Dataset,
    LabeledTweet,
    StatsReport,
    compute_stats,
    gen_synthetic,
    load_dataset,
    split_train_validation,
)
from .embeddings import (
    EmbeddingTable,
    TableProvider,
    ToyEncoderParams,
    ToyEncoderProvider,
    init_toy_encoder,
    load_embedding_table,
    save_embedding_table,
    toy_encode,
)
from .metrics import ConfusionMatrix, EvalReport, evaluate, f1, fpn, fsar, wfs
from .model import (
    ForwardOutput,
    ModelConfig,
    MultiTaskModel,
    build_baseline,
    build_model,
    forward,
    load_checkpoint,
    param_count,
    save_checkpoint,
)
from .training import EpochPlan, TrainConfig, adam_step, combined_loss, plan_schedule, train

__all__ = [
    "DIALECT_CLASSES",
    "SARCASM_CLASSES",
    "SENTIMENT_CLASSES",
    "ConfusionMatrix",
    "Dataset",
    "EmbeddingTable",
    "EpochPlan",
    "EvalReport",
    "ForwardOutput",
    "LabeledTweet",
    "ModelConfig",
    "MultiTaskModel",
    "StatsReport",
    "TableProvider",
    "ToyEncoderParams",
    "ToyEncoderProvider",
    "TrainConfig",
    "adam_step",
    "build_baseline",
    "build_model",
    "combined_loss",
    "compute_stats",
    "evaluate",
    "f1",
    "forward",
    "fpn",
    "fsar",
    "gen_synthetic",
    "init_toy_encoder",
    "load_checkpoint",
    "load_dataset",
    "load_embedding_table",
    "param_count",
    "plan_schedule",
    "save_checkpoint",
    "save_embedding_table",
    "split_train_validation",
    "toy_encode",
    "train",
]
