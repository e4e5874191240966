"""corrpace: curriculum-paced weakly supervised modality correlation learning.

A desk-scale training engine that builds cross-sample bimodal pairs with
label-derived correlation targets, trains a linear correlation predictor
jointly with a fused sentiment regressor, and feeds pairs by difficulty
through a three-action state machine with noisy-pair discarding.
"""

from .curriculum import (
    CurriculumConfig,
    FeedAction,
    FeederState,
    difficulty_scores,
    discard_noisy,
    feed,
    feed_action,
    partition,
    run_feeding_round,
)
from .correlation import (
    CorrelationPredictor,
    PredictorBank,
    bimodal_loss,
    overall_correlation_loss,
    pair_loss,
    predict_score,
)
from .encoders import UnimodalEncoder, build_encoders
from .errors import (
    BatchError,
    ConfigError,
    CorrpaceError,
    CurriculumError,
    InternalError,
    OracleError,
    TrainingError,
)
from .pairing import (
    BimodalPair,
    PairPolarity,
    PairSet,
    correlation_score,
    generate_negative_pairs,
    generate_positive_pairs,
    label_distance,
)
from .report import RunReport, emit_trajectories
from .synth import Dataset, SampleBatch, SynthConfig, generate_dataset, inject_noise
from .trainer import (
    Ablations,
    FusionHead,
    Model,
    TrainConfig,
    fuse_and_predict,
    pretrain_correlation_predictor,
    task_loss,
    total_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Ablations",
    "BatchError",
    "BimodalPair",
    "ConfigError",
    "CorrelationPredictor",
    "CorrpaceError",
    "CurriculumConfig",
    "CurriculumError",
    "Dataset",
    "FeedAction",
    "FeederState",
    "FusionHead",
    "InternalError",
    "Model",
    "OracleError",
    "PairPolarity",
    "PairSet",
    "PredictorBank",
    "RunReport",
    "SampleBatch",
    "SynthConfig",
    "TrainConfig",
    "TrainingError",
    "UnimodalEncoder",
    "bimodal_loss",
    "build_encoders",
    "correlation_score",
    "difficulty_scores",
    "discard_noisy",
    "emit_trajectories",
    "feed",
    "feed_action",
    "fuse_and_predict",
    "generate_dataset",
    "generate_negative_pairs",
    "generate_positive_pairs",
    "inject_noise",
    "label_distance",
    "overall_correlation_loss",
    "pair_loss",
    "partition",
    "predict_score",
    "pretrain_correlation_predictor",
    "run_feeding_round",
    "task_loss",
    "total_loss",
    "train",
]
