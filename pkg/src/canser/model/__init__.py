"""Encoders, cross attention and the training objective."""

from .attention import ContextBundle, GlobalQueries, aggregate, attend, attention_table, cross_aggregate
from .can import Batch, CrossAttentionNetwork, collate
from .encoders import AudioEncoder, EncoderOutputs, TextEncoder, embed_text, encode_audio, encode_text
from .lstm import BLSTM, LSTMParams, lstm
from .objective import (
    LossReport,
    MetricReport,
    PredictionHeads,
    Predictions,
    compute_loss,
    final_prediction,
    metrics,
    predict,
)

__all__ = [
    "AudioEncoder",
    "BLSTM",
    "Batch",
    "ContextBundle",
    "CrossAttentionNetwork",
    "EncoderOutputs",
    "GlobalQueries",
    "LSTMParams",
    "LossReport",
    "MetricReport",
    "PredictionHeads",
    "Predictions",
    "TextEncoder",
    "aggregate",
    "attend",
    "attention_table",
    "collate",
    "compute_loss",
    "cross_aggregate",
    "embed_text",
    "encode_audio",
    "encode_text",
    "final_prediction",
    "lstm",
    "metrics",
    "predict",
]
