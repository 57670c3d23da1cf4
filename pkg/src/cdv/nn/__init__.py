"""Minimal differentiable numeric layer: layers, losses, Adam, gradcheck."""

from .backend import backend_name
from .functional import (
    LstmCellParams,
    blstm_sequence,
    cosine,
    dense_forward,
    init_lstm_params,
    lstm_step,
)
from .layers import Blstm, Dense, L2Normalize, LstmSeq, dropout_mask
from .losses import (
    bpmll_loss,
    bpmll_loss_grad,
    plain_cdv_loss,
    plain_cdv_loss_grad,
    robust_cdv_loss,
    robust_cdv_loss_grad,
)
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "Blstm",
    "Dense",
    "L2Normalize",
    "LstmCellParams",
    "LstmSeq",
    "adam_step",
    "backend_name",
    "blstm_sequence",
    "bpmll_loss",
    "bpmll_loss_grad",
    "cosine",
    "dense_forward",
    "dropout_mask",
    "init_lstm_params",
    "lstm_step",
    "plain_cdv_loss",
    "plain_cdv_loss_grad",
    "robust_cdv_loss",
    "robust_cdv_loss_grad",
]
