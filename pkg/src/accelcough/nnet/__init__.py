"""From-scratch neural network kernel: layers with manual backprop, the three
classifiers, and JSON checkpointing."""

from .checkpoint import CHECKPOINT_FORMAT, load_model, save_model
from .layers import (
    LSTM,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    Layer,
    MaxPool2D,
    Network,
    ReLU,
    ResidualBlock,
    cross_entropy,
    glorot_uniform,
    he_uniform,
    log_softmax,
    softmax,
)
from .models import (
    CLASSIFIER_KINDS,
    TAIL_DENSE_LAYERS,
    CnnClassifier,
    LstmClassifier,
    MiniResnetClassifier,
    make_classifier,
)

__all__ = [
    "CHECKPOINT_FORMAT",
    "CLASSIFIER_KINDS",
    "TAIL_DENSE_LAYERS",
    "Conv2D",
    "CnnClassifier",
    "Dense",
    "Dropout",
    "Flatten",
    "GlobalAvgPool",
    "LSTM",
    "Layer",
    "LstmClassifier",
    "MaxPool2D",
    "MiniResnetClassifier",
    "Network",
    "ReLU",
    "ResidualBlock",
    "cross_entropy",
    "glorot_uniform",
    "he_uniform",
    "load_model",
    "log_softmax",
    "make_classifier",
    "save_model",
    "softmax",
]
