"""The three cough/non-cough classifiers, trained by seeded mini-batch SGD.

All three consume the (segments, frame_len/2 + 5) feature matrix: the CNN
and the residual network treat it as a one-channel image, the LSTM as a
length-``segments`` sequence of feature vectors. Each emits two softmax
outputs (index 1 = cough).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..validation import NumericError, check_binary_labels, check_feature_stack
from .layers import (
    LSTM,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    MaxPool2D,
    Network,
    ReLU,
    ResidualBlock,
    cross_entropy,
    softmax,
)

TAIL_DENSE_LAYERS = 8
_PREDICT_BATCH = 512


def _train_network(net, X, y, epochs, batch_size, learning_rate, rng):
    n = len(X)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            logits = net.forward(X[idx], training=True)
            loss, dlogits = cross_entropy(logits, y[idx])
            if not np.isfinite(loss):
                raise NumericError("non-finite training loss")
            net.backward(dlogits)
            net.sgd_step(learning_rate)
            total += loss * len(idx)
        losses.append(total / n)
    return losses


class _NeuralClassifier(BaseEstimator, ClassifierMixin):
    """Shared fit/predict machinery; subclasses define the layer stack."""

    def _network_input_shape(self, rows, cols):
        raise NotImplementedError

    def _layers(self):
        raise NotImplementedError

    def _as_network_input(self, X):
        return X

    def _check_train_params(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        rate = getattr(self, "dropout_rate", 0.0)
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    def build_network(self, rows, cols, rng=None):
        """Construct the (untrained) network for a given feature-matrix shape."""
        if rng is None:
            rng = np.random.default_rng(self.random_state)
        return Network(self._layers(), self._network_input_shape(rows, cols), rng)

    def fit(self, X, y):
        X = check_feature_stack(X)
        y = check_binary_labels(y)
        if len(X) == 0:
            raise ValueError("cannot train on an empty training set")
        if len(X) != len(y):
            raise ValueError(f"got {len(X)} feature stacks but {len(y)} labels")
        self._check_train_params()

        rng = np.random.default_rng(self.random_state)
        self.input_rows_, self.input_cols_ = X.shape[1], X.shape[2]
        self.net_ = self.build_network(self.input_rows_, self.input_cols_, rng)
        self.classes_ = np.array([0, 1])
        self.loss_curve_ = _train_network(
            self.net_,
            self._as_network_input(X),
            y,
            self.epochs,
            self.batch_size,
            self.learning_rate,
            rng,
        )
        return self

    def predict_proba(self, X):
        """Class probabilities of shape (n_events, 2); column 1 is p(cough)."""
        if not hasattr(self, "net_"):
            raise ValueError("classifier is not fitted")
        X = check_feature_stack(X)
        if X.shape[1:] != (self.input_rows_, self.input_cols_):
            raise ValueError(
                f"expected feature matrices of shape "
                f"({self.input_rows_}, {self.input_cols_}), got {X.shape[1:]}"
            )
        net_in = self._as_network_input(X)
        chunks = [
            softmax(self.net_.forward(net_in[lo : lo + _PREDICT_BATCH], training=False))
            for lo in range(0, len(X), _PREDICT_BATCH)
        ]
        return np.concatenate(chunks) if chunks else np.empty((0, 2))

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)


class CnnClassifier(_NeuralClassifier):
    """Convolutional classifier: conv + max-pool + dropout, then a deep dense tail.

    Parameters
    ----------
    conv_filters : int
        Number of convolution filters (search grid: 24, 48, 96).
    kernel_size : int
        Square kernel size (search grid: 2 or 3); "same" padding.
    dropout_rate : float
        Dropout applied after pooling (search grid: 0.1, 0.3, 0.5).
    dense_size : int
        Width of the dense layers (search grid: 16 or 32); one dense layer plus
        eight same-width tail layers, all ReLU.
    learning_rate, batch_size, epochs, random_state :
        Plain mini-batch SGD settings; everything random is derived from
        ``random_state``.
    """

    def __init__(self, conv_filters=24, kernel_size=2, dropout_rate=0.1, dense_size=16,
                 learning_rate=1e-3, batch_size=64, epochs=30, random_state=0):
        self.conv_filters = conv_filters
        self.kernel_size = kernel_size
        self.dropout_rate = dropout_rate
        self.dense_size = dense_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.random_state = random_state

    def _network_input_shape(self, rows, cols):
        return (rows, cols, 1)

    def _as_network_input(self, X):
        return X[..., np.newaxis]

    def _layers(self):
        layers = [
            Conv2D(self.conv_filters, self.kernel_size),
            ReLU(),
            MaxPool2D(2),
            Dropout(self.dropout_rate),
            Flatten(),
            Dense(self.dense_size),
            ReLU(),
        ]
        for _ in range(TAIL_DENSE_LAYERS):
            layers += [Dense(self.dense_size), ReLU()]
        layers.append(Dense(2))
        return layers


class LstmClassifier(_NeuralClassifier):
    """Recurrent classifier: an LSTM over the segment sequence, then the dense tail.

    The feature matrix is consumed as ``segments`` time steps of
    ``frame_len/2 + 5``-dimensional vectors; the final hidden state feeds the
    dense stack. Cell activations are ReLU.
    """

    def __init__(self, lstm_units=64, dropout_rate=0.1, dense_size=16,
                 learning_rate=1e-3, batch_size=64, epochs=30, random_state=0):
        self.lstm_units = lstm_units
        self.dropout_rate = dropout_rate
        self.dense_size = dense_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.random_state = random_state

    def _network_input_shape(self, rows, cols):
        return (rows, cols)

    def _layers(self):
        layers = [
            LSTM(self.lstm_units),
            Dropout(self.dropout_rate),
            Dense(self.dense_size),
            ReLU(),
        ]
        for _ in range(TAIL_DENSE_LAYERS):
            layers += [Dense(self.dense_size), ReLU()]
        layers.append(Dense(2))
        return layers


class MiniResnetClassifier(_NeuralClassifier):
    """Reduced residual network: the deep-residual block pattern at desk scale.

    A stem convolution feeds ``stages`` stages of ``blocks_per_stage``
    residual blocks (no batch norm). Stage ``s`` uses ``base_channels * 2**s``
    channels and downsamples by 2 at its first block (for s > 0); a global
    average pool and a dense layer produce the two logits. ``block_kind``
    selects "bottleneck" (1x1/3x3/1x1, 4x expansion, the pattern of the
    50-layer original) or "basic" (two 3x3 convs).
    """

    def __init__(self, stages=2, blocks_per_stage=2, base_channels=8, block_kind="bottleneck",
                 learning_rate=1e-3, batch_size=64, epochs=30, random_state=0):
        self.stages = stages
        self.blocks_per_stage = blocks_per_stage
        self.base_channels = base_channels
        self.block_kind = block_kind
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.random_state = random_state

    def _network_input_shape(self, rows, cols):
        return (rows, cols, 1)

    def _as_network_input(self, X):
        return X[..., np.newaxis]

    def _layers(self):
        if self.stages < 1 or self.blocks_per_stage < 1 or self.base_channels < 1:
            raise ValueError("stages, blocks_per_stage, and base_channels must be >= 1")
        convs_per_block = 3 if self.block_kind == "bottleneck" else 2
        total_conv_layers = 1 + self.stages * self.blocks_per_stage * convs_per_block
        if total_conv_layers >= 50:
            raise ValueError(
                f"{total_conv_layers} conv layers: this reduced architecture must stay well "
                f"under 50 layers; shrink stages/blocks_per_stage"
            )
        layers = [Conv2D(self.base_channels, 3), ReLU()]
        for stage in range(self.stages):
            for block in range(self.blocks_per_stage):
                stride = 2 if stage > 0 and block == 0 else 1
                layers.append(
                    ResidualBlock(self.base_channels * 2**stage, stride=stride, kind=self.block_kind)
                )
        layers += [GlobalAvgPool(), Dense(2)]
        return layers


CLASSIFIER_KINDS = {
    "cnn": CnnClassifier,
    "lstm": LstmClassifier,
    "resnet": MiniResnetClassifier,
}


def make_classifier(kind, **params):
    """Instantiate a classifier by kind name ("cnn", "lstm", or "resnet")."""
    if kind not in CLASSIFIER_KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}, expected one of {sorted(CLASSIFIER_KINDS)}")
    return CLASSIFIER_KINDS[kind](**params)
