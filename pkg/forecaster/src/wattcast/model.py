"""Transformer encoder for one-hour-ahead prediction.

Input: 24 x 3 feature windows (scaled value, day-of-year, hour-of-day).
The window passes through a dense embedding plus sinusoidal positional
encoding, a stack of pre-norm encoder blocks (multi-head self-attention and
a pointwise feed-forward net, both residual), and a head reading the last
timestep.  One model per series.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

import numpy as np


def _tensorflow():
    # Imported lazily: TF startup is slow and only needed for train/serve.
    os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")
    import tensorflow as tf

    return tf


@dataclass(frozen=True)
class TrainingConfig:
    window: int = 24
    batch_size: int = 64
    epochs: int = 100
    train_fraction: float = 0.8      # chronological train/test split
    validation_fraction: float = 0.2  # tail of the training split
    d_model: int = 32
    num_heads: int = 2
    num_blocks: int = 2
    ff_dim: int = 64
    dropout: float = 0.1
    learning_rate: float = 1e-3
    seed: int = 0


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"non-finite training loss at epoch {epoch}")
        self.epoch = epoch


def set_determinism(seed: int) -> None:
    tf = _tensorflow()
    random.seed(seed)
    np.random.seed(seed)
    tf.random.set_seed(seed)
    try:
        tf.config.threading.set_inter_op_parallelism_threads(1)
        tf.config.threading.set_intra_op_parallelism_threads(1)
    except RuntimeError:
        pass  # already initialized


def positional_encoding(length: int, depth: int) -> np.ndarray:
    positions = np.arange(length)[:, None].astype(np.float64)
    dims = np.arange(depth)[None, :].astype(np.float64)
    angle_rates = 1.0 / np.power(10000.0, (2 * (dims // 2)) / depth)
    angles = positions * angle_rates
    encoding = np.where(dims % 2 == 0, np.sin(angles), np.cos(angles))
    return encoding.astype(np.float32)


def build_model(config: TrainingConfig, n_features: int = 3):
    tf = _tensorflow()
    layers = tf.keras.layers

    inputs = tf.keras.Input(shape=(config.window, n_features))
    x = layers.Dense(config.d_model)(inputs)
    x = x + tf.constant(positional_encoding(config.window, config.d_model))
    for _ in range(config.num_blocks):
        norm = layers.LayerNormalization()(x)
        attention = layers.MultiHeadAttention(
            num_heads=config.num_heads,
            key_dim=config.d_model // config.num_heads,
            dropout=config.dropout,
        )(norm, norm)
        x = x + attention
        norm = layers.LayerNormalization()(x)
        ff = layers.Dense(config.ff_dim, activation="relu")(norm)
        ff = layers.Dropout(config.dropout)(ff)
        ff = layers.Dense(config.d_model)(ff)
        x = x + ff
    x = layers.LayerNormalization()(x)
    x = x[:, -1, :]  # last timestep summarizes the window
    x = layers.Dense(16, activation="relu")(x)
    outputs = layers.Dense(1)(x)

    model = tf.keras.Model(inputs, outputs)
    model.compile(
        optimizer=tf.keras.optimizers.Adam(learning_rate=config.learning_rate),
        loss="mse",
        metrics=["mae"],
    )
    return model


class _AbortOnNonFinite:
    """Keras callback raising TrainingDiverged with the offending epoch."""

    def __new__(cls):
        tf = _tensorflow()

        class Impl(tf.keras.callbacks.Callback):
            def on_epoch_end(self, epoch, logs=None):
                loss = (logs or {}).get("loss")
                if loss is None or not np.isfinite(loss):
                    raise TrainingDiverged(epoch)

        return Impl()


def train_model(x: np.ndarray, y: np.ndarray, config: TrainingConfig, verbose: int = 0):
    """Fit on chronologically ordered samples; the validation slice is the
    tail of the training data."""
    set_determinism(config.seed)
    model = build_model(config, n_features=x.shape[2])
    n_val = int(len(x) * config.validation_fraction)
    fit_x, fit_y = x[: len(x) - n_val], y[: len(x) - n_val]
    val = (x[len(x) - n_val :], y[len(x) - n_val :]) if n_val else None
    model.fit(
        fit_x,
        fit_y,
        batch_size=config.batch_size,
        epochs=config.epochs,
        validation_data=val,
        shuffle=True,
        verbose=verbose,
        callbacks=[_AbortOnNonFinite()],
    )
    return model


def one_step_mae(model, x: np.ndarray, y_true_raw: np.ndarray, stats) -> float:
    """Held-out one-step MAE in physical units."""
    pred_scaled = model.predict(x, verbose=0).reshape(-1)
    pred = stats.denormalize(pred_scaled)
    return float(np.mean(np.abs(pred - y_true_raw)))
