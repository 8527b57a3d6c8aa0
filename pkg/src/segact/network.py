"""Dense feed-forward pixel classifier trained with Adam.

Parameters are a list of ``(weights, bias)`` pairs with ReLU between
layers and a single linear output unit producing one logit per pixel.
Gradients are hand-written reverse mode through the composition
loss(clamp(activation(forward(x)))).  The training loop follows a
plateau learning-rate schedule and early stopping, both driven by the
validation dice coefficient at threshold 0.5.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .activations import CLAMP_HI, CLAMP_LO, Activation, Linear
from .losses import Loss, SoftDice
from .metrics import dice_at_threshold
from .validation import check_prediction_target

Layers = list  # list of (weights, bias) pairs


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings for one training run."""

    learning_rate: float = 1e-3
    batch_size: int = 8
    plateau_patience: int = 5
    stop_patience: int = 10
    lr_factor: float = 0.1
    max_epochs: int = 200
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if not 0.0 < self.lr_factor < 1.0:
            raise ValueError("lr_factor must lie in (0, 1)")
        if self.plateau_patience >= self.stop_patience:
            raise ValueError("plateau_patience must be below stop_patience")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")


# Validation dice must beat the best seen so far by this much to count
# as an improvement.
IMPROVEMENT_DELTA = 1e-6


def init_layers(layer_sizes, seed) -> Layers:
    """Glorot-uniform weights and zero biases, deterministic per seed."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if sizes[-1] != 1:
        raise ValueError("the final layer must have exactly one output")
    if min(sizes) < 1:
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append((w, np.zeros(fan_out)))
    return layers


def forward(layers: Layers, features) -> np.ndarray:
    """Logit per row of ``features`` (shape n x d)."""
    a = np.asarray(features, dtype=float)
    if a.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if a.shape[1] != layers[0][0].shape[1]:
        raise ValueError(
            f"feature width {a.shape[1]} does not match first layer "
            f"input size {layers[0][0].shape[1]}")
    for w, b in layers[:-1]:
        a = np.maximum(a @ w.T + b, 0.0)
    w, b = layers[-1]
    return (a @ w.T + b)[:, 0]


def backward(layers: Layers, features, y, activation: Activation,
             loss: Loss, bounds=None):
    """Gradients of the composed loss for every parameter.

    Returns ``(grads, loss_value)`` where grads mirrors the layer list.
    The clamp is treated as a stop: pixels whose raw activation fell
    outside [1e-7, 1 - 1e-7] contribute zero gradient.  ReLU uses
    subgradient 0 at 0.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    pre = []
    acts = [x]
    a = x
    if x.shape[1] != layers[0][0].shape[1]:
        raise ValueError("feature width does not match the first layer")
    for w, b in layers[:-1]:
        z = a @ w.T + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    w, b = layers[-1]
    logits = (a @ w.T + b)[:, 0]

    p_raw = np.asarray(activation(logits, bounds=bounds), dtype=float)
    p = np.clip(p_raw, CLAMP_LO, CLAMP_HI)
    value = loss.value(p, y)
    passthru = (p_raw >= CLAMP_LO) & (p_raw <= CLAMP_HI)
    delta = loss.grad(p, y) * activation.derivative(logits, bounds=bounds)
    delta = (delta * passthru)[:, None]

    grads: Layers = [None] * len(layers)
    for k in reversed(range(len(layers))):
        grads[k] = (delta.T @ acts[k], delta.sum(axis=0))
        if k:
            delta = (delta @ layers[k][0]) * (pre[k - 1] > 0.0)
    return grads, float(value)


@dataclass
class AdamState:
    step: int
    m: Layers
    v: Layers


def adam_init(layers: Layers) -> AdamState:
    zeros = lambda: [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
    return AdamState(step=0, m=zeros(), v=zeros())


def adam_step(layers: Layers, grads: Layers, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8):
    """One bias-corrected Adam update; parameters are updated in place."""
    for idx, (gw, gb) in enumerate(grads):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise FloatingPointError(f"non-finite gradient in layer {idx}")
    state.step += 1
    c1 = 1.0 - beta1 ** state.step
    c2 = 1.0 - beta2 ** state.step
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(layers, grads,
                                                    state.m, state.v):
        for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return layers, state


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_dice: float
    lr: float
    stagnant: int
    lr_reduced: bool


@dataclass
class TrainHistory:
    """Per-epoch trace of one training run."""

    epochs: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_dice: float = float("-inf")
    converged: bool = True
    stopped: str = "max_epochs"

    @property
    def n_epochs(self) -> int:
        return len(self.epochs)


class _PerImageSoftDice(Loss):
    """Soft dice per image, averaged over the batch.

    Adapter so flat (batch * pixels) arrays can be trained with one dice
    term per image, keeping the loss scale independent of batch size.
    """

    name = "dice"

    def __init__(self, pixels_per_image: int, denom_epsilon: float):
        self.pixels_per_image = int(pixels_per_image)
        self.denom_epsilon = float(denom_epsilon)

    def _reshape(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        p = yhat.reshape(-1, self.pixels_per_image)
        t = y.reshape(-1, self.pixels_per_image)
        inter = (p * t).sum(axis=1)
        denom = p.sum(axis=1) + t.sum(axis=1) + self.denom_epsilon
        return p, t, inter, denom

    def value(self, yhat, y):
        _, _, inter, denom = self._reshape(yhat, y)
        return float(np.mean(1.0 - 2.0 * inter / denom))

    def grad(self, yhat, y):
        p, t, inter, denom = self._reshape(yhat, y)
        g = (2.0 * inter[:, None] - 2.0 * t * denom[:, None]) / \
            (denom * denom)[:, None]
        return g.ravel() / p.shape[0]


def _predict_probabilities(layers, images, activation):
    """Clamped probabilities per image with per-image rescale context."""
    n_images, n_pixels, d = images.shape
    logits = forward(layers, images.reshape(-1, d)).reshape(n_images, n_pixels)
    bounds = activation.evaluation_bounds(logits)
    p = activation(logits, bounds=bounds)
    return np.clip(p, CLAMP_LO, CLAMP_HI)


def pooled_validation_dice(probs, masks) -> float:
    """Dice at threshold 0.5 over all validation pixels pooled together."""
    return dice_at_threshold(np.ravel(probs), np.ravel(masks), 0.5)


def train_network(layers: Layers, train_images, train_masks, val_images,
                  val_masks, activation: Activation, loss: Loss,
                  cfg: TrainConfig, monitor=None):
    """Train with Adam, plateau LR reduction and early stopping.

    ``monitor`` maps (validation probabilities, validation masks) to the
    scalar that drives the schedule; the default is the pooled dice
    coefficient at threshold 0.5.  Returns ``(best_layers, history)``
    where ``best_layers`` are the parameters of the best-monitor epoch.

    A non-finite loss or gradient aborts the run: the history is flagged
    as not converged and the best parameters seen so far are returned.
    """
    train_images = np.asarray(train_images, dtype=float)
    train_masks = np.asarray(train_masks, dtype=float)
    val_images = np.asarray(val_images, dtype=float)
    val_masks = np.asarray(val_masks, dtype=float)
    if monitor is None:
        monitor = pooled_validation_dice

    n_train, n_pixels, d = train_images.shape
    if val_images.ndim != 3 or val_images.shape[1:] != (n_pixels, d):
        raise ValueError("validation images must match the training shape")
    train_loss = loss
    if isinstance(loss, SoftDice):
        train_loss = _PerImageSoftDice(n_pixels, loss.denom_epsilon)

    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()
    lr = cfg.learning_rate
    state = adam_init(layers)
    best_layers = copy.deepcopy(layers)
    plateau = 0
    stagnant = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n_train)
        batch_losses = []
        failed = False
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = train_images[idx].reshape(-1, d)
            yb = train_masks[idx].ravel()
            bounds = None
            if isinstance(activation, Linear):
                logits = forward(layers, xb)
                bounds = activation.training_bounds(
                    logits.reshape(len(idx), n_pixels))
                if isinstance(bounds[0], np.ndarray):
                    bounds = (np.repeat(bounds[0].ravel(), n_pixels),
                              np.repeat(bounds[1].ravel(), n_pixels))
            try:
                grads, batch_loss = backward(layers, xb, yb, activation,
                                             train_loss, bounds=bounds)
                if not np.isfinite(batch_loss):
                    raise FloatingPointError("non-finite loss")
                adam_step(layers, grads, state, lr,
                          cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            except FloatingPointError:
                failed = True
                break
            batch_losses.append(batch_loss)

        if failed:
            history.converged = False
            history.stopped = "diverged"
            break

        try:
            val_probs = _predict_probabilities(layers, val_images, activation)
            val_loss = train_loss.value(val_probs.ravel(), val_masks.ravel())
            val_metric = float(monitor(val_probs, val_masks))
            if not np.isfinite(val_metric):
                raise FloatingPointError("non-finite validation metric")
        except FloatingPointError:
            history.converged = False
            history.stopped = "diverged"
            break

        improved = val_metric > history.best_val_dice + IMPROVEMENT_DELTA
        reduced = False
        if improved:
            history.best_val_dice = val_metric
            history.best_epoch = epoch
            best_layers = copy.deepcopy(layers)
            plateau = 0
            stagnant = 0
        else:
            plateau += 1
            stagnant += 1

        stop = (not improved) and stagnant >= cfg.stop_patience
        if not stop and not improved and plateau >= cfg.plateau_patience:
            lr *= cfg.lr_factor
            plateau = 0
            reduced = True

        history.epochs.append(EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(batch_losses)),
            val_loss=float(val_loss),
            val_dice=val_metric,
            lr=lr if not reduced else lr / cfg.lr_factor,
            stagnant=stagnant,
            lr_reduced=reduced,
        ))

        if stop:
            history.stopped = "early_stop"
            break

    return best_layers, history
