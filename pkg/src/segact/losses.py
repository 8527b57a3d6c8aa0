"""Loss functions on clamped probability predictions.

All three losses take a probability array (already clamped into
``[1e-7, 1 - 1e-7]`` by the caller, see ``clamp_probability``) and a
binary target array.  Cross-entropy and squared error are averaged over
pixels so the gradient scale does not depend on image size; soft dice is
a single overlap term over the whole array it is given.
"""
from __future__ import annotations

import numpy as np

from .activations import (CLAMP_HI, CLAMP_LO, clamp_probability,
                          make_activation)
from .validation import check_prediction_target


class Loss:
    """Value and gradient of a loss over probability predictions."""

    name = "base"
    label = "base"

    def value(self, yhat, y) -> float:
        raise NotImplementedError

    def grad(self, yhat, y) -> np.ndarray:
        """Gradient of ``value`` with respect to each prediction."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class BinaryCrossEntropy(Loss):
    """Mean of -[y log(p) + (1 - y) log(1 - p)]."""

    name = "bce"
    label = "BCE"

    def value(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        return float(-np.mean(y * np.log(yhat) + (1.0 - y) * np.log1p(-yhat)))

    def grad(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        return (-y / yhat + (1.0 - y) / (1.0 - yhat)) / yhat.size


class MeanSquaredError(Loss):
    """Mean of (p - y)^2."""

    name = "mse"
    label = "MSE"

    def value(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        d = yhat - y
        return float(np.mean(d * d))

    def grad(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        return 2.0 * (yhat - y) / yhat.size


class SoftDice(Loss):
    """1 - 2 sum(p y) / (sum(p) + sum(y) + denom_epsilon).

    The epsilon keeps the denominator positive when both prediction and
    target are all zero.  Unlike the pixelwise losses, every prediction
    couples to every other through the sums.
    """

    name = "dice"
    label = "Dice"

    def __init__(self, denom_epsilon: float = 1e-7):
        if denom_epsilon <= 0.0:
            raise ValueError("denom_epsilon must be positive")
        self.denom_epsilon = float(denom_epsilon)

    def value(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        inter = float(np.sum(yhat * y))
        denom = float(np.sum(yhat) + np.sum(y)) + self.denom_epsilon
        return 1.0 - 2.0 * inter / denom

    def grad(self, yhat, y):
        yhat, y = check_prediction_target(yhat, y)
        inter = float(np.sum(yhat * y))
        denom = float(np.sum(yhat) + np.sum(y)) + self.denom_epsilon
        return (2.0 * inter - 2.0 * y * denom) / (denom * denom)

    def __repr__(self):
        return f"SoftDice(denom_epsilon={self.denom_epsilon!r})"


def loss_gradient_wrt_logits(loss, activation, logits, y, bounds=None):
    """Chain rule through activation and clamp: d loss / d logit.

    Where the forward clamp was active the gradient is zero, matching a
    stop-gradient treatment of the clamp.
    """
    loss = make_loss(loss)
    activation = make_activation(activation)
    logits = np.asarray(logits, dtype=float)
    p_raw = np.asarray(activation(logits, bounds=bounds), dtype=float)
    p = clamp_probability(p_raw)
    g = loss.grad(p, y) * activation.derivative(logits, bounds=bounds)
    return g * ((p_raw >= CLAMP_LO) & (p_raw <= CLAMP_HI))


#: Catalogue order used by tables and reports.
LOSS_ORDER = ("bce", "dice", "mse")

_REGISTRY = {
    "bce": BinaryCrossEntropy,
    "mse": MeanSquaredError,
    "dice": SoftDice,
}

_ALIASES = {
    "binary_cross_entropy": "bce",
    "cross_entropy": "bce",
    "mean_squared_error": "mse",
    "soft_dice": "dice",
    "softdice": "dice",
}


def make_loss(name, **kwargs) -> Loss:
    """Build a loss from its registry name."""
    if isinstance(name, Loss):
        return name
    key = _ALIASES.get(str(name).lower(), str(name).lower())
    if key not in _REGISTRY:
        known = ", ".join(LOSS_ORDER)
        raise ValueError(f"unknown loss {name!r}; expected one of {known}")
    return _REGISTRY[key](**kwargs)
