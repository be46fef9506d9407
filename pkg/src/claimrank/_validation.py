"""Input checks shared by the estimators."""

import math
from numbers import Real

import numpy as np

from .errors import DegenerateData


def check_probability(value, name="p"):
    if isinstance(value, bool) or not isinstance(value, Real) or not 0 <= value <= 1:
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
    return float(value)


def check_texts(X):
    """Accept a sequence of strings or Tweet-like objects; return a list of str."""
    if isinstance(X, str):
        raise TypeError("expected a sequence of texts, got a single string")
    out = []
    for x in X:
        text = x if isinstance(x, str) else getattr(x, "text", None)
        if not isinstance(text, str):
            raise TypeError(f"expected text, got {type(x).__name__}")
        out.append(text)
    return out


def check_binary_labels(y, n_samples):
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_samples:
        raise ValueError(f"y must be 1-D with {n_samples} entries, got shape {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    y = y.astype(np.float64)
    if n_samples == 0 or y.min() == y.max():
        raise DegenerateData("training data must contain both classes")
    return y


def check_finite(value, name):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value
