"""Hashed bag-of-n-grams logistic model trained with mini-batch Adam.

Features are word 1-2-grams (prefixed ``w:``) and character 3-5-grams
within word boundaries (prefixed ``c:``), lowercased, hashed with
MurmurHash3 (x86, 32-bit, seed 0) into ``2**18`` columns: the column is
``abs(h) % n_features`` and the value is the count signed by ``h``'s sign.

Outputs are two logits ``(0, w.x + b)`` so the ranking code treats the
built-in model and external neural models identically.
"""

import json
import math
import re
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.feature_extraction.text import HashingVectorizer
from sklearn.utils.validation import check_is_fitted

from ._validation import check_binary_labels, check_texts
from .errors import DuplicateId, IdMismatch, MissingId, ModelFileError, ScoreFileError

N_FEATURES = 2 ** 18
MODEL_FORMAT = "claimrank-hashed-linear"
MODEL_VERSION = 1

PROFILES = {
    "paper_transformer": dict(learning_rate=1.5e-5, adam_epsilon=1e-8, epochs=2, batch_size=32),
    "baseline_linear": dict(learning_rate=0.05, adam_epsilon=1e-8, epochs=10, batch_size=32),
}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    adam_epsilon: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    epochs: int = 10
    batch_size: int = 32
    seed: int = 42
    profile: str = "baseline_linear"

    def __post_init__(self):
        if not self.learning_rate > 0 or not self.adam_epsilon > 0:
            raise ValueError("learning_rate and adam_epsilon must be positive")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    @classmethod
    def for_profile(cls, profile: str = "baseline_linear", **overrides) -> "TrainConfig":
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        return cls(profile=profile, **{**PROFILES[profile], **overrides})


# --- features -----------------------------------------------------------------

_WORD_RE = re.compile(r"\b\w+\b")


def _analyzer(text: str) -> List[str]:
    text = text.lower()
    words = _WORD_RE.findall(text)
    feats = ["w:" + w for w in words]
    feats.extend("w:" + a + " " + b for a, b in zip(words, words[1:]))
    for w in text.split():
        padded = " " + w + " "
        n = len(padded)
        for size in (3, 4, 5):
            feats.extend("c:" + padded[i:i + size] for i in range(n - size + 1))
    return feats


def make_vectorizer(n_features: int = N_FEATURES) -> HashingVectorizer:
    return HashingVectorizer(
        n_features=n_features,
        analyzer=_analyzer,
        alternate_sign=True,
        norm=None,
        dtype=np.float64,
    )


def featurize(text: str, n_features: int = N_FEATURES) -> sp.csr_matrix:
    """Signed hashed counts for one text as a ``1 x n_features`` CSR row."""
    return make_vectorizer(n_features).transform([text])


def featurize_many(texts, n_features: int = N_FEATURES) -> sp.csr_matrix:
    return make_vectorizer(n_features).transform(list(texts))


# --- loss and optimizer ---------------------------------------------------------

def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss_and_grad(w, b, X, y):
    """Mean binary cross-entropy of ``sigmoid(X w + b)`` and its gradient.

    Returns ``(loss, grad_w, grad_b)``; ``X`` may be dense or sparse.
    """
    z = np.asarray(X @ w).ravel() + b
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    resid = (sigmoid(z) - y) / n
    grad_w = np.asarray(X.T @ resid).ravel()
    return loss, grad_w, float(resid.sum())


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params, grad, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place on ``params`` and ``state``."""
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grad
    state.v *= beta2
    state.v += (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    params -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params


# --- estimator ------------------------------------------------------------------

class HashedLinearClassifier(ClassifierMixin, BaseEstimator):
    """Logistic regression over hashed n-gram counts, fit with mini-batch Adam.

    Parameters mirror :class:`TrainConfig`. ``fit`` takes raw texts and 0/1
    labels; the training data are reshuffled every epoch by a generator
    seeded with ``seed`` and weights start at zero.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    initial_loss_ : float
        Mean training loss of the zero model.
    loss_curve_ : list of float
        Mean training loss after each epoch.
    """

    def __init__(
        self,
        learning_rate=0.05,
        adam_epsilon=1e-8,
        adam_beta1=0.9,
        adam_beta2=0.999,
        epochs=10,
        batch_size=32,
        seed=42,
        n_features=N_FEATURES,
    ):
        self.learning_rate = learning_rate
        self.adam_epsilon = adam_epsilon
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.n_features = n_features

    @classmethod
    def from_config(cls, cfg: TrainConfig, n_features=N_FEATURES):
        return cls(
            learning_rate=cfg.learning_rate,
            adam_epsilon=cfg.adam_epsilon,
            adam_beta1=cfg.adam_beta1,
            adam_beta2=cfg.adam_beta2,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            seed=cfg.seed,
            n_features=n_features,
        )

    def _features(self, X):
        if sp.issparse(X):
            return sp.csr_matrix(X)
        return featurize_many(check_texts(X), self.n_features)

    def fit(self, X, y):
        Xf = self._features(X)
        y = check_binary_labels(y, Xf.shape[0])
        n = Xf.shape[0]
        # Columns absent from the training set never receive gradient, so their
        # Adam moments and weights stay exactly zero; optimize the rest only.
        active = np.unique(Xf.indices)
        Xa = sp.csr_matrix(Xf[:, active])
        w = np.zeros(active.size)
        b = np.zeros(1)
        state_w = AdamState.zeros(w.size)
        state_b = AdamState.zeros(1)
        rng = np.random.default_rng(self.seed)
        self.initial_loss_ = bce_loss_and_grad(w, 0.0, Xa, y)[0]
        self.loss_curve_ = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                _, gw, gb = bce_loss_and_grad(w, b[0], Xa[idx], y[idx])
                adam_step(w, gw, state_w, self.learning_rate, self.adam_beta1, self.adam_beta2, self.adam_epsilon)
                adam_step(b, np.array([gb]), state_b, self.learning_rate, self.adam_beta1, self.adam_beta2,
                          self.adam_epsilon)
            self.loss_curve_.append(bce_loss_and_grad(w, b[0], Xa, y)[0])
        if not np.isfinite(w).all() or not np.isfinite(b).all():
            raise FloatingPointError("training diverged to non-finite weights")
        self.coef_ = np.zeros(Xf.shape[1])
        self.coef_[active] = w
        self.intercept_ = float(b[0])
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return np.asarray(self._features(X) @ self.coef_).ravel() + self.intercept_

    def predict_logits(self, X) -> np.ndarray:
        """``(n, 2)`` array of ``(logit_neg, logit_pos)`` with ``logit_neg = 0``."""
        pos = self.decision_function(X)
        return np.column_stack([np.zeros_like(pos), pos])

    def predict_proba(self, X) -> np.ndarray:
        p = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


def train(train_set, cfg: Optional[TrainConfig] = None, n_features: int = N_FEATURES) -> HashedLinearClassifier:
    """Fit the built-in model on a LabeledDataset."""
    cfg = cfg or TrainConfig.for_profile("baseline_linear")
    model = HashedLinearClassifier.from_config(cfg, n_features=n_features)
    model.train_config_ = cfg
    return model.fit(train_set.texts, train_set.labels)


def predict_logits(model: HashedLinearClassifier, tweet) -> Tuple[float, float]:
    text = tweet if isinstance(tweet, str) else tweet.text
    neg, pos = model.predict_logits([text])[0]
    return float(neg), float(pos)


# --- persistence ----------------------------------------------------------------

def model_to_dict(model: HashedLinearClassifier) -> dict:
    check_is_fitted(model, "coef_")
    nz = np.flatnonzero(model.coef_)
    cfg = getattr(model, "train_config_", None)
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_spec": {
            "word_ngrams": [1, 2],
            "char_ngrams": [3, 5],
            "lowercase": True,
            "hash": "murmurhash3_x86_32(seed=0), index=abs(h)%n_features, value=count*sign(h)",
        },
        "n_features": int(model.n_features),
        "params": model.get_params(),
        "config": asdict(cfg) if cfg is not None else None,
        "bias": model.intercept_,
        "weights": [[int(i), float(model.coef_[i])] for i in nz],
    }


def save_model(model: HashedLinearClassifier, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> HashedLinearClassifier:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"{path}: not a JSON model file ({exc})") from exc
    if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
        raise ModelFileError(f"{path}: unsupported model format {data.get('format')!r} v{data.get('version')!r}")
    model = HashedLinearClassifier(**data["params"])
    coef = np.zeros(data["n_features"])
    for i, value in data["weights"]:
        coef[i] = value
    model.coef_ = coef
    model.intercept_ = float(data["bias"])
    model.classes_ = np.array([0, 1])
    if data.get("config"):
        model.train_config_ = TrainConfig(**data["config"])
    return model


# --- external scores --------------------------------------------------------------

def _parse_logit(raw: str, line_no: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ScoreFileError(line_no, f"non-numeric logit {raw!r}") from None
    if not math.isfinite(value):
        raise ScoreFileError(line_no, f"non-finite logit {raw!r}")
    return value


def load_external_scores(path, dataset=None) -> Dict[str, Tuple[float, float]]:
    """Read ``tweet_id<TAB>logit_neg<TAB>logit_pos`` rows (optional header).

    When ``dataset`` is given, every one of its tweet ids must be scored
    exactly once and no other ids may appear.
    """
    table: Dict[str, Tuple[float, float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cells = line.split("\t")
            if line_no == 1 and cells[0] == "tweet_id":
                continue
            if len(cells) != 3:
                raise ScoreFileError(line_no, f"expected 3 columns, got {len(cells)}")
            tweet_id = cells[0]
            if tweet_id in table:
                raise DuplicateId(tweet_id, line_no)
            table[tweet_id] = (_parse_logit(cells[1], line_no), _parse_logit(cells[2], line_no))
    if dataset is not None:
        for t in dataset.tweets:
            if t.tweet_id not in table:
                raise MissingId(t.tweet_id)
        known = {t.tweet_id for t in dataset.tweets}
        extra = [i for i in table if i not in known]
        if extra:
            raise IdMismatch(extra=extra)
    return table
