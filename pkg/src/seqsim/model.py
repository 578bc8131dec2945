"""Siamese recurrent similarity model: shared-parameter ReLU recurrence,
last-step or average pooling, and a weighted-inner-product similarity head.

The same parameter set drives four variants: recurrent + average pooling,
recurrent + last-step pooling, and the two feedforward ablations obtained by
freezing the recurrent matrix at zero. A separate naive logistic scorer
operates directly on time-averaged frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import TimeSeries
from .numerics import Rng, stable_sigmoid, uniform_init

POOLING_MODES = ("last", "average")


@dataclass
class SrnParams:
    """Learnable parameters shared by both siamese branches.

    W maps input frames to hidden units, A carries the recurrence, b is the
    hidden bias, and (v, c) parameterize the similarity head. recurrent=False
    pins A at zero and excludes it from training updates.
    """

    W: np.ndarray  # (hidden, input_dim)
    A: np.ndarray  # (hidden, hidden)
    b: np.ndarray  # (hidden,)
    v: np.ndarray  # (hidden,)
    c: float
    pooling: str
    recurrent: bool = True

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.A = np.asarray(self.A, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.c = float(self.c)
        h = self.W.shape[0]
        if self.A.shape != (h, h) or self.b.shape != (h,) or self.v.shape != (h,):
            raise ValueError("inconsistent parameter shapes")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}")
        if not self.recurrent and np.any(self.A != 0.0):
            raise ValueError("recurrent=False requires A to be all-zero")

    @property
    def hidden(self) -> int:
        return self.W.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "SrnParams":
        return SrnParams(
            W=self.W.copy(),
            A=self.A.copy(),
            b=self.b.copy(),
            v=self.v.copy(),
            c=self.c,
            pooling=self.pooling,
            recurrent=self.recurrent,
        )


@dataclass
class HiddenTrace:
    """Per-step hidden states and preactivations kept for backprop."""

    states: np.ndarray  # (T, hidden)
    preactivations: np.ndarray  # (T, hidden)


@dataclass
class LogisticParams:
    """Naive baseline: weighted product of time-averaged frames."""

    weights: np.ndarray  # (input_dim,)
    bias: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = float(self.bias)

    def copy(self) -> "LogisticParams":
        return LogisticParams(weights=self.weights.copy(), bias=self.bias)


def init_srn(
    rng: Rng,
    input_dim: int,
    hidden: int,
    pooling: str,
    recurrent: bool = True,
    scale: float = 0.1,
) -> SrnParams:
    """All parameters i.i.d. uniform on [-scale, scale]; A zeroed for the
    non-recurrent ablations (same draw sequence either way, so SN and SRN
    inits are comparable under one seed)."""
    W = uniform_init(rng, hidden, input_dim, -scale, scale)
    A = uniform_init(rng, hidden, hidden, -scale, scale)
    b = uniform_init(rng, 1, hidden, -scale, scale)[0]
    v = uniform_init(rng, 1, hidden, -scale, scale)[0]
    c = rng.uniform(-scale, scale)
    if not recurrent:
        A = np.zeros_like(A)
    return SrnParams(W=W, A=A, b=b, v=v, c=c, pooling=pooling, recurrent=recurrent)


def _check_dim(params: SrnParams, series: TimeSeries) -> None:
    if series.dim != params.input_dim:
        raise ValueError(
            f"series {series.id!r} has dim {series.dim}, model expects {params.input_dim}"
        )


def rnn_forward(params: SrnParams, series: TimeSeries) -> HiddenTrace:
    """ReLU recurrence z_t = max(0, W x_t + A z_{t-1} + b) with z_0 = 0."""
    _check_dim(params, series)
    wx = series.frames @ params.W.T + params.b  # (T, hidden)
    if not params.recurrent:
        return HiddenTrace(states=np.maximum(wx, 0.0), preactivations=wx)
    T, h = wx.shape
    pre = np.empty((T, h))
    states = np.empty((T, h))
    z = np.zeros(h)
    for t in range(T):
        a = wx[t] + params.A @ z
        z = np.maximum(a, 0.0)
        pre[t] = a
        states[t] = z
    return HiddenTrace(states=states, preactivations=pre)


def pool(trace: HiddenTrace, mode: str) -> np.ndarray:
    """last: final hidden state; average: mean over the series' own length."""
    if trace.states.shape[0] == 0:
        raise ValueError("cannot pool an empty trace")
    if mode == "last":
        return trace.states[-1]
    if mode == "average":
        return trace.states.mean(axis=0)
    raise ValueError(f"pooling must be one of {POOLING_MODES}")


def similarity_logit(params: SrnParams, h1: np.ndarray, h2: np.ndarray) -> float:
    """v^T (h1 * h2) - c; the elementwise product keeps it exactly symmetric."""
    if h1.shape != h2.shape or h1.shape != (params.hidden,):
        raise ValueError(
            f"embedding shapes {h1.shape}/{h2.shape} do not match hidden size {params.hidden}"
        )
    return float(params.v @ (h1 * h2) - params.c)


def similarity(params: SrnParams, h1: np.ndarray, h2: np.ndarray) -> float:
    """Similarity in (0,1) of two pooled representations."""
    return stable_sigmoid(similarity_logit(params, h1, h2))


def embed(params: SrnParams, series: TimeSeries) -> np.ndarray:
    """Fixed-size representation of a series, independent of its length."""
    return pool(rnn_forward(params, series), params.pooling)


def score_pair(params: SrnParams, s1: TimeSeries, s2: TimeSeries) -> float:
    """Similarity of two series; symmetric in its arguments."""
    return similarity(params, embed(params, s1), embed(params, s2))


def logistic_score(
    weights: np.ndarray, bias: float, s1: TimeSeries, s2: TimeSeries
) -> float:
    """sigmoid(weights . (mean_t s1 * mean_t s2) + bias)."""
    weights = np.asarray(weights, dtype=np.float64)
    if s1.dim != s2.dim or s1.dim != weights.shape[0]:
        raise ValueError(
            f"dims {s1.dim}/{s2.dim} do not match weight length {weights.shape[0]}"
        )
    m1 = s1.frames.mean(axis=0)
    m2 = s2.frames.mean(axis=0)
    return stable_sigmoid(float(weights @ (m1 * m2) + bias))


# ---------------------------------------------------------------------------
# Flat parameter vector (gradient-check oracle support)
# ---------------------------------------------------------------------------

def params_to_vector(params: SrnParams) -> np.ndarray:
    """Flatten to [W, A?, b, v, c]; A is omitted when recurrent=False."""
    blocks = [params.W.ravel()]
    if params.recurrent:
        blocks.append(params.A.ravel())
    blocks += [params.b, params.v, np.array([params.c])]
    return np.concatenate(blocks)


def params_from_vector(template: SrnParams, vec: np.ndarray) -> SrnParams:
    """Rebuild parameters from a flat vector laid out as params_to_vector."""
    h, d = template.W.shape
    pos = 0
    W = vec[pos : pos + h * d].reshape(h, d)
    pos += h * d
    if template.recurrent:
        A = vec[pos : pos + h * h].reshape(h, h)
        pos += h * h
    else:
        A = np.zeros((h, h))
    b = vec[pos : pos + h]
    pos += h
    v = vec[pos : pos + h]
    pos += h
    c = float(vec[pos])
    return SrnParams(
        W=W.copy(), A=A.copy(), b=b.copy(), v=v.copy(), c=c,
        pooling=template.pooling, recurrent=template.recurrent,
    )


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_FORMAT = "seqsim-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(params: SrnParams | LogisticParams, window: int, path) -> None:
    """Single JSON document; reloading reproduces scores bit-identically."""
    doc: dict = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION}
    if isinstance(params, SrnParams):
        doc.update(
            kind="srn",
            input_dim=params.input_dim,
            hidden=params.hidden,
            pooling=params.pooling,
            recurrent=params.recurrent,
            window=int(window),
            W=params.W.tolist(),
            A=params.A.tolist(),
            b=params.b.tolist(),
            v=params.v.tolist(),
            c=params.c,
        )
    else:
        doc.update(
            kind="logistic",
            input_dim=int(params.weights.shape[0]),
            window=int(window),
            weights=params.weights.tolist(),
            bias=params.bias,
        )
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(path) -> tuple[SrnParams | LogisticParams, int]:
    """Read a checkpoint; returns (params, preprocessing window size)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if doc.get("kind") == "logistic":
        return (
            LogisticParams(weights=np.array(doc["weights"]), bias=doc["bias"]),
            int(doc["window"]),
        )
    params = SrnParams(
        W=np.array(doc["W"]),
        A=np.array(doc["A"]),
        b=np.array(doc["b"]),
        v=np.array(doc["v"]),
        c=doc["c"],
        pooling=doc["pooling"],
        recurrent=doc["recurrent"],
    )
    return params, int(doc["window"])
