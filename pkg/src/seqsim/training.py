"""Pairwise training of the recurrent similarity models.

Gradients are exact backpropagation-through-time through both branches of the
shared-weight network; the optimizer is RMSprop with elementwise gradient
clipping and a validation-AUC-driven learning-rate schedule that keeps the
best checkpoint seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, PairSet, TimeSeries, build_pairs, sample_pair_batch
from .evaluation import auc
from .model import (
    HiddenTrace,
    LogisticParams,
    SrnParams,
    init_srn,
    rnn_forward,
    similarity_logit,
)
from .numerics import Rng, clip_elementwise, derive_seed, softplus, stable_sigmoid


@dataclass
class TrainConfig:
    hidden: int
    pooling: str = "average"
    recurrent: bool = True
    batch: int = 50
    lr: float = 1e-3
    rms_decay: float = 0.9
    epsilon: float = 1e-6
    clip_lo: float = -5.0
    clip_hi: float = 5.0
    dropout: float = 0.0
    lr_decay: float = 0.4
    patience: int = 3
    eval_interval: int = 100
    eval_pairs: int = 2000
    max_steps: int = 2000
    min_lr: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise ValueError("hidden size must be >= 1")
        if self.batch < 2 or self.batch % 2 != 0:
            raise ValueError("batch must be even and >= 2")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 < self.lr_decay < 1.0:
            raise ValueError("lr_decay must be in (0, 1)")
        if self.lr <= 0 or self.epsilon <= 0:
            raise ValueError("lr and epsilon must be positive")
        if not self.clip_lo < self.clip_hi:
            raise ValueError("clip_lo must be below clip_hi")
        if self.patience < 1 or self.eval_interval < 1:
            raise ValueError("patience and eval_interval must be >= 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")


@dataclass
class Gradients:
    """Loss gradients for every SRN parameter; shapes mirror SrnParams."""

    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    c: float

    @staticmethod
    def zeros(params: SrnParams) -> "Gradients":
        return Gradients(
            w=np.zeros_like(params.W),
            a=np.zeros_like(params.A),
            b=np.zeros_like(params.b),
            v=np.zeros_like(params.v),
            c=0.0,
        )

    def iadd(self, other: "Gradients") -> None:
        self.w += other.w
        self.a += other.a
        self.b += other.b
        self.v += other.v
        self.c += other.c

    def scale(self, k: float) -> None:
        self.w *= k
        self.a *= k
        self.b *= k
        self.v *= k
        self.c *= k

    def clip(self, lo: float, hi: float) -> None:
        self.w = clip_elementwise(self.w, lo, hi)
        self.a = clip_elementwise(self.a, lo, hi)
        self.b = clip_elementwise(self.b, lo, hi)
        self.v = clip_elementwise(self.v, lo, hi)
        self.c = float(np.clip(self.c, lo, hi))

    def all_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.w))
            and np.all(np.isfinite(self.a))
            and np.all(np.isfinite(self.b))
            and np.all(np.isfinite(self.v))
            and math.isfinite(self.c)
        )


@dataclass
class LogRecord:
    step: int
    loss: float
    val_auc: float
    lr: float


@dataclass
class TrainResult:
    params: SrnParams | LogisticParams  # best checkpoint (final if no validation)
    final_params: SrnParams | LogisticParams
    log: list[LogRecord] = field(default_factory=list)
    best_auc: float = float("nan")
    best_step: int = 0
    steps: int = 0
    stop_reason: str = "max-steps"


def pair_loss(prob: float, is_similar: bool) -> float:
    """Cross-entropy of one scored pair: -log p if similar, -log(1-p) if not."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability out of range: {prob}")
    return -math.log(prob) if is_similar else -math.log(1.0 - prob)


def pair_loss_from_logit(logit: float, is_similar: bool) -> float:
    """Same loss computed stably from the pre-sigmoid logit."""
    return softplus(-logit) if is_similar else softplus(logit)


def dropout_masks(rng: Rng, length: int, hidden: int, rate: float) -> np.ndarray | None:
    """Inverted-dropout masks for every step of one series; None when rate is 0.

    Masks apply to the hidden states feeding the pooled representation only;
    the recurrence always sees undropped states, so inference needs no
    rescaling and eval-time behavior is the identity.
    """
    if rate == 0.0:
        return None
    keep = rng.uniform(size=(length, hidden)) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


def _branch_backward(
    params: SrnParams,
    trace: HiddenTrace,
    frames: np.ndarray,
    d_pooled: np.ndarray,
    masks: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients (dW, dA, db) of one branch given d loss / d pooled."""
    t_len, hidden = trace.states.shape
    d_head = np.zeros((t_len, hidden))
    if params.pooling == "average":
        d_head[:] = d_pooled / t_len
    else:
        d_head[-1] = d_pooled
    if masks is not None:
        d_head *= masks

    active = trace.preactivations > 0.0
    d_pre = np.empty((t_len, hidden))
    if params.recurrent:
        carry = np.zeros(hidden)
        at = params.A.T
        for t in range(t_len - 1, -1, -1):
            da = (d_head[t] + carry) * active[t]
            d_pre[t] = da
            carry = at @ da
    else:
        d_pre = d_head * active

    dw = d_pre.T @ frames
    db = d_pre.sum(axis=0)
    if params.recurrent and t_len > 1:
        da_mat = d_pre[1:].T @ trace.states[:-1]
    else:
        da_mat = np.zeros_like(params.A)
    return dw, da_mat, db


def pair_backward(
    params: SrnParams,
    s1: TimeSeries,
    s2: TimeSeries,
    is_similar: bool,
    masks1: np.ndarray | None = None,
    masks2: np.ndarray | None = None,
) -> tuple[float, Gradients]:
    """Loss and exact gradients for one pair through the shared network."""
    trace1 = rnn_forward(params, s1)
    trace2 = rnn_forward(params, s2)
    states1 = trace1.states if masks1 is None else trace1.states * masks1
    states2 = trace2.states if masks2 is None else trace2.states * masks2
    if params.pooling == "average":
        h1, h2 = states1.mean(axis=0), states2.mean(axis=0)
    else:
        h1, h2 = states1[-1], states2[-1]

    logit = similarity_logit(params, h1, h2)
    prob = stable_sigmoid(logit)
    loss = pair_loss_from_logit(logit, is_similar)
    d_logit = prob - (1.0 if is_similar else 0.0)

    grads = Gradients.zeros(params)
    grads.v = d_logit * (h1 * h2)
    grads.c = -d_logit
    dh1 = d_logit * params.v * h2
    dh2 = d_logit * params.v * h1

    for trace, frames, dh, masks in (
        (trace1, s1.frames, dh1, masks1),
        (trace2, s2.frames, dh2, masks2),
    ):
        dw, da, db = _branch_backward(params, trace, frames, dh, masks)
        grads.w += dw
        grads.a += da
        grads.b += db

    if not (math.isfinite(loss) and grads.all_finite()):
        raise FloatingPointError(
            f"non-finite gradient on pair ({s1.id!r}, {s2.id!r})"
        )
    return loss, grads


@dataclass
class RmsState:
    """Running mean of squared gradients, one accumulator per parameter."""

    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    c: float = 0.0

    @staticmethod
    def zeros(params: SrnParams) -> "RmsState":
        return RmsState(
            w=np.zeros_like(params.W),
            a=np.zeros_like(params.A),
            b=np.zeros_like(params.b),
            v=np.zeros_like(params.v),
        )


def rmsprop_step(
    params: SrnParams,
    grads: Gradients,
    state: RmsState,
    lr: float,
    decay: float,
    epsilon: float,
) -> None:
    """In-place RMSprop update: acc <- decay*acc + (1-decay)*g^2, then
    param <- param - lr * g / (sqrt(acc) + epsilon)."""

    def update(param: np.ndarray, g: np.ndarray, acc: np.ndarray) -> None:
        acc *= decay
        acc += (1.0 - decay) * g * g
        param -= lr * g / (np.sqrt(acc) + epsilon)

    update(params.W, grads.w, state.w)
    if params.recurrent:
        update(params.A, grads.a, state.a)
    update(params.b, grads.b, state.b)
    update(params.v, grads.v, state.v)
    state.c = decay * state.c + (1.0 - decay) * grads.c * grads.c
    params.c -= lr * grads.c / (math.sqrt(state.c) + epsilon)


# ---------------------------------------------------------------------------
# Training loops
# ---------------------------------------------------------------------------


def _fixed_val_pairs(
    val_data: Dataset, config: TrainConfig
) -> list[tuple[int, int, bool]]:
    """Validation pairs chosen once before training so every evaluation along
    the run ranks the same set."""
    pairs = build_pairs(val_data)
    if not pairs.similar or not pairs.dissimilar:
        raise ValueError(
            "validation split needs at least one similar and one dissimilar pair"
        )
    rng = Rng(derive_seed(config.seed, "val-pairs"))
    half = config.eval_pairs // 2

    def take(items: list, k: int) -> list:
        if len(items) <= k:
            return list(items)
        idx = list(range(len(items)))
        rng.shuffle(idx)
        return [items[i] for i in idx[:k]]

    chosen = [(i, j, True) for i, j in take(list(pairs.similar), half)]
    chosen += [(i, j, False) for i, j, _ in take(list(pairs.dissimilar), half)]
    return chosen


def _srn_val_auc(
    params: SrnParams, val_data: Dataset, val_pairs: list[tuple[int, int, bool]]
) -> float:
    # Embeddings are cached per eval; AUC only needs the logit's ranking.
    cache: dict[int, np.ndarray] = {}

    def emb(i: int) -> np.ndarray:
        if i not in cache:
            trace = rnn_forward(params, val_data[i])
            cache[i] = (
                trace.states.mean(axis=0)
                if params.pooling == "average"
                else trace.states[-1]
            )
        return cache[i]

    scores = [float(params.v @ (emb(i) * emb(j)) - params.c) for i, j, _ in val_pairs]
    return auc(scores, [y for _, _, y in val_pairs])


class _Schedule:
    """Best-checkpoint tracking plus plateau-triggered learning-rate decay."""

    def __init__(self, config: TrainConfig):
        self.lr = config.lr
        self.patience = config.patience
        self.decay = config.lr_decay
        self.best_auc = -np.inf
        self.best_step = 0
        self.stale = 0

    def observe(self, step: int, val_auc: float) -> bool:
        """Returns True when this evaluation is a new best."""
        if val_auc > self.best_auc:
            self.best_auc = val_auc
            self.best_step = step
            self.stale = 0
            return True
        self.stale += 1
        if self.stale >= self.patience:
            self.lr *= self.decay
            self.stale = 0
        return False


def train(
    train_data: Dataset,
    config: TrainConfig,
    val_data: Dataset | None = None,
    forgery_map: dict[str, list[str]] | None = None,
) -> TrainResult:
    """Fit an SRN/SN similarity model on labeled series.

    Independent seeded streams drive initialization, batch sampling and
    dropout, so e.g. changing the dropout rate does not perturb the batch
    sequence. Without a validation set the schedule is inert (constant lr,
    no checkpoint selection) and the final parameters are returned.
    """
    root = Rng(config.seed)
    init_rng = root.spawn("init")
    batch_rng = root.spawn("batch")
    drop_rng = root.spawn("dropout")

    params = init_srn(
        init_rng, train_data.dim, config.hidden, config.pooling, config.recurrent
    )
    pairs = build_pairs(train_data, forgery_map)
    val_pairs = _fixed_val_pairs(val_data, config) if val_data is not None else None

    state = RmsState.zeros(params)
    schedule = _Schedule(config)
    best_params = params.copy()
    log: list[LogRecord] = []
    loss_acc = 0.0
    loss_count = 0
    stop_reason = "max-steps"
    steps_run = 0

    for step in range(1, config.max_steps + 1):
        batch = sample_pair_batch(pairs, batch_rng, config.batch)
        grads = Gradients.zeros(params)
        batch_loss = 0.0
        for i, j, is_similar in batch:
            s1, s2 = train_data[i], train_data[j]
            m1 = dropout_masks(drop_rng, s1.length, config.hidden, config.dropout)
            m2 = dropout_masks(drop_rng, s2.length, config.hidden, config.dropout)
            loss, g = pair_backward(params, s1, s2, is_similar, m1, m2)
            batch_loss += loss
            grads.iadd(g)
        grads.scale(1.0 / len(batch))
        grads.clip(config.clip_lo, config.clip_hi)
        rmsprop_step(params, grads, state, schedule.lr, config.rms_decay, config.epsilon)

        steps_run = step
        loss_acc += batch_loss / len(batch)
        loss_count += 1

        at_eval = step % config.eval_interval == 0 or step == config.max_steps
        if not at_eval:
            continue
        if val_pairs is not None:
            val_auc = _srn_val_auc(params, val_data, val_pairs)
            if schedule.observe(step, val_auc):
                best_params = params.copy()
        else:
            val_auc = float("nan")
        log.append(LogRecord(step, loss_acc / loss_count, val_auc, schedule.lr))
        loss_acc, loss_count = 0.0, 0
        if schedule.lr < config.min_lr:
            stop_reason = "lr-floor"
            break

    use_best = val_pairs is not None and config.max_steps > 0
    return TrainResult(
        params=best_params if use_best else params,
        final_params=params,
        log=log,
        best_auc=schedule.best_auc if use_best else float("nan"),
        best_step=schedule.best_step,
        steps=steps_run,
        stop_reason=stop_reason,
    )


def train_logistic(
    train_data: Dataset,
    config: TrainConfig,
    val_data: Dataset | None = None,
    forgery_map: dict[str, list[str]] | None = None,
) -> TrainResult:
    """Fit the frame-mean logistic baseline with the same loop and schedule.

    The model sees only each series' time-averaged frame, so any task where
    that average is uninformative bounds this baseline at chance.
    """
    root = Rng(config.seed)
    init_rng = root.spawn("init")
    batch_rng = root.spawn("batch")

    dim = train_data.dim
    weights = init_rng.uniform(-0.1, 0.1, size=(dim,))
    bias = 0.0
    means = np.stack([s.frames.mean(axis=0) for s in train_data])
    pairs = build_pairs(train_data, forgery_map)

    val_pairs = None
    val_means = None
    if val_data is not None:
        val_pairs = _fixed_val_pairs(val_data, config)
        val_means = np.stack([s.frames.mean(axis=0) for s in val_data])

    acc_w = np.zeros(dim)
    acc_b = 0.0
    schedule = _Schedule(config)
    best = LogisticParams(weights=weights.copy(), bias=bias)
    log: list[LogRecord] = []
    loss_acc, loss_count = 0.0, 0
    stop_reason = "max-steps"
    steps_run = 0

    for step in range(1, config.max_steps + 1):
        batch = sample_pair_batch(pairs, batch_rng, config.batch)
        gw = np.zeros(dim)
        gb = 0.0
        batch_loss = 0.0
        for i, j, is_similar in batch:
            feat = means[i] * means[j]
            logit = float(weights @ feat + bias)
            prob = stable_sigmoid(logit)
            batch_loss += pair_loss_from_logit(logit, is_similar)
            d_logit = prob - (1.0 if is_similar else 0.0)
            gw += d_logit * feat
            gb += d_logit
        gw = clip_elementwise(gw / len(batch), config.clip_lo, config.clip_hi)
        gb = float(np.clip(gb / len(batch), config.clip_lo, config.clip_hi))
        acc_w = config.rms_decay * acc_w + (1 - config.rms_decay) * gw * gw
        acc_b = config.rms_decay * acc_b + (1 - config.rms_decay) * gb * gb
        weights -= schedule.lr * gw / (np.sqrt(acc_w) + config.epsilon)
        bias -= schedule.lr * gb / (math.sqrt(acc_b) + config.epsilon)

        steps_run = step
        loss_acc += batch_loss / len(batch)
        loss_count += 1

        at_eval = step % config.eval_interval == 0 or step == config.max_steps
        if not at_eval:
            continue
        if val_pairs is not None:
            scores = [
                float(weights @ (val_means[i] * val_means[j]) + bias)
                for i, j, _ in val_pairs
            ]
            val_auc = auc(scores, [y for _, _, y in val_pairs])
            if schedule.observe(step, val_auc):
                best = LogisticParams(weights=weights.copy(), bias=bias)
        else:
            val_auc = float("nan")
        log.append(LogRecord(step, loss_acc / loss_count, val_auc, schedule.lr))
        loss_acc, loss_count = 0.0, 0
        if schedule.lr < config.min_lr:
            stop_reason = "lr-floor"
            break

    final = LogisticParams(weights=weights, bias=bias)
    use_best = val_pairs is not None and config.max_steps > 0
    return TrainResult(
        params=best if use_best else final,
        final_params=final,
        log=log,
        best_auc=schedule.best_auc if use_best else float("nan"),
        best_step=schedule.best_step,
        steps=steps_run,
        stop_reason=stop_reason,
    )


# ---------------------------------------------------------------------------
# Training-log persistence
# ---------------------------------------------------------------------------


def save_train_log(log: list[LogRecord], path: str | Path) -> None:
    lines = ["# seqsim-trainlog v1", "step,loss,val_auc,lr"]
    for r in log:
        lines.append(
            f"{r.step},{repr(float(r.loss))},{repr(float(r.val_auc))},{repr(float(r.lr))}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_train_log(path: str | Path) -> list[LogRecord]:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2 or lines[0] != "# seqsim-trainlog v1" or lines[1] != "step,loss,val_auc,lr":
        raise ValueError(f"{path}: not a training log")
    out = []
    for line in lines[2:]:
        step, loss, val_auc, lr = line.split(",")
        out.append(LogRecord(int(step), float(loss), float(val_auc), float(lr)))
    return out
