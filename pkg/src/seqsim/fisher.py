"""Diagonal-Gaussian hidden Markov models and Fisher-score similarity.

A single generative HMM is fit on training frames; each series is then
represented by the gradient of its log-likelihood with respect to the model's
unconstrained parameters (transition logits, means, log-variances, initial
logits). Similarity between two series is the inner product of those score
vectors, or a distance to reference score pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, TimeSeries
from .numerics import Rng

VAR_FLOOR = 1e-4
_LOG_TINY = 1e-300


@dataclass
class HmmParams:
    pi: np.ndarray  # (K,) initial state probabilities
    trans: np.ndarray  # (K, K) row-stochastic transition matrix
    means: np.ndarray  # (K, dim)
    variances: np.ndarray  # (K, dim), diagonal, floored at VAR_FLOOR

    def __post_init__(self) -> None:
        self.pi = np.asarray(self.pi, dtype=np.float64)
        self.trans = np.asarray(self.trans, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        k = self.pi.shape[0]
        if self.trans.shape != (k, k):
            raise ValueError(f"trans must be ({k}, {k}), got {self.trans.shape}")
        if self.means.ndim != 2 or self.means.shape[0] != k:
            raise ValueError("means must be (n_states, dim)")
        if self.variances.shape != self.means.shape:
            raise ValueError("variances must match means shape")
        if abs(self.pi.sum() - 1.0) > 1e-8:
            raise ValueError("initial probabilities must sum to 1")
        if np.any(np.abs(self.trans.sum(axis=1) - 1.0) > 1e-8):
            raise ValueError("transition rows must sum to 1")
        if np.any(self.pi < 0) or np.any(self.trans < 0):
            raise ValueError("probabilities must be non-negative")
        if np.any(self.variances < VAR_FLOOR * (1 - 1e-12)):
            raise ValueError(f"variances must be >= {VAR_FLOOR}")

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def copy(self) -> "HmmParams":
        return HmmParams(
            pi=self.pi.copy(),
            trans=self.trans.copy(),
            means=self.means.copy(),
            variances=self.variances.copy(),
        )


def _logsumexp(a: np.ndarray, axis: int | None = None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())


def _log_emissions(hmm: HmmParams, frames: np.ndarray) -> np.ndarray:
    """(T, K) log densities of each frame under each state's diagonal Gaussian."""
    diff = frames[:, None, :] - hmm.means[None, :, :]  # (T, K, D)
    quad = np.sum(diff * diff / hmm.variances[None, :, :], axis=2)
    log_norm = np.sum(np.log(2.0 * np.pi * hmm.variances), axis=1)  # (K,)
    return -0.5 * (quad + log_norm[None, :])


def _check_dim(hmm: HmmParams, series: TimeSeries) -> None:
    if series.dim != hmm.dim:
        raise ValueError(f"series dim {series.dim} does not match model dim {hmm.dim}")


def _forward(hmm: HmmParams, frames: np.ndarray) -> np.ndarray:
    """Log-domain forward lattice (T, K)."""
    log_b = _log_emissions(hmm, frames)
    log_pi = np.log(np.maximum(hmm.pi, _LOG_TINY))
    log_a = np.log(np.maximum(hmm.trans, _LOG_TINY))
    t_len = frames.shape[0]
    log_alpha = np.empty_like(log_b)
    log_alpha[0] = log_pi + log_b[0]
    for t in range(1, t_len):
        log_alpha[t] = log_b[t] + _logsumexp(log_alpha[t - 1][:, None] + log_a, axis=0)
    return log_alpha


def hmm_loglik(hmm: HmmParams, series: TimeSeries) -> float:
    _check_dim(hmm, series)
    log_alpha = _forward(hmm, series.frames)
    return float(_logsumexp(log_alpha[-1]))


def forward_backward(
    hmm: HmmParams, series: TimeSeries
) -> tuple[np.ndarray, np.ndarray, float]:
    """State posteriors for one series.

    Returns (gamma, xi_sum, loglik) where gamma[t, k] = P(state_t = k | x) and
    xi_sum[i, j] = sum_t P(state_t = i, state_t+1 = j | x).
    """
    _check_dim(hmm, series)
    frames = series.frames
    t_len = frames.shape[0]
    log_b = _log_emissions(hmm, frames)
    log_a = np.log(np.maximum(hmm.trans, _LOG_TINY))
    log_alpha = _forward(hmm, frames)
    loglik = float(_logsumexp(log_alpha[-1]))

    log_beta = np.zeros_like(log_b)
    for t in range(t_len - 2, -1, -1):
        log_beta[t] = _logsumexp(
            log_a + (log_b[t + 1] + log_beta[t + 1])[None, :], axis=1
        )

    gamma = np.exp(log_alpha + log_beta - loglik)
    gamma /= gamma.sum(axis=1, keepdims=True)

    xi_sum = np.zeros((hmm.n_states, hmm.n_states))
    for t in range(t_len - 1):
        log_xi = (
            log_alpha[t][:, None]
            + log_a
            + (log_b[t + 1] + log_beta[t + 1])[None, :]
            - loglik
        )
        xi_sum += np.exp(log_xi)
    return gamma, xi_sum, loglik


def total_loglik(hmm: HmmParams, data: Dataset | list[TimeSeries]) -> float:
    return float(sum(hmm_loglik(hmm, s) for s in data))


def _init_hmm(data: list[TimeSeries], n_states: int, rng: Rng) -> HmmParams:
    """Hard-assignment initialization from randomly chosen anchor frames."""
    frames = np.concatenate([s.frames for s in data], axis=0)
    n, dim = frames.shape
    if n < n_states:
        raise ValueError(f"need at least {n_states} frames to place {n_states} states")
    order = list(range(n))
    rng.shuffle(order)
    centers = frames[order[:n_states]]
    # Nearest-center hard assignment of every frame.
    d2 = ((frames[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)

    means = np.empty((n_states, dim))
    variances = np.empty((n_states, dim))
    pooled_var = np.maximum(frames.var(axis=0), VAR_FLOOR)
    for k in range(n_states):
        members = frames[assign == k]
        if len(members) == 0:
            means[k] = centers[k]
            variances[k] = pooled_var
        else:
            means[k] = members.mean(axis=0)
            variances[k] = np.maximum(members.var(axis=0), VAR_FLOOR)

    # Smoothed initial / bigram counts along each series' assignment path.
    pi = np.ones(n_states)
    trans = np.ones((n_states, n_states))
    offset = 0
    for s in data:
        path = assign[offset : offset + s.length]
        offset += s.length
        pi[path[0]] += 1.0
        for a, b in zip(path[:-1], path[1:]):
            trans[a, b] += 1.0
    pi /= pi.sum()
    trans /= trans.sum(axis=1, keepdims=True)
    return HmmParams(pi=pi, trans=trans, means=means, variances=variances)


def em_step(hmm: HmmParams, data: list[TimeSeries]) -> tuple[HmmParams, float]:
    """One Baum-Welch update over all sequences.

    Returns the re-estimated parameters and the total log-likelihood of the
    data under the *input* parameters.
    """
    k, dim = hmm.n_states, hmm.dim
    gamma1 = np.zeros(k)
    xi_total = np.zeros((k, k))
    occ = np.zeros(k)
    wx = np.zeros((k, dim))
    wx2 = np.zeros((k, dim))
    loglik = 0.0
    for s in data:
        gamma, xi_sum, ll = forward_backward(hmm, s)
        loglik += ll
        gamma1 += gamma[0]
        xi_total += xi_sum
        occ += gamma.sum(axis=0)
        wx += gamma.T @ s.frames
        wx2 += gamma.T @ (s.frames * s.frames)

    pi = gamma1 / gamma1.sum()
    row = xi_total.sum(axis=1, keepdims=True)
    trans = np.where(row > 1e-12, xi_total / np.maximum(row, 1e-12), hmm.trans)
    trans /= trans.sum(axis=1, keepdims=True)

    means = np.where(occ[:, None] > 1e-12, wx / np.maximum(occ[:, None], 1e-12), hmm.means)
    second = np.where(
        occ[:, None] > 1e-12, wx2 / np.maximum(occ[:, None], 1e-12), hmm.variances + hmm.means**2
    )
    variances = np.maximum(second - means**2, VAR_FLOOR)
    return HmmParams(pi=pi, trans=trans, means=means, variances=variances), loglik


def baum_welch(
    data: Dataset | list[TimeSeries],
    n_states: int,
    iters: int = 20,
    seed: int = 0,
    history: list[float] | None = None,
) -> HmmParams:
    """Fit a diagonal-Gaussian HMM by EM on all sequences jointly.

    If `history` is passed, the total log-likelihood before each update is
    appended to it (length `iters` afterwards), which is handy for checking
    the monotone-improvement guarantee.
    """
    series = list(data)
    if not series:
        raise ValueError("cannot fit an HMM on an empty dataset")
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    hmm = _init_hmm(series, n_states, Rng(seed))
    for _ in range(iters):
        hmm, ll = em_step(hmm, series)
        if history is not None:
            history.append(ll)
    return hmm


# --- Fisher scores ----------------------------------------------------------
#
# Unconstrained coordinates, in layout order:
#   transition logits tau (K*K) with trans = row-softmax(tau)
#   means                 (K*dim)
#   log-variances rho     (K*dim) with variances = exp(rho)
#   initial logits        (K)     with pi = softmax(logits)
# The score vector is d loglik / d coords at the model's current point.


def score_length(n_states: int, dim: int) -> int:
    return n_states * n_states + 2 * n_states * dim + n_states


def fisher_score(hmm: HmmParams, series: TimeSeries) -> np.ndarray:
    """Gradient of the series log-likelihood in unconstrained coordinates."""
    gamma, xi_sum, _ = forward_backward(hmm, series)
    diff = series.frames[:, None, :] - hmm.means[None, :, :]  # (T, K, D)

    d_means = np.einsum("tk,tkd->kd", gamma, diff) / hmm.variances
    # d/d rho with variances = exp(rho):
    #   sum_t gamma * ((x - mu)^2 / v - 1) / 2
    d_logvar = 0.5 * (
        np.einsum("tk,tkd->kd", gamma, diff * diff) / hmm.variances
        - gamma.sum(axis=0)[:, None]
    )
    d_trans = xi_sum - xi_sum.sum(axis=1, keepdims=True) * hmm.trans
    d_init = gamma[0] - hmm.pi
    return np.concatenate(
        [d_trans.ravel(), d_means.ravel(), d_logvar.ravel(), d_init]
    )


def hmm_to_unconstrained(hmm: HmmParams) -> np.ndarray:
    """Coordinates whose softmax/exp reconstruction recovers the model."""
    return np.concatenate(
        [
            np.log(np.maximum(hmm.trans, _LOG_TINY)).ravel(),
            hmm.means.ravel(),
            np.log(hmm.variances).ravel(),
            np.log(np.maximum(hmm.pi, _LOG_TINY)),
        ]
    )


def hmm_from_unconstrained(vec: np.ndarray, n_states: int, dim: int) -> HmmParams:
    if vec.shape != (score_length(n_states, dim),):
        raise ValueError("coordinate vector has wrong length")
    k = n_states
    tau = vec[: k * k].reshape(k, k)
    means = vec[k * k : k * k + k * dim].reshape(k, dim)
    rho = vec[k * k + k * dim : k * k + 2 * k * dim].reshape(k, dim)
    logits = vec[k * k + 2 * k * dim :]

    def softmax(a: np.ndarray, axis: int) -> np.ndarray:
        e = np.exp(a - a.max(axis=axis, keepdims=True))
        return e / e.sum(axis=axis, keepdims=True)

    return HmmParams(
        pi=softmax(logits, axis=0),
        trans=softmax(tau, axis=1),
        means=means,
        variances=np.maximum(np.exp(rho), VAR_FLOOR),
    )


def fisher_kernel(
    g1: np.ndarray, g2: np.ndarray, scale: np.ndarray | None = None
) -> float:
    """Inner product of two score vectors, optionally whitened per coordinate."""
    if g1.shape != g2.shape:
        raise ValueError(f"score length mismatch: {g1.shape} vs {g2.shape}")
    if scale is not None:
        if scale.shape != g1.shape:
            raise ValueError("scale must match score length")
        if np.any(scale <= 0):
            raise ValueError("scale entries must be positive")
        g1 = g1 / scale
        g2 = g2 / scale
    return float(np.dot(g1, g2))


def score_scales(scores: list[np.ndarray], floor: float = 1e-8) -> np.ndarray:
    """Per-coordinate RMS of a score collection, floored away from zero.

    Dividing scores by this before the inner product approximates the
    Fisher-information whitening with a diagonal estimate.
    """
    if not scores:
        raise ValueError("need at least one score vector")
    stacked = np.stack(scores)
    return np.maximum(np.sqrt(np.mean(stacked * stacked, axis=0)), floor)


def pair_vector(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """Order-free concatenation of two score vectors (lexicographic by bytes)."""
    a, b = (g1, g2) if g1.tobytes() <= g2.tobytes() else (g2, g1)
    return np.concatenate([a, b])


def fisher_vector_score(
    query: np.ndarray, references: list[tuple[np.ndarray, bool]]
) -> float:
    """Negated distance from a query pair vector to the nearest reference pair
    vector that is labeled similar.

    `references` holds (pair_vector, is_similar) entries; dissimilar entries
    are allowed but ignored here, so one reference bank can serve both signs.
    """
    best = None
    for vec, is_similar in references:
        if not is_similar:
            continue
        if vec.shape != query.shape:
            raise ValueError("reference vector length does not match query")
        d = float(np.linalg.norm(query - vec))
        if best is None or d < best:
            best = d
    if best is None:
        raise ValueError("no similar reference pairs available")
    return -best


def hmm_sample(hmm: HmmParams, length: int, rng: Rng) -> np.ndarray:
    """Draw one (length, dim) observation sequence from the model."""
    if length < 1:
        raise ValueError("length must be >= 1")
    frames = np.empty((length, hmm.dim))
    state = _categorical(rng, hmm.pi)
    std = np.sqrt(hmm.variances)
    for t in range(length):
        if t > 0:
            state = _categorical(rng, hmm.trans[state])
        frames[t] = hmm.means[state] + std[state] * rng.normal(size=hmm.dim)
    return frames


def _categorical(rng: Rng, p: np.ndarray) -> int:
    u = rng.uniform()
    acc = 0.0
    for i, pi in enumerate(p):
        acc += pi
        if u < acc:
            return i
    return len(p) - 1


def save_hmm(hmm: HmmParams, path: str | Path, seed: int | None = None) -> None:
    payload = {
        "format": "seqsim-hmm",
        "version": 1,
        "n_states": hmm.n_states,
        "dim": hmm.dim,
        "seed": seed,
        "pi": hmm.pi.tolist(),
        "trans": hmm.trans.tolist(),
        "means": hmm.means.tolist(),
        "variances": hmm.variances.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_hmm(path: str | Path) -> HmmParams:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != "seqsim-hmm":
        raise ValueError(f"{path}: not an HMM checkpoint")
    return HmmParams(
        pi=np.array(payload["pi"], dtype=np.float64),
        trans=np.array(payload["trans"], dtype=np.float64),
        means=np.array(payload["means"], dtype=np.float64),
        variances=np.array(payload["variances"], dtype=np.float64),
    )
