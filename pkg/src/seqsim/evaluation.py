"""Evaluation: ranking AUC over labeled pairs, one-shot classification, and
the scorer adapters that put every model behind one callable interface."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import fisher as fisher_mod
from .data import Dataset, PairSet, TimeSeries
from .dtw import dtw_similarity
from .fisher import HmmParams, fisher_kernel, fisher_score, pair_vector
from .model import LogisticParams, SrnParams, embed, logistic_score, similarity
from .numerics import Rng, derive_seed


@dataclass
class Scorer:
    """A named similarity function over two series (higher = more similar)."""

    name: str
    fn: Callable[[TimeSeries, TimeSeries], float]

    def __call__(self, s1: TimeSeries, s2: TimeSeries) -> float:
        return self.fn(s1, s2)


@dataclass
class EvalReport:
    scorer: str
    split: str
    metric: str  # "auc" or "one-shot-accuracy"
    value: float
    n: int  # pairs scored, or queries answered
    seed: int


def auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum identity.

    Equivalent to the probability that a uniformly random positive outranks a
    uniformly random negative, with ties counting half. Single sort; tied
    scores share their average rank, so the result matches the O(n^2)
    pairwise count exactly.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and the same length")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        # 1-based ranks i+1 .. j+1 averaged over the tie group
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    pos_rank_sum = float(ranks[labels].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# Scorer adapters
# ---------------------------------------------------------------------------
# Embedding-style models cache per-series representations keyed by series id,
# so a Scorer instance must not outlive the datasets it is used on.


def srn_scorer(params: SrnParams) -> Scorer:
    name = ("srn" if params.recurrent else "sn") + (
        "-a" if params.pooling == "average" else "-l"
    )
    cache: dict[str, np.ndarray] = {}

    def score(s1: TimeSeries, s2: TimeSeries) -> float:
        for s in (s1, s2):
            if s.id not in cache:
                cache[s.id] = embed(params, s)
        return similarity(params, cache[s1.id], cache[s2.id])

    return Scorer(name=name, fn=score)


def logistic_scorer(params: LogisticParams) -> Scorer:
    return Scorer(
        name="logistic",
        fn=lambda s1, s2: logistic_score(params.weights, params.bias, s1, s2),
    )


def dtw_scorer(
    local: str = "euclidean", normalize: bool = False, band: int | None = None
) -> Scorer:
    return Scorer(
        name="dtw",
        fn=lambda s1, s2: dtw_similarity(
            s1, s2, local=local, normalize=normalize, band=band
        ),
    )


def fisher_kernel_scorer(hmm: HmmParams, scale: np.ndarray | None = None) -> Scorer:
    cache: dict[str, np.ndarray] = {}

    def score(s1: TimeSeries, s2: TimeSeries) -> float:
        for s in (s1, s2):
            if s.id not in cache:
                cache[s.id] = fisher_score(hmm, s)
        return fisher_kernel(cache[s1.id], cache[s2.id], scale=scale)

    return Scorer(name="fisher-kernel", fn=score)


def build_fisher_references(
    hmm: HmmParams,
    dataset: Dataset,
    pairs: PairSet,
    seed: int = 0,
    max_refs: int = 200,
    scale: np.ndarray | None = None,
) -> list[tuple[np.ndarray, bool]]:
    """Reference bank of pair vectors from labeled training pairs."""
    rng = Rng(derive_seed(seed, "fisher-refs"))
    chosen_sim = _subsample(rng, list(pairs.similar), max_refs)
    chosen_dis = _subsample(rng, [(i, j) for i, j, _ in pairs.dissimilar], max_refs)

    cache: dict[int, np.ndarray] = {}

    def score_of(i: int) -> np.ndarray:
        if i not in cache:
            g = fisher_score(hmm, dataset[i])
            cache[i] = g / scale if scale is not None else g
        return cache[i]

    refs = [(pair_vector(score_of(i), score_of(j)), True) for i, j in chosen_sim]
    refs += [(pair_vector(score_of(i), score_of(j)), False) for i, j in chosen_dis]
    return refs


def fisher_vector_scorer(
    hmm: HmmParams,
    references: list[tuple[np.ndarray, bool]],
    scale: np.ndarray | None = None,
) -> Scorer:
    cache: dict[str, np.ndarray] = {}

    def score(s1: TimeSeries, s2: TimeSeries) -> float:
        for s in (s1, s2):
            if s.id not in cache:
                g = fisher_score(hmm, s)
                cache[s.id] = g / scale if scale is not None else g
        query = pair_vector(cache[s1.id], cache[s2.id])
        return fisher_mod.fisher_vector_score(query, references)

    return Scorer(name="fisher-vector", fn=score)


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


def _subsample(rng: Rng, items: list, k: int) -> list:
    """Up to k items without replacement; order is rng-determined."""
    if len(items) <= k:
        return list(items)
    idx = list(range(len(items)))
    rng.shuffle(idx)
    return [items[i] for i in idx[:k]]


def evaluate_pairs(
    scorer: Scorer,
    dataset: Dataset,
    pairs: PairSet,
    seed: int = 0,
    max_pairs: int | None = None,
    split: str = "",
) -> EvalReport:
    """AUC of the scorer at separating similar from dissimilar pairs.

    When max_pairs is set the two pools are subsampled to max_pairs // 2
    each (seeded, without replacement) before scoring.
    """
    similar = list(pairs.similar)
    dissimilar = [(i, j) for i, j, _ in pairs.dissimilar]
    if not similar:
        raise ValueError("pair set has no similar pairs")
    if not dissimilar:
        raise ValueError("pair set has no dissimilar pairs")
    if max_pairs is not None:
        if max_pairs < 2:
            raise ValueError("max_pairs must be >= 2")
        rng = Rng(derive_seed(seed, "eval-pairs"))
        similar = _subsample(rng, similar, max_pairs // 2)
        dissimilar = _subsample(rng, dissimilar, max_pairs // 2)

    scores = []
    labels = []
    for i, j in similar:
        scores.append(scorer(dataset[i], dataset[j]))
        labels.append(True)
    for i, j in dissimilar:
        scores.append(scorer(dataset[i], dataset[j]))
        labels.append(False)
    value = auc(scores, labels)
    return EvalReport(
        scorer=scorer.name,
        split=split,
        metric="auc",
        value=value,
        n=len(scores),
        seed=seed,
    )


def one_shot(
    scorer: Scorer, dataset: Dataset, seed: int = 0, split: str = ""
) -> EvalReport:
    """Leave-one-exemplar-per-class classification accuracy.

    Every class contributes one exemplar per fold (rotating through a seeded
    per-class order); each remaining series is assigned to the class of its
    highest-scoring exemplar, ties going to the smallest class id. The number
    of folds is the largest class size, so every series serves as an exemplar
    at least once. Reported value is the mean fold accuracy.
    """
    by_class: dict[int, list[int]] = {}
    for i, s in enumerate(dataset):
        if s.label is None:
            raise ValueError(f"series {s.id!r} is unlabeled")
        by_class.setdefault(s.label, []).append(i)
    if len(by_class) < 2:
        raise ValueError("one-shot evaluation needs at least two classes")
    for label, members in sorted(by_class.items()):
        if len(members) < 2:
            raise ValueError(f"class {label} has fewer than 2 series")

    rng = Rng(derive_seed(seed, "one-shot"))
    orders: dict[int, list[int]] = {}
    for label in sorted(by_class):
        order = list(by_class[label])
        rng.shuffle(order)
        orders[label] = order

    class_ids = sorted(by_class)
    folds = max(len(m) for m in by_class.values())
    fold_acc = []
    n_queries = 0
    for f in range(folds):
        exemplars = {label: orders[label][f % len(orders[label])] for label in class_ids}
        exemplar_set = set(exemplars.values())
        correct = 0
        total = 0
        for i, s in enumerate(dataset):
            if i in exemplar_set:
                continue
            best_label = None
            best_score = None
            for label in class_ids:
                value = scorer(dataset[exemplars[label]], s)
                # Strict > keeps the first (smallest) class id on ties.
                if best_score is None or value > best_score:
                    best_score = value
                    best_label = label
            correct += int(best_label == s.label)
            total += 1
        fold_acc.append(correct / total)
        n_queries += total
    return EvalReport(
        scorer=scorer.name,
        split=split,
        metric="one-shot-accuracy",
        value=float(np.mean(fold_acc)),
        n=n_queries,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def export_embeddings(params: SrnParams, dataset: Dataset, path: str | Path) -> None:
    """CSV of pooled hidden representations: id, label, h_1..h_H."""
    header = ["id", "label"] + [f"h_{k}" for k in range(1, params.hidden + 1)]
    lines = ["# seqsim-embeddings v1", ",".join(header)]
    for s in dataset:
        h = embed(params, s)
        label = "" if s.label is None else str(s.label)
        lines.append(",".join([s.id, label] + [repr(float(x)) for x in h]))
    Path(path).write_text("\n".join(lines) + "\n")


def save_report(report: EvalReport, path: str | Path) -> None:
    payload = {
        "format": "seqsim-report",
        "version": 1,
        "scorer": report.scorer,
        "split": report.split,
        "metric": report.metric,
        "value": report.value,
        "n": report.n,
        "seed": report.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_report(path: str | Path) -> EvalReport:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != "seqsim-report":
        raise ValueError(f"{path}: not an evaluation report")
    return EvalReport(
        scorer=payload["scorer"],
        split=payload["split"],
        metric=payload["metric"],
        value=payload["value"],
        n=payload["n"],
        seed=payload["seed"],
    )
