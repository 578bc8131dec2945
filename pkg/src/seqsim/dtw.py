"""Dynamic time warping: exact dynamic-programming alignment cost and a
similarity score usable for ranking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeSeries

LOCAL_DISTANCES = ("euclidean", "squared-euclidean")


@dataclass
class DtwResult:
    cost: float
    path_length: int
    path: list[tuple[int, int]] | None = None


def _local_row(frames2: np.ndarray, frame1: np.ndarray, local: str) -> np.ndarray:
    diff = frames2 - frame1
    sq = np.einsum("ij,ij->i", diff, diff)
    if local == "squared-euclidean":
        return sq
    return np.sqrt(sq)


def dtw(
    s1: TimeSeries,
    s2: TimeSeries,
    local: str = "euclidean",
    band: int | None = None,
    return_path: bool = False,
) -> DtwResult:
    """Minimal cumulative frame distance over monotone alignments.

    Standard boundary conditions: the path starts at the first frame pair and
    ends at the last. `band` restricts |j - i*slope| to a Sakoe-Chiba style
    corridor for speed on long series; None means unconstrained. Cost-only
    mode keeps two DP rows; the full path is materialized on request.

    Ties between predecessors break diagonal, then vertical, then horizontal,
    which also fixes the reported path_length deterministically.
    """
    if local not in LOCAL_DISTANCES:
        raise ValueError(f"local distance must be one of {LOCAL_DISTANCES}")
    if s1.dim != s2.dim:
        raise ValueError(f"dim mismatch: {s1.dim} vs {s2.dim}")
    if band is not None and band < 0:
        raise ValueError("band must be >= 0")

    t1, t2 = s1.length, s2.length
    slope = (t2 - 1) / (t1 - 1) if t1 > 1 else 0.0
    inf = np.inf

    back = np.zeros((t1, t2), dtype=np.uint8) if return_path else None

    prev_cost = np.full(t2, inf)
    prev_steps = np.zeros(t2, dtype=np.int64)
    for i in range(t1):
        row = _local_row(s2.frames, s1.frames[i], local)
        if band is not None:
            center = int(round(i * slope))
            lo, hi = max(0, center - band), min(t2, center + band + 1)
        else:
            lo, hi = 0, t2
        cur_cost = np.full(t2, inf)
        cur_steps = np.zeros(t2, dtype=np.int64)
        for j in range(lo, hi):
            if i == 0 and j == 0:
                cur_cost[0] = row[0]
                cur_steps[0] = 1
                continue
            diag = prev_cost[j - 1] if j > 0 else inf
            up = prev_cost[j]
            left = cur_cost[j - 1] if j > 0 else inf
            best = min(diag, up, left)
            if best == inf:
                continue
            if best == diag:
                cur_steps[j] = prev_steps[j - 1] + 1
                move = 1
            elif best == up:
                cur_steps[j] = prev_steps[j] + 1
                move = 2
            else:
                cur_steps[j] = cur_steps[j - 1] + 1
                move = 3
            cur_cost[j] = row[j] + best
            if back is not None:
                back[i, j] = move
        prev_cost, prev_steps = cur_cost, cur_steps

    cost = float(prev_cost[t2 - 1])
    if not np.isfinite(cost):
        raise ValueError("band too narrow: no feasible alignment path")
    steps = int(prev_steps[t2 - 1])

    path = None
    if return_path:
        path = []
        i, j = t1 - 1, t2 - 1
        while True:
            path.append((i, j))
            if i == 0 and j == 0:
                break
            move = back[i, j]
            if move == 1:
                i, j = i - 1, j - 1
            elif move == 2:
                i -= 1
            else:
                j -= 1
        path.reverse()
    return DtwResult(cost=cost, path_length=steps, path=path)


def dtw_similarity(
    s1: TimeSeries,
    s2: TimeSeries,
    local: str = "euclidean",
    normalize: bool = False,
    band: int | None = None,
) -> float:
    """Negated alignment cost (larger means more similar), optionally divided
    by the alignment path length."""
    result = dtw(s1, s2, local=local, band=band)
    if normalize:
        return -result.cost / result.path_length
    return -result.cost
