"""Low-level numeric helpers shared by every other module.

All arithmetic is float64. Randomness comes from a small counter-based
generator owned by this module so that a seed produces the same stream on
every platform, independent of the host RNG.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = float(2.0**-53)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on an uint64 array (wraps mod 2^64)."""
    with np.errstate(over="ignore"):
        z = x.copy()
        z ^= z >> np.uint64(30)
        z *= _MIX1
        z ^= z >> np.uint64(27)
        z *= _MIX2
        z ^= z >> np.uint64(31)
    return z


def derive_seed(seed: int, tag: str) -> int:
    """Derive an independent 64-bit seed from a root seed and a role tag.

    The tag is FNV-1a hashed, xor-folded into the root seed, and passed
    through the splitmix64 finalizer. Used to fan one experiment seed out
    to data/init/batch/eval streams reproducibly.
    """
    h = _FNV_OFFSET
    for byte in tag.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    mixed = _mix64(np.array([(seed ^ h) & _U64], dtype=np.uint64))
    return int(mixed[0])


class Rng:
    """Deterministic counter-based random stream (splitmix64 over a counter).

    A given seed yields the same sequence of draws on every platform. One
    instance must not be shared across concurrent callers; spawn a child
    stream per role instead.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64
        self._counter = 0

    def _bits(self, n: int) -> np.ndarray:
        """Next n raw uint64 words."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            state = np.uint64(self.seed) + idx * _GOLDEN
        return _mix64(state)

    def spawn(self, tag: str) -> "Rng":
        """Independent child stream; deterministic in (seed, tag)."""
        return Rng(derive_seed(self.seed, tag))

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        """Uniform draw(s) on [lo, hi). Scalar when size is None."""
        n = 1 if size is None else int(np.prod(size))
        u = (self._bits(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        out = lo + (hi - lo) * u
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def integers(self, n: int, size=None):
        """Integer draw(s) uniform on [0, n)."""
        if n <= 0:
            raise ValueError("integers() requires n >= 1")
        m = 1 if size is None else int(np.prod(size))
        u = (self._bits(m) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        out = np.minimum((u * n).astype(np.int64), n - 1)
        if size is None:
            return int(out[0])
        return out.reshape(size)

    def normal(self, size=None):
        """Standard normal draw(s) via Box-Muller."""
        n = 1 if size is None else int(np.prod(size))
        pairs = (n + 1) // 2
        bits = self._bits(2 * pairs)
        # u1 in (0, 1] so the log is finite
        u1 = ((bits[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (bits[pairs:] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.integers(i + 1)
            items[i], items[j] = items[j], items[i]


def uniform_init(rng: Rng, rows: int, cols: int, lo: float, hi: float) -> np.ndarray:
    """Matrix with i.i.d. entries uniform on [lo, hi]; deterministic in the rng."""
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("uniform_init bounds must be finite")
    if not lo < hi:
        raise ValueError(f"uniform_init requires lo < hi, got [{lo}, {hi}]")
    return rng.uniform(lo, hi, size=(rows, cols))


def stable_sigmoid(x: float) -> float:
    """Logistic function computed branch-wise so extreme logits cannot overflow."""
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return float(e / (1.0 + e))


def softplus(x: float) -> float:
    """log(1 + e^x) without overflow; used for cross-entropy from a logit."""
    if x > 0.0:
        return float(x + np.log1p(np.exp(-x)))
    return float(np.log1p(np.exp(x)))


def clip_elementwise(g: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Clamp every entry of g to [lo, hi]."""
    if lo > hi:
        raise ValueError(f"clip bounds inverted: [{lo}, {hi}]")
    return np.clip(g, lo, hi)


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector.

    Test oracle only: O(len(x)) evaluations of f, accuracy O(eps^2).
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += eps
        xm = x.copy()
        xm[i] -= eps
        fp = float(f(xp))
        fm = float(f(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value at coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * eps)
    return grad
