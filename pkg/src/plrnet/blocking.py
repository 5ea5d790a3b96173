"""Alternating block index partitions and a complexity diagnostic.

For dependent series, analyses often split {1..n} into 2b alternating
blocks of length a plus a short remainder; odd-position blocks are then
far enough apart to behave almost independently.  Only the index sets are
computed here.  The module also provides a Monte Carlo estimate of the
empirical Rademacher complexity of a function class on fixed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .estimator import evaluate_regressor
from .mlp import Network

__all__ = [
    "BlockPartition",
    "default_block_length",
    "empirical_rademacher",
    "make_partition",
]

IndexRange = tuple[int, int]  # 1-based inclusive (start, end)


@dataclass(frozen=True)
class BlockPartition:
    """Disjoint cover of {1..n} by alternating length-a blocks.

    Odd blocks j occupy [2(j-1)a+1, (2j-1)a], even blocks j occupy
    [(2j-1)a+1, 2ja] for j = 1..b with b = floor(n / 2a); the remainder
    [2ba+1, n] has fewer than 2a elements (possibly none).  All ranges are
    1-based inclusive.
    """

    a: int
    b: int
    odd_blocks: tuple[IndexRange, ...]
    even_blocks: tuple[IndexRange, ...]
    remainder: IndexRange | None
    n: int

    def indices(self, rng: IndexRange) -> np.ndarray:
        """The 1-based indices inside one range."""
        return np.arange(rng[0], rng[1] + 1)

    def rows(self) -> list[tuple[str, int, int, int]]:
        """(block_type, j, start, end) rows, printable as CSV."""
        out: list[tuple[str, int, int, int]] = []
        for j, (s, e) in enumerate(self.odd_blocks, start=1):
            out.append(("odd", j, s, e))
        for j, (s, e) in enumerate(self.even_blocks, start=1):
            out.append(("even", j, s, e))
        if self.remainder is not None:
            out.append(("remainder", 0, self.remainder[0], self.remainder[1]))
        return out


def make_partition(n: int, a: int) -> BlockPartition:
    """Partition {1..n} into alternating blocks of length ``a``.

    Requires 1 <= a <= n/2 so at least one odd/even pair fits.
    """
    n = int(n)
    a = int(a)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 1 <= a <= n // 2:
        raise ValueError(f"block length a={a} must satisfy 1 <= a <= n/2 (n={n})")
    b = n // (2 * a)
    odd = tuple((2 * (j - 1) * a + 1, (2 * j - 1) * a) for j in range(1, b + 1))
    even = tuple(((2 * j - 1) * a + 1, 2 * j * a) for j in range(1, b + 1))
    rem_start = 2 * b * a + 1
    remainder = (rem_start, n) if rem_start <= n else None
    return BlockPartition(
        a=a, b=b, odd_blocks=odd, even_blocks=even, remainder=remainder, n=n
    )


def default_block_length(n: int) -> int:
    """ceil(2 ln n), clamped into [1, floor(n/2)]."""
    if n < 2:
        raise ValueError("n must be >= 2")
    raw = math.ceil(2.0 * math.log(n))
    return max(1, min(raw, n // 2))


def _ascend(net: Network, x: np.ndarray, xi: np.ndarray, steps: int, step_size: float):
    """Plain gradient ascent on mean(xi * f(x)) over the network parameters."""
    net = Network(net.arch, net.params.copy())
    n = x.shape[0]
    best_val = float(np.mean(xi * net.predict(x)))
    best = net.params.copy()
    for _ in range(steps):
        grad = np.zeros(len(net.params))
        for i in range(n):
            grad += net.gradient(x[i], upstream=xi[i] / n).flat
        net.params.flat += step_size * grad
        val = float(np.mean(xi * net.predict(x)))
        if val > best_val:
            best_val = val
            best = net.params.copy()
    return best_val


def empirical_rademacher(
    fn_class: Sequence[Callable] | Callable,
    data_x,
    n_rademacher_draws: int = 200,
    n_restarts: int = 3,
    seed: int = 0,
    *,
    enumerate_signs: bool = False,
    ascent_steps: int = 0,
    ascent_step_size: float = 0.05,
) -> float:
    """Monte Carlo estimate of the empirical Rademacher complexity.

    For each draw of i.i.d. +/-1 signs, the supremum of the signed
    empirical average mean(xi * f(x)) over the class is approximated and
    the maxima are averaged over draws.  ``fn_class`` is either a finite
    sequence of candidate functions (the supremum is then exact over the
    sequence) or a zero-argument-with-rng sampler ``sampler(rng)`` yielding
    candidates; sampled networks can optionally be refined by
    ``ascent_steps`` of gradient ascent.  Because the supremum is only
    searched, the result is a lower bound for richer classes.

    With ``enumerate_signs=True`` all 2^n sign vectors are averaged
    exactly (n <= 20) and ``n_rademacher_draws`` is ignored.
    """
    x = np.ascontiguousarray(data_x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    rng = np.random.default_rng(seed)

    if enumerate_signs:
        if n > 20:
            raise ValueError("sign enumeration is limited to n <= 20")
        patterns = np.array(
            [[1.0 if (k >> t) & 1 else -1.0 for t in range(n)] for k in range(2**n)]
        )
    else:
        if n_rademacher_draws < 1:
            raise ValueError("need at least one sign draw")
        patterns = rng.choice([-1.0, 1.0], size=(n_rademacher_draws, n))

    sampler = callable(fn_class) and not isinstance(fn_class, Sequence)
    if not sampler:
        candidates = list(fn_class)
        if not candidates:
            raise ValueError("empty function class")
        vals = np.stack([evaluate_regressor(f, x) for f in candidates])  # (k, n)
        sups = (patterns @ vals.T / n).max(axis=1)
        return float(sups.mean())

    total = 0.0
    for xi in patterns:
        best = -np.inf
        for _ in range(max(1, n_restarts)):
            cand = fn_class(rng)
            if isinstance(cand, Network) and ascent_steps > 0:
                val = _ascend(cand, x, xi, ascent_steps, ascent_step_size)
            else:
                val = float(np.mean(xi * evaluate_regressor(cand, x)))
            best = max(best, val)
        total += best
    return total / patterns.shape[0]
