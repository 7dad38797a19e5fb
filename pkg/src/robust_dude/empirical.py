"""Sliding-window counts of a noisy sequence and the context laws derived from them."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, DudeError, JointDistribution, all_windows, as_sequence, window_string


class SequenceTooShort(DudeError):
    pass


def window_indices(z: np.ndarray, m: int, k: int) -> np.ndarray:
    """Base-m index of the window centered at each position t = k..n-k-1 (0-based)."""
    n = len(z)
    width = 2 * k + 1
    if n < width:
        raise SequenceTooShort(f"need n > 2k, got n={n}, k={k}")
    idx = np.zeros(n - 2 * k, dtype=np.int64)
    for j in range(width):
        idx = idx * m + z[j : n - 2 * k + j]
    return idx


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    """Integer window counts of order 2k+1; probabilities are computed on read."""

    k: int
    m: int
    counts: np.ndarray

    @property
    def width(self) -> int:
        return 2 * self.k + 1

    @property
    def n_windows(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def joint(self) -> JointDistribution:
        return JointDistribution(self.probabilities.reshape((self.m,) * self.width))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["window", "count", "probability"])
        probs = self.probabilities
        for w, c, p in zip(all_windows(self.m, self.width), self.counts, probs):
            writer.writerow([window_string(w), int(c), f"{p:.12g}"])
        return buf.getvalue()


def empirical_joint(z, k: int, m: int | None = None, threads: int = 1) -> EmpiricalStats:
    """Count the n-2k full windows of `z`.

    Edge symbols enter only as context. With ``threads > 1`` the centers are
    split into contiguous ranges and the per-range counts are summed, which
    gives exactly the sequential table.
    """
    z = np.asarray(z, dtype=np.int64)
    if m is None:
        m = max(int(z.max()) + 1, 2) if z.size else 2
    z = as_sequence(z, m)
    k = int(k)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if len(z) <= 2 * k:
        raise SequenceTooShort(f"need n > 2k, got n={len(z)}, k={k}")
    size = m ** (2 * k + 1)
    n_centers = len(z) - 2 * k
    if threads <= 1 or n_centers < 2 * threads:
        counts = np.bincount(window_indices(z, m, k), minlength=size)
    else:
        bounds = np.linspace(0, n_centers, threads + 1).astype(int)

        def count_range(lo_hi):
            lo, hi = lo_hi
            return np.bincount(window_indices(z[lo : hi + 2 * k], m, k), minlength=size)

        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(count_range, zip(bounds[:-1], bounds[1:])))
        counts = np.sum(parts, axis=0)
    counts = counts.astype(np.int64)
    counts.flags.writeable = False
    return EmpiricalStats(k=k, m=m, counts=counts)


def as_tensor(stats) -> np.ndarray:
    """Accept EmpiricalStats, JointDistribution, or a raw tensor."""
    if isinstance(stats, EmpiricalStats):
        return stats.probabilities.reshape((stats.m,) * stats.width)
    if isinstance(stats, JointDistribution):
        return stats.tensor
    return np.asarray(stats, dtype=float)


def context_table(stats) -> tuple[np.ndarray, np.ndarray]:
    """Per-context weights and center conditionals.

    Returns ``(weights, cond)`` where contexts are ordered by the base-m index
    of (left, right), ``weights`` has length m^(2k) and ``cond`` has shape
    (m^(2k), m).  Contexts with zero weight get the uniform conditional.
    """
    t = as_tensor(stats)
    width = t.ndim
    if width % 2 == 0:
        raise DimensionMismatch("context statistics need odd order 2k+1")
    m = t.shape[0]
    k = width // 2
    # move center axis last, then flatten (left, right)
    joint = np.moveaxis(t, k, -1).reshape(m ** (2 * k), m)
    weights = joint.sum(axis=1)
    cond = np.full_like(joint, 1.0 / m)
    seen = weights > 0
    cond[seen] = joint[seen] / weights[seen, None]
    return weights, cond


def _context_index(left, right, m: int) -> int:
    idx = 0
    for s in list(left) + list(right):
        idx = idx * m + int(s)
    return idx


def conditional_center(stats, left=(), right=()) -> np.ndarray:
    """Law of the center symbol given the two-sided context (uniform if unseen)."""
    t = as_tensor(stats)
    k = t.ndim // 2
    if len(left) != k or len(right) != k:
        raise DimensionMismatch(f"context sides must have length {k}")
    _, cond = context_table(t)
    return cond[_context_index(left, right, t.shape[0])]


def context_weights(stats) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """Marginal probability of each two-sided context with positive weight."""
    t = as_tensor(stats)
    m, k = t.shape[0], t.ndim // 2
    weights, _ = context_table(t)
    out = {}
    for ctx, w in zip(all_windows(m, 2 * k), weights):
        if w > 0:
            out[(tuple(int(s) for s in ctx[:k]), tuple(int(s) for s in ctx[k:]))] = float(w)
    return out


def l_inf_distance(p, q) -> float:
    a, b = as_tensor(p), as_tensor(q)
    if a.shape != b.shape:
        raise DimensionMismatch(f"orders differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).max())
