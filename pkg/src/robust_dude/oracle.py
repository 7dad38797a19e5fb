"""Brute-force references used to check the production code paths.

Kept deliberately naive: nothing here calls the LP, the context tables, or the
smoothing code.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import ChannelSet, DudeError, LossMatrix, Singular


class StateSpaceTooLarge(DudeError):
    pass


class NotIrreducible(DudeError):
    pass


def binary_context_loss(alpha: float, delta: float, d0: float, d1: float) -> float:
    """Closed-form Hamming loss in one context for a BSC.

    alpha is P(Z_0 = 1 | context); d0, d1 are the probabilities of saying 1
    when 0 or 1 is observed.
    """
    db, d0b, d1b = 1 - delta, 1 - d0, 1 - d1
    return (
        delta * (1 - alpha - delta) * d1
        + db * (1 - alpha - delta) * d0
        + db * (alpha - delta) * d1b
        + delta * (alpha - delta) * d0b
    ) / (1 - 2 * delta)


def induced_bsc_input(q: float, delta: float) -> float:
    if delta == 0.5:
        raise Singular("BSC(1/2) is not invertible")
    return (q - delta) / (1 - 2 * delta)


@dataclass(frozen=True)
class GridResult:
    point: tuple[float, float]
    value: float
    step: float


def grid_minimax_binary_k0(q, delta: ChannelSet, loss: LossMatrix, step: float = 1e-3) -> GridResult:
    """Exhaustive (d0, d1) grid search of the worst-case BSC loss for k = 0.

    Channels must be BSCs (crossover read from entry (0, 1)); `loss` must be
    Hamming. Ties go to the lexicographically smallest (d0, d1).
    """
    if loss.m != 2 or not np.allclose(loss.matrix, [[0, 1], [1, 0]]):
        raise ValueError("grid oracle handles binary Hamming loss only")
    alpha = float(q[1])
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    d0, d1 = np.meshgrid(grid, grid, indexing="ij")
    worst = np.full(d0.shape, -np.inf)
    for ch in delta:
        worst = np.maximum(worst, binary_context_loss(alpha, float(ch.matrix[0, 1]), d0, d1))
    i, j = np.unravel_index(np.argmin(worst), worst.shape)
    return GridResult((float(grid[i]), float(grid[j])), float(worst[i, j]), step)


def _source_prob(pair, x) -> float:
    src = pair.source
    if src.kind == "iid":
        return float(np.prod(src.p[list(x)]))
    p = src.p[x[0]]
    for a, b in zip(x, x[1:]):
        p *= src.transition[a, b]
    return float(p)


def exhaustive_expected_loss(pair, f, n: int, loss: LossMatrix):
    """Enumerate every (x^n, z^n).

    Returns ``(E[L_f], cond)`` where ``cond(z)`` is E[L_f | Z^n = z];
    ``cond.prob`` maps each z to its probability.
    """
    m = pair.channel.m
    if m ** (2 * n) > 2**24:
        raise StateSpaceTooLarge(f"{m}^(2*{n}) joint sequences is too many")
    k = f.k
    strides = [m ** (2 * k - j) for j in range(2 * k + 1)]
    seqs = list(itertools.product(range(m), repeat=n))
    px = {x: _source_prob(pair, x) for x in seqs}
    chan = pair.channel.matrix

    def loss_of(x, z):
        total = 0.0
        for t in range(k, n - k):
            w = sum(s * z[t - k + j] for j, s in enumerate(strides))
            total += sum(loss.matrix[x[t], a] * f.table[w, a] for a in range(m))
        return total / (n - 2 * k)

    table = {}
    prob = {}
    expected = 0.0
    for z in seqs:
        num = den = 0.0
        for x in seqs:
            p = px[x]
            if p == 0.0:
                continue
            for xi, zi in zip(x, z):
                p *= chan[xi, zi]
            if p == 0.0:
                continue
            num += p * loss_of(x, z)
            den += p
        expected += num
        table[z] = num / den if den > 0 else float("nan")
        prob[z] = den

    def cond(z):
        return table[tuple(int(s) for s in z)]

    cond.prob = prob
    return expected, cond


def markov_stationary(transition, tol: float = 1e-13, max_iter: int = 100_000) -> np.ndarray:
    """Stationary law by power iteration on the lazy chain (I + P) / 2."""
    p = np.asarray(transition, dtype=float)
    m = p.shape[0]
    lazy = 0.5 * (np.eye(m) + p)
    pi = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        nxt = pi @ lazy
        if np.abs(nxt - pi).max() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise NotIrreducible("power iteration did not converge")
    # reducible chains also converge; reject them by reachability
    reach = np.linalg.matrix_power((lazy > 0).astype(np.int64), m) > 0
    if not reach.all():
        raise NotIrreducible("transition matrix is not irreducible")
    return pi / pi.sum()
