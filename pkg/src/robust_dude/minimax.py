"""Expected-loss functionals of sliding-window denoisers and the minimax denoiser.

Index convention: a window carries the *observed* center symbol z and the
denoiser row for that window is a distribution over reconstructions a.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    Channel,
    ChannelSet,
    DimensionMismatch,
    EmptySet,
    LossMatrix,
    WindowedDenoiser,
    all_windows,
)
from .empirical import as_tensor, context_table
from .lp import MAX_ITER, PIVOT_TOL, solve_min_max_simplex

TIE_TOL = 1e-12


def clamped_posterior(ch: Channel, q_center) -> np.ndarray:
    """Inverse-channel estimate of the clean-symbol law, negatives clipped to 0."""
    p = ch.inverse_transpose @ np.asarray(q_center, dtype=float)
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0:
        return np.full(ch.m, 1.0 / ch.m)
    return p / total


def _joint_weights(p: np.ndarray, ch: Channel, loss: LossMatrix) -> np.ndarray:
    """``out[z, a] = sum_x p[x] * ch(x, z) * loss(x, a)``."""
    return np.einsum("x,xz,xa->za", p, ch.matrix, loss.matrix)


def f_k_context_loss(q_center, ch: Channel, slice_, loss: LossMatrix) -> float:
    """Expected loss within one context.

    `slice_` is an m x m array whose row z is the reconstruction law used when
    the observed center is z.
    """
    slice_ = np.asarray(slice_, dtype=float)
    if slice_.shape != (ch.m, ch.m) or loss.m != ch.m or len(q_center) != ch.m:
        raise DimensionMismatch("context loss arguments disagree on alphabet size")
    p = clamped_posterior(ch, q_center)
    return float(np.sum(_joint_weights(p, ch, loss) * slice_))


def _window_layout(m: int, k: int):
    """For every window index: its context index and its center symbol."""
    windows = all_windows(m, 2 * k + 1)
    centers = windows[:, k]
    ctx = np.zeros(len(windows), dtype=np.int64)
    for j in list(range(k)) + list(range(k + 1, 2 * k + 1)):
        ctx = ctx * m + windows[:, j]
    return ctx, centers


def cost_tensor(stats, ch: Channel, loss: LossMatrix, clamp: bool = True) -> np.ndarray:
    """Linear coefficients of the expected loss in the denoiser table.

    ``G(f) = sum_{w,a} cost[w, a] * f[w, a]``.  With ``clamp=False`` the raw
    inverse-channel posteriors are used, which keeps G linear in the statistics.
    """
    t = as_tensor(stats)
    m = t.shape[0]
    if ch.m != m or loss.m != m:
        raise DimensionMismatch("statistics, channel and loss disagree on alphabet size")
    k = t.ndim // 2
    weights, cond = context_table(t)
    post = cond @ ch.inverse  # rows: Pi^{-T} q for each context
    if clamp:
        post = np.clip(post, 0.0, None)
        post /= post.sum(axis=1, keepdims=True)
    # per_ctx[c, z, a] = sum_x post[c, x] * Pi(x, z) * Lambda(x, a)
    per_ctx = np.einsum("cx,xz,xa->cza", post, ch.matrix, loss.matrix) * weights[:, None, None]
    ctx, centers = _window_layout(m, k)
    return per_ctx[ctx, centers]


def g_k_expected_loss(stats, ch: Channel, f: WindowedDenoiser, loss: LossMatrix, clamp: bool = True) -> float:
    t = as_tensor(stats)
    if t.ndim != f.width:
        raise DimensionMismatch(f"statistics order {t.ndim} does not match window width {f.width}")
    return float(np.sum(cost_tensor(t, ch, loss, clamp) * f.table))


def j_k_worst_case(stats, delta: ChannelSet, f: WindowedDenoiser, loss: LossMatrix) -> tuple[float, int]:
    """Worst expected loss over the channel set, with the lowest-index maximizer."""
    if len(delta) == 0:
        raise EmptySet("channel set is empty")
    values = np.array([g_k_expected_loss(stats, ch, f, loss) for ch in delta])
    return float(values.max()), int(np.argmax(values))


@dataclass(frozen=True)
class MinimaxSolution:
    denoiser: WindowedDenoiser
    value: float
    active_channels: tuple[int, ...]
    channel_losses: tuple[float, ...]
    iterations: int
    status: str = "optimal"
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "active_channels": list(self.active_channels),
            "channel_losses": list(self.channel_losses),
            "iterations": self.iterations,
            "status": self.status,
            "denoiser": self.denoiser.to_dict(),
        }


def solve_costs(costs: np.ndarray, k: int, live: np.ndarray | None = None, active_tol: float = 1e-6):
    """Minimax over denoiser tables for per-channel linear cost tensors.

    Windows marked not `live` get the uniform row.
    """
    costs = np.asarray(costs, dtype=float)
    n_ch, n_win, m = costs.shape
    if n_ch == 0:
        raise EmptySet("no channels to solve over")
    if live is None:
        live = np.ones(n_win, dtype=bool)
    table = np.full((n_win, m), 1.0 / m)
    iterations = 0
    if live.any():
        f_live, _, iterations = solve_min_max_simplex(costs[:, live, :], PIVOT_TOL, MAX_ITER)
        table[live] = f_live
    denoiser = WindowedDenoiser(k, table)
    losses = np.einsum("jwa,wa->j", costs, denoiser.table)
    value = float(losses.max())
    active = tuple(int(j) for j in np.flatnonzero(losses >= value - active_tol))
    return MinimaxSolution(denoiser, value, active, tuple(float(v) for v in losses), iterations)


def solve_minimax(stats, delta: ChannelSet, k: int, loss: LossMatrix) -> MinimaxSolution:
    """Sliding-window denoiser of order k minimizing the worst expected loss over `delta`."""
    if len(delta) == 0:
        raise EmptySet("channel set is empty")
    t = as_tensor(stats)
    if t.ndim != 2 * k + 1:
        raise DimensionMismatch(f"need statistics of order {2 * k + 1}, got {t.ndim}")
    weights, _ = context_table(t)
    ctx, _ = _window_layout(t.shape[0], k)
    costs = np.stack([cost_tensor(t, ch, loss) for ch in delta])
    return solve_costs(costs, k, live=weights[ctx] > 0)


def dude_rule(stats, ch: Channel, k: int, loss: LossMatrix) -> WindowedDenoiser:
    """Known-channel Bayes response per window, ties to the smallest symbol."""
    t = as_tensor(stats)
    if t.ndim != 2 * k + 1:
        raise DimensionMismatch(f"need statistics of order {2 * k + 1}, got {t.ndim}")
    m = t.shape[0]
    _, cond = context_table(t)
    ctx, centers = _window_layout(m, k)
    table = np.zeros((len(ctx), m))
    for w, (c, z) in enumerate(zip(ctx, centers)):
        p = clamped_posterior(ch, cond[c])
        scores = _joint_weights(p, ch, loss)[z]
        table[w, int(np.flatnonzero(scores <= scores.min() + TIE_TOL)[0])] = 1.0
    return WindowedDenoiser(k, table)
