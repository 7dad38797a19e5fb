"""Loss measurement, the worst-case performance criterion, and concentration bounds."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Channel, DimensionMismatch, DudeError, LossMatrix, WindowedDenoiser, as_sequence, prob_vector
from .empirical import SequenceTooShort, empirical_joint, window_indices
from .minimax import g_k_expected_loss, solve_costs


class ZeroLikelihood(DudeError):
    pass


class LengthMismatch(DudeError):
    pass


class EmptyList(DudeError):
    pass


@dataclass(frozen=True, eq=False)
class SourceModel:
    """Clean-sequence law: iid with marginal `p`, or a first-order Markov chain."""

    kind: str
    p: np.ndarray
    transition: np.ndarray | None = None

    @classmethod
    def iid(cls, p) -> "SourceModel":
        return cls("iid", prob_vector(p))

    @classmethod
    def markov(cls, transition, init=None) -> "SourceModel":
        trans = np.asarray(transition, dtype=float)
        if trans.ndim != 2 or trans.shape[0] != trans.shape[1]:
            raise DimensionMismatch("transition matrix must be square")
        if np.any(trans < 0) or np.any(np.abs(trans.sum(axis=1) - 1) > 1e-12):
            raise ValueError("transition rows must be probability vectors")
        if init is None:
            from .oracle import markov_stationary

            init = markov_stationary(trans)
        return cls("markov", prob_vector(init), trans)

    @property
    def m(self) -> int:
        return len(self.p)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        if self.kind == "iid":
            return np.minimum(np.searchsorted(np.cumsum(self.p), u, side="right"), self.m - 1)
        cdf = np.cumsum(self.transition, axis=1)
        x = np.empty(n, dtype=np.int64)
        state = min(int(np.searchsorted(np.cumsum(self.p), u[0], side="right")), self.m - 1)
        x[0] = state
        for t in range(1, n):
            state = min(int(np.searchsorted(cdf[state], u[t], side="right")), self.m - 1)
            x[t] = state
        return x

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "p": self.p.tolist()}
        if self.transition is not None:
            d["transition"] = self.transition.tolist()
        return d


@dataclass(frozen=True, eq=False)
class SourceChannelPair:
    source: SourceModel
    channel: Channel

    def __post_init__(self):
        if self.source.m != self.channel.m:
            raise DimensionMismatch("source and channel alphabets differ")

    @property
    def label(self) -> str:
        return self.channel.label or "channel"


def pass_through(x, ch: Channel, rng: np.random.Generator) -> np.ndarray:
    """Corrupt `x` symbol by symbol through `ch`, one uniform per position."""
    x = as_sequence(x, ch.m)
    u = rng.random(len(x))
    cdf = np.cumsum(ch.matrix, axis=1)
    z = (u[:, None] >= cdf[x][:, :-1]).sum(axis=1)
    return z.astype(np.int64)


def simulate_pair(pair: SourceChannelPair, n: int, rng: np.random.Generator):
    x = pair.source.sample(n, rng)
    return x, pass_through(x, pair.channel, rng)


def _loss_rows(f: WindowedDenoiser, z: np.ndarray, loss: LossMatrix) -> np.ndarray:
    """Row t: expected loss of the reconstruction at center t for each clean symbol."""
    rows = f.table[window_indices(z, f.m, f.k)]
    return rows @ loss.matrix.T


def realized_loss(x, z, f: WindowedDenoiser, loss: LossMatrix) -> float:
    """Average expected loss of `f` against the clean sequence over the n-2k full windows."""
    x = as_sequence(x, f.m)
    z = as_sequence(z, f.m)
    if len(x) != len(z):
        raise LengthMismatch("clean and noisy sequences differ in length")
    n, k = len(z), f.k
    if n <= 2 * k:
        raise SequenceTooShort(f"need n > 2k, got n={n}, k={k}")
    per = _loss_rows(f, z, loss)
    return float(per[np.arange(n - 2 * k), x[k : n - k]].mean())


def forward_backward(trans: np.ndarray, init: np.ndarray, emissions: np.ndarray) -> np.ndarray:
    """Smoothed state posteriors with per-step renormalization.

    `emissions[t, x]` is the likelihood of observation t under state x.
    """
    n, m = emissions.shape
    alpha = np.empty((n, m))
    scale = np.empty(n)
    a = init * emissions[0]
    for t in range(n):
        if t:
            a = (alpha[t - 1] @ trans) * emissions[t]
        c = a.sum()
        if c <= 0:
            raise ZeroLikelihood(f"observation at position {t} has zero likelihood")
        alpha[t] = a / c
        scale[t] = c
    beta = np.ones(m)
    post = np.empty((n, m))
    post[-1] = alpha[-1]
    for t in range(n - 2, -1, -1):
        beta = trans @ (emissions[t + 1] * beta) / scale[t + 1]
        g = alpha[t] * beta
        post[t] = g / g.sum()
    return post


def posteriors(pair: SourceChannelPair, z) -> np.ndarray:
    """``P(X_t = x | Z^n = z)`` for every position, shape (n, m)."""
    z = as_sequence(z, pair.channel.m)
    emissions = pair.channel.matrix[:, z].T
    src = pair.source
    if src.kind == "iid":
        joint = emissions * src.p
        norm = joint.sum(axis=1, keepdims=True)
        if np.any(norm <= 0):
            raise ZeroLikelihood("observed sequence is impossible under this pair")
        return joint / norm
    return forward_backward(src.transition, src.p, emissions)


def conditional_expected_loss(pair: SourceChannelPair, z, f: WindowedDenoiser, loss: LossMatrix, post=None) -> float:
    z = as_sequence(z, f.m)
    n, k = len(z), f.k
    if post is None:
        post = posteriors(pair, z)
    per = _loss_rows(f, z, loss)
    return float(np.einsum("tx,tx->", post[k : n - k], per) / (n - 2 * k))


def worst_case_loss(pairs, z, f: WindowedDenoiser, loss: LossMatrix) -> tuple[float, int]:
    if not pairs:
        raise EmptyList("need at least one source-channel pair")
    values = [conditional_expected_loss(p, z, f, loss) for p in pairs]
    return float(max(values)), int(np.argmax(values))


def benchmark_costs(pairs, z, k: int, loss: LossMatrix):
    """Per-pair linear cost tensors of the conditional expected loss in the denoiser table."""
    m = loss.m
    z = as_sequence(z, m)
    n = len(z)
    if n <= 2 * k:
        raise SequenceTooShort(f"need n > 2k, got n={n}, k={k}")
    idx = window_indices(z, m, k)
    n_win = m ** (2 * k + 1)
    costs = np.zeros((len(pairs), n_win, m))
    for j, pair in enumerate(pairs):
        expected = posteriors(pair, z)[k : n - k] @ loss.matrix  # [t, a]
        for a in range(m):
            costs[j, :, a] = np.bincount(idx, weights=expected[:, a], minlength=n_win)
    costs /= n - 2 * k
    live = np.bincount(idx, minlength=n_win) > 0
    return costs, live


def benchmark_mu(pairs, z, k: int, loss: LossMatrix):
    """Best worst-case conditional loss over all order-k denoisers; returns (value, denoiser)."""
    if not pairs:
        raise EmptyList("need at least one source-channel pair")
    costs, live = benchmark_costs(pairs, z, k, loss)
    sol = solve_costs(costs, k, live)
    return sol.value, sol.denoiser


def _log_lemma1(n, k, delta, max_loss, inv_norm, m):
    width = 2 * k + 1
    return (
        math.log(2 * width)
        + width * math.log(m)
        - 2 * delta**2 * (n - 2 * k) / (width * m ** (4 * k + 4) * (max_loss * inv_norm) ** 2)
    )


def _log_lemma2(n, k, delta, max_loss, inv_norm, m):
    prefactor = m ** (2 * k + 2) * inv_norm * max_loss / (delta / 2)
    return math.log(prefactor) + _log_lemma1(n, k, delta / 2, max_loss, inv_norm, m)


def _cap(log_value: float) -> float:
    return 1.0 if log_value >= 0 else math.exp(log_value)


def lemma1_bound(n: int, k: int, delta: float, loss: LossMatrix, inv_norm: float) -> float:
    """Bound on P(|G_k(Q_hat) - L_f| > delta), capped at 1."""
    if delta <= 0 or n <= 2 * k:
        return 1.0
    return _cap(_log_lemma1(n, k, delta, loss.max_loss, inv_norm, loss.m))


def lemma2_bound(n: int, k: int, delta: float, loss: LossMatrix, inv_norm: float) -> float:
    """Bound on P(|G_k(Q_hat) - E[L_f | Z]| > delta), capped at 1."""
    if delta <= 0 or n <= 2 * k:
        return 1.0
    return _cap(_log_lemma2(n, k, delta, loss.max_loss, inv_norm, loss.m))


def lemma4_bound(n: int, k: int, delta: float, loss: LossMatrix, inv_norm: float, set_size: int) -> float:
    """Uniform-over-denoisers version for a finite channel family, capped at 1."""
    if delta <= 0 or n <= 2 * k:
        return 1.0
    m, lmax = loss.m, loss.max_loss
    power = m ** (2 * k + 2)
    log_value = (
        math.log(set_size)
        + power * math.log(2 * lmax * (1 + power * inv_norm) / delta)
        + _log_lemma2(n, k, delta / 2, lmax, inv_norm, m)
    )
    return _cap(log_value)


@dataclass
class EvalReport:
    realized_loss: float | None
    pair_labels: list[str]
    pair_losses: list[float]
    worst_case: float
    worst_index: int
    benchmark: float | None = None
    bounds: dict = field(default_factory=dict)

    @property
    def regret(self) -> float | None:
        return None if self.benchmark is None else self.worst_case - self.benchmark

    def to_dict(self) -> dict:
        return {
            "realized_loss": self.realized_loss,
            "pairs": [{"label": l, "conditional_loss": v} for l, v in zip(self.pair_labels, self.pair_losses)],
            "worst_case": self.worst_case,
            "worst_index": self.worst_index,
            "benchmark_mu": self.benchmark,
            "regret": self.regret,
            "bounds": self.bounds,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pair", "conditional_loss", "worst_case", "benchmark_mu", "realized_loss"])
        for label, v in zip(self.pair_labels, self.pair_losses):
            w.writerow([label, f"{v:.12g}", f"{self.worst_case:.12g}", _fmt(self.benchmark), _fmt(self.realized_loss)])
        return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else f"{v:.12g}"


def evaluate(pairs, z, f: WindowedDenoiser, loss: LossMatrix, x=None, with_benchmark: bool = True) -> EvalReport:
    values = [conditional_expected_loss(p, z, f, loss) for p in pairs]
    if not values:
        raise EmptyList("need at least one source-channel pair")
    report = EvalReport(
        realized_loss=None if x is None else realized_loss(x, z, f, loss),
        pair_labels=[p.label for p in pairs],
        pair_losses=values,
        worst_case=max(values),
        worst_index=int(np.argmax(values)),
    )
    if with_benchmark:
        report.benchmark, _ = benchmark_mu(pairs, z, f.k, loss)
    return report


@dataclass
class ConcentrationReport:
    n: int
    k: int
    deltas: list[float]
    gaps_loss: np.ndarray
    gaps_cond: np.ndarray | None
    exceed_loss: list[float]
    exceed_cond: list[float] | None
    bound1: list[float]
    bound2: list[float]

    @property
    def median_gap(self) -> float:
        return float(np.median(self.gaps_loss))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "n", "k", "gap_realized", "gap_conditional"])
        for i, g in enumerate(self.gaps_loss):
            c = "" if self.gaps_cond is None else f"{self.gaps_cond[i]:.12g}"
            w.writerow([i, self.n, self.k, f"{g:.12g}", c])
        return buf.getvalue()


def _trial(pair, f, loss, n, seed):
    rng = np.random.default_rng(seed)
    x, z = simulate_pair(pair, n, rng)
    stats = empirical_joint(z, f.k, f.m)
    # unclamped posteriors: the concentration statements are about the linear estimator
    g = g_k_expected_loss(stats, pair.channel, f, loss, clamp=False)
    gap_loss = abs(g - realized_loss(x, z, f, loss))
    gap_cond = None
    if pair.source.kind == "iid":
        gap_cond = abs(g - conditional_expected_loss(pair, z, f, loss))
    return gap_loss, gap_cond


def concentration_experiment(
    pair: SourceChannelPair,
    f: WindowedDenoiser,
    loss: LossMatrix,
    n: int,
    trials: int,
    deltas=(0.01, 0.05, 0.1),
    seed: int = 0,
    threads: int = 1,
) -> ConcentrationReport:
    """Monte Carlo gaps between the window estimate G_k and the realized / conditional losses."""
    seeds = np.random.SeedSequence(seed).spawn(trials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda s: _trial(pair, f, loss, n, s), seeds))
    else:
        results = [_trial(pair, f, loss, n, s) for s in seeds]
    gaps_loss = np.array([r[0] for r in results])
    gaps_cond = None if results[0][1] is None else np.array([r[1] for r in results])
    deltas = list(deltas)
    inv = pair.channel.inv_norm
    return ConcentrationReport(
        n=n,
        k=f.k,
        deltas=deltas,
        gaps_loss=gaps_loss,
        gaps_cond=gaps_cond,
        exceed_loss=[float(np.mean(gaps_loss > d)) for d in deltas],
        exceed_cond=None if gaps_cond is None else [float(np.mean(gaps_cond > d)) for d in deltas],
        bound1=[lemma1_bound(n, f.k, d, loss, inv) for d in deltas],
        bound2=[lemma2_bound(n, f.k, d, loss, inv) for d in deltas],
    )
