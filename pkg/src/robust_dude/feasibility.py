"""Channel feasibility against an output law, uncertainty-set trimming and continuity moduli."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import ROW_SUM_TOL, Channel, ChannelSet, DimensionMismatch, LossMatrix, bsc, rho
from .empirical import EmpiricalStats, as_tensor


class InvalidRange(ValueError):
    pass


def induced_input(ch: Channel, q) -> np.ndarray:
    """Apply the inverse transpose of `ch` along every axis of the output tensor `q`.

    The result is the unique input law that `ch` would map onto `q`; it has
    negative entries when no valid input law exists.
    """
    t = as_tensor(q)
    if any(s != ch.m for s in t.shape):
        raise DimensionMismatch(f"tensor axes {t.shape} do not match alphabet {ch.m}")
    for axis in range(t.ndim):
        # out[..., x, ...] = sum_z inv_t[x, z] * t[..., z, ...]
        t = np.moveaxis(np.tensordot(ch.inverse_transpose, t, axes=([1], [axis])), 0, axis)
    return t


@dataclass(frozen=True)
class FeasibilityVerdict:
    index: int
    label: str
    min_entry: float
    feasible: bool
    eps: float

    def to_dict(self) -> dict:
        return {"label": self.label, "min_entry": self.min_entry, "feasible": self.feasible, "eps": self.eps}


def is_feasible(ch: Channel, q, eps: float = 0.0, index: int = 0) -> FeasibilityVerdict:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    min_entry = float(induced_input(ch, q).min())
    return FeasibilityVerdict(index, ch.label or f"ch{index}", min_entry, min_entry >= -eps, eps)


@dataclass(frozen=True)
class TrimmedSet:
    channels: ChannelSet
    verdicts: tuple[FeasibilityVerdict, ...]
    eps: float
    order: int
    fallback: bool
    kept: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "eps": self.eps,
            "fallback": self.fallback,
            "kept": list(self.kept),
            "channels": [v.to_dict() for v in self.verdicts],
        }


def default_slack(n: int, l: int, m: int, c: float = 1.0) -> float:
    """Empirical-deviation-scale slack for testing feasibility against counts."""
    windows = n - 2 * l
    if windows <= 0:
        return 1e-9
    return max(1e-9, c * math.sqrt(math.log(m ** (2 * l + 1)) / windows))


def trim(delta: ChannelSet, stats, eps: float | None = None) -> TrimmedSet:
    """Keep the channels feasible for `stats` (order 2l+1) within slack `eps`.

    When nothing survives, the channel whose induced input has the largest
    minimum entry is kept and ``fallback`` is set.
    """
    q = as_tensor(stats)
    order = q.ndim // 2
    if eps is None:
        if isinstance(stats, EmpiricalStats):
            n = stats.n_windows + 2 * stats.k
            eps = default_slack(n, stats.k, stats.m)
        else:
            eps = 1e-9
    verdicts = tuple(is_feasible(ch, q, eps, i) for i, ch in enumerate(delta))
    kept = tuple(v.index for v in verdicts if v.feasible)
    fallback = not kept
    if fallback:
        best = max(verdicts, key=lambda v: (v.min_entry, -v.index))
        kept = (best.index,)
    survivors = ChannelSet([delta[i] for i in kept])
    return TrimmedSet(survivors, verdicts, float(eps), order, fallback, kept)


def phi_k(k: int, delta: ChannelSet, loss: LossMatrix, eps: float) -> float:
    """Continuity modulus bounding how much the worst-case loss moves with the set."""
    m = loss.m
    return m ** (2 * k + 1) * loss.max_loss * delta.max_inv_norm * eps


def b_l_modulus(l: int, delta: ChannelSet):
    """Return eps -> eps * (max inverse norm) ** (l * m**l)."""
    m = delta[0].m
    scale = delta.max_inv_norm ** (l * m**l)
    return lambda eps: eps * scale


def bsc_cover(lo: float, hi: float, eta: float) -> ChannelSet:
    """Evenly spaced BSC grid over [lo, hi] with spacing at most `eta`.

    Grid crossovers are computed in exact rational arithmetic from the decimal
    inputs, so every member has rational transition probabilities.
    """
    if eta <= 0 or not 0 <= lo <= hi < 0.5:
        raise InvalidRange(f"need 0 <= lo <= hi < 0.5 and eta > 0, got {lo}, {hi}, {eta}")
    flo, fhi, feta = (Fraction(str(v)) for v in (lo, hi, eta))
    if flo == fhi:
        return ChannelSet([bsc(lo)])
    steps = max(1, math.ceil((fhi - flo) / feta))
    points = [float(flo + (fhi - flo) * Fraction(i, steps)) for i in range(steps + 1)]
    # intervals narrower than the duplicate tolerance collapse to fewer points
    kept = [points[0]]
    for p in points[1:]:
        if p - kept[-1] > ROW_SUM_TOL:
            kept.append(p)
    return ChannelSet([bsc(p) for p in kept])


def a_l_proxy(delta: ChannelSet, stats_low, stats_high, eps: float = 1e-9) -> float:
    """Finite-order stand-in for the trimming gap: rho between the sets trimmed at two orders."""
    low = trim(delta, stats_low, eps).channels
    high = trim(delta, stats_high, eps).channels
    return rho(low, high)
