"""End-to-end denoisers: estimate window statistics, trim the channel set, solve, apply."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ChannelSet, LossMatrix, WindowedDenoiser, as_sequence
from .empirical import SequenceTooShort, empirical_joint, window_indices
from .feasibility import TrimmedSet, trim
from .minimax import MinimaxSolution, solve_minimax

APPLY_MODES = ("sample", "map", "distribution")


def default_window_order(n: int, m: int) -> int:
    """Largest k with k <= ln n / (16 ln m)."""
    if n < 2 or m < 2:
        raise ValueError("need n >= 2 and m >= 2")
    # guard exact powers of m against rounding down
    return max(0, math.floor(math.log(n) / (16 * math.log(m)) + 1e-12))


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 0
    l: int | None = None
    feas_eps: float | None = None
    edge_policy: str = "copy_observed"
    apply_mode: str = "sample"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.k < 0 or (self.l is not None and self.l < 0):
            raise ValueError("window orders must be nonnegative")
        if self.apply_mode not in APPLY_MODES:
            raise ValueError(f"apply_mode must be one of {APPLY_MODES}")
        if self.edge_policy != "copy_observed":
            raise ValueError("only the copy_observed edge policy is supported")

    @property
    def trim_order(self) -> int:
        return self.k if self.l is None else self.l


@dataclass(frozen=True)
class DenoiseResult:
    reconstruction: np.ndarray
    solution: MinimaxSolution
    trim_report: TrimmedSet | None
    mode: str

    def summary(self) -> dict:
        out = {
            "mode": self.mode,
            "k": self.solution.denoiser.k,
            "value": self.solution.value,
            "active_channels": list(self.solution.active_channels),
            "channel_losses": list(self.solution.channel_losses),
            "iterations": self.solution.iterations,
        }
        if self.trim_report is not None:
            out["trim"] = self.trim_report.to_dict()
        return out


def _uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform variates for positions start..start+count-1 of the stream keyed by `seed`.

    Philox yields four doubles per counter step, so `start` must be a multiple of 4.
    """
    bg = np.random.Philox(key=seed)
    bg.advance(start // 4)
    return np.random.Generator(bg).random(count)


def position_uniforms(seed: int, n: int, threads: int = 1) -> np.ndarray:
    if threads <= 1 or n < 64:
        return _uniforms(seed, 0, n)
    chunk = -(-n // threads)
    chunk += (-chunk) % 4
    starts = list(range(0, n, chunk))
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(lambda s: _uniforms(seed, s, min(chunk, n - s)), starts)
        return np.concatenate(list(parts))


def apply_denoiser(f: WindowedDenoiser, z, mode: str = "sample", seed: int = 0, threads: int = 1):
    """Run `f` over `z`; edge positions copy the observed symbol.

    ``sample`` draws one uniform per position (edges included, so position t
    always uses variate t); ``map`` takes the most likely reconstruction;
    ``distribution`` returns an (n, m) array of reconstruction laws.
    """
    z = as_sequence(z, f.m)
    n, k, m = len(z), f.k, f.m
    if n <= 2 * k:
        raise SequenceTooShort(f"need n > 2k, got n={n}, k={k}")
    rows = f.table[window_indices(z, m, k)]
    if mode == "distribution":
        out = np.zeros((n, m))
        out[np.arange(n), z] = 1.0
        out[k : n - k] = rows
        return out
    out = z.copy()
    if mode == "map":
        out[k : n - k] = np.argmax(rows, axis=1)
    elif mode == "sample":
        u = position_uniforms(seed, n, threads)[k : n - k]
        cdf = np.cumsum(rows, axis=1)
        draws = (u[:, None] >= cdf[:, :-1]).sum(axis=1)
        out[k : n - k] = draws
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def denoise_feasible(z, delta: ChannelSet, cfg: PipelineConfig, loss: LossMatrix, stats=None) -> DenoiseResult:
    """Minimax denoiser over the full set (all channels assumed feasible).

    `stats` replaces the empirical window law when given (exact-law runs).
    """
    m = loss.m
    z = as_sequence(z, m)
    if stats is None:
        stats = empirical_joint(z, cfg.k, m, threads=cfg.threads)
    solution = solve_minimax(stats, delta, cfg.k, loss)
    recon = apply_denoiser(solution.denoiser, z, cfg.apply_mode, cfg.seed, cfg.threads)
    return DenoiseResult(recon, solution, None, cfg.apply_mode)


def denoise(
    z,
    delta: ChannelSet,
    cfg: PipelineConfig,
    loss: LossMatrix,
    stats=None,
    trim_stats=None,
) -> DenoiseResult:
    """Trim `delta` against order-(2l+1) statistics, then solve and apply at order k."""
    m = loss.m
    z = as_sequence(z, m)
    l = cfg.trim_order
    if len(z) <= 2 * max(cfg.k, l):
        raise SequenceTooShort(f"need n > 2 max(k, l), got n={len(z)}")
    if trim_stats is None:
        trim_stats = empirical_joint(z, l, m, threads=cfg.threads)
    report = trim(delta, trim_stats, cfg.feas_eps)
    result = denoise_feasible(z, report.channels, cfg, loss, stats=stats)
    return DenoiseResult(result.reconstruction, result.solution, report, cfg.apply_mode)
