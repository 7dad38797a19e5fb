"""Value types shared across the package: channels, losses, distributions, denoisers."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

SINGULAR_TOL = 1e-10
ROW_SUM_TOL = 1e-12
SIMPLEX_TOL = 1e-9


class DudeError(Exception):
    """Base class for errors raised by this package."""


class NotStochastic(DudeError):
    pass


class Singular(DudeError):
    pass


class DimensionMismatch(DudeError):
    pass


class EmptySet(DudeError):
    pass


class InvalidAlphabet(DudeError):
    pass


def check_alphabet(m: int) -> int:
    m = int(m)
    if m < 2:
        raise InvalidAlphabet(f"alphabet size must be >= 2, got {m}")
    return m


def as_sequence(seq, m: int) -> np.ndarray:
    """Return `seq` as an int64 array, checking every symbol is in 0..m-1."""
    arr = np.asarray(seq, dtype=np.int64)
    if arr.ndim != 1:
        raise DimensionMismatch("sequence must be one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() >= m):
        raise DimensionMismatch(f"sequence has symbols outside 0..{m - 1}")
    return arr


@dataclass(frozen=True, eq=False)
class Channel:
    """Square invertible row-stochastic matrix; ``matrix[x, z] = P(Z=z | X=x)``."""

    matrix: np.ndarray
    inverse_transpose: np.ndarray = field(repr=False)
    inv_norm: float
    label: str = ""

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return self.inverse_transpose.T

    def to_dict(self) -> dict:
        d = {"matrix": self.matrix.tolist()}
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Channel":
        return channel_new(d["matrix"], label=d.get("label", ""))

    def __repr__(self) -> str:
        name = self.label or np.array2string(self.matrix, precision=4)
        return f"Channel({name})"


def channel_new(matrix, label: str = "") -> Channel:
    """Validate a transition matrix and cache its inverse transpose.

    Raises NotStochastic for negative entries or rows not summing to one and
    Singular when ``|det| < 1e-10``.
    """
    mat = np.array(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"channel matrix must be square, got shape {mat.shape}")
    check_alphabet(mat.shape[0])
    if np.any(mat < 0) or np.any(mat > 1):
        raise NotStochastic("channel entries must lie in [0, 1]")
    if np.any(np.abs(mat.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise NotStochastic("channel rows must sum to 1")
    if abs(np.linalg.det(mat)) < SINGULAR_TOL:
        raise Singular("channel matrix is singular")
    inv = np.linalg.inv(mat)
    mat.flags.writeable = False
    inv_t = np.ascontiguousarray(inv.T)
    inv_t.flags.writeable = False
    # induced infinity norm of the inverse
    inv_norm = float(np.abs(inv).sum(axis=1).max())
    return Channel(matrix=mat, inverse_transpose=inv_t, inv_norm=inv_norm, label=label)


def identity_channel(m: int) -> Channel:
    return channel_new(np.eye(check_alphabet(m)), label="identity")


def bsc(delta: float) -> Channel:
    """Binary symmetric channel with crossover probability `delta`."""
    delta = float(delta)
    if not 0.0 <= delta <= 1.0:
        raise NotStochastic(f"crossover probability must be in [0, 1], got {delta}")
    return channel_new([[1 - delta, delta], [delta, 1 - delta]], label=f"BSC({delta:g})")


@dataclass(frozen=True, eq=False)
class LossMatrix:
    """``matrix[x, a]`` is the loss of reconstructing clean symbol x as a."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch("loss matrix must be square")
        check_alphabet(mat.shape[0])
        if np.any(mat < 0):
            raise ValueError("loss entries must be nonnegative")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def max_loss(self) -> float:
        return float(self.matrix.max())

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LossMatrix":
        return cls(d["matrix"])


def hamming_loss(m: int) -> LossMatrix:
    m = check_alphabet(m)
    return LossMatrix(1.0 - np.eye(m))


def prob_vector(p) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.ndim != 1 or np.any(v < 0) or abs(v.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"not a probability vector: {p!r}")
    return v


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Distribution over m^order tuples, stored as a dense tensor of shape (m,)*order."""

    tensor: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=float)
        if t.ndim < 1 or len(set(t.shape)) != 1:
            raise DimensionMismatch("joint tensor must have equal axis lengths")
        if np.any(t < -SIMPLEX_TOL) or abs(t.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("joint tensor is not a probability distribution")
        object.__setattr__(self, "tensor", t)

    @property
    def order(self) -> int:
        return self.tensor.ndim

    @property
    def m(self) -> int:
        return self.tensor.shape[0]

    @classmethod
    def iid(cls, p, order: int) -> "JointDistribution":
        """Product law p x p x ... x p."""
        p = prob_vector(p)
        t = np.ones(())
        for _ in range(order):
            t = np.multiply.outer(t, p)
        return cls(t)

    @classmethod
    def markov(cls, init, transition, order: int) -> "JointDistribution":
        """Law of `order` consecutive symbols of a first-order Markov chain."""
        t = np.asarray(init, dtype=float)
        trans = np.asarray(transition, dtype=float)
        for _ in range(order - 1):
            t = t[..., None] * trans[(None,) * (t.ndim - 1)]
        return cls(t)

    @classmethod
    def through_channel(cls, px: "JointDistribution", ch: Channel) -> "JointDistribution":
        """Output law of a DMC fed with input tuples distributed as `px`."""
        t = px.tensor
        for axis in range(t.ndim):
            t = np.moveaxis(np.tensordot(t, ch.matrix, axes=([axis], [0])), -1, axis)
        return cls(t)


def all_windows(m: int, length: int) -> np.ndarray:
    """Every tuple in A^length as rows, in lexicographic (base-m) order."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(m), repeat=length)), dtype=np.int64)


def window_string(window) -> str:
    return "".join(str(int(s)) if s < 10 else f"<{int(s)}>" for s in window)


@dataclass(frozen=True, eq=False)
class WindowedDenoiser:
    """Randomized sliding-window rule of order k.

    ``table[w]`` is the distribution over reconstructions for the window whose
    base-m index (first symbol most significant) is w; the window carries the
    observed center symbol.
    """

    k: int
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2:
            raise DimensionMismatch("denoiser table must be 2-D")
        m = table.shape[1]
        if table.shape[0] != m ** (2 * self.k + 1):
            raise DimensionMismatch("denoiser table must cover all windows")
        if np.any(table < -SIMPLEX_TOL) or np.any(np.abs(table.sum(axis=1) - 1) > SIMPLEX_TOL):
            raise ValueError("denoiser rows must be probability vectors")
        if np.any(table < 0):
            table = np.clip(table, 0.0, None)
            table /= table.sum(axis=1, keepdims=True)
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def m(self) -> int:
        return self.table.shape[1]

    @property
    def width(self) -> int:
        return 2 * self.k + 1

    @classmethod
    def from_center_rule(cls, k: int, rule) -> "WindowedDenoiser":
        """Build a denoiser whose output depends only on the center symbol.

        `rule` is an m x m array; row z is the reconstruction law given center z.
        """
        rule = np.asarray(rule, dtype=float)
        m = rule.shape[0]
        centers = all_windows(m, 2 * k + 1)[:, k]
        return cls(k, rule[centers])

    def to_dict(self) -> dict:
        windows = all_windows(self.m, self.width)
        return {
            "k": self.k,
            "table": {
                window_string(w): [float(f"{p:.17g}") for p in row]
                for w, row in zip(windows, self.table)
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WindowedDenoiser":
        k = int(d["k"])
        rows = list(d["table"].items())
        m = len(rows[0][1])
        windows = all_windows(m, 2 * k + 1)
        lookup = dict(rows)
        return cls(k, [lookup[window_string(w)] for w in windows])


def say_what_you_see(m: int, k: int = 0) -> WindowedDenoiser:
    return WindowedDenoiser.from_center_rule(k, np.eye(m))


def say_constant(m: int, symbol: int, k: int = 0) -> WindowedDenoiser:
    rule = np.zeros((m, m))
    rule[:, symbol] = 1.0
    return WindowedDenoiser.from_center_rule(k, rule)


def uniform_denoiser(m: int, k: int = 0) -> WindowedDenoiser:
    return WindowedDenoiser.from_center_rule(k, np.full((m, m), 1.0 / m))


class ChannelSet:
    """Ordered, duplicate-free list of channels over one alphabet."""

    def __init__(self, channels, labels=None, allow_empty: bool = False):
        channels = list(channels)
        if not channels and not allow_empty:
            raise EmptySet("channel set must be nonempty")
        if channels:
            m = channels[0].m
            if any(c.m != m for c in channels):
                raise DimensionMismatch("channels in a set must share an alphabet")
        for i, a in enumerate(channels):
            for b in channels[:i]:
                if channel_distance(a, b) <= ROW_SUM_TOL:
                    raise ValueError(f"duplicate channel {a!r}")
        if labels is not None:
            labels = list(labels)
            channels = [
                Channel(c.matrix, c.inverse_transpose, c.inv_norm, lab) for c, lab in zip(channels, labels)
            ]
        self.channels = tuple(channels)

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def __getitem__(self, i):
        return self.channels[i]

    def __repr__(self):
        return f"ChannelSet({list(self.channels)!r})"

    @property
    def labels(self) -> list[str]:
        return [c.label or f"ch{i}" for i, c in enumerate(self.channels)]

    @property
    def max_inv_norm(self) -> float:
        return max(c.inv_norm for c in self.channels)

    def to_dict(self) -> dict:
        return {"channels": [c.to_dict() for c in self.channels]}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSet":
        return cls([Channel.from_dict(c) for c in d["channels"]])


def channel_distance(a: Channel, b: Channel) -> float:
    """Entrywise max-abs difference between two transition matrices."""
    if a.matrix.shape != b.matrix.shape:
        raise DimensionMismatch("channels have different alphabets")
    return float(np.abs(a.matrix - b.matrix).max())


def rho(a: ChannelSet, b: ChannelSet) -> float:
    """Two-sided Hausdorff-type distance between channel sets."""
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("rho needs two nonempty sets")
    d = np.array([[channel_distance(x, y) for y in b] for x in a])
    return float(d.min(axis=1).max() + d.min(axis=0).max())


def dumps(obj) -> str:
    return json.dumps(obj.to_dict(), indent=2)
