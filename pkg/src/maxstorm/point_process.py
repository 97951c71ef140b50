"""Poisson building blocks for the spectral constructions.

Three samplers live here: the decreasing storm-intensity sequence
``U_i = 1 / P_i`` with ``P_i`` partial sums of unit exponentials, homogeneous
planar Poisson samples on rectangular windows (storm centers), and the
integer-time process with one Poisson(1) count per integer.

Randomness flows through :class:`SeededStream`, a value object naming a
counter-based generator.  Identical ``(seed, stream_id, path)`` reproduce
identical draws bit for bit, and child streams derived for dates or
replicates are independent of consumption order, which keeps parallel Monte
Carlo runs deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, ValidationError
from .geometry import PlanarSite

__all__ = [
    "SeededStream",
    "StormSequence",
    "PlanarPoissonSample",
    "IntegerPoissonSample",
    "Rectangle",
    "sample_storm_intensities",
    "sample_planar_poisson",
    "sample_integer_poisson",
    "STORM_CAP",
]

# A mis-set stopping threshold must fail loudly, not hang.
STORM_CAP = 10_000_000


@dataclass(frozen=True)
class SeededStream:
    """Name of a reproducible random stream.

    Parameters
    ----------
    seed : int
        Experiment-level seed, 64-bit.
    stream_id : int
        Top-level stream index (one per independent consumer), 64-bit.
    path : tuple of int
        Further derivation levels (replicate, date, ...) appended by
        :meth:`child`.

    Notes
    -----
    The generator is counter-based (Philox) and keyed by the full
    ``(seed, stream_id, *path)`` tuple, so sibling streams never share
    draws regardless of how much randomness each one consumes.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not isinstance(value, (int, np.integer)):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
        if any(not isinstance(p, (int, np.integer)) for p in self.path):
            raise ValidationError(f"path must contain integers, got {self.path!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *ids: int) -> "SeededStream":
        """Derive a sub-stream; children with distinct ids are independent."""
        return SeededStream(self.seed, self.stream_id, self.path + tuple(int(i) for i in ids))


@dataclass(frozen=True)
class StormSequence:
    """Strictly decreasing positive storm intensities ``U_1 > U_2 > ...``."""

    intensities: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.intensities, dtype=float)
        if u.ndim != 1:
            raise ValidationError("intensities must be a 1-d array")
        if u.size and (not np.all(u > 0) or not np.all(np.diff(u) < 0)):
            raise ValidationError("intensities must be positive and strictly decreasing")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "intensities", u)

    @property
    def count(self) -> int:
        return int(self.intensities.size)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned planar window given by lower-left and upper-right corners."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self) -> None:
        for c in (*self.lo, *self.hi):
            if not math.isfinite(c):
                raise ValidationError(f"window corner must be finite, got {c!r}")
        if not (self.hi[0] > self.lo[0] and self.hi[1] > self.lo[1]):
            raise ValidationError(
                f"window must have positive area, got lo={self.lo} hi={self.hi}"
            )

    @property
    def area(self) -> float:
        return (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])


@dataclass(frozen=True)
class PlanarPoissonSample:
    """Points of a homogeneous planar Poisson draw with their window."""

    points: tuple[PlanarSite, ...]
    window: Rectangle

    def __post_init__(self) -> None:
        for p in self.points:
            inside = (
                self.window.lo[0] <= p.x1 <= self.window.hi[0]
                and self.window.lo[1] <= p.x2 <= self.window.hi[1]
            )
            if not inside:
                raise ValidationError(f"point {p} outside window {self.window}")

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class IntegerPoissonSample:
    """Per-integer unit-Poisson counts over a finite integer interval."""

    counts: dict[int, int]

    def __post_init__(self) -> None:
        for k, n in self.counts.items():
            if n < 0:
                raise ValidationError(f"count at {k} must be non-negative, got {n}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def sample_storm_intensities(
    stream: SeededStream,
    stop_threshold: float,
    cap: int = STORM_CAP,
) -> StormSequence:
    """Sample the decreasing intensity sequence down to ``stop_threshold``.

    Partial sums ``P_i`` of unit exponentials give ``U_i = 1 / P_i``; all
    intensities at or above ``stop_threshold`` are returned, everything
    smaller is discarded.  The kept count is Poisson with mean
    ``1 / stop_threshold``, so thresholds above the first draw yield an
    empty sequence.

    Raises
    ------
    ResourceError
        If more than ``cap`` intensities would be kept.
    """
    if not (stop_threshold > 0 and math.isfinite(stop_threshold)):
        raise ValidationError(f"stop_threshold must be positive, got {stop_threshold!r}")
    if 1.0 / stop_threshold > 4.0 * cap:
        # Expected count alone already dwarfs the cap; refuse up front.
        raise ResourceError(
            f"stop_threshold {stop_threshold:g} implies ~{1.0 / stop_threshold:.3g} "
            f"storms, above cap {cap}"
        )
    rng = stream.generator()
    p_stop = 1.0 / stop_threshold
    chunks: list[np.ndarray] = []
    total = 0
    p_last = 0.0
    block = 64
    while True:
        p = p_last + np.cumsum(rng.exponential(size=block))
        p_last = float(p[-1])
        kept = p[p <= p_stop]
        chunks.append(kept)
        total += kept.size
        if total > cap:
            raise ResourceError(
                f"storm count exceeded cap {cap} before reaching threshold "
                f"{stop_threshold:g}"
            )
        if p_last > p_stop:
            break
        block = min(block * 2, 65536)
    p_all = np.concatenate(chunks)
    return StormSequence(1.0 / p_all if p_all.size else np.empty(0))


def sample_planar_poisson(
    stream: SeededStream,
    window: Rectangle,
    rate: float,
) -> PlanarPoissonSample:
    """Homogeneous Poisson sample: Poisson(rate * area) iid-uniform points."""
    if not (rate >= 0 and math.isfinite(rate)):
        raise ValidationError(f"rate must be non-negative, got {rate!r}")
    rng = stream.generator()
    n = int(rng.poisson(rate * window.area))
    xs = rng.uniform(window.lo[0], window.hi[0], size=n)
    ys = rng.uniform(window.lo[1], window.hi[1], size=n)
    points = tuple(PlanarSite(float(x), float(y)) for x, y in zip(xs, ys))
    return PlanarPoissonSample(points, window)


def sample_integer_poisson(
    stream: SeededStream,
    lo: int,
    hi: int,
) -> IntegerPoissonSample:
    """One Poisson(1) count per integer in the inclusive interval ``[lo, hi]``.

    An empty interval (``lo > hi``) yields an empty sample, not an error.
    """
    if lo > hi:
        return IntegerPoissonSample({})
    rng = stream.generator()
    ks = range(int(lo), int(hi) + 1)
    draws = rng.poisson(1.0, size=len(ks))
    return IntegerPoissonSample({k: int(n) for k, n in zip(ks, draws)})
