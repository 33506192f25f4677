"""Rectangular parameter domains with binary chromosome encoding.

Each dimension i spans [lo_i, hi_i] discretized on a uniform grid of
2**bits_i points that includes both endpoints, so the grid step is
(hi - lo) / (2**bits - 1).  Chromosomes are flat bit vectors packed
dimension-major (all bits of the first parameter, then the second, ...),
most significant bit first within a dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EncodingError(ValueError):
    """Raised on chromosome/space contract violations."""


@dataclass(frozen=True)
class ParameterSpace:
    """Search domain: per-dimension bounds and bit widths."""

    lows: np.ndarray
    highs: np.ndarray
    bits: np.ndarray
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=float)
        highs = np.asarray(self.highs, dtype=float)
        bits = np.asarray(self.bits, dtype=np.int64)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        object.__setattr__(self, "bits", bits)
        if lows.ndim != 1 or lows.shape != highs.shape or lows.shape != bits.shape:
            raise EncodingError("lows, highs and bits must be 1-D and equal length")
        if not np.all(lows < highs):
            raise EncodingError("every dimension needs lo < hi")
        if not np.all(bits >= 1):
            raise EncodingError("every dimension needs at least 1 bit")
        if self.names and len(self.names) != lows.size:
            raise EncodingError("names length does not match dimension count")

    @classmethod
    def from_dims(cls, dims, names=()):
        """Build from a list of (lo, hi, bits) triples."""
        lows, highs, bits = zip(*((d[0], d[1], d[2]) for d in dims))
        return cls(np.array(lows, float), np.array(highs, float),
                   np.array(bits, np.int64), tuple(names))

    @classmethod
    def uniform(cls, ndim: int, lo: float, hi: float, bits: int):
        """Same bounds and resolution in every dimension."""
        return cls(np.full(ndim, float(lo)), np.full(ndim, float(hi)),
                   np.full(ndim, bits, np.int64))

    @property
    def ndim(self) -> int:
        return self.lows.size

    @property
    def total_bits(self) -> int:
        return int(self.bits.sum())

    @property
    def levels(self) -> np.ndarray:
        """Grid point count per dimension (2**bits)."""
        return (np.int64(1) << self.bits).astype(np.int64)

    @property
    def steps(self) -> np.ndarray:
        """Grid spacing per dimension."""
        return (self.highs - self.lows) / (self.levels - 1)

    def to_dict(self) -> dict:
        d = {
            "lows": self.lows.tolist(),
            "highs": self.highs.tolist(),
            "bits": self.bits.tolist(),
        }
        if self.names:
            d["names"] = list(self.names)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSpace":
        return cls(np.array(d["lows"], float), np.array(d["highs"], float),
                   np.array(d["bits"], np.int64), tuple(d.get("names", ())))

    # -- index <-> value ---------------------------------------------------

    def indices_to_values(self, idx: np.ndarray) -> np.ndarray:
        return self.lows + np.asarray(idx, dtype=float) * self.steps

    def values_to_indices(self, values: np.ndarray) -> np.ndarray:
        """Nearest grid index per dimension; half-way points round up."""
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise EncodingError("non-finite value cannot be encoded")
        clamped = np.clip(values, self.lows, self.highs)
        # round half away from zero in index space; indices are >= 0 so
        # this is floor(x + 0.5)
        idx = np.floor((clamped - self.lows) / self.steps + 0.5).astype(np.int64)
        return np.clip(idx, 0, self.levels - 1)

    def snap(self, values: np.ndarray) -> np.ndarray:
        """Clamp to the domain and snap to the nearest grid point."""
        return self.indices_to_values(self.values_to_indices(values))

    def contains(self, values: np.ndarray) -> bool:
        values = np.asarray(values, dtype=float)
        return bool(np.all(values >= self.lows) and np.all(values <= self.highs))


def _check_length(chromosome: np.ndarray, space: ParameterSpace) -> np.ndarray:
    chromosome = np.asarray(chromosome, dtype=np.uint8)
    if chromosome.ndim != 1 or chromosome.size != space.total_bits:
        raise EncodingError(
            f"chromosome length {chromosome.size} does not match "
            f"space total bits {space.total_bits}")
    return chromosome


def _bit_slices(space: ParameterSpace):
    ends = np.cumsum(space.bits)
    starts = ends - space.bits
    return starts, ends


def decode(chromosome: np.ndarray, space: ParameterSpace) -> np.ndarray:
    """Map a bit string to its real-valued grid point."""
    chromosome = _check_length(chromosome, space)
    starts, ends = _bit_slices(space)
    idx = np.empty(space.ndim, dtype=np.int64)
    for i, (s, e) in enumerate(zip(starts, ends)):
        seg = chromosome[s:e]
        powers = np.int64(1) << np.arange(e - s - 1, -1, -1, dtype=np.int64)
        idx[i] = int(seg.astype(np.int64) @ powers)
    return space.indices_to_values(idx)


def encode(values: np.ndarray, space: ParameterSpace) -> np.ndarray:
    """Bit string of the nearest grid point (out-of-range values clamped)."""
    idx = space.values_to_indices(values)
    out = np.empty(space.total_bits, dtype=np.uint8)
    starts, ends = _bit_slices(space)
    for i, (s, e) in enumerate(zip(starts, ends)):
        n = e - s
        shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
        out[s:e] = (idx[i] >> shifts) & 1
    return out


def random_chromosome(space: ParameterSpace, rng: np.random.Generator) -> np.ndarray:
    """Uniform random bit string over the space."""
    return rng.integers(0, 2, size=space.total_bits, dtype=np.uint8)


def lhs_sample(space: ParameterSpace, count: int,
               rng: np.random.Generator) -> list[np.ndarray]:
    """Latin hypercube sample of `count` chromosomes.

    Per dimension the decoded values occupy one point in each of `count`
    equal-probability strata (before grid snapping); each point is then
    encoded to its nearest grid chromosome.
    """
    if count < 1:
        raise EncodingError("count must be >= 1")
    n = space.ndim
    u = rng.random((count, n))
    strata = np.empty((count, n), dtype=np.int64)
    for j in range(n):
        strata[:, j] = rng.permutation(count)
    unit = (strata + u) / count
    values = space.lows + unit * (space.highs - space.lows)
    return [encode(values[k], space) for k in range(count)]


def chromosome_key(chromosome: np.ndarray) -> bytes:
    """Hashable identity used for duplicate detection."""
    return np.packbits(np.asarray(chromosome, dtype=np.uint8)).tobytes()
