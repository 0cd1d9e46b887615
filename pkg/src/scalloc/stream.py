"""Stochastic bit streams: encoding, decoding and stream-level arithmetic.

Streams are stored packed into little-endian ``uint64`` words; the logical
length is tracked separately and padding bits are always zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from scalloc import kernels

__all__ = [
    "Coding",
    "GeneratorSpec",
    "StochasticStream",
    "generate_stream",
    "decode",
    "xnor_multiply",
    "mux_scaled_add",
    "stream_index",
    "LFSR_TAPS",
]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


class Coding(enum.Enum):
    UNIPOLAR = "unipolar"
    BIPOLAR = "bipolar"

    @property
    def interval(self) -> tuple[float, float]:
        return (0.0, 1.0) if self is Coding.UNIPOLAR else (-1.0, 1.0)

    def probability(self, value: float) -> float:
        """Bit probability that encodes ``value``."""
        lo, hi = self.interval
        if not lo <= value <= hi or np.isnan(value):
            raise ValueError(f"{value!r} outside {self.value} interval [{lo}, {hi}]")
        return value if self is Coding.UNIPOLAR else (value + 1.0) / 2.0

    def value_of(self, probability: float) -> float:
        return probability if self is Coding.UNIPOLAR else 2.0 * probability - 1.0


# Fibonacci feedback taps (1-indexed) of maximal-length LFSRs.
LFSR_TAPS: dict[int, tuple[int, ...]] = {
    3: (3, 2), 4: (4, 3), 5: (5, 3), 6: (6, 5), 7: (7, 6), 8: (8, 6, 5, 4),
    9: (9, 5), 10: (10, 7), 11: (11, 9), 12: (12, 6, 4, 1), 13: (13, 4, 3, 1),
    14: (14, 5, 3, 1), 15: (15, 14), 16: (16, 15, 13, 4), 17: (17, 14),
    18: (18, 11), 19: (19, 6, 2, 1), 20: (20, 17), 21: (21, 19), 22: (22, 21),
    23: (23, 18), 24: (24, 23, 22, 17), 25: (25, 22), 26: (26, 6, 2, 1),
    27: (27, 5, 2, 1), 28: (28, 25), 29: (29, 27), 30: (30, 6, 4, 1),
    31: (31, 28), 32: (32, 22, 2, 1),
}


def stream_index(group: int, operand: int) -> int:
    """Combine a group (trial, sample, ...) and an operand number into one index."""
    if not (0 <= group < 2**32 and 0 <= operand < 2**32):
        raise ValueError("group and operand must fit in 32 bits")
    return (group << 32) | operand


@dataclass(frozen=True)
class GeneratorSpec:
    """Deterministic source of stochastic bits.

    Every ``(seed, index)`` pair names an independent sub-generator. In
    Bernoulli mode the sub-generator is a Philox counter-based generator
    keyed by the pair; in LFSR mode the pair only picks the register's
    non-zero starting state.
    """

    method: str = "bernoulli"
    seed: int = 0
    lfsr_width: int = 16

    def __post_init__(self):
        if self.method not in ("bernoulli", "lfsr"):
            raise ValueError(f"unknown generator method {self.method!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.method == "lfsr" and self.lfsr_width not in LFSR_TAPS:
            raise ValueError(f"no maximal-length taps for width {self.lfsr_width}")

    def rng(self, index: int = 0) -> np.random.Generator:
        key = np.array([self.seed, index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def bits(self, probability: float, length: int, index: int = 0) -> np.ndarray:
        """``length`` bits, each 1 with ``probability``, as a uint8 array."""
        if self.method == "bernoulli":
            return (self.rng(index).random(length) < probability).view(np.uint8)
        width = self.lfsr_width
        period = (1 << width) - 1
        start = int(self.rng(index).integers(1, period + 1))
        mask = 0
        for t in LFSR_TAPS[width]:
            mask |= 1 << (t - 1)
        states = kernels.lfsr_states(start, mask, width, length)
        threshold = int(round(probability * period))
        return (states <= threshold).view(np.uint8)

    def select(self, choices: int, length: int, index: int = 0) -> np.ndarray:
        """Uniform per-cycle selection among ``choices`` inputs.

        numpy's bounded integer sampler uses rejection, so the selection stays
        exactly uniform when ``choices`` is not a power of two.
        """
        return self.rng(index).integers(0, choices, size=length, dtype=np.intp)


def _pack(bits: np.ndarray) -> np.ndarray:
    packed = np.packbits(bits.astype(np.uint8, copy=False), bitorder="little")
    pad = (-packed.size) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    words = packed.view("<u8").astype(np.uint64)
    words.flags.writeable = False
    return words


@dataclass(frozen=True, eq=False)
class StochasticStream:
    """Immutable packed bit stream with a coding format."""

    words: np.ndarray = field(repr=False)
    length: int
    coding: Coding = Coding.BIPOLAR

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("stream length must be >= 1")
        if self.words.dtype != np.uint64 or self.words.size != (self.length + 63) // 64:
            raise ValueError("word buffer does not match stream length")

    @classmethod
    def from_bits(cls, bits, coding: Coding = Coding.BIPOLAR) -> StochasticStream:
        if isinstance(bits, str):
            bits = [int(c) for c in bits]
        arr = np.asarray(bits)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("bits must be 0 or 1")
        return cls(_pack(arr), int(arr.size), coding)

    @property
    def bits(self) -> np.ndarray:
        raw = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return raw[: self.length]

    @property
    def ones(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    @property
    def value(self) -> float:
        return decode(self)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, StochasticStream):
            return NotImplemented
        return (
            self.length == other.length
            and self.coding is other.coding
            and np.array_equal(self.words, other.words)
        )

    def __hash__(self):
        return hash((self.length, self.coding, self.words.tobytes()))

    def __invert__(self) -> StochasticStream:
        return StochasticStream(_tail_masked(~self.words, self.length), self.length, self.coding)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def _tail_masked(words: np.ndarray, length: int) -> np.ndarray:
    words = words.copy()
    rem = length % 64
    if rem:
        words[-1] &= np.uint64((1 << rem) - 1)
    words.flags.writeable = False
    return words


def generate_stream(
    value: float,
    length: int,
    coding: Coding = Coding.BIPOLAR,
    gen: GeneratorSpec | None = None,
    index: int = 0,
) -> StochasticStream:
    """Encode ``value`` as a random stream of ``length`` bits."""
    if length < 1:
        raise ValueError("length must be >= 1")
    p = coding.probability(float(value))
    gen = gen or GeneratorSpec()
    return StochasticStream(_pack(gen.bits(p, length, index)), length, coding)


def decode(stream: StochasticStream) -> float:
    return stream.coding.value_of(stream.ones / stream.length)


def xnor_multiply(a: StochasticStream, b: StochasticStream) -> StochasticStream:
    """Bipolar multiplication: bitwise XNOR of two equal-length streams."""
    if a.coding is not Coding.BIPOLAR or b.coding is not Coding.BIPOLAR:
        raise ValueError("XNOR multiplication needs bipolar streams")
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} != {b.length}")
    out = np.bitwise_xor(a.words, b.words) ^ _MASK64
    return StochasticStream(_tail_masked(out, a.length), a.length, Coding.BIPOLAR)


def _check_uniform(streams: Sequence[StochasticStream], what: str) -> tuple[int, Coding]:
    if not streams:
        raise ValueError(f"{what} needs at least one input stream")
    length, coding = streams[0].length, streams[0].coding
    for s in streams[1:]:
        if s.length != length or s.coding is not coding:
            raise ValueError(f"{what} inputs must share length and coding")
    return length, coding


def mux_scaled_add(
    inputs: Sequence[StochasticStream],
    gen: GeneratorSpec | None = None,
    index: int = 0,
) -> StochasticStream:
    """Scaled addition ``(1/n) * sum(inputs)`` with an n-to-1 multiplexer."""
    length, coding = _check_uniform(inputs, "MUX addition")
    gen = gen or GeneratorSpec()
    stacked = np.stack([s.bits for s in inputs])
    sel = gen.select(len(inputs), length, index)
    out = stacked[sel, np.arange(length)]
    return StochasticStream(_pack(out), length, coding)
