"""Stochastic-computing neurons: APC and MUX inner products, Btanh/Stanh
activations and MUX average pooling.

The ``*_bits`` functions are the batched building blocks (rows of raw uint8
bit arrays) shared by the single-neuron API, the profiler and the network
simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from scalloc import kernels
from scalloc.stream import (
    Coding,
    GeneratorSpec,
    StochasticStream,
    _check_uniform,
    _pack,
    mux_scaled_add,
    xnor_multiply,
)


def _check_states(states: int, name: str) -> None:
    if states < 2 or states % 2:
        raise ValueError(f"{name} must be an even integer >= 2, got {states}")


@dataclass(frozen=True)
class ApcNeuronConfig:
    fan_in: int
    stream_length: int
    btanh_states: int | None = None

    def __post_init__(self):
        if self.fan_in < 1 or self.stream_length < 1:
            raise ValueError("fan_in and stream_length must be >= 1")
        if self.btanh_states is None:
            object.__setattr__(self, "btanh_states", default_btanh_states(self.fan_in))
        _check_states(self.btanh_states, "btanh_states")


@dataclass(frozen=True)
class MuxNeuronConfig:
    fan_in: int
    stream_length: int
    fsm_states: int | None = None

    def __post_init__(self):
        if self.fan_in < 1 or self.stream_length < 1:
            raise ValueError("fan_in and stream_length must be >= 1")
        if self.fsm_states is None:
            object.__setattr__(self, "fsm_states", 2 * self.fan_in)
        _check_states(self.fsm_states, "fsm_states")


@dataclass(frozen=True)
class PoolingConfig:
    window_size: int

    def __post_init__(self):
        if self.window_size < 2:
            raise ValueError("pooling window must be >= 2")


def default_btanh_states(fan_in: int) -> int:
    """Counter size used when none is given.

    Twice the fan-in: the calibration sweep picks this value for n = 16, 32
    and 64 (see ``profiler.calibrate_btanh_states``).
    """
    return 2 * fan_in


# -- batched kernels ---------------------------------------------------------


def xnor_bits(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.bitwise_xor(x, w, dtype=np.uint8) ^ np.uint8(1)


def btanh_bits(counts: np.ndarray, fan_in: int, states: int) -> np.ndarray:
    steps = 2 * np.asarray(counts, dtype=np.int64) - fan_in
    return kernels.updown_counter(steps, states)


def stanh_bits(bits: np.ndarray, states: int) -> np.ndarray:
    steps = 2 * np.asarray(bits, dtype=np.int64) - 1
    return kernels.updown_counter(steps, states)


def apc_neuron_bits(products: np.ndarray, states: int) -> np.ndarray:
    """Rows of APC neurons: ``products`` is (rows, n, m) -> (rows, m)."""
    counts = kernels.column_popcount(products)
    return btanh_bits(counts, products.shape[1], states)


def mux_neuron_bits(products: np.ndarray, select: np.ndarray, states: int) -> np.ndarray:
    """Rows of MUX neurons; ``select`` is (rows, m) input indices."""
    return stanh_bits(kernels.mux_gather(products, select), states)


# -- single-neuron API --------------------------------------------------------


def apc_count(column_bits: Sequence[int]) -> int:
    bits = np.asarray(column_bits)
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("APC inputs must be bits")
    return int(bits.sum())


def btanh_activate(counts: Sequence[int], n: int, S: int) -> StochasticStream:
    """Saturating up/down counter activation over per-cycle APC counts.

    Each cycle moves the counter by ``2*count - n`` within ``[0, S-1]`` and
    emits 1 when it sits in the upper half. The counter starts centred;
    while every step so far has been zero it emits alternating bits, so a
    balanced input decodes to 0.
    """
    _check_states(S, "S")
    c = np.asarray(counts, dtype=np.int64)
    if c.ndim != 1 or c.size < 1:
        raise ValueError("counts must be a nonempty sequence")
    if (c < 0).any() or (c > n).any():
        raise ValueError(f"APC counts must lie in [0, {n}]")
    out = btanh_bits(c[None, :], n, S)[0]
    return StochasticStream(_pack(out), c.size, Coding.BIPOLAR)


def stanh_activate(stream: StochasticStream, K: int) -> StochasticStream:
    """K-state FSM approximating ``tanh(K * x / 2)`` for a bipolar input."""
    _check_states(K, "K")
    if stream.coding is not Coding.BIPOLAR:
        raise ValueError("Stanh needs a bipolar stream")
    out = stanh_bits(stream.bits[None, :], K)[0]
    return StochasticStream(_pack(out), stream.length, Coding.BIPOLAR)


def _products(x, w, fan_in: int, length: int) -> list[StochasticStream]:
    if len(x) != fan_in or len(w) != fan_in:
        raise ValueError(f"expected {fan_in} inputs and weights, got {len(x)} and {len(w)}")
    for s in (*x, *w):
        if s.length != length:
            raise ValueError(f"stream length {s.length} != configured {length}")
        if s.coding is not Coding.BIPOLAR:
            raise ValueError("neuron operands must be bipolar")
    return [xnor_multiply(a, b) for a, b in zip(x, w)]


def apc_neuron_forward(
    x: Sequence[StochasticStream], w: Sequence[StochasticStream], cfg: ApcNeuronConfig
) -> StochasticStream:
    prods = _products(x, w, cfg.fan_in, cfg.stream_length)
    stacked = np.stack([p.bits for p in prods])[None]
    out = apc_neuron_bits(stacked, cfg.btanh_states)[0]
    return StochasticStream(_pack(out), cfg.stream_length, Coding.BIPOLAR)


def mux_neuron_forward(
    x: Sequence[StochasticStream],
    w: Sequence[StochasticStream],
    cfg: MuxNeuronConfig,
    gen: GeneratorSpec | None = None,
    index: int = 0,
) -> StochasticStream:
    """XNOR products, n-to-1 MUX, then Stanh with K = 2n by default.

    The MUX divides the inner product by n and Stanh(2n, .) multiplies it
    back, so the decoded output approximates tanh of the full inner product.
    """
    prods = _products(x, w, cfg.fan_in, cfg.stream_length)
    summed = mux_scaled_add(prods, gen, index)
    return stanh_activate(summed, cfg.fsm_states)


def average_pool(
    inputs: Sequence[StochasticStream],
    gen: GeneratorSpec | None = None,
    index: int = 0,
) -> StochasticStream:
    if len(inputs) < 2:
        raise ValueError("average pooling needs at least two inputs")
    _check_uniform(inputs, "average pooling")
    return mux_scaled_add(inputs, gen, index)


def reference_neuron(x: Sequence[float], w: Sequence[float]) -> float:
    if len(x) != len(w):
        raise ValueError("x and w differ in length")
    return math.tanh(math.fsum(float(a) * float(b) for a, b in zip(x, w)))
