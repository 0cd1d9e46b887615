"""Layered SC network simulation and network error-rate providers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from scalloc.neuron import apc_neuron_bits, default_btanh_states, mux_neuron_bits, xnor_bits
from scalloc.stream import GeneratorSpec, stream_index

INNER_PRODUCT = "inner_product"
AVERAGE_POOL = "average_pool"
_KIND_ALIASES = {
    "inner_product": INNER_PRODUCT,
    "innerproduct": INNER_PRODUCT,
    "ip": INNER_PRODUCT,
    "conv": INNER_PRODUCT,
    "fc": INNER_PRODUCT,
    "average_pool": AVERAGE_POOL,
    "averagepool": AVERAGE_POOL,
    "pool": AVERAGE_POOL,
}


class ErrProviderError(LookupError):
    """An error rate could not be produced for a configuration."""

    def __init__(self, config_id: str, reason: str = ""):
        self.config_id = config_id
        super().__init__(f"no error rate for configuration {config_id!r}" + (f": {reason}" if reason else ""))


@dataclass(frozen=True)
class LayerSpec:
    """One layer. ``fan_in`` is the window size for pooling layers.

    ``inputs`` optionally lists, per neuron, which outputs of the previous
    layer feed it (shape psi x fan_in); by default inner-product layers are
    fully connected and pooling layers use contiguous windows.
    """

    label: str
    kind: str
    psi: int
    fan_in: int
    inputs: tuple[tuple[int, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower().replace("-", "_"))
        if kind is None:
            raise ValueError(f"layer {self.label!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.psi < 1:
            raise ValueError(f"layer {self.label!r}: psi must be >= 1")
        if kind == INNER_PRODUCT and self.fan_in < 1:
            raise ValueError(f"layer {self.label!r}: fan_in must be >= 1")
        if kind == AVERAGE_POOL and self.fan_in < 2:
            raise ValueError(f"layer {self.label!r}: pooling window must be >= 2")
        if self.inputs is not None:
            idx = tuple(tuple(int(i) for i in row) for row in self.inputs)
            if len(idx) != self.psi or any(len(row) != self.fan_in for row in idx):
                raise ValueError(f"layer {self.label!r}: inputs must be psi x fan_in")
            object.__setattr__(self, "inputs", idx)

    @property
    def allocatable(self) -> bool:
        return self.kind == INNER_PRODUCT

    def connections(self, prev_arity: int) -> np.ndarray:
        if self.inputs is not None:
            idx = np.array(self.inputs, dtype=np.intp)
            if idx.min() < 0 or idx.max() >= prev_arity:
                raise ValueError(f"layer {self.label!r}: input index out of range")
            return idx
        if self.kind == INNER_PRODUCT:
            if self.fan_in != prev_arity:
                raise ValueError(
                    f"layer {self.label!r}: fan_in {self.fan_in} != previous arity {prev_arity}"
                )
            return np.tile(np.arange(prev_arity), (self.psi, 1))
        if self.psi * self.fan_in != prev_arity:
            raise ValueError(
                f"layer {self.label!r}: {self.psi} windows of {self.fan_in} "
                f"do not cover {prev_arity} inputs"
            )
        return np.arange(prev_arity).reshape(self.psi, self.fan_in)


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    input_size: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("network has no layers")
        labels = [layer.label for layer in self.layers]
        if len(set(labels)) != len(labels):
            raise ValueError("layer labels must be unique")
        arity = self.input_size
        for layer in self.layers:
            layer.connections(arity)
            arity = layer.psi

    @property
    def allocatable(self) -> list[LayerSpec]:
        return [layer for layer in self.layers if layer.allocatable]


class WeightSet(dict):
    """Mapping of inner-product layer label -> (psi x fan_in) weight matrix."""

    def __init__(self, matrices: Mapping[str, np.ndarray] = ()):
        super().__init__()
        for label, mat in dict(matrices).items():
            mat = np.asarray(mat, dtype=float)
            if mat.ndim != 2:
                raise ValueError(f"weights for {label!r} must be a matrix")
            if (np.abs(mat) > 1.0).any() or np.isnan(mat).any():
                raise ValueError(f"weights for {label!r} must lie in [-1, 1]")
            mat.flags.writeable = False
            self[label] = mat

    @classmethod
    def from_csv(cls, paths: Mapping[str, str | Path]) -> WeightSet:
        return cls({label: load_matrix_csv(p) for label, p in paths.items()})

    def check(self, net: NetworkSpec) -> None:
        for layer in net.allocatable:
            mat = self.get(layer.label)
            if mat is None:
                raise ValueError(f"no weights for layer {layer.label!r}")
            if mat.shape != (layer.psi, layer.fan_in):
                raise ValueError(
                    f"weights for {layer.label!r} have shape {mat.shape}, "
                    f"expected {(layer.psi, layer.fan_in)}"
                )


def load_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float, ndmin=2))


def save_matrix_csv(matrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            writer.writerow(repr(float(v)) for v in row)


def load_samples_csv(path) -> list[tuple[np.ndarray, int]]:
    """Rows of ``label, x_0, x_1, ...``."""
    rows = load_matrix_csv(path)
    return [(row[1:].copy(), int(row[0])) for row in rows]


def _argmax(values) -> int:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return int(np.argmax(np.asarray(values)))


def _check_input(net: NetworkSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_size,):
        raise ValueError(f"input has shape {x.shape}, expected ({net.input_size},)")
    if (np.abs(x) > 1.0).any():
        raise ValueError("inputs must lie in [-1, 1]")
    return x


def float_outputs(net: NetworkSpec, weights: WeightSet, x) -> np.ndarray:
    weights.check(net)
    a = _check_input(net, x)
    for layer in net.layers:
        gathered = a[layer.connections(a.size)]
        if layer.kind == INNER_PRODUCT:
            a = np.array(
                [math.tanh(math.fsum(row)) for row in gathered * weights[layer.label]]
            )
        else:
            a = gathered.mean(axis=1)
    return a


def float_forward(net: NetworkSpec, weights: WeightSet, x) -> int:
    return _argmax(float_outputs(net, weights, x))


def _normalize_assignment(net: NetworkSpec, assignment: Mapping[str, str]) -> dict[str, str]:
    out = {}
    for layer in net.allocatable:
        kind = assignment.get(layer.label)
        if kind is None:
            raise ValueError(f"assignment has no entry for layer {layer.label!r}")
        kind = str(kind).lower()
        if kind not in ("apc", "mux"):
            raise ValueError(f"layer {layer.label!r}: unknown neuron kind {kind!r}")
        out[layer.label] = kind
    return out


def sc_outputs(
    net: NetworkSpec,
    weights: WeightSet,
    assignment: Mapping[str, str],
    x,
    m: int,
    gen: GeneratorSpec | None = None,
    sample: int = 0,
) -> np.ndarray:
    """Decoded final-layer outputs of the SC network for one input.

    Primary inputs and weights are encoded once; activations stay as bit
    streams between layers. Every stream and MUX select uses its own
    sub-generator ``(sample, operand)``.
    """
    if m < 1:
        raise ValueError("stream length must be >= 1")
    weights.check(net)
    kinds = _normalize_assignment(net, assignment)
    x = _check_input(net, x)
    gen = gen or GeneratorSpec()
    operand = 0

    def next_index() -> int:
        nonlocal operand
        operand += 1
        return stream_index(sample, operand - 1)

    streams = np.stack([gen.bits((v + 1.0) / 2.0, m, next_index()) for v in x])
    for layer in net.layers:
        conn = layer.connections(streams.shape[0])
        gathered = streams[conn]  # (psi, fan_in, m)
        if layer.kind == AVERAGE_POOL:
            select = np.stack([gen.select(layer.fan_in, m, next_index()) for _ in range(layer.psi)])
            streams = np.take_along_axis(gathered, select[:, None, :], axis=1)[:, 0, :]
            continue
        w = weights[layer.label]
        w_bits = np.empty_like(gathered)
        for j in range(layer.psi):
            for i in range(layer.fan_in):
                w_bits[j, i] = gen.bits((w[j, i] + 1.0) / 2.0, m, next_index())
        products = xnor_bits(gathered, w_bits)
        if kinds[layer.label] == "apc":
            streams = apc_neuron_bits(products, default_btanh_states(layer.fan_in))
        else:
            select = np.stack([gen.select(layer.fan_in, m, next_index()) for _ in range(layer.psi)])
            streams = mux_neuron_bits(products, select, 2 * layer.fan_in)
    return 2.0 * streams.mean(axis=1) - 1.0


def sc_forward(net, weights, assignment, x, m, gen=None, sample=0) -> int:
    return _argmax(sc_outputs(net, weights, assignment, x, m, gen, sample))


def estimate_error_rate(
    net: NetworkSpec,
    weights: WeightSet,
    assignment: Mapping[str, str],
    samples: Sequence[tuple[Sequence[float], int]],
    m: int,
    gen: GeneratorSpec | None = None,
) -> float:
    """Fraction of samples whose SC prediction differs from the label."""
    if not samples:
        raise ValueError("no samples")
    wrong = sum(
        sc_forward(net, weights, assignment, x, m, gen, sample=k) != int(label)
        for k, (x, label) in enumerate(samples)
    )
    return wrong / len(samples)


def config_id(pairs: Sequence[tuple[str, str]]) -> str:
    """Configuration key of an allocation: the implementation ids in layer order."""
    return "+".join(impl for impl, _ in pairs)


class TableLookup:
    """Error rates looked up by configuration id (stored as fractions)."""

    def __init__(self, percent_by_config: Mapping[str, float]):
        self.rates: dict[str, float] = {}
        for key, pct in percent_by_config.items():
            pct = float(pct)
            if not 0.0 <= pct < 100.0:
                raise ValueError(f"error rate {pct}% for configuration {key!r} outside [0, 100)")
            self.rates[str(key)] = pct / 100.0

    def table_err(self, config: str) -> float:
        try:
            return self.rates[str(config)]
        except KeyError:
            raise ErrProviderError(str(config), "not in error table") from None

    def __call__(self, pairs: Sequence[tuple[str, str]]) -> float:
        return self.table_err(config_id(pairs))


def table_err(provider: TableLookup, config: str) -> float:
    return provider.table_err(config)


class SimulatedErr:
    """Error rates from live SC simulation of the network.

    ``implementations`` maps implementation id -> (neuron kind, stream
    length). An allocation mixing stream lengths is simulated at the
    shortest one, which bounds the precision of the whole pipeline.
    """

    def __init__(
        self,
        net: NetworkSpec,
        weights: WeightSet,
        samples: Sequence[tuple[Sequence[float], int]],
        implementations: Mapping[str, tuple[str, int]],
        gen: GeneratorSpec | None = None,
    ):
        weights.check(net)
        if not samples:
            raise ValueError("no samples")
        self.net = net
        self.weights = weights
        self.samples = list(samples)
        self.implementations = dict(implementations)
        self.gen = gen or GeneratorSpec()
        self._cache: dict[str, float] = {}

    def __call__(self, pairs: Sequence[tuple[str, str]]) -> float:
        key = config_id(pairs)
        if key not in self._cache:
            try:
                assignment = {layer: self.implementations[impl][0] for impl, layer in pairs}
                lengths = {self.implementations[impl][1] for impl, _ in pairs}
            except KeyError as exc:
                raise ErrProviderError(key, f"unknown implementation {exc.args[0]!r}") from None
            m = min(lengths)
            rate = estimate_error_rate(self.net, self.weights, assignment, self.samples, m, self.gen)
            # a network that misclassifies everything still needs a finite score
            self._cache[key] = min(rate, 1.0 - 1.0 / (len(self.samples) + 1))
        return self._cache[key]
