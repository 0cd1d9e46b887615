"""Monte Carlo characterization of SC neuron accuracy.

The absolute error of a configuration is the (population) standard deviation
of ``decoded_output - tanh(sum(x * w))`` over independent trials with
inputs and weights drawn i.i.d. uniform on [-1, 1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from scalloc.neuron import (
    apc_neuron_bits,
    btanh_bits,
    default_btanh_states,
    mux_neuron_bits,
    xnor_bits,
)
from scalloc.stream import GeneratorSpec, stream_index

IMPLEMENTATIONS = ("apc", "mux")
CSV_HEADER = ("impl", "n", "m", "trials", "abs_error", "mean_error")

# operand slot reserved for the trial's real-valued inputs/weights
_VALUES_OPERAND = 2**32 - 1
_CHUNK = 32


@dataclass(frozen=True)
class TrialPlan:
    implementation: str
    fan_ins: tuple[int, ...]
    stream_lengths: tuple[int, ...]
    trials: int = 1000
    seed: int = 0
    input_distribution: str = "uniform_signed"
    btanh_states: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "implementation", _check_impl(self.implementation))
        object.__setattr__(self, "fan_ins", tuple(self.fan_ins))
        object.__setattr__(self, "stream_lengths", tuple(self.stream_lengths))
        if not self.fan_ins or not self.stream_lengths:
            raise ValueError("fan_ins and stream_lengths must be nonempty")
        if self.trials < 30:
            raise ValueError("a reported statistic needs at least 30 trials")
        if self.input_distribution != "uniform_signed":
            raise ValueError(f"unsupported input distribution {self.input_distribution!r}")


@dataclass(frozen=True)
class ErrorProfile:
    implementation: str
    fan_in: int
    stream_length: int
    absolute_error: float
    mean_error: float
    trials: int


def _check_impl(impl: str) -> str:
    impl = impl.lower()
    if impl not in IMPLEMENTATIONS:
        raise ValueError(f"implementation must be one of {IMPLEMENTATIONS}, got {impl!r}")
    return impl


def _neuron_outputs(impl, x_bits, w_bits, select, states):
    products = xnor_bits(x_bits, w_bits)
    if impl == "apc":
        return apc_neuron_bits(products, states)
    return mux_neuron_bits(products, select, states)


def measure_absolute_error(
    impl: str,
    n: int,
    m: int,
    trials: int = 1000,
    seed: int = 0,
    btanh_states: int | None = None,
) -> ErrorProfile:
    """Error statistics of one neuron configuration.

    Trial ``t`` draws its real inputs from sub-generator ``(t, VALUES)`` and
    every operand stream (x_i, w_i, MUX select) from its own sub-generator,
    so results are bit-for-bit reproducible and independent of chunking.
    """
    impl = _check_impl(impl)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n < 1 or m < 1:
        raise ValueError("fan-in and stream length must be >= 1")
    states = 2 * n if impl == "mux" else (btanh_states or default_btanh_states(n))
    gen = GeneratorSpec(seed=seed)
    errors = np.empty(trials)
    for start in range(0, trials, _CHUNK):
        rows = range(start, min(start + _CHUNK, trials))
        x_bits = np.empty((len(rows), n, m), dtype=np.uint8)
        w_bits = np.empty_like(x_bits)
        select = np.zeros((len(rows), m), dtype=np.intp)
        reference = np.empty(len(rows))
        for r, t in enumerate(rows):
            values = gen.rng(stream_index(t, _VALUES_OPERAND)).uniform(-1.0, 1.0, size=2 * n)
            x, w = values[:n], values[n:]
            reference[r] = math.tanh(math.fsum(x * w))
            for i in range(n):
                x_bits[r, i] = gen.bits((x[i] + 1.0) / 2.0, m, stream_index(t, i))
                w_bits[r, i] = gen.bits((w[i] + 1.0) / 2.0, m, stream_index(t, n + i))
            if impl == "mux":
                select[r] = gen.select(n, m, stream_index(t, 2 * n))
        out = _neuron_outputs(impl, x_bits, w_bits, select, states)
        decoded = 2.0 * out.mean(axis=1, dtype=np.float64) - 1.0
        errors[start : start + len(rows)] = decoded - reference
    return ErrorProfile(
        implementation=impl,
        fan_in=n,
        stream_length=m,
        absolute_error=float(np.std(errors)),
        mean_error=float(np.mean(errors)),
        trials=trials,
    )


def sweep(plan: TrialPlan) -> list[ErrorProfile]:
    """Measure every (fan-in, stream length) pair, fan-in major."""
    return [
        measure_absolute_error(
            plan.implementation, n, m, plan.trials, plan.seed, plan.btanh_states
        )
        for n in plan.fan_ins
        for m in plan.stream_lengths
    ]


def btanh_grid_outputs(
    n: int, m: int, S: int, z_grid: Sequence[float], trials: int = 50, seed: int = 0
) -> np.ndarray:
    """Mean decoded APC/Btanh output for each target inner product in ``z_grid``.

    A target z is realised as ``x_i = z/n`` with unit weights. The streams for
    ``-z`` are the complements of those for ``+z`` (antithetic pairs), so the
    estimate is odd-symmetric; at z = 0 each trial averages a stream set and
    its complement.
    """
    z_grid = [float(z) for z in z_grid]
    if any(abs(z) > n for z in z_grid):
        raise ValueError(f"grid values must lie in [-{n}, {n}]")
    gen = GeneratorSpec(seed=seed)
    magnitudes = sorted({abs(z) for z in z_grid})
    pos = {}
    neg = {}
    for g, a in enumerate(magnitudes):
        p = (a / n + 1.0) / 2.0
        bits = np.empty((trials, n, m), dtype=np.uint8)
        for t in range(trials):
            for i in range(n):
                bits[t, i] = gen.bits(p, m, stream_index(t, g * n + i))
        counts = bits.sum(axis=1, dtype=np.int32)
        up = 2.0 * btanh_bits(counts, n, S).mean(axis=1) - 1.0
        down = 2.0 * btanh_bits(n - counts, n, S).mean(axis=1) - 1.0
        pos[a] = float(np.mean(up))
        neg[a] = float(np.mean(down))
    out = []
    for z in z_grid:
        a = abs(z)
        if a == 0:
            out.append((pos[a] + neg[a]) / 2.0)
        else:
            out.append(pos[a] if z > 0 else neg[a])
    return np.array(out)


def calibrate_btanh_states(
    n: int,
    m: int,
    candidate_S: Iterable[int],
    z_grid: Sequence[float],
    trials: int = 50,
    seed: int = 0,
    tie_tolerance: float | None = None,
) -> int:
    """Counter size minimizing the worst deviation from tanh over ``z_grid``.

    Deviations closer than ``tie_tolerance`` (default: one bit of decoded
    resolution, 2/m) count as ties and go to the smaller candidate.
    """
    deviations = btanh_deviations(n, m, candidate_S, z_grid, trials, seed)
    tol = 2.0 / m if tie_tolerance is None else tie_tolerance
    best = min(deviations.values())
    return min(S for S, d in deviations.items() if d - best <= tol)


def btanh_deviations(
    n: int,
    m: int,
    candidate_S: Iterable[int],
    z_grid: Sequence[float],
    trials: int = 50,
    seed: int = 0,
) -> dict[int, float]:
    """Max |mean decoded output - tanh(z)| over the grid, per candidate."""
    candidates = sorted(set(int(S) for S in candidate_S))
    if not candidates:
        raise ValueError("no candidate state counts")
    if not z_grid:
        raise ValueError("empty z grid")
    for S in candidates:
        if S < 2 or S % 2:
            raise ValueError(f"candidate {S} is not an even integer >= 2")
    target = np.tanh(np.asarray(z_grid, dtype=float))
    return {
        S: float(np.max(np.abs(btanh_grid_outputs(n, m, S, z_grid, trials, seed) - target)))
        for S in candidates
    }


def export_profiles(profiles: Sequence[ErrorProfile], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for p in profiles:
            writer.writerow(
                (
                    p.implementation,
                    p.fan_in,
                    p.stream_length,
                    p.trials,
                    repr(p.absolute_error),
                    repr(p.mean_error),
                )
            )
    return path
