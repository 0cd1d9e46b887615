"""Pure numpy implementations of the bit-level kernels.

Semantics are identical to the compiled ``_kernels`` module; the test suite
checks the two against each other bit for bit.
"""

import numpy as np


def updown_counter(steps, states):
    """Saturating up/down counter over rows of per-cycle steps.

    ``steps`` has shape (rows, m). The counter starts centred between
    ``states/2 - 1`` and ``states/2``; the first nonzero step lands on the
    state on its side of the centre, so the trajectory is mirror symmetric.
    Until then the emitted bits alternate 1, 0, 1, ... Afterwards a cycle
    emits 1 iff the updated state is ``>= states/2``.
    """
    steps = np.asarray(steps, dtype=np.int64)
    rows, m = steps.shape
    half = states // 2
    top = states - 1
    state = np.zeros(rows, dtype=np.int64)
    started = np.zeros(rows, dtype=bool)
    out = np.empty((rows, m), dtype=np.uint8)
    for t in range(m):
        d = steps[:, t]
        first = ~started & (d != 0)
        entry = np.where(d > 0, half - 1 + d, half + d)
        state = np.where(first, entry, np.where(started, state + d, state))
        np.clip(state, 0, top, out=state)
        started |= first
        out[:, t] = np.where(started, state >= half, (t & 1) == 0)
    return out


def column_popcount(bits):
    """Count of ones across axis 1 of a (rows, n, m) bit array."""
    return np.asarray(bits, dtype=np.uint8).sum(axis=1, dtype=np.int32)


def mux_gather(bits, sel):
    """Pick ``bits[r, sel[r, t], t]`` for every row and cycle."""
    bits = np.asarray(bits, dtype=np.uint8)
    sel = np.asarray(sel, dtype=np.intp)
    return np.take_along_axis(bits, sel[:, None, :], axis=1)[:, 0, :].copy()


def lfsr_states(start, mask, width, length):
    """Successive states of a Fibonacci LFSR, beginning with ``start``."""
    full = (1 << width) - 1
    state = int(start) & full
    if state == 0:
        raise ValueError("LFSR state must be nonzero")
    out = np.empty(length, dtype=np.uint64)
    for t in range(length):
        out[t] = state
        fb = bin(state & mask).count("1") & 1
        state = ((state << 1) | fb) & full
    return out
