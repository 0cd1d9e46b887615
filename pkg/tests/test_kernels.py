"""Compiled kernels against the numpy fallback, plus scalar reference checks."""

import numpy as np
import pytest

from scalloc import _fallback, kernels
from scalloc.stream import LFSR_TAPS

compiled = pytest.importorskip("scalloc._kernels", reason="compiled extension not built")

BACKENDS = [pytest.param(_fallback, id="python"), pytest.param(compiled, id="compiled")]


def counter_reference(steps, states):
    """Plain scalar model of the centred saturating counter."""
    half, out, state, started = states // 2, [], None, False
    for t, d in enumerate(steps):
        if not started and d != 0:
            state = half - 1 + d if d > 0 else half + d
            started = True
        elif started:
            state += d
        if started:
            state = min(max(state, 0), states - 1)
            out.append(1 if state >= half else 0)
        else:
            out.append(1 - (t % 2))
    return out


def mask_of(width):
    return sum(1 << (t - 1) for t in LFSR_TAPS[width])


class TestBackendSelection:
    def test_backend_name(self):
        assert kernels.BACKEND in ("compiled", "python")

    def test_env_var_forces_fallback(self):
        import subprocess
        import sys

        code = "from scalloc import kernels; print(kernels.BACKEND)"
        out = subprocess.run(
            [sys.executable, "-c", code], env={"SCALLOC_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True
        )
        assert out.stdout.strip() == "python"


class TestUpDownCounter:
    @pytest.mark.parametrize("impl", BACKENDS)
    def test_matches_scalar_reference(self, impl):
        rng = np.random.default_rng(1)
        for states in (2, 4, 6, 16, 32):
            steps = rng.integers(-5, 6, size=(7, 120))
            steps[0, :10] = 0  # exercise the zero-step alternation
            got = impl.updown_counter(steps, states)
            for row in range(steps.shape[0]):
                assert got[row].tolist() == counter_reference(steps[row].tolist(), states)

    def test_backends_bit_identical(self):
        rng = np.random.default_rng(2)
        steps = rng.integers(-16, 17, size=(20, 3000))
        for states in (8, 32, 64):
            np.testing.assert_array_equal(
                compiled.updown_counter(steps, states), _fallback.updown_counter(steps, states)
            )

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_all_zero_steps_alternate(self, impl):
        out = impl.updown_counter(np.zeros((1, 6), dtype=np.int64), 8)
        assert out[0].tolist() == [1, 0, 1, 0, 1, 0]

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_mirror_symmetry(self, impl):
        # negating every step complements every output bit
        rng = np.random.default_rng(3)
        steps = rng.integers(-3, 4, size=(5, 400))
        steps[:, 0] = 0
        up = impl.updown_counter(steps, 10)
        down = impl.updown_counter(-steps, 10)
        started = np.cumsum(steps != 0, axis=1) > 0
        np.testing.assert_array_equal(up[started], 1 - down[started])


class TestPopcountAndGather:
    def test_popcount_identical(self):
        bits = np.random.default_rng(4).integers(0, 2, size=(6, 33, 257), dtype=np.uint8)
        expected = bits.sum(axis=1)
        np.testing.assert_array_equal(compiled.column_popcount(bits), expected)
        np.testing.assert_array_equal(_fallback.column_popcount(bits), expected)

    def test_gather_identical(self):
        rng = np.random.default_rng(5)
        bits = rng.integers(0, 2, size=(4, 9, 300), dtype=np.uint8)
        sel = rng.integers(0, 9, size=(4, 300))
        expected = np.array([[bits[r, sel[r, t], t] for t in range(300)] for r in range(4)])
        np.testing.assert_array_equal(compiled.mux_gather(bits, sel), expected)
        np.testing.assert_array_equal(_fallback.mux_gather(bits, sel), expected)

    def test_gather_rejects_out_of_range(self):
        bits = np.zeros((1, 3, 4), dtype=np.uint8)
        with pytest.raises(IndexError):
            compiled.mux_gather(bits, np.full((1, 4), 3))


class TestLfsr:
    @pytest.mark.parametrize("width", range(3, 17))
    def test_maximal_period(self, width):
        period = (1 << width) - 1
        states = compiled.lfsr_states(1, mask_of(width), width, period + 1)
        assert len(set(states[:period].tolist())) == period
        assert states[period] == states[0]

    @pytest.mark.parametrize("width", [5, 12, 24, 32])
    def test_backends_identical(self, width):
        a = compiled.lfsr_states(0x1234567 & ((1 << width) - 1) or 1, mask_of(width), width, 2000)
        b = _fallback.lfsr_states(0x1234567 & ((1 << width) - 1) or 1, mask_of(width), width, 2000)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("impl", BACKENDS)
    def test_zero_state_rejected(self, impl):
        with pytest.raises(ValueError):
            impl.lfsr_states(0, mask_of(4), 4, 10)
