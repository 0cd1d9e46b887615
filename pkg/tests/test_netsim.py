import numpy as np
import pytest

from scalloc import config
from scalloc.netsim import (
    AVERAGE_POOL,
    ErrProviderError,
    LayerSpec,
    NetworkSpec,
    SimulatedErr,
    TableLookup,
    WeightSet,
    config_id,
    estimate_error_rate,
    float_forward,
    float_outputs,
    load_matrix_csv,
    load_samples_csv,
    save_matrix_csv,
    sc_forward,
    sc_outputs,
    table_err,
)
from scalloc.stream import GeneratorSpec


@pytest.fixture(scope="module")
def toy():
    cfg = config.load_config(config.data_path("toy.yaml"))
    return config.network_spec(cfg), config.weight_set(cfg), config.samples(cfg)


def tiny_net():
    layers = (LayerSpec("a", "ip", 2, 3), LayerSpec("b", "fc", 1, 2))
    weights = WeightSet({"a": [[0.5, -0.5, 0.25], [1.0, 0.0, -1.0]], "b": [[0.8, -0.3]]})
    return NetworkSpec(layers, 3), weights


class TestSpecs:
    def test_kind_aliases(self):
        assert LayerSpec("p", "Average-Pool", 2, 2).kind == AVERAGE_POOL
        with pytest.raises(ValueError):
            LayerSpec("x", "lstm", 1, 1)

    def test_pool_window(self):
        with pytest.raises(ValueError):
            LayerSpec("p", "pool", 2, 1)

    def test_fully_connected_dimension_check(self):
        with pytest.raises(ValueError):
            NetworkSpec((LayerSpec("a", "ip", 2, 4),), 3)

    def test_pool_must_cover(self):
        with pytest.raises(ValueError):
            NetworkSpec((LayerSpec("p", "pool", 2, 2),), 5)

    def test_explicit_inputs(self):
        layer = LayerSpec("a", "ip", 2, 2, inputs=[[0, 1], [1, 2]])
        assert layer.connections(3).tolist() == [[0, 1], [1, 2]]
        with pytest.raises(ValueError):
            layer.connections(2)

    def test_unique_labels(self):
        with pytest.raises(ValueError):
            NetworkSpec((LayerSpec("a", "ip", 2, 2), LayerSpec("a", "ip", 1, 2)), 2)

    def test_weights_range_and_shape(self):
        with pytest.raises(ValueError):
            WeightSet({"a": [[1.5]]})
        net, weights = tiny_net()
        bad = WeightSet({"a": np.zeros((2, 2)), "b": np.zeros((1, 2))})
        with pytest.raises(ValueError):
            bad.check(net)
        weights.check(net)


class TestCsv:
    def test_matrix_round_trip(self, tmp_path):
        m = np.array([[0.1, -0.2], [1 / 3, 1.0]])
        save_matrix_csv(m, tmp_path / "w.csv")
        np.testing.assert_array_equal(load_matrix_csv(tmp_path / "w.csv"), m)

    def test_samples(self, tmp_path):
        (tmp_path / "s.csv").write_text("1,0.5,-0.5\n0,0.1,0.2\n")
        samples = load_samples_csv(tmp_path / "s.csv")
        assert samples[0][1] == 1 and samples[1][0].tolist() == [0.1, 0.2]


class TestForward:
    def test_float_outputs_by_hand(self):
        net, weights = tiny_net()
        x = np.array([0.2, -0.4, 1.0])
        h = np.tanh([0.1 + 0.2 + 0.25, 0.2 - 1.0])
        expected = np.tanh(0.8 * h[0] - 0.3 * h[1])
        np.testing.assert_allclose(float_outputs(net, weights, x), [expected])

    def test_pool_averages(self):
        net = NetworkSpec((LayerSpec("p", "pool", 2, 2),), 4)
        np.testing.assert_allclose(float_outputs(net, WeightSet(), [0.2, 0.4, -1.0, 1.0]), [0.3, 0.0])

    def test_argmax_ties_lowest(self):
        net = NetworkSpec((LayerSpec("p", "pool", 2, 2),), 4)
        assert float_forward(net, WeightSet(), [0.5, 0.5, 0.5, 0.5]) == 0

    def test_input_checks(self):
        net, weights = tiny_net()
        with pytest.raises(ValueError):
            float_outputs(net, weights, [0.1, 0.2])
        with pytest.raises(ValueError):
            float_outputs(net, weights, [0.1, 0.2, 2.0])

    def test_sc_converges(self, toy):
        net, weights, samples = toy
        x, _ = samples[0]
        ref = float_outputs(net, weights, x)
        for kind in ("apc", "mux"):
            out = sc_outputs(net, weights, {"h1": kind, "out": kind}, x, 16384, GeneratorSpec(seed=1))
            np.testing.assert_allclose(out, ref, atol=0.25)

    def test_sc_deterministic(self, toy):
        net, weights, samples = toy
        x, _ = samples[3]
        a = sc_outputs(net, weights, {"h1": "mux", "out": "apc"}, x, 256, GeneratorSpec(seed=2), sample=3)
        b = sc_outputs(net, weights, {"h1": "mux", "out": "apc"}, x, 256, GeneratorSpec(seed=2), sample=3)
        np.testing.assert_array_equal(a, b)

    def test_assignment_checked(self, toy):
        net, weights, samples = toy
        with pytest.raises(ValueError):
            sc_forward(net, weights, {"h1": "apc"}, samples[0][0], 64)
        with pytest.raises(ValueError):
            sc_forward(net, weights, {"h1": "apc", "out": "lut"}, samples[0][0], 64)

    def test_error_rate_falls_with_length(self, toy):
        net, weights, samples = toy
        assign = {"h1": "mux", "out": "mux"}
        short = np.mean([estimate_error_rate(net, weights, assign, samples, 64, GeneratorSpec(seed=s)) for s in range(3)])
        long = np.mean([estimate_error_rate(net, weights, assign, samples, 2048, GeneratorSpec(seed=s)) for s in range(3)])
        assert long < short

    def test_labels_are_float_predictions(self, toy):
        net, weights, samples = toy
        assert all(float_forward(net, weights, x) == y for x, y in samples)


class TestProviders:
    def test_table_lookup(self):
        t = TableLookup({"1": 21.7, "4": 8.7})
        assert t.table_err("1") == pytest.approx(0.217)
        assert table_err(t, "4") == pytest.approx(0.087)
        assert t([("4", "lenet5")]) == pytest.approx(0.087)
        with pytest.raises(ErrProviderError) as info:
            t.table_err("3")
        assert info.value.config_id == "3"

    @pytest.mark.parametrize("pct", [-1.0, 100.0])
    def test_table_range(self, pct):
        with pytest.raises(ValueError):
            TableLookup({"1": pct})

    def test_config_id(self):
        assert config_id([("A", "l1"), ("B", "l2")]) == "A+B"

    def test_simulated_cached_and_capped(self, toy):
        net, weights, samples = toy
        # swapping the labels makes every prediction at long m wrong
        flipped = [(x, 1 - y) for x, y in samples]
        sim = SimulatedErr(net, weights, flipped, {"A": ("apc", 4096)}, GeneratorSpec(seed=0))
        rate = sim([("A", "h1"), ("A", "out")])
        assert rate == 1 - 1 / (len(samples) + 1)
        assert sim._cache == {"A+A": rate}

    def test_simulated_mixed_lengths_use_shortest(self, toy):
        net, weights, samples = toy
        impls = {"L": ("mux", 1024), "S": ("mux", 64)}
        sim = SimulatedErr(net, weights, samples[:10], impls, GeneratorSpec(seed=4))
        direct = estimate_error_rate(net, weights, {"h1": "mux", "out": "mux"}, samples[:10], 64, GeneratorSpec(seed=4))
        assert sim([("L", "h1"), ("S", "out")]) == direct

    def test_simulated_unknown_impl(self, toy):
        net, weights, samples = toy
        sim = SimulatedErr(net, weights, samples, {"A": ("apc", 64)})
        with pytest.raises(ErrProviderError):
            sim([("B", "h1"), ("A", "out")])
