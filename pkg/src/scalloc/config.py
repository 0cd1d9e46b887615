"""YAML configuration files for allocation and simulation runs.

A file may name another with ``extends: other.yaml``; top-level sections of
the extending file replace those of the base.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

import yaml

from scalloc.allocator import (
    METRICS,
    AllocationProblem,
    Budget,
    ImplementationSpec,
    OptimizerParams,
    ScoreWeights,
    optimizer_targets,
)
from scalloc.netsim import (
    AVERAGE_POOL,
    LayerSpec,
    NetworkSpec,
    SimulatedErr,
    TableLookup,
    WeightSet,
    load_matrix_csv,
    load_samples_csv,
)
from scalloc.stream import GeneratorSpec

DATA_DIR = Path(__file__).parent / "data"


class ConfigError(ValueError):
    pass


def data_path(name: str) -> Path:
    """Path of a configuration shipped with the package."""
    return DATA_DIR / name


def load_config(path) -> dict:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base = raw.pop("extends", None)
    if base is not None:
        merged = load_config(path.parent / base)
        merged.update(raw)
        raw = merged
    raw.setdefault("_dir", str(path.parent.resolve()))
    return raw


def _resolve(cfg: Mapping, rel) -> Path:
    return Path(cfg.get("_dir", ".")) / rel


def _layers(cfg: Mapping) -> tuple[list[LayerSpec], int | None, dict[str, Any]]:
    net = cfg.get("network")
    if net is None:
        raise ConfigError("missing 'network' section")
    input_size = None
    if isinstance(net, Mapping):
        input_size = net.get("input_size")
        net = net.get("layers")
    if not isinstance(net, list) or not net:
        raise ConfigError("'network' must list at least one layer")
    layers = []
    weight_files = {}
    for entry in net:
        try:
            layer = LayerSpec(
                label=str(entry["id"]),
                kind=entry.get("kind", "inner_product"),
                psi=int(entry["psi"]),
                fan_in=int(entry.get("fan_in", entry.get("window", 1))),
                inputs=entry.get("inputs"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"layer entry {entry!r} is missing {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        layers.append(layer)
        if "weights" in entry:
            weight_files[layer.label] = entry["weights"]
    return layers, input_size, weight_files


def _implementations(cfg: Mapping) -> list[ImplementationSpec]:
    out = []
    for entry in cfg.get("implementations") or []:
        try:
            out.append(
                ImplementationSpec(
                    id=str(entry["id"]),
                    neuron_kind=entry["neuron_kind"],
                    stream_length=int(entry["stream_length"]),
                    unit_costs=entry.get("costs") or {},
                )
            )
        except KeyError as exc:
            raise ConfigError(f"implementation entry is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    if not out:
        raise ConfigError("no implementations")
    return out


def _budgets(cfg: Mapping) -> list[Budget]:
    out = []
    for entry in cfg.get("budgets") or []:
        scope = str(entry.get("scope", "network"))
        layer = entry.get("layer")
        if scope.startswith("layer:"):
            layer = scope.split(":", 1)[1]
        elif scope == "layer":
            if layer is None:
                raise ConfigError("layer-scoped budget needs a 'layer' key")
        elif scope == "network":
            layer = None
        else:
            raise ConfigError(f"unknown budget scope {scope!r}")
        try:
            out.append(Budget(str(entry["metric"]), float(entry["limit"]), None if layer is None else str(layer)))
        except KeyError as exc:
            raise ConfigError(f"budget entry is missing {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return out


def parse_weights(spec) -> ScoreWeights:
    """Accept a mapping or ``"area=1,power=2"``."""
    if isinstance(spec, str):
        pairs = {}
        for part in filter(None, (p.strip() for p in spec.split(","))):
            key, sep, value = part.partition("=")
            if not sep:
                raise ConfigError(f"bad weight {part!r}; expected metric=integer")
            try:
                pairs[key.strip()] = int(value)
            except ValueError:
                raise ConfigError(f"bad weight {part!r}; expected metric=integer") from None
        spec = pairs
    try:
        return ScoreWeights(dict(spec))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"score weights: {exc}") from None


def network_spec(cfg: Mapping) -> NetworkSpec:
    layers, input_size, _ = _layers(cfg)
    if input_size is None:
        first = layers[0]
        input_size = first.psi * first.fan_in if first.kind == AVERAGE_POOL else first.fan_in
    try:
        return NetworkSpec(tuple(layers), int(input_size))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def weight_set(cfg: Mapping) -> WeightSet:
    _, _, files = _layers(cfg)
    files.update(cfg.get("weights") or {})
    try:
        return WeightSet({label: load_matrix_csv(_resolve(cfg, f)) for label, f in files.items()})
    except (OSError, ValueError) as exc:
        raise ConfigError(f"weights: {exc}") from None


def samples(cfg: Mapping) -> list:
    if "samples" not in cfg:
        raise ConfigError("missing 'samples' file")
    try:
        return load_samples_csv(_resolve(cfg, cfg["samples"]))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"samples: {exc}") from None


def optimizer_params(cfg: Mapping, **overrides) -> OptimizerParams:
    raw = dict(cfg.get("optimizer") or {})
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return OptimizerParams(
            threshold=float(raw.get("threshold", 0.0)),
            iteration_limit=int(raw.get("iteration_limit", 20)),
            target_metric=raw.get("target_metric"),
            neighbourhood=int(raw.get("neighbourhood", 2)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_problem(cfg: Mapping, weights=None, seed: int = 0, **optimizer_overrides) -> AllocationProblem:
    layers, _, _ = _layers(cfg)
    impls = _implementations(cfg)
    budgets = _budgets(cfg)
    if weights is None:
        if "score_weights" not in cfg:
            raise ConfigError("missing 'score_weights'")
        weights = cfg["score_weights"]
    weights = weights if isinstance(weights, ScoreWeights) else parse_weights(weights)
    params = optimizer_params(cfg, **optimizer_overrides)
    return AllocationProblem(layers, impls, budgets, weights, error_provider(cfg, impls, seed), params)


def error_provider(cfg: Mapping, impls=None, seed: int = 0):
    """Table lookup when an ``error_table`` is given, otherwise live simulation
    if weights and samples are configured, otherwise ``None``."""
    if cfg.get("error_table"):
        try:
            return TableLookup({str(k): v for k, v in cfg["error_table"].items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if "samples" in cfg:
        impls = impls or _implementations(cfg)
        sim = cfg.get("simulation") or {}
        gen = GeneratorSpec(seed=int(sim.get("seed", seed)))
        return SimulatedErr(
            network_spec(cfg),
            weight_set(cfg),
            samples(cfg),
            {impl.id: (impl.neuron_kind, impl.stream_length) for impl in impls},
            gen,
        )
    return None


def resolved(problem: AllocationProblem) -> dict:
    """Plain-data description of a problem with all defaults filled in."""
    p = problem.params
    return {
        "network": [
            {"id": layer.label, "kind": layer.kind, "psi": layer.psi, "fan_in": layer.fan_in}
            for layer in problem.layers
        ],
        "implementations": [
            {"id": i.id, "neuron_kind": i.neuron_kind, "stream_length": i.stream_length}
            for i in problem.implementations
        ],
        "budgets": [{"metric": b.metric, "limit": b.limit, "scope": b.scope} for b in problem.budgets],
        "score_weights": {m: problem.weights.weights.get(m, 0) for m in METRICS},
        "optimizer": {
            "threshold": p.threshold,
            "iteration_limit": p.iteration_limit,
            "target_metrics": optimizer_targets(p, problem.weights),
            "neighbourhood": p.neighbourhood,
        },
        "error_provider": type(problem.err_provider).__name__ if problem.err_provider else None,
    }
