"""Budget-driven design allocation.

Unit costs and layer-scoped budgets are expressed per neuron in um^2, uW,
ns and fJ. Network costs, network-scoped budgets and the design score use
mm^2, W, ns and uJ.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from scalloc.netsim import ErrProviderError, LayerSpec, config_id

METRICS = ("area", "power", "delay", "energy")
# layer-scope units per network-scope unit
NETWORK_SCALE = {"area": 1e6, "power": 1e6, "delay": 1.0, "energy": 1e9}
NETWORK_UNITS = {"area": "mm^2", "power": "W", "delay": "ns", "energy": "uJ"}
LAYER_UNITS = {"area": "um^2", "power": "uW", "delay": "ns", "energy": "fJ"}

ErrProvider = Callable[[Sequence[tuple[str, str]]], float]

_REL_TOL = 1e-12


class CostDataError(KeyError):
    def __init__(self, layer: str, impl: str, metric: str):
        self.triple = (layer, impl, metric)
        super().__init__(f"no {metric} cost for implementation {impl!r} on layer {layer!r}")

    def __str__(self):
        return self.args[0]


class InfeasibleError(Exception):
    """No assignment satisfies the budgets."""

    def __init__(self, reason: str, layer: str | None = None):
        self.layer = layer
        self.reason = reason
        super().__init__(reason)


class EnumerationCapExceeded(Exception):
    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"exhaustive search needs {required} assignments, cap is {cap}")


def _check_metric(metric: str) -> str:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


def _within(cost: float, limit: float) -> bool:
    return cost <= limit or math.isclose(cost, limit, rel_tol=_REL_TOL)


@dataclass(frozen=True)
class ImplementationSpec:
    id: str
    neuron_kind: str
    stream_length: int
    unit_costs: Mapping[str, Mapping[str, float]]

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        # "mux/apc/apc": a whole-network configuration, one kind per layer group
        kind = str(self.neuron_kind).lower()
        if not kind or any(part not in ("apc", "mux") for part in kind.split("/")):
            raise ValueError(f"implementation {self.id!r}: unknown neuron kind {self.neuron_kind!r}")
        object.__setattr__(self, "neuron_kind", kind)
        if self.stream_length < 1:
            raise ValueError(f"implementation {self.id!r}: stream length must be >= 1")
        costs = {}
        for layer, per_metric in self.unit_costs.items():
            costs[str(layer)] = {}
            for metric, value in per_metric.items():
                _check_metric(metric)
                value = float(value)
                if value < 0 or math.isnan(value):
                    raise ValueError(f"implementation {self.id!r}: negative {metric} cost")
                costs[str(layer)][metric] = value
        object.__setattr__(self, "unit_costs", costs)

    def unit_cost(self, layer: str, metric: str) -> float:
        try:
            return self.unit_costs[layer][metric]
        except KeyError:
            raise CostDataError(layer, self.id, metric) from None


@dataclass(frozen=True)
class Budget:
    """Upper limit on one metric; ``layer=None`` means network scope.

    ``limit`` is in network units (mm^2, W, ns, uJ) at network scope and in
    per-layer units (um^2, uW, ns, fJ) at layer scope.
    """

    metric: str
    limit: float
    layer: str | None = None

    def __post_init__(self):
        _check_metric(self.metric)
        if not self.limit > 0:
            raise ValueError("budget limit must be positive")

    @property
    def scope(self) -> str:
        return "network" if self.layer is None else f"layer:{self.layer}"

    @property
    def base_limit(self) -> float:
        """Limit converted to per-layer units."""
        return self.limit * NETWORK_SCALE[self.metric] if self.layer is None else self.limit

    def describe(self) -> str:
        units = NETWORK_UNITS if self.layer is None else LAYER_UNITS
        return f"{self.metric} <= {self.limit:g} {units[self.metric]} ({self.scope})"


@dataclass(frozen=True)
class ScoreWeights:
    weights: Mapping[str, int]

    def __post_init__(self):
        clean = {}
        for metric, w in self.weights.items():
            _check_metric(metric)
            if int(w) != w or w < 0:
                raise ValueError(f"score weight for {metric} must be a nonnegative integer")
            clean[metric] = int(w)
        if not any(clean.values()):
            raise ValueError("at least one score weight must be positive")
        object.__setattr__(self, "weights", clean)

    @property
    def active(self) -> dict[str, int]:
        return {m: w for m, w in self.weights.items() if w > 0}

    def dominant(self) -> str:
        """Metric with the largest weight (first in METRICS order on ties)."""
        top = max(self.weights.values())
        return next(m for m in METRICS if self.weights.get(m, 0) == top)


@dataclass(frozen=True)
class AllocationSolution:
    pairs: tuple[tuple[str, str], ...]
    costs: Mapping[str, float]
    err: float | None = None
    score: float | None = None
    trace: tuple = field(default=(), compare=False, repr=False)

    @property
    def config_id(self) -> str:
        return config_id(self.pairs)

    def implementation_of(self, layer: str) -> str:
        return dict((lay, impl) for impl, lay in self.pairs)[layer]


@dataclass(frozen=True)
class OptimizerParams:
    """``neighbourhood`` is how many layers one re-allocation move may change."""

    threshold: float = 0.0
    iteration_limit: int = 20
    target_metric: str | None = None
    neighbourhood: int = 2

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.iteration_limit < 1:
            raise ValueError("iteration limit must be >= 1")
        if self.target_metric is not None:
            _check_metric(self.target_metric)
        if self.neighbourhood < 0:
            raise ValueError("neighbourhood must be >= 0")


# -- cost model ---------------------------------------------------------------


def layer_cost(psi: int, u: float) -> float:
    if psi < 1:
        raise ValueError("a layer has at least one neuron")
    if u < 0:
        raise ValueError("unit cost must be nonnegative")
    return psi * u


def _allocatable(layers: Sequence[LayerSpec]) -> list[LayerSpec]:
    return [layer for layer in layers if layer.allocatable]


def _impl_map(impls: Sequence[ImplementationSpec]) -> dict[str, ImplementationSpec]:
    out = {impl.id: impl for impl in impls}
    if len(out) != len(impls):
        raise ValueError("implementation ids must be unique")
    return out


def network_cost(
    solution: AllocationSolution | Sequence[tuple[str, str]],
    metric: str,
    layers: Sequence[LayerSpec],
    impls: Sequence[ImplementationSpec],
) -> float:
    """Total cost of ``metric`` over all allocated layers, in network units."""
    _check_metric(metric)
    pairs = solution.pairs if isinstance(solution, AllocationSolution) else solution
    by_id = _impl_map(impls)
    chosen = {layer: impl for impl, layer in pairs}
    total = []
    for layer in _allocatable(layers):
        if layer.label not in chosen:
            raise ValueError(f"solution does not cover layer {layer.label!r}")
        impl = by_id.get(chosen[layer.label])
        if impl is None:
            raise ValueError(f"unknown implementation {chosen[layer.label]!r}")
        total.append(layer_cost(layer.psi, impl.unit_cost(layer.label, metric)))
    return math.fsum(total) / NETWORK_SCALE[metric]


def score(
    solution: AllocationSolution | Mapping[str, float],
    weights: ScoreWeights,
    err: float | None = None,
) -> float:
    """prod_j C_j ** w_j / (1 - err); lower is better."""
    costs = solution.costs if isinstance(solution, AllocationSolution) else solution
    if err is None:
        if not isinstance(solution, AllocationSolution) or solution.err is None:
            raise ValueError("an error rate is required")
        err = solution.err
    if not 0.0 <= err < 1.0:
        raise ValueError(f"error rate {err} outside [0, 1)")
    num = 1.0
    for metric, w in weights.active.items():
        if metric not in costs:
            raise ValueError(f"no network {metric} cost for the score")
        num *= costs[metric] ** w
    return num / (1.0 - err)


def is_valid(
    impl: ImplementationSpec, layer: LayerSpec, budgets: Sequence[Budget]
) -> bool:
    """Layer-scoped budgets only; network budgets gate whole solutions."""
    for b in budgets:
        if b.layer == layer.label:
            cost = layer_cost(layer.psi, impl.unit_cost(layer.label, b.metric))
            if not _within(cost, b.limit):
                return False
    return True


def validate_cost_table(impls: Sequence[ImplementationSpec], tolerance: float = 0.10) -> list[str]:
    """Flag entries whose energy disagrees with power x delay by > tolerance."""
    warnings = []
    for impl in impls:
        for layer, costs in impl.unit_costs.items():
            if not {"energy", "power", "delay"} <= costs.keys():
                continue
            energy = costs["energy"]
            product = costs["power"] * costs["delay"]
            if energy == 0:
                deviation = 0.0 if product == 0 else math.inf
            else:
                deviation = abs(energy - product) / energy
            if deviation > tolerance:
                warnings.append(
                    f"{impl.id} on {layer}: energy {energy:g} fJ vs power*delay "
                    f"{product:.4g} fJ ({deviation:.1%} deviation)"
                )
    return warnings


# -- search machinery ----------------------------------------------------------


class _Instance:
    """Index-based view of an allocation problem with cached evaluations."""

    def __init__(self, impls, layers, budgets, weights=None, err_provider=None):
        if not impls:
            raise ValueError("no implementations")
        self.impls = list(impls)
        _impl_map(self.impls)
        self.layers = _allocatable(layers)
        if not self.layers:
            raise ValueError("no allocatable layers")
        self.budgets = list(budgets)
        self.weights = weights
        self.err_provider = err_provider
        self.network_budgets = [b for b in self.budgets if b.layer is None]
        labels = {layer.label for layer in self.layers}
        for b in self.budgets:
            if b.layer is not None and b.layer not in labels:
                raise ValueError(f"budget refers to unknown layer {b.layer!r}")
        self._cost_cache: dict[tuple[int, int, str], float] = {}
        self._err_cache: dict[tuple[int, ...], float] = {}
        self.candidates = [self._layer_candidates(li) for li in range(len(self.layers))]

    def cost(self, li: int, ii: int, metric: str) -> float:
        key = (li, ii, metric)
        if key not in self._cost_cache:
            layer = self.layers[li]
            self._cost_cache[key] = layer_cost(layer.psi, self.impls[ii].unit_cost(layer.label, metric))
        return self._cost_cache[key]

    def _layer_candidates(self, li: int) -> list[int]:
        layer = self.layers[li]
        out = []
        for ii, impl in enumerate(self.impls):
            if not is_valid(impl, layer, self.budgets):
                continue
            if any(not _within(self.cost(li, ii, b.metric), b.base_limit) for b in self.network_budgets):
                continue
            out.append(ii)
        return out

    def total(self, assign: Sequence[int], metric: str) -> float:
        return math.fsum(self.cost(li, ii, metric) for li, ii in enumerate(assign))

    def feasible(self, assign: Sequence[int]) -> bool:
        if any(ii not in self.candidates[li] for li, ii in enumerate(assign)):
            return False
        return all(_within(self.total(assign, b.metric), b.base_limit) for b in self.network_budgets)

    def pairs(self, assign) -> tuple[tuple[str, str], ...]:
        return tuple((self.impls[ii].id, layer.label) for ii, layer in zip(assign, self.layers))

    def report_metrics(self) -> list[str]:
        wanted = {b.metric for b in self.budgets}
        if self.weights is not None:
            wanted |= set(self.weights.active)
        for metric in METRICS:
            if all(metric in impl.unit_costs.get(layer.label, {}) for impl in self.impls for layer in self.layers):
                wanted.add(metric)
        return [m for m in METRICS if m in wanted]

    def network_costs(self, assign) -> dict[str, float]:
        return {m: self.total(assign, m) / NETWORK_SCALE[m] for m in self.report_metrics()}

    def err(self, assign) -> float:
        key = tuple(assign)
        if key not in self._err_cache:
            pairs = self.pairs(assign)
            try:
                value = float(self.err_provider(pairs))
            except ErrProviderError:
                raise
            except Exception as exc:
                raise ErrProviderError(config_id(pairs), str(exc)) from exc
            if not 0.0 <= value < 1.0:
                raise ErrProviderError(config_id(pairs), f"error rate {value} outside [0, 1)")
            self._err_cache[key] = value
        return self._err_cache[key]

    def score(self, assign) -> float:
        return score(self.network_costs(assign), self.weights, self.err(assign))

    def solution(self, assign, with_score=True, trace=()) -> AllocationSolution:
        if with_score:
            return AllocationSolution(
                self.pairs(assign), self.network_costs(assign), self.err(assign), self.score(assign), tuple(trace)
            )
        return AllocationSolution(self.pairs(assign), self.network_costs(assign), trace=tuple(trace))

    def assignment_of(self, solution: AllocationSolution) -> tuple[int, ...]:
        index = {impl.id: ii for ii, impl in enumerate(self.impls)}
        chosen = {layer: impl for impl, layer in solution.pairs}
        try:
            return tuple(index[chosen[layer.label]] for layer in self.layers)
        except KeyError as exc:
            raise ValueError(f"solution does not match the problem: {exc.args[0]!r}") from None


# -- minimum feasible solution ---------------------------------------------------


def minimum_feasible_solution(
    impls: Sequence[ImplementationSpec],
    layers: Sequence[LayerSpec],
    budgets: Sequence[Budget] = (),
) -> AllocationSolution:
    """Greedy first-fit: each layer gets the first valid implementation.

    With network-scoped budgets the first-fit choices are backtracked in list
    order, so the result is the lexicographically first feasible assignment
    and infeasibility is reported only when no assignment exists.
    """
    inst = _Instance(impls, layers, budgets)
    for li, cands in enumerate(inst.candidates):
        if not cands:
            label = inst.layers[li].label
            raise InfeasibleError(f"no implementation satisfies the budgets of layer {label!r}", label)
    first = tuple(c[0] for c in inst.candidates)
    if inst.feasible(first):
        return inst.solution(first, with_score=False)
    found = _first_feasible(inst)
    if found is None:
        limits = ", ".join(b.describe() for b in inst.network_budgets)
        raise InfeasibleError(f"no combination of valid implementations meets {limits}")
    return inst.solution(found, with_score=False)


def _first_feasible(inst: _Instance) -> tuple[int, ...] | None:
    nb = inst.network_budgets
    n_layers = len(inst.layers)
    # cheapest possible completion of layers li.. for each network budget
    rest = np.zeros((n_layers + 1, len(nb)))
    for li in range(n_layers - 1, -1, -1):
        for k, b in enumerate(nb):
            rest[li, k] = rest[li + 1, k] + min(inst.cost(li, ii, b.metric) for ii in inst.candidates[li])

    def dfs(li, partial, spent):
        if li == n_layers:
            return tuple(partial)
        for ii in inst.candidates[li]:
            now = [spent[k] + inst.cost(li, ii, b.metric) for k, b in enumerate(nb)]
            if all(_within(now[k] + rest[li + 1, k], b.base_limit) for k, b in enumerate(nb)):
                found = dfs(li + 1, partial + [ii], now)
                if found is not None:
                    return found
        return None

    return dfs(0, [], [0.0] * len(nb))


# -- optimizer -----------------------------------------------------------------


def _refine_cost(inst: _Instance, assign, target: str, threshold: float):
    """Sweep layers replacing each with its cheapest valid implementation in
    ``target``; stop once a sweep saves no more than ``threshold``."""
    assign = list(assign)
    previous = inst.total(assign, target)
    sweeps = []
    while True:
        for li in range(len(assign)):
            incumbent = inst.cost(li, assign[li], target)
            best = None
            for ii in inst.candidates[li]:
                c = inst.cost(li, ii, target)
                if c < incumbent and (best is None or c < best[0]):
                    trial = assign.copy()
                    trial[li] = ii
                    if inst.feasible(trial):
                        best = (c, ii)
            if best is not None:
                assign[li] = best[1]
        cost = inst.total(assign, target)
        sweeps.append(cost / NETWORK_SCALE[target])
        if previous - cost <= threshold * NETWORK_SCALE[target]:
            return tuple(assign), sweeps
        previous = cost


def _neighbours(inst: _Instance, assign, radius: int):
    """Feasible assignments differing from ``assign`` in 1..radius layers."""
    n_layers = len(assign)
    for k in range(1, min(radius, n_layers) + 1):
        for chosen in itertools.combinations(range(n_layers), k):
            options = [[ii for ii in inst.candidates[li] if ii != assign[li]] for li in chosen]
            for combo in itertools.product(*options):
                trial = list(assign)
                for li, ii in zip(chosen, combo):
                    trial[li] = ii
                trial = tuple(trial)
                if inst.feasible(trial):
                    yield trial


def _better(a: float, b: float) -> bool:
    return a < b and not math.isclose(a, b, rel_tol=_REL_TOL)


def optimizer_targets(params: OptimizerParams, weights: ScoreWeights) -> list[str]:
    """Metrics the optimizer refines, in run order."""
    if params.target_metric:
        return [params.target_metric]
    return sorted(weights.active, key=lambda m: (-weights.weights[m], METRICS.index(m)))


def optimize(
    mfs: AllocationSolution,
    impls: Sequence[ImplementationSpec],
    params: OptimizerParams,
    weights: ScoreWeights,
    err_provider: ErrProvider,
    budgets: Sequence[Budget],
    layers: Sequence[LayerSpec],
) -> AllocationSolution:
    """Refine a minimum feasible solution by cost sweeps and score re-allocation.

    Each outer iteration first runs the cost sweeps on the target metric from
    the current solution, then evaluates every feasible re-allocation of up
    to ``params.neighbourhood`` layers around the best solution so far. The
    loop stops when the score no longer improves or after
    ``params.iteration_limit`` iterations.

    Without an explicit ``params.target_metric`` the loop is run once per
    metric with a positive score weight (heaviest first), each time starting
    from the MFS. The best solution seen over all runs is returned, so its
    score never exceeds the MFS score.
    """
    inst = _Instance(impls, layers, budgets, weights, err_provider)
    start = inst.assignment_of(mfs)
    if not inst.feasible(start):
        raise ValueError("optimize needs a feasible starting solution")
    targets = optimizer_targets(params, weights)
    best, best_score = start, inst.score(start)
    trace = [
        {
            "iteration": 0,
            "stage": "mfs",
            "config": config_id(inst.pairs(start)),
            "score": best_score,
            "best_score": best_score,
        }
    ]
    for target in targets:
        current, current_score = start, inst.score(start)
        for iteration in range(1, params.iteration_limit + 1):
            refined, sweeps = _refine_cost(inst, current, target, params.threshold)
            refined_score = inst.score(refined)
            improved = False
            if _better(refined_score, current_score):
                current, current_score, improved = refined, refined_score, True
            moved, moved_score = None, current_score
            for cand in _neighbours(inst, current, params.neighbourhood):
                s = inst.score(cand)
                if _better(s, moved_score):
                    moved, moved_score = cand, s
            if moved is not None:
                current, current_score, improved = moved, moved_score, True
            if _better(current_score, best_score):
                best, best_score = current, current_score
            trace.append(
                {
                    "iteration": iteration,
                    "stage": "refine",
                    "sweep_costs": sweeps,
                    "target_metric": target,
                    "refined_config": config_id(inst.pairs(refined)),
                    "refined_score": refined_score,
                    "reallocated_config": None if moved is None else config_id(inst.pairs(moved)),
                    "reallocated_score": None if moved is None else moved_score,
                    "best_score": best_score,
                }
            )
            if not improved:
                break
    return inst.solution(best, trace=trace)


def exhaustive_search(
    impls: Sequence[ImplementationSpec],
    layers: Sequence[LayerSpec],
    budgets: Sequence[Budget],
    weights: ScoreWeights,
    err_provider: ErrProvider,
    cap: int = 10**6,
) -> AllocationSolution:
    """Minimum-score feasible assignment by full enumeration.

    Assignments are visited in lexicographic order of implementation
    indices; the first one reaching the minimum score wins.
    """
    inst = _Instance(impls, layers, budgets, weights, err_provider)
    required = len(inst.impls) ** len(inst.layers)
    if required > cap:
        raise EnumerationCapExceeded(required, cap)
    best, best_score = None, math.inf
    for assign in itertools.product(range(len(inst.impls)), repeat=len(inst.layers)):
        if not inst.feasible(assign):
            continue
        s = inst.score(assign)
        if best is None or _better(s, best_score):
            best, best_score = assign, s
    if best is None:
        raise InfeasibleError("no assignment satisfies all budgets")
    return inst.solution(best)


def satisfies(
    solution: AllocationSolution,
    impls: Sequence[ImplementationSpec],
    layers: Sequence[LayerSpec],
    budgets: Sequence[Budget],
) -> bool:
    """Re-evaluate every budget against ``solution`` from scratch."""
    by_id = _impl_map(impls)
    chosen = {layer: impl for impl, layer in solution.pairs}
    alloc = _allocatable(layers)
    if sorted(chosen) != sorted(layer.label for layer in alloc) or len(chosen) != len(solution.pairs):
        return False
    for layer in alloc:
        if not is_valid(by_id[chosen[layer.label]], layer, budgets):
            return False
    for b in budgets:
        if b.layer is None and not _within(network_cost(solution, b.metric, layers, impls), b.limit):
            return False
    return True


# -- problem bundle and synthetic instances --------------------------------------


@dataclass
class AllocationProblem:
    layers: list[LayerSpec]
    implementations: list[ImplementationSpec]
    budgets: list[Budget]
    weights: ScoreWeights
    err_provider: ErrProvider | None = None
    params: OptimizerParams = field(default_factory=OptimizerParams)

    def mfs(self) -> AllocationSolution:
        return minimum_feasible_solution(self.implementations, self.layers, self.budgets)

    def optimize(self, mfs: AllocationSolution | None = None) -> AllocationSolution:
        return optimize(
            mfs or self.mfs(),
            self.implementations,
            self.params,
            self.weights,
            self._provider(),
            self.budgets,
            self.layers,
        )

    def exhaustive(self, cap: int = 10**6) -> AllocationSolution:
        return exhaustive_search(
            self.implementations, self.layers, self.budgets, self.weights, self._provider(), cap
        )

    def evaluate(self, pairs: Sequence[tuple[str, str]]) -> AllocationSolution:
        inst = _Instance(self.implementations, self.layers, self.budgets, self.weights, self._provider())
        return inst.solution(inst.assignment_of(AllocationSolution(tuple(pairs), {})))

    def _provider(self) -> ErrProvider:
        if self.err_provider is None:
            raise ValueError("the problem has no error-rate provider")
        return self.err_provider


class PerLayerErr:
    """Synthetic provider: independent per-(implementation, layer) error rates
    combined as ``1 - prod(1 - r)``."""

    def __init__(self, rates: Mapping[tuple[str, str], float]):
        self.rates = dict(rates)

    def __call__(self, pairs):
        ok = 1.0
        for pair in pairs:
            ok *= 1.0 - self.rates[pair]
        return 1.0 - ok


def random_instance(rng: np.random.Generator, max_layers: int = 4, max_impls: int = 4) -> AllocationProblem:
    """Random small allocation problem with a mix of budget scopes."""
    n_layers = int(rng.integers(1, max_layers + 1))
    n_impls = int(rng.integers(1, max_impls + 1))
    layers = [
        LayerSpec(f"L{k}", "inner_product", int(rng.integers(1, 2000)), int(rng.choice([4, 9, 16, 25, 64])))
        for k in range(n_layers)
    ]
    # per-neuron magnitudes in the range of synthesized SC neurons
    scale = {"area": 300.0, "power": 150.0, "delay": 2.0, "energy": 300.0}
    impls = []
    rates = {}
    for i in range(n_impls):
        costs = {
            layer.label: {m: float(scale[m] * rng.lognormal(0.0, 0.6)) for m in METRICS}
            for layer in layers
        }
        impls.append(ImplementationSpec(f"I{i}", str(rng.choice(["apc", "mux"])), int(rng.choice([256, 512, 1024])), costs))
        for layer in layers:
            rates[(f"I{i}", layer.label)] = float(rng.uniform(0.0, 0.12))
    inst = _Instance(impls, layers, [])
    budgets = []
    for _ in range(int(rng.integers(0, 3))):
        metric = str(rng.choice(METRICS))
        if rng.random() < 0.5:
            li = int(rng.integers(n_layers))
            costs = [inst.cost(li, ii, metric) for ii in range(n_impls)]
            limit = float(rng.uniform(0.8 * min(costs), 1.1 * max(costs)))
            budgets.append(Budget(metric, limit, layers[li].label))
        else:
            lo = sum(min(inst.cost(li, ii, metric) for ii in range(n_impls)) for li in range(n_layers))
            hi = sum(max(inst.cost(li, ii, metric) for ii in range(n_impls)) for li in range(n_layers))
            limit = float(rng.uniform(0.9 * lo, 1.05 * hi)) / NETWORK_SCALE[metric]
            budgets.append(Budget(metric, limit))
    while True:
        w = {m: int(rng.integers(0, 3)) for m in METRICS}
        if any(w.values()):
            break
    return AllocationProblem(layers, impls, budgets, ScoreWeights(w), PerLayerErr(rates))
