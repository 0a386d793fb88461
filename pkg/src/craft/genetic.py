"""Diversity-adaptive genetic algorithm for edge/fog placement.

The diversity factor (DF) is the fitness spread of the current population
divided by the largest spread observed so far in the run. It steers two
operators in opposite directions:

* parent selection uses a tournament whose size grows as DF falls, so a
  converged population is exploited harder;
* the per-gene mutation probability also grows as DF falls, re-injecting
  variation.

All random draws for a generation happen in one serial pass before any
fitness evaluation, so worker count never changes the trajectory.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .model import Deployment, Fitness, GeneBounds, repair_deployment, repair_genes
from .objectives import EvalReport, capacity_feasible, evaluate, evaluate_batch
from .scenario import Scenario

log = logging.getLogger(__name__)

INIT_REDRAWS = 20


class OptimizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaParams:
    K: int = 1000  # population size
    T: int = 100  # generations
    mut_min: float = 0.1
    mut_max: float = 0.3
    elite_count: int | None = None  # default ceil(0.02 K)
    tournament_min: int = 2
    tournament_max: int = 8
    V: float = 1e5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.elite_count is None:
            object.__setattr__(self, "elite_count", math.ceil(0.02 * self.K))
        self.validate()

    def validate(self) -> None:
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if not 0 <= self.mut_min <= self.mut_max <= 1:
            raise ValueError("need 0 <= mut_min <= mut_max <= 1")
        if not 0 <= self.elite_count < self.K:
            raise ValueError("need 0 <= elite_count < K")
        if not 1 <= self.tournament_min <= self.tournament_max:
            raise ValueError("need 1 <= tournament_min <= tournament_max")
        if self.V < 0:
            raise ValueError("V must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class GenerationStats:
    gen: int
    best: float  # NaN when the generation has no feasible individual
    mean: float
    worst: float
    n_infeasible: int
    df: float


class EvolveResult(NamedTuple):
    best: Deployment
    report: EvalReport
    history: list[GenerationStats]


def _lerp(lo: float, hi: float, t: float) -> float:
    return lo + (hi - lo) * t


# -- sampling --------------------------------------------------------------


def draw_deployment(scn: Scenario, rng: np.random.Generator) -> Deployment:
    """One random deployment: each candidate placed with probability 1/2."""
    g, b = scn.graph, scn.config.bounds
    m, f = len(g.edge_sites), len(g.fog_sites)
    e_on = rng.random(m) < 0.5
    e_sc = rng.integers(b.edge_sc[0], b.edge_sc[1] + 1, size=m)
    e_ac = rng.integers(b.ac[0], b.ac[1] + 1, size=m)
    f_on = rng.random(f) < 0.5
    f_sc = rng.integers(b.fog_sc[0], b.fog_sc[1] + 1, size=f)
    dep = Deployment(
        edge_ids=[s.site_id for s in g.edge_sites],
        edge_sc=np.where(e_on, e_sc, 0),
        edge_ac=e_ac,
        edge_x=e_on.astype(np.int64),
        fog_ids=[s.site_id for s in g.fog_sites],
        fog_sc=np.where(f_on, f_sc, 0),
        fog_y=f_on.astype(np.int64),
    )
    return repair_deployment(dep, b)


def draw_feasible(scn: Scenario, rng: np.random.Generator, max_tries: int) -> Deployment:
    """First of up to ``max_tries`` draws meeting the capacity constraint, else the last draw."""
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    for _ in range(max_tries):
        dep = draw_deployment(scn, rng)
        if capacity_feasible(scn, dep):
            return dep
    return dep


def init_population(scn: Scenario, params: GaParams, rng: np.random.Generator | None = None) -> list[Deployment]:
    if rng is None:
        rng = np.random.default_rng(params.seed)
    return [draw_feasible(scn, rng, 1 + INIT_REDRAWS) for _ in range(params.K)]


# -- adaptive operators ----------------------------------------------------


def diversity_factor(fitnesses: Sequence[Fitness], historical_max_spread: float) -> tuple[float, float]:
    """Return (df, updated historical max spread). Infeasible values are ignored."""
    if not fitnesses:
        raise ValueError("population is empty")
    values = [f.value for f in fitnesses if f.is_finite]
    if not values:
        return 1.0, historical_max_spread
    spread = max(values) - min(values)
    hist = max(historical_max_spread, spread)
    if hist == 0:
        return 1.0, hist
    return min(1.0, max(0.0, spread / hist)), hist


def tournament_size(df: float, params: GaParams) -> int:
    return int(math.floor(_lerp(params.tournament_min, params.tournament_max, 1.0 - df) + 0.5))


def mutation_probability(df: float, params: GaParams) -> float:
    return _lerp(params.mut_min, params.mut_max, 1.0 - df)


def select_index(n: int, df: float, rng: np.random.Generator, params: GaParams) -> int:
    # population is sorted best-first, so the lowest drawn index is the winner
    return int(rng.integers(0, n, size=tournament_size(df, params)).min())


def select_parent(population: Sequence[Deployment], df: float, rng: np.random.Generator, params: GaParams) -> Deployment:
    """Tournament selection over a population sorted by descending fitness."""
    return population[select_index(len(population), df, rng, params)]


class Genes(NamedTuple):
    """Gene fields of a stack of deployments, each shaped (pop, n_sites)."""

    edge_sc: np.ndarray
    edge_ac: np.ndarray
    edge_x: np.ndarray
    fog_sc: np.ndarray
    fog_y: np.ndarray

    @classmethod
    def stack(cls, deps: Sequence[Deployment]) -> Genes:
        return cls(*(np.stack([getattr(d, name) for d in deps]) for name in cls._fields))

    def take(self, rows) -> Genes:
        return Genes(*(a[rows] for a in self))

    def deployments(self, edge_ids: np.ndarray, fog_ids: np.ndarray) -> list[Deployment]:
        return [
            Deployment.trusted(edge_ids, self.edge_sc[r], self.edge_ac[r], self.edge_x[r],
                               fog_ids, self.fog_sc[r], self.fog_y[r])
            for r in range(len(self.edge_sc))
        ]


def _repaired(edge_sc, edge_ac, fog_sc, bounds: GeneBounds) -> Genes:
    e, ac, ex, f, fy = repair_genes(edge_sc, edge_ac, fog_sc, bounds)
    return Genes(e, ac, ex, f, fy)


def crossover_genes(a: Genes, b: Genes, rng: np.random.Generator, bounds: GeneBounds) -> tuple[Genes, Genes]:
    """Row-wise uniform crossover of two parent stacks."""
    e_mask = rng.random(a.edge_sc.shape) < 0.5
    f_mask = rng.random(a.fog_sc.shape) < 0.5

    def child(p: Genes, q: Genes) -> Genes:
        return _repaired(
            np.where(e_mask, p.edge_sc, q.edge_sc),
            np.where(e_mask, p.edge_ac, q.edge_ac),
            np.where(f_mask, p.fog_sc, q.fog_sc),
            bounds,
        )

    return child(a, b), child(b, a)


def mutate_genes(g: Genes, p: float, rng: np.random.Generator, bounds: GeneBounds) -> Genes:
    shape_e, shape_f = g.edge_sc.shape, g.fog_sc.shape
    # fixed number of draws regardless of outcome
    e_hit = rng.random(shape_e) < p
    e_op = rng.integers(0, 3, size=shape_e)
    e_sc_new = rng.integers(bounds.edge_sc[0], bounds.edge_sc[1] + 1, size=shape_e)
    e_ac_new = rng.integers(bounds.ac[0], bounds.ac[1] + 1, size=shape_e)
    f_hit = rng.random(shape_f) < p
    f_op = rng.integers(0, 2, size=shape_f)
    f_sc_new = rng.integers(bounds.fog_sc[0], bounds.fog_sc[1] + 1, size=shape_f)

    toggled = np.where(g.edge_x == 1, 0, e_sc_new)
    edge_sc = np.where(e_hit & (e_op == 0), toggled, g.edge_sc)
    edge_sc = np.where(e_hit & (e_op == 1), e_sc_new, edge_sc)
    edge_ac = np.where(e_hit & (e_op == 2), e_ac_new, g.edge_ac)
    f_toggled = np.where(g.fog_y == 1, 0, f_sc_new)
    fog_sc = np.where(f_hit & (f_op == 0), f_toggled, g.fog_sc)
    fog_sc = np.where(f_hit & (f_op == 1), f_sc_new, fog_sc)
    return _repaired(edge_sc, edge_ac, fog_sc, bounds)


def crossover(a: Deployment, b: Deployment, rng: np.random.Generator, bounds: GeneBounds) -> tuple[Deployment, Deployment]:
    """Uniform crossover: each position's whole gene comes from one parent."""
    if not (np.array_equal(a.edge_ids, b.edge_ids) and np.array_equal(a.fog_ids, b.fog_ids)):
        raise ValueError("parents cover different candidate sets")
    c1, c2 = crossover_genes(Genes.stack([a]), Genes.stack([b]), rng, bounds)
    return c1.deployments(a.edge_ids, a.fog_ids)[0], c2.deployments(a.edge_ids, a.fog_ids)[0]


def mutate(
    d: Deployment, df: float, params: GaParams, rng: np.random.Generator, bounds: GeneBounds,
    p: float | None = None,
) -> Deployment:
    """Redraw one field of each selected gene.

    Edge genes pick uniformly among: toggle placement, resample sc, resample
    ac. Fog genes among: toggle placement, resample sc. ``p`` overrides the
    DF-derived per-gene probability.
    """
    if p is None:
        p = mutation_probability(df, params)
    return mutate_genes(Genes.stack([d]), p, rng, bounds).deployments(d.edge_ids, d.fog_ids)[0]


# -- evaluation ------------------------------------------------------------

_worker_state: dict = {}


def _worker_init(scn: Scenario, V: float) -> None:
    _worker_state["scn"] = scn
    _worker_state["V"] = V


def _worker_eval(deps: list[Deployment]) -> list[EvalReport]:
    return evaluate_batch(_worker_state["scn"], deps, _worker_state["V"])


class PopulationEvaluator:
    """Memoizing evaluator; optionally fans unique deployments out to processes."""

    def __init__(self, scn: Scenario, V: float, workers: int = 1):
        self.scn = scn
        self.V = V
        self.workers = workers
        self.cache: dict[bytes, EvalReport] = {}
        self._pool = None
        if workers > 1:
            self._pool = ProcessPoolExecutor(workers, initializer=_worker_init, initargs=(scn, V))

    def __call__(self, population: Sequence[Deployment]) -> list[EvalReport]:
        todo: dict[bytes, Deployment] = {}
        for dep in population:
            k = dep.key()
            if k not in self.cache and k not in todo:
                todo[k] = dep
        if todo:
            deps = list(todo.values())
            if self._pool is not None and len(deps) > 1:
                n = min(self.workers, len(deps))
                chunks = [deps[i::n] for i in range(n)]
                reports: list[EvalReport] = [None] * len(deps)  # type: ignore[list-item]
                for i, part in enumerate(self._pool.map(_worker_eval, chunks)):
                    reports[i::n] = part
            else:
                reports = evaluate_batch(self.scn, deps, self.V)
            self.cache.update(zip(todo.keys(), reports))
        return [self.cache[dep.key()] for dep in population]

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _sort_order(reports: list[EvalReport]) -> list[int]:
    # stable: among equal fitness the earlier individual (e.g. an elite) stays ahead
    return sorted(range(len(reports)), key=lambda i: reports[i].fitness.sort_key(), reverse=True)


def _stats(gen: int, reports: list[EvalReport], df: float) -> GenerationStats:
    values = [r.fitness.value for r in reports if r.feasible]
    n_inf = len(reports) - len(values)
    if not values:
        nan = float("nan")
        return GenerationStats(gen, nan, nan, nan, n_inf, df)
    return GenerationStats(gen, max(values), math.fsum(values) / len(values), min(values), n_inf, df)


def evolve(
    scn: Scenario, params: GaParams, on_generation: Callable[[GenerationStats], None] | None = None
) -> EvolveResult:
    """Run the optimizer and return the best deployment seen in any generation."""
    rng = np.random.default_rng(params.seed)
    bounds = scn.config.bounds
    K, n_elite = params.K, params.elite_count
    n_off = K - n_elite
    n_pairs = (n_off + 1) // 2
    edge_ids, fog_ids = scn.edge_ids.copy(), scn.fog_ids.copy()
    edge_ids.setflags(write=False)
    fog_ids.setflags(write=False)

    with PopulationEvaluator(scn, params.V, params.workers) as evaluator:
        pop = init_population(scn, params, rng)
        reports = evaluator(pop)
        order = _sort_order(reports)
        pop, reports = [pop[i] for i in order], [reports[i] for i in order]
        genes = Genes.stack(pop)
        df, hist = diversity_factor([r.fitness for r in reports], 0.0)
        best, best_fit = pop[0], reports[0].fitness
        history: list[GenerationStats] = []

        for gen in range(1, params.T + 1):
            size = tournament_size(df, params)
            ia = rng.integers(0, K, size=(n_pairs, size)).min(axis=1)
            ib = rng.integers(0, K, size=(n_pairs, size)).min(axis=1)
            c1, c2 = crossover_genes(genes.take(ia), genes.take(ib), rng, bounds)
            # interleave siblings: c1[0], c2[0], c1[1], ...
            offspring = Genes(*(np.stack([x, y], axis=1).reshape(2 * n_pairs, -1)[:n_off] for x, y in zip(c1, c2)))
            offspring = mutate_genes(offspring, mutation_probability(df, params), rng, bounds)

            children = pop[:n_elite] + offspring.deployments(edge_ids, fog_ids)
            child_genes = Genes(*(np.concatenate([e[:n_elite], o]) for e, o in zip(genes, offspring)))
            reports = evaluator(children)
            order = _sort_order(reports)
            pop, reports = [children[i] for i in order], [reports[i] for i in order]
            genes = child_genes.take(np.array(order))

            df, hist = diversity_factor([r.fitness for r in reports], hist)
            if reports[0].fitness > best_fit:
                best, best_fit = pop[0], reports[0].fitness
            stats = _stats(gen, reports, df)
            history.append(stats)
            if on_generation is not None:
                on_generation(stats)
            log.debug("gen %d best=%s df=%.3f", gen, stats.best, df)

    if not best_fit.is_finite:
        raise OptimizeError("no feasible deployment found")
    return EvolveResult(best, evaluate(scn, best, params.V), history)
