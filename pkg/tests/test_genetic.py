import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from craft import genetic
from craft.baselines import LatticeDomain, exhaustive_oracle
from craft.genetic import (
    GaParams,
    OptimizeError,
    crossover,
    diversity_factor,
    draw_deployment,
    evolve,
    init_population,
    mutate,
    mutation_probability,
    select_index,
    select_parent,
    tournament_size,
)
from craft.model import Fitness, validate_deployment
from craft.objectives import evaluate
from craft.scenario import ScenarioConfig, generate

PARAMS = GaParams(K=20, T=5)


def F(*values):
    return [Fitness(v) for v in values]


def test_params_defaults_and_validation():
    p = GaParams()
    assert (p.K, p.T, p.mut_min, p.mut_max) == (1000, 100, 0.1, 0.3)
    assert p.elite_count == 20
    assert GaParams(K=200).elite_count == 4
    with pytest.raises(ValueError):
        GaParams(K=1)
    with pytest.raises(ValueError):
        GaParams(mut_min=0.4, mut_max=0.3)
    with pytest.raises(ValueError):
        GaParams(K=10, elite_count=10)
    with pytest.raises(ValueError):
        GaParams(tournament_min=0)


def test_init_population_is_valid_and_seeded(small_scn):
    pop = init_population(small_scn, GaParams(K=10, seed=4))
    assert len(pop) == 10
    bounds = small_scn.config.bounds
    assert all(validate_deployment(small_scn.graph, d, bounds) == [] for d in pop)
    assert pop == init_population(small_scn, GaParams(K=10, seed=4))
    assert pop != init_population(small_scn, GaParams(K=10, seed=5))


def test_init_population_mostly_feasible_with_abundant_capacity():
    feasible = total = 0
    for seed in range(50):
        scn = generate(ScenarioConfig(n_users=70, seed=seed))
        for dep in init_population(scn, GaParams(K=10, seed=seed)):
            feasible += evaluate(scn, dep, 1.0, keep_plan=False).feasible
            total += 1
    assert feasible / total >= 0.9


def test_diversity_factor_examples():
    df, hist = diversity_factor(F(-1000, -5000), 0.0)
    assert (df, hist) == (1.0, 4000.0)
    df, hist = diversity_factor(F(-1000, -3000), 4000.0)
    assert (df, hist) == (0.5, 4000.0)
    df, _ = diversity_factor(F(-7, -7, -7), 4000.0)
    assert df == 0.0


def test_diversity_factor_edge_cases():
    assert diversity_factor(F(None, None), 10.0) == (1.0, 10.0)
    assert diversity_factor(F(-3, -3), 0.0) == (1.0, 0.0)
    # infeasible members do not count towards the spread
    assert diversity_factor(F(-1, None, -3), 4.0) == (0.5, 4.0)
    with pytest.raises(ValueError):
        diversity_factor([], 0.0)


@given(st.lists(st.one_of(st.none(), st.floats(-1e9, 0)), min_size=1, max_size=30), st.floats(0, 1e10))
def test_diversity_factor_in_unit_interval(values, hist):
    df, new_hist = diversity_factor(F(*values), hist)
    assert 0.0 <= df <= 1.0
    assert new_hist >= hist


def test_tournament_size_endpoints():
    p = GaParams(K=10)
    assert tournament_size(1.0, p) == 2
    assert tournament_size(0.0, p) == 8
    assert tournament_size(0.5, p) == 5
    # 2 + 6 * 0.25 = 3.5 rounds up
    assert tournament_size(0.75, p) == 4


def test_mutation_probability_endpoints():
    p = GaParams(K=10)
    assert mutation_probability(1.0, p) == pytest.approx(0.1)
    assert mutation_probability(0.0, p) == pytest.approx(0.3)
    assert mutation_probability(0.5, p) == pytest.approx(0.2)


def test_low_diversity_increases_selection_pressure():
    p = GaParams(K=10)
    n, draws = 100, 10_000
    r = np.random.default_rng(0)
    top_low = sum(select_index(n, 0.0, r, p) < n // 10 for _ in range(draws))
    top_high = sum(select_index(n, 1.0, r, p) < n // 10 for _ in range(draws))
    assert top_low > top_high


def test_select_parent_prefers_lower_index():
    pop = list("abcdefghij")
    r = np.random.default_rng(1)
    # tournament of 8 from 10 almost always contains index 0 or 1
    wins = [select_parent(pop, 0.0, r, GaParams(K=10)) for _ in range(200)]
    assert wins.count("a") + wins.count("b") > 150


def test_crossover_identity(small_scn):
    a = draw_deployment(small_scn, np.random.default_rng(0))
    c1, c2 = crossover(a, a, np.random.default_rng(1), small_scn.config.bounds)
    assert c1 == a and c2 == a


def test_crossover_children_take_whole_genes(small_scn):
    r = np.random.default_rng(2)
    bounds = small_scn.config.bounds
    for _ in range(50):
        a, b = draw_deployment(small_scn, r), draw_deployment(small_scn, r)
        c1, c2 = crossover(a, b, r, bounds)
        for ga, gb, g1, g2 in zip(a.edge_genes, b.edge_genes, c1.edge_genes, c2.edge_genes):
            assert (g1, g2) in ((ga, gb), (gb, ga))
        for ga, gb, g1, g2 in zip(a.fog_genes, b.fog_genes, c1.fog_genes, c2.fog_genes):
            assert (g1, g2) in ((ga, gb), (gb, ga))


def test_crossover_inherits_half_from_each_parent(small_scn):
    scn = small_scn
    m = len(scn.graph.edge_sites)
    a = genetic.Deployment(
        edge_ids=scn.edge_ids, edge_sc=[4] * m, edge_ac=[1] * m, edge_x=[1] * m,
        fog_ids=scn.fog_ids, fog_sc=[6, 6], fog_y=[1, 1],
    )
    b = a.replace(edge_sc=[5] * m)
    r = np.random.default_rng(3)
    n = 2000
    hits = np.zeros(m)
    for _ in range(n):
        c1, _ = crossover(a, b, r, scn.config.bounds)
        hits += c1.edge_sc == 4
    assert np.all(np.abs(hits / n - 0.5) < 0.04)
    assert abs(hits.mean() / n - 0.5) < 0.02


def test_crossover_rejects_mismatched_parents(small_scn, default_scn):
    a = draw_deployment(small_scn, np.random.default_rng(0))
    b = draw_deployment(default_scn, np.random.default_rng(0))
    with pytest.raises(ValueError):
        crossover(a, b, np.random.default_rng(0), small_scn.config.bounds)


def test_mutation_with_zero_probability_is_identity(small_scn):
    r = np.random.default_rng(4)
    d = draw_deployment(small_scn, r)
    assert mutate(d, 0.0, PARAMS, r, small_scn.config.bounds, p=0.0) == d


def test_mutation_touches_one_field_per_gene(small_scn):
    r = np.random.default_rng(5)
    bounds = small_scn.config.bounds
    for _ in range(100):
        d = draw_deployment(small_scn, r)
        m = mutate(d, 0.0, PARAMS, r, bounds, p=1.0)
        for old, new in zip(d.edge_genes, m.edge_genes):
            placed_change = old.x != new.x
            sc_change = old.sc != new.sc
            ac_change = old.ac != new.ac
            # a toggle changes placement (and sc, and maybe resets ac); otherwise one field moves
            if not placed_change:
                assert not (sc_change and ac_change)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1))
def test_mutation_output_is_valid(seed, df):
    scn = generate(ScenarioConfig(n_edge_candidates=5, n_fog_candidates=2, n_users=5, seed=1))
    r = np.random.default_rng(seed)
    out = mutate(draw_deployment(scn, r), df, PARAMS, r, scn.config.bounds)
    assert validate_deployment(scn.graph, out, scn.config.bounds) == []


def _tiny(seed, **kw):
    cfg = dict(n_edge_candidates=3, n_fog_candidates=1, n_users=12, edge_sc=(4, 4), fog_sc=(6, 6), ac=(1, 2))
    cfg.update(kw)
    return generate(ScenarioConfig(seed=seed, **cfg))


def test_evolve_best_is_monotone_and_history_complete(small_scn):
    res = evolve(small_scn, GaParams(K=30, T=15, V=1e3, seed=2))
    best = [s.best for s in res.history]
    assert [s.gen for s in res.history] == list(range(1, 16))
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert res.report.fitness.value == max(best)
    for s in res.history:
        assert 0.0 <= s.df <= 1.0
        assert s.best >= s.mean >= s.worst


def test_evolve_is_deterministic(small_scn):
    p = GaParams(K=30, T=10, V=1e4, seed=9)
    a, b = evolve(small_scn, p), evolve(small_scn, p)
    assert a.best == b.best and a.history == b.history


def test_evolve_population_size_constant(small_scn, monkeypatch):
    sizes = []
    original = genetic.PopulationEvaluator.__call__

    def spy(self, population):
        sizes.append(len(population))
        return original(self, population)

    monkeypatch.setattr(genetic.PopulationEvaluator, "__call__", spy)
    evolve(small_scn, GaParams(K=25, T=6, seed=1))
    assert sizes == [25] * 7


def test_evolve_individuals_are_always_valid(small_scn, monkeypatch):
    bounds = small_scn.config.bounds
    original = genetic.PopulationEvaluator.__call__

    def check(self, population):
        for d in population:
            assert validate_deployment(small_scn.graph, d, bounds) == []
        return original(self, population)

    monkeypatch.setattr(genetic.PopulationEvaluator, "__call__", check)
    evolve(small_scn, GaParams(K=20, T=5, seed=3))


def test_worker_count_does_not_change_result(small_scn):
    p = GaParams(K=24, T=4, V=1e3, seed=6)
    serial = evolve(small_scn, p)
    parallel = evolve(small_scn, dataclasses.replace(p, workers=2))
    assert serial.best == parallel.best
    assert serial.history == parallel.history


def test_scaling_fitness_keeps_the_same_winner():
    scn = _tiny(3, n_edge_candidates=6, n_fog_candidates=2, edge_sc=(4, 6), ac=(1, 5))
    scaled_cfg = dataclasses.replace(scn.config, c_fixed=5000.0, c_dynamic=1000.0)
    scaled = type(scn)(scaled_cfg, scn.graph, scn.tasks)
    a = evolve(scn, GaParams(K=30, T=10, V=100.0, seed=1))
    b = evolve(scaled, GaParams(K=30, T=10, V=1000.0, seed=1))
    assert a.best == b.best


def test_all_infeasible_raises():
    scn = _tiny(0, edge_sc=(0, 0))
    with pytest.raises(OptimizeError, match="no feasible deployment found"):
        evolve(scn, GaParams(K=10, T=3))


def test_tiny_instance_matches_oracle():
    domain = LatticeDomain(edge_sc=(0, 4), fog_sc=(0, 6), ac=(1, 2))
    hits = 0
    for seed in range(20):
        scn = _tiny(seed)
        _, opt = exhaustive_oracle(scn, 1e3, domain)
        got = evolve(scn, GaParams(K=30, T=20, V=1e3, seed=seed)).report
        hits += (opt.fitness.value - got.fitness.value) <= 0.01 * abs(opt.fitness.value)
    assert hits >= 19


def test_zero_v_finds_cheapest_deployment():
    domain = LatticeDomain(edge_sc=(0, 4), fog_sc=(0, 6), ac=(1, 2))
    for seed in range(5):
        scn = _tiny(seed)
        _, opt = exhaustive_oracle(scn, 0.0, domain)
        got = evolve(scn, GaParams(K=30, T=20, V=0.0, seed=seed)).report
        assert got.total_cost <= opt.total_cost * 1.01
