import numpy as np
import pytest

from craft.model import Deployment, NetworkGraph, SiteCandidate, SiteKind, TaskSpec, WiredLink
from craft.scenario import Scenario, ScenarioConfig, generate


def make_scenario(edges, fogs=(), links=(), tasks=(), **cfg):
    """Hand-built scenario. edges/fogs: [(site_id, (x, y))]; links: [(a, b, bps)];
    tasks: [(user_id, d, freq, cycles, (x, y))]."""
    sites = [SiteCandidate(i, SiteKind.EDGE, p) for i, p in edges]
    sites += [SiteCandidate(i, SiteKind.FOG, p) for i, p in fogs]
    graph = NetworkGraph(tuple(sites), tuple(WiredLink(a, b, r) for a, b, r in links))
    cfg.setdefault("n_edge_candidates", max(len(edges), 2))
    cfg.setdefault("n_fog_candidates", len(fogs))
    cfg.setdefault("n_users", max(len(tasks), 1))
    return Scenario(ScenarioConfig(**cfg), graph, tuple(TaskSpec(*t) for t in tasks))


def deployment(scn, edge=None, fog=None):
    """edge: {site_id: (sc, ac)}, fog: {site_id: sc}; everything else dormant."""
    edge, fog = edge or {}, fog or {}
    e_ids = [s.site_id for s in scn.graph.edge_sites]
    f_ids = [s.site_id for s in scn.graph.fog_sites]
    return Deployment(
        edge_ids=e_ids,
        edge_sc=[edge.get(i, (0, 1))[0] for i in e_ids],
        edge_ac=[edge.get(i, (0, 1))[1] for i in e_ids],
        edge_x=[int(i in edge) for i in e_ids],
        fog_ids=f_ids,
        fog_sc=[fog.get(i, 0) for i in f_ids],
        fog_y=[int(i in fog) for i in f_ids],
    )


@pytest.fixture(scope="session")
def small_scn():
    return generate(ScenarioConfig(n_edge_candidates=6, n_fog_candidates=2, n_users=25, seed=11))


@pytest.fixture(scope="session")
def default_scn():
    return generate(ScenarioConfig(seed=42))


def rng(seed=0):
    return np.random.default_rng(seed)


# acceptance criteria outcomes, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
