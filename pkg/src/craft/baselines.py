"""Reference methods: random placement and exhaustive search over a small lattice."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .genetic import INIT_REDRAWS, OptimizeError, draw_feasible
from .model import Deployment, GeneBounds
from .objectives import EvalReport, evaluate
from .scenario import Scenario

DEFAULT_MAX_LATTICE = 10**6


class LatticeTooLarge(ValueError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"lattice has {size:.3e} deployments, limit is {limit:.0e}")
        self.size = size
        self.limit = limit


def random_placement(scn: Scenario, seed: int, max_tries: int = 1 + INIT_REDRAWS) -> Deployment:
    """Draw like a single GA-initial individual; may return an infeasible deployment."""
    return draw_feasible(scn, np.random.default_rng(seed), max_tries)


@dataclass(frozen=True)
class LatticeDomain:
    """Allowed values per gene field. Server count 0 means "not placed"."""

    edge_sc: tuple[int, ...] = (0, 4)
    fog_sc: tuple[int, ...] = (0, 6)
    ac: tuple[int, ...] = (1, 2)

    @classmethod
    def from_bounds(cls, b: GeneBounds) -> LatticeDomain:
        return cls(
            edge_sc=(0, *range(max(b.edge_sc[0], 1), b.edge_sc[1] + 1)),
            fog_sc=(0, *range(max(b.fog_sc[0], 1), b.fog_sc[1] + 1)),
            ac=tuple(range(b.ac[0], b.ac[1] + 1)),
        )

    def edge_options(self) -> list[tuple[int, int, int]]:
        """(sc, ac, x) choices in lexicographic order; a dormant site has a single choice."""
        opts = set()
        for sc in self.edge_sc:
            if sc <= 0:
                opts.add((0, 1, 0))
            else:
                opts.update((sc, ac, 1) for ac in self.ac)
        return sorted(opts)

    def fog_options(self) -> list[tuple[int, int]]:
        return sorted({(max(sc, 0), int(sc > 0)) for sc in self.fog_sc})

    def size(self, n_edge: int, n_fog: int) -> int:
        return len(self.edge_options()) ** n_edge * len(self.fog_options()) ** n_fog


def enumerate_lattice(scn: Scenario, domain: LatticeDomain):
    """Yield every deployment in the lattice, lexicographically by gene vector."""
    g = scn.graph
    edge_ids = [s.site_id for s in g.edge_sites]
    fog_ids = [s.site_id for s in g.fog_sites]
    e_opts, f_opts = domain.edge_options(), domain.fog_options()
    for combo in itertools.product(*([e_opts] * len(edge_ids) + [f_opts] * len(fog_ids))):
        e, f = combo[: len(edge_ids)], combo[len(edge_ids):]
        yield Deployment(
            edge_ids=edge_ids,
            edge_sc=[c[0] for c in e], edge_ac=[c[1] for c in e], edge_x=[c[2] for c in e],
            fog_ids=fog_ids,
            fog_sc=[c[0] for c in f], fog_y=[c[1] for c in f],
        )


def exhaustive_oracle(
    scn: Scenario, V: float, domain: LatticeDomain | None = None, max_size: int = DEFAULT_MAX_LATTICE
) -> tuple[Deployment, EvalReport]:
    """Best deployment in the lattice; ties go to the lexicographically smaller gene vector."""
    if domain is None:
        domain = LatticeDomain.from_bounds(scn.config.bounds)
    size = domain.size(len(scn.graph.edge_sites), len(scn.graph.fog_sites))
    if size > max_size:
        raise LatticeTooLarge(size, max_size)
    best: Deployment | None = None
    best_report: EvalReport | None = None
    for dep in enumerate_lattice(scn, domain):
        rep = evaluate(scn, dep, V, keep_plan=False)
        if rep.feasible and (best_report is None or rep.fitness > best_report.fitness):
            best, best_report = dep, rep
    if best is None:
        raise OptimizeError("no feasible deployment in the lattice")
    return best, evaluate(scn, best, V)
