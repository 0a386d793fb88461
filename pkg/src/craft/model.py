"""Domain types shared across the package.

Deployments are stored column-wise (one small integer array per gene field)
because the optimizer creates and discards hundreds of thousands of them.
The per-gene view (``EdgeGene`` / ``FogGene``) is available on demand.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class SiteKind(str, enum.Enum):
    EDGE = "edge"
    FOG = "fog"


@dataclass(frozen=True)
class TaskSpec:
    user_id: int
    d: float  # bits
    freq: float  # Hz
    cycles: float
    pos: tuple[float, float]

    def __post_init__(self):
        if not (self.d > 0 and self.freq > 0 and self.cycles > 0):
            raise ValueError(f"task {self.user_id}: d, freq and cycles must be > 0")


@dataclass(frozen=True)
class SiteCandidate:
    site_id: int
    kind: SiteKind
    pos: tuple[float, float]


@dataclass(frozen=True)
class WiredLink:
    a: int
    b: int
    bitrate: float  # bit/s

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"link {self.a}-{self.b}: self loop")
        if not self.bitrate > 0:
            raise ValueError(f"link {self.a}-{self.b}: bitrate must be > 0")

    def other(self, site_id: int) -> int:
        return self.b if site_id == self.a else self.a


@dataclass(frozen=True)
class NetworkGraph:
    """Placement candidates and the wired links between them.

    ``sites`` is kept sorted by ``site_id``; a site's position in that tuple
    is its internal node index, so "lower index" and "lower site_id" agree.
    """

    sites: tuple[SiteCandidate, ...]
    links: tuple[WiredLink, ...]

    def __post_init__(self):
        sites = tuple(sorted(self.sites, key=lambda s: s.site_id))
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "links", tuple(self.links))
        ids = [s.site_id for s in sites]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate site_id in graph")
        known = set(ids)
        for ln in self.links:
            if ln.a not in known or ln.b not in known:
                raise ValueError(f"link {ln.a}-{ln.b} references an unknown site")

    @functools.cached_property
    def index_of(self) -> dict[int, int]:
        return {s.site_id: i for i, s in enumerate(self.sites)}

    @functools.cached_property
    def edge_sites(self) -> tuple[SiteCandidate, ...]:
        return tuple(s for s in self.sites if s.kind is SiteKind.EDGE)

    @functools.cached_property
    def fog_sites(self) -> tuple[SiteCandidate, ...]:
        return tuple(s for s in self.sites if s.kind is SiteKind.FOG)

    @functools.cached_property
    def adjacency(self) -> dict[int, tuple[WiredLink, ...]]:
        adj: dict[int, list[WiredLink]] = {s.site_id: [] for s in self.sites}
        for ln in self.links:
            adj[ln.a].append(ln)
            adj[ln.b].append(ln)
        return {k: tuple(v) for k, v in adj.items()}

    def site(self, site_id: int) -> SiteCandidate:
        return self.sites[self.index_of[site_id]]

    def link_between(self, a: int, b: int) -> WiredLink:
        for ln in self.adjacency[a]:
            if ln.other(a) == b:
                return ln
        raise KeyError(f"no link {a}-{b}")

    def structural_problems(self) -> list[str]:
        """Connectivity problems: edge subgraph connected, every fog linked to an edge."""
        problems = []
        edges = {s.site_id for s in self.edge_sites}
        kinds = {s.site_id: s.kind for s in self.sites}
        for ln in self.links:
            if kinds[ln.a] is SiteKind.FOG and kinds[ln.b] is SiteKind.FOG:
                problems.append(f"fog-fog link {ln.a}-{ln.b}")
        if edges:
            start = min(edges)
            seen = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for ln in self.adjacency[u]:
                    v = ln.other(u)
                    if v in edges and v not in seen:
                        seen.add(v)
                        stack.append(v)
            if seen != edges:
                problems.append("edge subgraph is not connected")
        for f in self.fog_sites:
            if not any(ln.other(f.site_id) in edges for ln in self.adjacency[f.site_id]):
                problems.append(f"fog site {f.site_id} has no link to an edge site")
        return problems


@dataclass(frozen=True)
class GeneBounds:
    """Allowed server counts for a placed site and the access-point range."""

    edge_sc: tuple[int, int] = (4, 6)
    fog_sc: tuple[int, int] = (6, 8)
    ac: tuple[int, int] = (1, 5)

    def __post_init__(self):
        for name in ("edge_sc", "fog_sc", "ac"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name} must satisfy 0 <= min <= max, got {(lo, hi)}")
        if self.ac[0] < 1:
            raise ValueError("ac minimum must be >= 1")


@dataclass(frozen=True)
class EdgeGene:
    site_id: int
    sc: int
    ac: int
    x: int


@dataclass(frozen=True)
class FogGene:
    site_id: int
    sc: int
    y: int


_ARRAY_FIELDS = ("edge_ids", "edge_sc", "edge_ac", "edge_x", "fog_ids", "fog_sc", "fog_y")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Deployment:
    """One chromosome: a gene per edge candidate and per fog candidate.

    Fields are parallel integer arrays ordered by site_id. Instances are
    immutable and hash/compare by value.
    """

    edge_ids: np.ndarray
    edge_sc: np.ndarray
    edge_ac: np.ndarray
    edge_x: np.ndarray
    fog_ids: np.ndarray
    fog_sc: np.ndarray
    fog_y: np.ndarray
    _key: bytes = field(init=False, repr=False)

    def __post_init__(self):
        arrays = [_frozen(getattr(self, name)) for name in _ARRAY_FIELDS]
        n_e, n_f = len(arrays[0]), len(arrays[4])
        if not all(a.ndim == 1 for a in arrays):
            raise ValueError("gene arrays must be one-dimensional")
        if not (len(arrays[1]) == len(arrays[2]) == len(arrays[3]) == n_e):
            raise ValueError("edge gene arrays differ in length")
        if not (len(arrays[5]) == len(arrays[6]) == n_f):
            raise ValueError("fog gene arrays differ in length")
        trusted = Deployment.trusted(*arrays)
        for name in (*_ARRAY_FIELDS, "_key"):
            object.__setattr__(self, name, getattr(trusted, name))

    @classmethod
    def trusted(cls, edge_ids, edge_sc, edge_ac, edge_x, fog_ids, fog_sc, fog_y) -> Deployment:
        """Fast constructor for int64 arrays the caller will never write to again."""
        self = object.__new__(cls)
        arrays = (edge_ids, edge_sc, edge_ac, edge_x, fog_ids, fog_sc, fog_y)
        for name, arr in zip(_ARRAY_FIELDS, arrays):
            if arr.flags.writeable:
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_key", b"".join(a.tobytes() for a in arrays) + len(edge_ids).to_bytes(4, "little"))
        return self

    @classmethod
    def from_genes(cls, edge_genes: Iterable[EdgeGene], fog_genes: Iterable[FogGene]) -> Deployment:
        eg, fg = list(edge_genes), list(fog_genes)
        return cls(
            edge_ids=[g.site_id for g in eg],
            edge_sc=[g.sc for g in eg],
            edge_ac=[g.ac for g in eg],
            edge_x=[g.x for g in eg],
            fog_ids=[g.site_id for g in fg],
            fog_sc=[g.sc for g in fg],
            fog_y=[g.y for g in fg],
        )

    @classmethod
    def empty(cls, g: NetworkGraph) -> Deployment:
        """Nothing placed anywhere."""
        m, f = len(g.edge_sites), len(g.fog_sites)
        return cls(
            edge_ids=[s.site_id for s in g.edge_sites], edge_sc=[0] * m, edge_ac=[1] * m,
            edge_x=[0] * m, fog_ids=[s.site_id for s in g.fog_sites], fog_sc=[0] * f, fog_y=[0] * f,
        )

    @property
    def edge_genes(self) -> tuple[EdgeGene, ...]:
        return tuple(
            EdgeGene(int(i), int(s), int(a), int(x))
            for i, s, a, x in zip(self.edge_ids, self.edge_sc, self.edge_ac, self.edge_x)
        )

    @property
    def fog_genes(self) -> tuple[FogGene, ...]:
        return tuple(FogGene(int(i), int(s), int(y)) for i, s, y in zip(self.fog_ids, self.fog_sc, self.fog_y))

    def replace(self, **arrays) -> Deployment:
        fields = {name: getattr(self, name) for name in _ARRAY_FIELDS}
        fields.update(arrays)
        return Deployment(**fields)

    def gene_vector(self) -> tuple[int, ...]:
        """(sc, ac, x) per edge then (sc, y) per fog; the oracle's tie-break order."""
        edge = np.stack([self.edge_sc, self.edge_ac, self.edge_x], axis=1).ravel()
        fog = np.stack([self.fog_sc, self.fog_y], axis=1).ravel()
        return tuple(int(v) for v in np.concatenate([edge, fog]))

    def placed_sites(self) -> list[int]:
        return [int(i) for i in self.edge_ids[self.edge_x == 1]] + [int(i) for i in self.fog_ids[self.fog_y == 1]]

    def key(self) -> bytes:
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Deployment):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        edges = ", ".join(
            f"{g.site_id}:sc={g.sc},ac={g.ac}" for g in self.edge_genes if g.x
        )
        fogs = ", ".join(f"{g.site_id}:sc={g.sc}" for g in self.fog_genes if g.y)
        return f"Deployment(edges=[{edges}], fogs=[{fogs}])"


@functools.total_ordering
class Fitness:
    """Either a finite real value or Infeasible, which ranks below everything."""

    __slots__ = ("value",)

    def __init__(self, value: float | None):
        if value is not None:
            value = float(value)
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError("finite fitness requires a finite real value")
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("Fitness is immutable")

    @classmethod
    def finite(cls, value: float) -> Fitness:
        return cls(value)

    @classmethod
    def infeasible(cls) -> Fitness:
        return INFEASIBLE

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def sort_key(self) -> tuple[int, float]:
        return (0, 0.0) if self.value is None else (1, self.value)

    def __eq__(self, other):
        if not isinstance(other, Fitness):
            return NotImplemented
        return self.value == other.value

    def __lt__(self, other):
        if not isinstance(other, Fitness):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return float("-inf") if self.value is None else self.value

    def __repr__(self):
        return "Fitness(Infeasible)" if self.value is None else f"Fitness({self.value!r})"

    def __reduce__(self):
        return (Fitness, (self.value,))


INFEASIBLE = Fitness(None)


def validate_deployment(g: NetworkGraph, dep: Deployment, bounds: GeneBounds | None = None) -> list[str]:
    """List every broken Deployment/gene invariant; empty means valid.

    Server-count ranges are only checked when ``bounds`` is given.
    """
    out: list[str] = []
    kinds = {s.site_id: s.kind for s in g.sites}
    edge_ids = [s.site_id for s in g.edge_sites]
    fog_ids = [s.site_id for s in g.fog_sites]

    def check_ids(ids: Sequence[int], expected: list[int], kind: SiteKind):
        for sid in ids:
            if sid not in kinds:
                out.append(f"site {sid}: unknown site")
            elif kinds[sid] is not kind:
                out.append(f"site {sid}: kind mismatch ({kind.value} gene on {kinds[sid].value} site)")
        if sorted(ids) != sorted(expected):
            missing = sorted(set(expected) - set(ids))
            if missing:
                out.append(f"{kind.value} candidates {missing}: no gene (coverage)")
            if len(set(ids)) != len(ids):
                out.append(f"{kind.value} genes: duplicate site_id (coverage)")
        elif list(ids) != sorted(ids):
            out.append(f"{kind.value} genes: not ordered by site_id")

    check_ids([int(i) for i in dep.edge_ids], edge_ids, SiteKind.EDGE)
    check_ids([int(i) for i in dep.fog_ids], fog_ids, SiteKind.FOG)

    for gene in dep.edge_genes:
        sid = gene.site_id
        if gene.x not in (0, 1):
            out.append(f"site {sid}: indicator must be 0 or 1")
        if gene.sc < 0:
            out.append(f"site {sid}: negative server count")
        if (gene.x == 1) != (gene.sc >= 1):
            out.append(f"site {sid}: indicator/server-count mismatch")
        if gene.ac < 1:
            out.append(f"site {sid}: access-point count must be >= 1")
        if gene.x == 0 and gene.ac != 1:
            out.append(f"site {sid}: dormant site must keep ac = 1")
        if bounds is not None:
            if gene.x == 1 and not bounds.edge_sc[0] <= gene.sc <= bounds.edge_sc[1]:
                out.append(f"site {sid}: server count {gene.sc} outside {bounds.edge_sc}")
            if not bounds.ac[0] <= gene.ac <= bounds.ac[1] and not (gene.x == 0 and gene.ac == 1):
                out.append(f"site {sid}: access-point count {gene.ac} outside {bounds.ac}")
    for gene in dep.fog_genes:
        sid = gene.site_id
        if gene.y not in (0, 1):
            out.append(f"site {sid}: indicator must be 0 or 1")
        if gene.sc < 0:
            out.append(f"site {sid}: negative server count")
        if (gene.y == 1) != (gene.sc >= 1):
            out.append(f"site {sid}: indicator/server-count mismatch")
        if bounds is not None and gene.y == 1 and not bounds.fog_sc[0] <= gene.sc <= bounds.fog_sc[1]:
            out.append(f"site {sid}: server count {gene.sc} outside {bounds.fog_sc}")
    return out


def repair_genes(edge_sc, edge_ac, fog_sc, bounds: GeneBounds):
    """Array form of :func:`repair_deployment`; accepts (m,) or (pop, m) arrays.

    Returns ``(edge_sc, edge_ac, edge_x, fog_sc, fog_y)``. Incoming indicators
    are ignored since they are derived from the server counts.
    """
    e = np.maximum(edge_sc, 0)
    e = np.where(e > 0, np.minimum(np.maximum(e, bounds.edge_sc[0]), bounds.edge_sc[1]), 0)
    ex = (e >= 1).astype(np.int64)
    ac = np.where(ex == 1, np.minimum(np.maximum(edge_ac, bounds.ac[0]), bounds.ac[1]), 1)
    f = np.maximum(fog_sc, 0)
    f = np.where(f > 0, np.minimum(np.maximum(f, bounds.fog_sc[0]), bounds.fog_sc[1]), 0)
    fy = (f >= 1).astype(np.int64)
    return e, ac, ex, f, fy


def repair_deployment(dep: Deployment, bounds: GeneBounds) -> Deployment:
    """Clamp counts into bounds and recompute indicators from server counts.

    A dormant edge site gets ac reset to 1.
    """
    e, ac, ex, f, fy = repair_genes(dep.edge_sc, dep.edge_ac, dep.fog_sc, bounds)
    return Deployment.trusted(dep.edge_ids, e, ac, ex, dep.fog_ids, f, fy)
