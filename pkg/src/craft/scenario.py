"""Random city scenarios: candidate sites, wired topology, user tasks.

Everything sampled here comes from one ``numpy.random.Generator`` seeded with
``ScenarioConfig.seed``, so a config fully determines its scenario.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Any

import numpy as np

from .model import GeneBounds, NetworkGraph, SiteCandidate, SiteKind, TaskSpec, WiredLink

FORMAT_TAG = "craft-scenario"
FORMAT_VERSION = 1


class CompModel(str, enum.Enum):
    LITERAL = "literal"  # cycles / freq
    PER_BIT = "per-bit"  # cycles * d / freq


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


class ScenarioFormatError(ValueError):
    """A scenario file could not be parsed; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


_RANGE_FIELDS = (
    "edge_sc", "fog_sc", "ac", "edge_edge_bitrate", "edge_fog_bitrate",
    "task_freq", "task_cycles", "task_d",
)
_POSITIVE_FIELDS = ("area_side", "alpha_hz", "omega_hz", "W", "h_bar", "sigma2", "P")


@dataclass(frozen=True)
class ScenarioConfig:
    n_edge_candidates: int = 30
    n_fog_candidates: int = 5
    n_users: int = 100
    area_side: float = 1000.0  # meters
    # placed-site server counts and access points
    edge_sc: tuple[int, int] = (4, 6)
    fog_sc: tuple[int, int] = (6, 8)
    ac: tuple[int, int] = (1, 5)
    # per-server frequency, Hz
    alpha_hz: float = 0.5e9
    omega_hz: float = 0.5e9
    # wired bitrates, bit/s
    edge_edge_bitrate: tuple[float, float] = (4.85e6, 6.85e6)
    edge_fog_bitrate: tuple[float, float] = (2.01e6, 4.01e6)
    W: float = 10e6  # channel bandwidth, Hz
    h_bar: float = 1e-5
    sigma2: float = 1e-13  # noise power, W (-100 dBm)
    P: float = 0.1  # UE transmit power, W
    c_fixed: float = 500.0
    c_dynamic: float = 100.0
    task_freq: tuple[float, float] = (50e6, 200e6)
    task_cycles: tuple[float, float] = (10.0, 60.0)
    task_d: tuple[float, float] = (800.0, 4e6)
    comp_model: CompModel = CompModel.LITERAL
    extra_link_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in _RANGE_FIELDS:
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "comp_model", CompModel(self.comp_model))

    @property
    def bounds(self) -> GeneBounds:
        return GeneBounds(edge_sc=self.edge_sc, fog_sc=self.fog_sc, ac=self.ac)

    def validate(self) -> ScenarioConfig:
        if self.n_edge_candidates < 2:
            raise ConfigError("n_edge_candidates", "n_edge_candidates must be >= 2")
        if self.n_fog_candidates < 0:
            raise ConfigError("n_fog_candidates", "n_fog_candidates must be >= 0")
        if self.n_users < 1:
            raise ConfigError("n_users", "n_users must be >= 1")
        for name in _POSITIVE_FIELDS:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigError(name, f"{name} must be > 0")
        for name in ("c_fixed", "c_dynamic"):
            if getattr(self, name) < 0:
                raise ConfigError(name, f"{name} must be >= 0")
        for name in _RANGE_FIELDS:
            rng = getattr(self, name)
            if len(rng) != 2 or not rng[0] <= rng[1]:
                raise ConfigError(name, f"{name} must be a [min, max] pair with min <= max")
        for name in ("edge_sc", "fog_sc"):
            if getattr(self, name)[0] < 0:
                raise ConfigError(name, f"{name} must be non-negative")
        if self.ac[0] < 1:
            raise ConfigError("ac", "ac minimum must be >= 1")
        for name in ("edge_edge_bitrate", "edge_fog_bitrate", "task_freq", "task_cycles", "task_d"):
            if getattr(self, name)[0] <= 0:
                raise ConfigError(name, f"{name} must be > 0")
        if not 0 <= self.extra_link_fraction:
            raise ConfigError("extra_link_fraction", "extra_link_fraction must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "seed must be a 64-bit unsigned integer")
        return self

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in _RANGE_FIELDS:
                value = list(value)
            elif isinstance(value, CompModel):
                value = value.value
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScenarioConfig:
        """Build from a plain mapping; ``sigma2_dbm`` is accepted in place of ``sigma2``."""
        data = dict(data)
        if "sigma2_dbm" in data:
            if "sigma2" in data:
                raise ConfigError("sigma2", "give either sigma2 or sigma2_dbm, not both")
            try:
                data["sigma2"] = dbm_to_watts(float(data.pop("sigma2_dbm")))
            except (TypeError, ValueError):
                raise ConfigError("sigma2_dbm", "sigma2_dbm must be a number") from None
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(key, f"unknown config field {key!r}")
            try:
                kwargs[key] = _coerce(known[key].type, value)
            except (TypeError, ValueError):
                raise ConfigError(key, f"{key} has an invalid value: {value!r}") from None
        return cls(**kwargs)


def _coerce(type_name: str, value: Any) -> Any:
    # annotations are strings under `from __future__ import annotations`
    if type_name == "int":
        if isinstance(value, bool) or float(value) != int(value):
            raise ValueError(value)
        return int(value)
    if type_name == "float":
        if isinstance(value, bool):
            raise ValueError(value)
        return float(value)
    if type_name == "tuple[int, int]":
        lo, hi = value
        return (_coerce("int", lo), _coerce("int", hi))
    if type_name == "tuple[float, float]":
        lo, hi = value
        return (float(lo), float(hi))
    if type_name == "CompModel":
        return CompModel(value)
    return value


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    graph: NetworkGraph
    tasks: tuple[TaskSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(sorted(self.tasks, key=lambda t: t.user_id)))

    # Derived arrays below are cached on the instance; they are pure functions of the fields.

    @functools.cached_property
    def edge_ids(self) -> np.ndarray:
        return np.array([s.site_id for s in self.graph.edge_sites], dtype=np.int64)

    @functools.cached_property
    def fog_ids(self) -> np.ndarray:
        return np.array([s.site_id for s in self.graph.fog_sites], dtype=np.int64)

    @functools.cached_property
    def edge_node_index(self) -> np.ndarray:
        return np.array([self.graph.index_of[s.site_id] for s in self.graph.edge_sites], dtype=np.int64)

    @functools.cached_property
    def fog_node_index(self) -> np.ndarray:
        return np.array([self.graph.index_of[s.site_id] for s in self.graph.fog_sites], dtype=np.int64)

    @functools.cached_property
    def total_demand(self) -> float:
        return math.fsum(t.freq for t in self.tasks)

    @functools.cached_property
    def user_ids(self) -> np.ndarray:
        return np.array([t.user_id for t in self.tasks], dtype=np.int64)

    @functools.cached_property
    def task_d(self) -> np.ndarray:
        return np.array([t.d for t in self.tasks], dtype=float)

    @functools.cached_property
    def task_freq(self) -> np.ndarray:
        return np.array([t.freq for t in self.tasks], dtype=float)

    @functools.cached_property
    def task_cycles(self) -> np.ndarray:
        return np.array([t.cycles for t in self.tasks], dtype=float)

    @functools.cached_property
    def user_edge_distance(self) -> np.ndarray:
        """Euclidean distances, shape (n_users, n_edge_sites), columns in site_id order."""
        users = np.array([t.pos for t in self.tasks], dtype=float).reshape(-1, 2)
        edges = np.array([s.pos for s in self.graph.edge_sites], dtype=float).reshape(-1, 2)
        diff = users[:, None, :] - edges[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    @functools.cached_property
    def routing(self):
        from .assignment import RoutingTable

        return RoutingTable.build(self.graph)


def generate(config: ScenarioConfig) -> Scenario:
    config.validate()
    rng = np.random.default_rng(config.seed)
    m, f, n = config.n_edge_candidates, config.n_fog_candidates, config.n_users
    side = config.area_side

    edge_pos = rng.uniform(0.0, side, size=(m, 2))
    fog_pos = rng.uniform(0.0, side, size=(f, 2))
    sites = [SiteCandidate(i, SiteKind.EDGE, (float(x), float(y))) for i, (x, y) in enumerate(edge_pos)]
    sites += [SiteCandidate(m + j, SiteKind.FOG, (float(x), float(y))) for j, (x, y) in enumerate(fog_pos)]

    # random recursive spanning tree over the edge candidates
    order = rng.permutation(m)
    pairs: list[tuple[int, int]] = []
    for k in range(1, m):
        parent = int(order[rng.integers(0, k)])
        child = int(order[k])
        pairs.append((min(parent, child), max(parent, child)))
    in_tree = set(pairs)
    spare = [(a, b) for a in range(m) for b in range(a + 1, m) if (a, b) not in in_tree]
    n_extra = min(int(math.floor(config.extra_link_fraction * m)), len(spare))
    if n_extra:
        picks = np.sort(rng.choice(len(spare), size=n_extra, replace=False))
        pairs += [spare[int(i)] for i in picks]

    ee_rates = rng.uniform(*config.edge_edge_bitrate, size=len(pairs))
    links = [WiredLink(a, b, float(r)) for (a, b), r in zip(pairs, ee_rates)]

    fog_pairs = []
    for j in range(f):
        d = np.hypot(*(edge_pos - fog_pos[j]).T)
        nearest = sorted(range(m), key=lambda i: (d[i], i))[:2]
        fog_pairs += [(i, m + j) for i in nearest]
    ef_rates = rng.uniform(*config.edge_fog_bitrate, size=len(fog_pairs))
    links += [WiredLink(a, b, float(r)) for (a, b), r in zip(fog_pairs, ef_rates)]

    user_pos = rng.uniform(0.0, side, size=(n, 2))
    d_bits = rng.uniform(*config.task_d, size=n)
    freq = rng.uniform(*config.task_freq, size=n)
    cycles = rng.uniform(*config.task_cycles, size=n)
    tasks = [
        TaskSpec(i, float(d_bits[i]), float(freq[i]), float(cycles[i]), (float(user_pos[i, 0]), float(user_pos[i, 1])))
        for i in range(n)
    ]
    return Scenario(config, NetworkGraph(tuple(sites), tuple(links)), tuple(tasks))


# -- serialization ---------------------------------------------------------


def to_document(scn: Scenario) -> dict[str, Any]:
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "config": scn.config.to_dict(),
        "sites": [
            {"id": s.site_id, "kind": s.kind.value, "x": s.pos[0], "y": s.pos[1]} for s in scn.graph.sites
        ],
        "links": [{"a": ln.a, "b": ln.b, "bitrate_bps": ln.bitrate} for ln in scn.graph.links],
        "tasks": [
            {"id": t.user_id, "d_bits": t.d, "freq_hz": t.freq, "cycles": t.cycles, "x": t.pos[0], "y": t.pos[1]}
            for t in scn.tasks
        ],
    }


def dumps(scn: Scenario) -> str:
    return json.dumps(to_document(scn), indent=1) + "\n"


def save(scn: Scenario, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(scn))


def _get(obj: Any, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise ScenarioFormatError(where, "expected an object")
    if key not in obj:
        raise ScenarioFormatError(f"{where}.{key}" if where else key, "missing field")
    return obj[key]


def _number(obj: Any, key: str, where: str) -> float:
    value = _get(obj, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(f"{where}.{key}", f"expected a number, got {value!r}")
    return value


def from_document(doc: Any) -> Scenario:
    if _get(doc, "format", "") != FORMAT_TAG:
        raise ScenarioFormatError("format", f"expected {FORMAT_TAG!r}")
    if _get(doc, "version", "") != FORMAT_VERSION:
        raise ScenarioFormatError("version", f"unsupported version {doc['version']!r}")
    try:
        config = ScenarioConfig.from_dict(_get(doc, "config", "")).validate()
    except ConfigError as exc:
        raise ScenarioFormatError(f"config.{exc.field}", str(exc)) from None

    sites = []
    for k, s in enumerate(_get(doc, "sites", "")):
        where = f"sites[{k}]"
        kind = _get(s, "kind", where)
        try:
            kind = SiteKind(kind)
        except ValueError:
            raise ScenarioFormatError(f"{where}.kind", f"unknown kind {kind!r}") from None
        sites.append(SiteCandidate(int(_number(s, "id", where)), kind, (_number(s, "x", where), _number(s, "y", where))))
    links = []
    for k, ln in enumerate(_get(doc, "links", "")):
        where = f"links[{k}]"
        try:
            links.append(WiredLink(int(_number(ln, "a", where)), int(_number(ln, "b", where)), _number(ln, "bitrate_bps", where)))
        except ValueError as exc:
            if isinstance(exc, ScenarioFormatError):
                raise
            raise ScenarioFormatError(where, str(exc)) from None
    tasks = []
    for k, t in enumerate(_get(doc, "tasks", "")):
        where = f"tasks[{k}]"
        try:
            tasks.append(
                TaskSpec(
                    int(_number(t, "id", where)), _number(t, "d_bits", where), _number(t, "freq_hz", where),
                    _number(t, "cycles", where), (_number(t, "x", where), _number(t, "y", where)),
                )
            )
        except ValueError as exc:
            if isinstance(exc, ScenarioFormatError):
                raise
            raise ScenarioFormatError(where, str(exc)) from None
    try:
        graph = NetworkGraph(tuple(sites), tuple(links))
    except ValueError as exc:
        raise ScenarioFormatError("sites", str(exc)) from None
    problems = graph.structural_problems()
    if problems:
        raise ScenarioFormatError("links", "; ".join(problems))
    if len(tasks) != config.n_users:
        raise ScenarioFormatError("tasks", f"expected {config.n_users} tasks, found {len(tasks)}")
    return Scenario(config, graph, tuple(tasks))


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError("document", f"malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return from_document(doc)


def load(path: str | PathLike) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
