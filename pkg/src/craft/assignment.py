"""Task-to-node assignment.

Users attach wirelessly to the nearest placed edge site. Tasks are then
processed in ascending user_id: a task runs where it attached if that site
still has room, otherwise it is shipped over the wired network to the placed
node with spare capacity that is cheapest to reach (data size times the sum
of inverse link bitrates along the shortest path).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .model import Deployment, NetworkGraph, WiredLink


class AssignmentError(Exception):
    pass


@dataclass(frozen=True)
class RoutingTable:
    """All-pairs shortest wired paths under additive weight 1/bitrate (s/bit).

    Indices are node indices into ``graph.sites``. ``order[i]`` lists every
    node sorted by (weight from i, index).
    """

    graph: NetworkGraph
    weight: np.ndarray
    paths: dict[tuple[int, int], tuple[int, ...]]
    order: tuple[tuple[int, ...], ...]

    @classmethod
    def build(cls, graph: NetworkGraph) -> RoutingTable:
        n = len(graph.sites)
        weight = np.full((n, n), math.inf)
        paths: dict[tuple[int, int], tuple[int, ...]] = {}
        for src in graph.sites:
            for dst_id, (seq, w) in _dijkstra(graph, src.site_id).items():
                i, j = graph.index_of[src.site_id], graph.index_of[dst_id]
                weight[i, j] = w
                paths[i, j] = seq
        order = tuple(tuple(sorted(range(n), key=lambda j: (weight[i, j], j))) for i in range(n))
        weight.setflags(write=False)
        return cls(graph, weight, paths, order)

    def links_on(self, i: int, j: int) -> list[WiredLink]:
        seq = self.paths[i, j]
        return [self.graph.link_between(a, b) for a, b in zip(seq, seq[1:])]


def _dijkstra(g: NetworkGraph, src: int) -> dict[int, tuple[tuple[int, ...], float]]:
    # Heap entries compare by (weight, site_id sequence), so the first pop of a
    # node is its shortest path with the lexicographically smallest sequence.
    done: dict[int, tuple[tuple[int, ...], float]] = {}
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (src,))]
    while heap:
        w, seq = heapq.heappop(heap)
        u = seq[-1]
        if u in done:
            continue
        done[u] = (seq, w)
        for ln in g.adjacency[u]:
            v = ln.other(u)
            if v not in done:
                heapq.heappush(heap, (w + 1.0 / ln.bitrate, seq + (v,)))
    return done


def shortest_wired_paths(g: NetworkGraph, src: int) -> dict[int, tuple[list[WiredLink], float]]:
    """Per destination site: (links along the path, sum of 1/bitrate)."""
    if src not in g.index_of:
        raise KeyError(f"unknown site {src}")
    out = {}
    for dst, (seq, w) in _dijkstra(g, src).items():
        out[dst] = ([g.link_between(a, b) for a, b in zip(seq, seq[1:])], w)
    return out


@dataclass(frozen=True)
class Attachment:
    attach_site: np.ndarray  # site_id per task
    attach_pos: np.ndarray  # position in dep.edge_ids per task
    n_attached: np.ndarray  # per edge gene


def attach_positions(scn, edge_x: np.ndarray) -> np.ndarray:
    """Nearest placed edge (as a gene position) per task; shape (pop, n_tasks).

    Rows without any placed edge come back as -1.
    """
    placed = np.atleast_2d(edge_x) == 1
    dist = np.where(placed[:, None, :], scn.user_edge_distance[None, :, :], np.inf)
    pos = np.argmin(dist, axis=2)  # first minimum == lower site_id
    pos[~placed.any(axis=1)] = -1
    return pos


def _check_alignment(scn, dep: Deployment) -> None:
    if not (np.array_equal(dep.edge_ids, scn.edge_ids) and np.array_equal(dep.fog_ids, scn.fog_ids)):
        raise ValueError("deployment genes do not match the scenario's candidate sites")


def attach_users(scn, dep: Deployment) -> Attachment:
    _check_alignment(scn, dep)
    pos = attach_positions(scn, dep.edge_x)[0]
    if pos[0] < 0:
        raise AssignmentError("no edge coverage")
    return Attachment(dep.edge_ids[pos], pos, np.bincount(pos, minlength=len(dep.edge_ids)))


def node_capacity(scn, edge_x, edge_sc, fog_y, fog_sc) -> np.ndarray:
    """Hz per node index, shape (pop, n_nodes)."""
    cfg = scn.config
    edge_x = np.atleast_2d(edge_x)
    cap = np.zeros((edge_x.shape[0], len(scn.graph.sites)))
    cap[:, scn.edge_node_index] = edge_x * np.atleast_2d(edge_sc) * cfg.alpha_hz
    cap[:, scn.fog_node_index] = np.atleast_2d(fog_y) * np.atleast_2d(fog_sc) * cfg.omega_hz
    return cap


@dataclass(frozen=True)
class BatchAssignment:
    """Assignment of every task for a stack of deployments.

    Rows with ``ok[r]`` False could not be realized; ``reason[r]`` says why
    and their other entries are meaningless.
    """

    attach_pos: np.ndarray  # (pop, n_tasks) edge gene position
    exec_node: np.ndarray  # (pop, n_tasks) node index
    path_weight: np.ndarray  # (pop, n_tasks) s/bit
    load: np.ndarray  # (pop, n_nodes) Hz
    capacity: np.ndarray  # (pop, n_nodes) Hz
    ok: np.ndarray  # (pop,) bool
    reason: list


def assign_batch(scn, edge_sc, edge_x, fog_sc, fog_y) -> BatchAssignment:
    """Greedy first-fit over tasks in user_id order, vectorized across deployments."""
    pos = attach_positions(scn, edge_x)
    n_pop, n_tasks = pos.shape
    reason: list = [None] * n_pop
    no_cover = pos[:, 0] < 0
    for r in np.flatnonzero(no_cover):
        reason[r] = "no edge coverage"

    cap = node_capacity(scn, edge_x, edge_sc, fog_y, fog_sc)
    n_nodes = cap.shape[1]
    placed = cap > 0
    attach = scn.edge_node_index[np.where(no_cover[:, None], 0, pos)]
    flat_idx = attach + (np.arange(n_pop) * n_nodes)[:, None]
    cap_at_attach = cap.ravel()[flat_idx]
    load = np.zeros((n_pop, n_nodes))
    load_flat = load.ravel()  # view
    weight = scn.routing.weight
    exec_node = attach.copy()
    pw = np.zeros((n_pop, n_tasks))
    dead = no_cover.copy()

    for k, (fk, dk) in enumerate(zip(scn.task_freq.tolist(), scn.task_d.tolist())):
        idx = flat_idx[:, k]
        new = load_flat[idx] + fk
        ok = new <= cap_at_attach[:, k]
        stay = ok & ~dead
        load_flat[idx[stay]] = new[stay]
        spill = np.flatnonzero(~ok & ~dead)
        if not len(spill):
            continue
        w = weight[attach[spill, k]]
        fits = placed[spill] & (load[spill] + fk <= cap[spill])
        cost = np.where(fits, dk * w, np.inf)
        j = np.argmin(cost, axis=1)  # first minimum == lower site_id
        good = fits[np.arange(len(spill)), j]
        for r in spill[~good]:
            dead[r] = True
            reason[r] = "capacity routing failed"
        rows, j = spill[good], j[good]
        load[rows, j] += fk
        exec_node[rows, k] = j
        pw[rows, k] = w[good, j]

    return BatchAssignment(pos, exec_node, pw, load, cap, ~dead, reason)


@dataclass(frozen=True)
class AssignmentPlan:
    user_ids: np.ndarray  # task order used by every per-task array
    attachment: Attachment
    exec_node: np.ndarray  # node index per task
    load: np.ndarray  # Hz, per node index
    capacity: np.ndarray  # Hz, per node index
    path_weight: np.ndarray  # s/bit of the wired path per task
    routing: RoutingTable

    @property
    def attach_site(self) -> np.ndarray:
        return self.attachment.attach_site

    @property
    def n_attached(self) -> np.ndarray:
        return self.attachment.n_attached

    @property
    def exec_site(self) -> np.ndarray:
        ids = np.array([s.site_id for s in self.routing.graph.sites])
        return ids[self.exec_node]

    def task_index(self, user_id: int) -> int:
        k = int(np.searchsorted(self.user_ids, user_id))
        if k >= len(self.user_ids) or self.user_ids[k] != user_id:
            raise KeyError(f"task {user_id} is not covered by this plan")
        return k

    def wired_path(self, k: int) -> list[WiredLink]:
        g = self.routing.graph
        src = g.index_of[int(self.attach_site[k])]
        return self.routing.links_on(src, int(self.exec_node[k]))

    @property
    def wired_paths(self) -> list[list[WiredLink]]:
        return [self.wired_path(k) for k in range(len(self.exec_node))]

    def load_by_site(self) -> dict[int, tuple[float, float]]:
        """site_id -> (load, capacity) in Hz for every placed node."""
        sites = self.routing.graph.sites
        return {
            sites[i].site_id: (float(self.load[i]), float(self.capacity[i]))
            for i in range(len(sites)) if self.capacity[i] > 0
        }


def plan_from_batch(scn, dep: Deployment, batch: BatchAssignment, row: int) -> AssignmentPlan:
    pos = batch.attach_pos[row]
    att = Attachment(dep.edge_ids[pos], pos, np.bincount(pos, minlength=len(dep.edge_ids)))
    return AssignmentPlan(
        user_ids=scn.user_ids,
        attachment=att,
        exec_node=batch.exec_node[row],
        load=batch.load[row],
        capacity=batch.capacity[row],
        path_weight=batch.path_weight[row],
        routing=scn.routing,
    )


def assign(scn, dep: Deployment) -> AssignmentPlan:
    _check_alignment(scn, dep)
    batch = assign_batch(scn, dep.edge_sc, dep.edge_x, dep.fog_sc, dep.fog_y)
    if not batch.ok[0]:
        raise AssignmentError(batch.reason[0])
    return plan_from_batch(scn, dep, batch, 0)
