"""Latency, cost, the aggregate capacity constraint and the V-weighted fitness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assignment import AssignmentPlan, _check_alignment, assign_batch, plan_from_batch
from .model import Deployment, Fitness, TaskSpec
from .scenario import CompModel, Scenario, ScenarioConfig
from .wireless import site_bitrates


class LatencyError(ArithmeticError):
    """A wireless link has zero bitrate, so transmission latency is unbounded."""


def t_comp(task: TaskSpec, comp_model: CompModel = CompModel.LITERAL) -> float:
    if CompModel(comp_model) is CompModel.PER_BIT:
        return task.cycles * task.d / task.freq
    return task.cycles / task.freq


def t_tr(task: TaskSpec, plan: AssignmentPlan, wireless_rate: float) -> float:
    """Uplink latency: the wireless hop plus every wired hop to the executing node."""
    if wireless_rate <= 0:
        raise LatencyError(f"task {task.user_id}: wireless bitrate is zero")
    k = plan.task_index(task.user_id)
    return task.d / wireless_rate + sum(task.d / ln.bitrate for ln in plan.wired_path(k))


def deployment_cost(cfg: ScenarioConfig, dep: Deployment) -> tuple[float, float]:
    """(edge cost, fog cost). Unplaced candidates cost nothing."""
    edge, fog = _costs(cfg, dep.edge_sc, dep.edge_ac, dep.edge_x, dep.fog_sc, dep.fog_y)
    return float(edge[0]), float(fog[0])


def _costs(cfg, edge_sc, edge_ac, edge_x, fog_sc, fog_y):
    # integer counts first, so a row's cost does not depend on batch layout
    edge_x, fog_y = np.atleast_2d(edge_x), np.atleast_2d(fog_y)
    n_edge = edge_x.sum(axis=1)
    edge_units = (edge_x * (np.atleast_2d(edge_sc) + np.atleast_2d(edge_ac))).sum(axis=1)
    n_fog = fog_y.sum(axis=1)
    fog_units = (fog_y * np.atleast_2d(fog_sc)).sum(axis=1)
    edge = n_edge * cfg.c_fixed + edge_units * cfg.c_dynamic
    fog = n_fog * cfg.c_fixed + fog_units * cfg.c_dynamic
    return edge.astype(float), fog.astype(float)


def _capacity(cfg, edge_sc, edge_x, fog_sc, fog_y) -> np.ndarray:
    edge_servers = (np.atleast_2d(edge_x) * np.atleast_2d(edge_sc)).sum(axis=1)
    fog_servers = (np.atleast_2d(fog_y) * np.atleast_2d(fog_sc)).sum(axis=1)
    return edge_servers * cfg.alpha_hz + fog_servers * cfg.omega_hz


def total_capacity(cfg: ScenarioConfig, dep: Deployment) -> float:
    return float(_capacity(cfg, dep.edge_sc, dep.edge_x, dep.fog_sc, dep.fog_y)[0])


def capacity_feasible(scn: Scenario, dep: Deployment) -> bool:
    return scn.total_demand <= total_capacity(scn.config, dep)


@dataclass(frozen=True)
class EvalReport:
    avg_latency: float | None  # seconds; None when no plan could be built
    total_cost: float
    edge_cost: float
    fog_cost: float
    fitness: Fitness
    t_comp: np.ndarray | None = None
    t_tr: np.ndarray | None = None
    t_total: np.ndarray | None = None
    plan: AssignmentPlan | None = None
    reason: str | None = None  # why the deployment is infeasible

    @property
    def feasible(self) -> bool:
        return self.fitness.is_finite

    @property
    def per_task(self) -> list[tuple[float, float, float]]:
        if self.t_total is None:
            return []
        return list(zip(self.t_comp.tolist(), self.t_tr.tolist(), self.t_total.tolist()))

    def without_plan(self) -> EvalReport:
        if self.plan is None:
            return self
        return EvalReport(
            self.avg_latency, self.total_cost, self.edge_cost, self.fog_cost, self.fitness,
            self.t_comp, self.t_tr, self.t_total, None, self.reason,
        )


def comp_latencies(scn: Scenario) -> np.ndarray:
    if scn.config.comp_model is CompModel.PER_BIT:
        return scn.task_cycles * scn.task_d / scn.task_freq
    return scn.task_cycles / scn.task_freq


def evaluate_batch(scn: Scenario, deps: Sequence[Deployment], V: float, keep_plan: bool = False) -> list[EvalReport]:
    """Evaluate many deployments at once; each report equals ``evaluate`` on its own."""
    if V < 0:
        raise ValueError("V must be non-negative")
    if not deps:
        return []
    checked = set()
    for dep in deps:
        if id(dep.edge_ids) not in checked:
            _check_alignment(scn, dep)
            checked.add(id(dep.edge_ids))
    cfg = scn.config
    e_sc = np.stack([d.edge_sc for d in deps])
    e_ac = np.stack([d.edge_ac for d in deps])
    e_x = np.stack([d.edge_x for d in deps])
    f_sc = np.stack([d.fog_sc for d in deps])
    f_y = np.stack([d.fog_y for d in deps])
    edge_cost, fog_cost = _costs(cfg, e_sc, e_ac, e_x, f_sc, f_y)
    cap_ok = scn.total_demand <= _capacity(cfg, e_sc, e_x, f_sc, f_y)

    batch = assign_batch(scn, e_sc, e_x, f_sc, f_y)
    n_att = np.zeros(e_x.shape, dtype=np.int64)
    pos = np.maximum(batch.attach_pos, 0)
    np.add.at(n_att, (np.arange(len(deps))[:, None], pos), 1)
    rates = site_bitrates(n_att, e_ac, cfg.P, cfg.h_bar, cfg.sigma2, cfg.W)
    task_rate = np.take_along_axis(rates, pos, axis=1)
    d = scn.task_d
    comp = comp_latencies(scn)
    with np.errstate(divide="ignore"):
        tr = d / task_rate + d * batch.path_weight
    tot = comp + tr

    out = []
    for r, dep in enumerate(deps):
        ec, fc = float(edge_cost[r]), float(fog_cost[r])
        total = ec + fc
        if not cap_ok[r]:
            reason = "aggregate demand exceeds placed capacity"
        elif not batch.ok[r]:
            reason = batch.reason[r]
        elif np.any(task_rate[r] <= 0):
            reason = "zero wireless bitrate"
        else:
            reason = None
        if reason is not None:
            out.append(EvalReport(None, total, ec, fc, Fitness.infeasible(), reason=reason))
            continue
        avg = math.fsum(tot[r].tolist()) / len(d)
        plan = plan_from_batch(scn, dep, batch, r) if keep_plan else None
        out.append(
            EvalReport(avg, total, ec, fc, Fitness.finite(-(V * avg + total)), comp, tr[r], tot[r], plan)
        )
    return out


def evaluate(scn: Scenario, dep: Deployment, V: float, keep_plan: bool = True) -> EvalReport:
    return evaluate_batch(scn, [dep], V, keep_plan=keep_plan)[0]
