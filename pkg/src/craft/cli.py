"""Command-line front end: ``craft generate | run | sweep | oracle | baseline``.

Every subcommand accepts the common flags --seed, --config, --out/-o,
--threads and --comp-model. CRAFT_THREADS, when set, overrides --threads.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .baselines import DEFAULT_MAX_LATTICE, LatticeDomain, LatticeTooLarge, exhaustive_oracle, random_placement
from .genetic import GaParams, GenerationStats, OptimizeError, evolve
from .objectives import EvalReport, evaluate
from .scenario import (
    CompModel,
    ConfigError,
    Scenario,
    ScenarioConfig,
    ScenarioFormatError,
    dbm_to_watts,
    dumps,
    generate,
    load,
)

RUN_HEADER = ("gen", "best_fitness", "mean_fitness", "worst_fitness", "n_infeasible", "df")
SWEEP_HEADER = (
    "axis", "axis_value", "method", "seed", "avg_latency_s", "total_cost", "fitness", "feasible", "wall_ms",
)
METHODS = ("craft", "random")
DEFAULT_SWEEP = {
    "users": [70, 90, 110, 130, 150, 170],
    "V": [1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
}
_GA_FIELDS = {f.name for f in dataclasses.fields(GaParams)} - {"seed", "workers"}


class CliError(Exception):
    """Reported as ``craft: error: ...`` with exit status 2."""


# -- helpers ----------------------------------------------------------------


def _num(x: float) -> str:
    return repr(float(x))


def _threads(args) -> int:
    env = os.environ.get("CRAFT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise CliError(f"CRAFT_THREADS must be an integer, got {env!r}") from None
    else:
        n = args.threads
    if n < 1:
        raise CliError("thread count must be >= 1")
    return n


def _read_config_file(path: str | None) -> tuple[dict, dict]:
    """Split a flat JSON mapping into (scenario fields, GA fields)."""
    if path is None:
        return {}, {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise CliError("config: top level must be a JSON object")
    ga = {k: data.pop(k) for k in list(data) if k in _GA_FIELDS}
    return data, ga


def _scenario_config(args, **overrides) -> ScenarioConfig:
    data, _ = _read_config_file(args.config)
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if getattr(args, "sigma2_dbm", None) is not None:
        data.pop("sigma2", None)
        data["sigma2"] = dbm_to_watts(args.sigma2_dbm)
    if args.comp_model is not None:
        data["comp_model"] = args.comp_model
    if args.seed is not None:
        data["seed"] = args.seed
    return ScenarioConfig.from_dict(data).validate()


def _ga_params(args, V: float | None = None, seed: int | None = None, workers: int = 1) -> GaParams:
    _, data = _read_config_file(args.config)
    flags = {
        "K": args.population, "T": args.generations, "V": args.V, "mut_min": args.mut_min,
        "mut_max": args.mut_max, "elite_count": args.elite, "tournament_min": args.tournament_min,
        "tournament_max": args.tournament_max,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    if V is not None:
        data["V"] = V
    data["seed"] = (args.seed or 0) if seed is None else seed
    data["workers"] = workers
    try:
        return GaParams(**data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"GA parameters: {exc}") from None


def _load_scenario(args) -> Scenario:
    try:
        scn = load(args.scenario)
    except OSError as exc:
        raise CliError(f"cannot read scenario {args.scenario}: {exc}") from None
    if args.comp_model is not None:
        cfg = dataclasses.replace(scn.config, comp_model=CompModel(args.comp_model))
        scn = Scenario(cfg, scn.graph, scn.tasks)
    return scn


def _write_csv(path: str | None, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _report_lines(rep: EvalReport, placed: list[int]) -> list[str]:
    lines = []
    if rep.feasible:
        lines.append(f"avg_latency_s: {rep.avg_latency!r}")
    else:
        lines.append(f"infeasible: {rep.reason}")
    lines += [
        f"total_cost: {rep.total_cost!r} (edge {rep.edge_cost!r}, fog {rep.fog_cost!r})",
        f"fitness: {rep.fitness!r}",
        f"placed_sites: {' '.join(map(str, placed)) or '-'}",
    ]
    return lines


def _deployment_lines(dep) -> list[str]:
    lines = ["site kind sc ac"]
    for e in dep.edge_genes:
        if e.x:
            lines.append(f"{e.site_id} edge {e.sc} {e.ac}")
    for f in dep.fog_genes:
        if f.y:
            lines.append(f"{f.site_id} fog {f.sc} -")
    return lines


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# -- subcommands --------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = _scenario_config(
        args, n_users=args.users, n_edge_candidates=args.edge_candidates,
        n_fog_candidates=args.fog_candidates, area_side=args.area,
    )
    scn = generate(cfg)
    text = dumps(scn)
    info = sys.stdout
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        info = sys.stderr
    print("resolved config:", file=info)
    for key, value in cfg.to_dict().items():
        print(f"  {key} = {value}", file=info)
    return 0


def cmd_run(args) -> int:
    scn = _load_scenario(args)
    params = _ga_params(args, workers=_threads(args))
    history: list[GenerationStats] = []
    try:
        result = evolve(scn, params, on_generation=history.append)
    except OptimizeError as exc:
        print(f"craft: optimization failed: {exc}", file=sys.stderr)
        return 1
    rows = [
        (s.gen, _num(s.best), _num(s.mean), _num(s.worst), s.n_infeasible, _num(s.df)) for s in history
    ]
    _write_csv(args.out, RUN_HEADER, rows)
    info = sys.stdout if args.out else sys.stderr
    print(f"best deployment after {params.T} generations (K={params.K}, V={params.V!r}, seed={params.seed})", file=info)
    for line in _report_lines(result.report, result.best.placed_sites()):
        print(line, file=info)
    return 0


def _sweep_cell(cell) -> tuple:
    axis, value, method, seed, cfg, params, timing = cell
    t0 = time.perf_counter()
    scn = generate(cfg)
    failed = False
    if method == "craft":
        try:
            rep = evolve(scn, params).report
        except OptimizeError:
            rep, failed = None, True
    else:
        rep = evaluate(scn, random_placement(scn, seed), params.V, keep_plan=False)
    wall = f"{(time.perf_counter() - t0) * 1e3:.1f}" if timing else ""
    shown = int(value) if axis == "users" else _num(value)
    if rep is None or not rep.feasible:
        cost = "" if rep is None else _num(rep.total_cost)
        return (axis, shown, method, seed, "", cost, "", 0, wall), failed
    return (axis, shown, method, seed, _num(rep.avg_latency), _num(rep.total_cost), _num(rep.fitness.value), 1, wall), failed


def cmd_sweep(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise CliError(f"unknown method(s) {unknown}; choose from {', '.join(METHODS)}")
    if args.repeats < 1:
        raise CliError("--repeats must be >= 1")
    values = args.values if args.values is not None else DEFAULT_SWEEP[args.axis]
    if args.axis == "users" and any(v != int(v) for v in values):
        raise CliError("users values must be integers")
    base_seed = args.seed or 0
    base_cfg = _scenario_config(args, n_users=args.users)
    base_params = _ga_params(args, seed=0)

    cells = []
    for value in values:
        for method in methods:
            for r in range(args.repeats):
                seed = base_seed + r
                cfg = dataclasses.replace(base_cfg, seed=seed)
                params = dataclasses.replace(base_params, seed=seed)
                if args.axis == "users":
                    cfg = dataclasses.replace(cfg, n_users=int(value)).validate()
                else:
                    params = dataclasses.replace(params, V=float(value))
                cells.append((args.axis, value, method, seed, cfg, params, not args.no_timing))

    n = _threads(args)
    if n > 1 and len(cells) > 1:
        with ProcessPoolExecutor(min(n, len(cells))) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    _write_csv(args.out, SWEEP_HEADER, [row for row, _ in results])
    n_failed = sum(failed for _, failed in results)
    if n_failed:
        print(f"craft: {n_failed} optimizer run(s) found no feasible deployment", file=sys.stderr)
        return 1
    return 0


def cmd_oracle(args) -> int:
    scn = _load_scenario(args)
    V = args.V if args.V is not None else GaParams.V
    domain = LatticeDomain.from_bounds(scn.config.bounds)
    overrides = {k: v for k, v in (("edge_sc", args.edge_sc), ("fog_sc", args.fog_sc), ("ac", args.ac)) if v}
    domain = dataclasses.replace(domain, **overrides)
    try:
        dep, rep = exhaustive_oracle(scn, V, domain, max_size=args.max_size)
    except LatticeTooLarge as exc:
        print(f"craft: refusing to enumerate: {exc}", file=sys.stderr)
        return 2
    except OptimizeError as exc:
        print(f"craft: {exc}", file=sys.stderr)
        return 1
    size = domain.size(len(scn.graph.edge_sites), len(scn.graph.fog_sites))
    print(f"oracle optimum over {size} deployments (V={V!r})")
    for line in _report_lines(rep, dep.placed_sites()) + _deployment_lines(dep):
        print(line)
    if args.compare_ga:
        params = _ga_params(args, V=V, workers=_threads(args))
        try:
            ga = evolve(scn, params).report
        except OptimizeError as exc:
            print(f"craft: optimization failed: {exc}", file=sys.stderr)
            return 1
        opt = rep.fitness.value
        gap = (opt - ga.fitness.value) / abs(opt) * 100 if opt else 0.0
        print(f"ga_fitness: {ga.fitness!r}")
        print(f"gap_percent: {gap:.6f}")
    return 0


def cmd_baseline(args) -> int:
    scn = _load_scenario(args)
    V = args.V if args.V is not None else GaParams.V
    seed = args.seed or 0
    dep = random_placement(scn, seed)
    rep = evaluate(scn, dep, V, keep_plan=False)
    print(f"random placement (seed={seed}, V={V!r})")
    for line in _report_lines(rep, dep.placed_sites()):
        print(line)
    return 0


# -- parser -------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    p.add_argument("--config", help="JSON object of scenario and/or GA fields")
    p.add_argument("--out", "-o", help="output file (default: stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker processes; CRAFT_THREADS overrides")
    p.add_argument("--comp-model", choices=[m.value for m in CompModel], default=None)
    return p


def _ga_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("optimizer")
    g.add_argument("--population", "-K", type=int, help="population size (default 1000)")
    g.add_argument("--generations", "-T", type=int, help="generation count (default 100)")
    g.add_argument("--V", type=float, help="latency weight (default 1e5)")
    g.add_argument("--mut-min", type=float)
    g.add_argument("--mut-max", type=float)
    g.add_argument("--elite", type=int, help="elite count (default ceil(0.02 K))")
    g.add_argument("--tournament-min", type=int)
    g.add_argument("--tournament-max", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="craft", description="Edge/fog placement optimizer")
    sub = parser.add_subparsers(dest="command", required=True)
    common, ga = _common(), _ga_flags()

    p = sub.add_parser("generate", parents=[common], help="generate a scenario file")
    p.add_argument("--users", type=int)
    p.add_argument("--edge-candidates", type=int)
    p.add_argument("--fog-candidates", type=int)
    p.add_argument("--area", type=float, help="side of the square area, m")
    p.add_argument("--sigma2-dbm", type=float, help="noise power in dBm")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", parents=[common, ga], help="optimize one scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common, ga], help="sweep user count or V")
    p.add_argument("--axis", choices=sorted(DEFAULT_SWEEP), required=True)
    p.add_argument("--values", type=_float_list, help="comma-separated axis values")
    p.add_argument("--methods", default="craft,random")
    p.add_argument("--repeats", "-R", type=int, default=1)
    p.add_argument("--users", type=int, help="user count for a V sweep")
    p.add_argument("--sigma2-dbm", type=float)
    p.add_argument("--no-timing", action="store_true", help="leave wall_ms empty so output is reproducible")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", parents=[common, ga], help="exhaustive search over a small lattice")
    p.add_argument("scenario")
    p.add_argument("--edge-sc", type=_int_list, help="edge server counts, 0 = not placed")
    p.add_argument("--fog-sc", type=_int_list, help="fog server counts, 0 = not placed")
    p.add_argument("--ac", type=_int_list, help="access point counts")
    p.add_argument("--max-size", type=int, default=DEFAULT_MAX_LATTICE)
    p.add_argument("--compare-ga", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("baseline", parents=[common], help="evaluate a random placement")
    p.add_argument("scenario")
    p.add_argument("--V", type=float)
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"craft: error: invalid config field {exc.field}: {exc}", file=sys.stderr)
    except ScenarioFormatError as exc:
        print(f"craft: error: bad scenario file, field {exc}", file=sys.stderr)
    except CliError as exc:
        print(f"craft: error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
