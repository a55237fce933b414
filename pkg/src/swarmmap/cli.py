"""Batch experiment runner: expand a config into runs and collect metrics.

A JSON config names the world, the sensor, the strategies, and the sweep
axes (swarm sizes, communication ranges, seeds).  Every combination becomes
one deterministic run writing its own metrics CSV and summary JSON; an
aggregate CSV and a manifest tie the batch together.  See
``configs/paper_defaults.json`` for the reference setup.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .engine import init_run, run_simulation
from .metrics import CSV_HEADER, MetricsRecord, format_csv_row, write_run_csv, write_run_summary
from .sensor import SensorModel, load_sensor_model, synthesize_sensor_model
from .strategy import PREPLANNED, StrategyConfig, preplanned_baseline_mse
from .world import WorldConfig, dump_field, generate_field


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


@dataclass(frozen=True)
class Duration:
    max_tn: float | None = None
    until_coverage: bool = False
    cap_tn: float = 40.0


@dataclass(frozen=True)
class RunConfig:
    world: WorldConfig
    sensor_path: str | None
    sensor_synth: tuple[int, float, float] | None
    strategies: tuple[StrategyConfig, ...]
    n_agents: tuple[int, ...]
    comm_ranges: tuple[float, ...]
    duration: Duration
    seeds: tuple[int, ...]
    output_dir: str


@dataclass(frozen=True)
class RunSpec:
    run_id: str
    strategy: StrategyConfig
    n: int
    comm_range: float
    seed: int


def _require(cfg: dict, key: str, kind, where: str):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required field {key!r}")
    value = cfg[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key}: expected {kind}, got {type(value).__name__}")
    return value


def _parse_range(value, where: str) -> float:
    if value is None or value == "inf":
        return math.inf
    if isinstance(value, (int, float)) and value > 0:
        return float(value)
    raise ConfigError(f"{where}: comm range must be a positive number or 'inf'")


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None

    wd = _require(raw, "world", dict, "config")
    try:
        world = WorldConfig(
            c=wd.get("c", 50),
            cell_side=float(wd.get("cell_side", 4.0)),
            n_w=wd.get("n_w", 12),
            c_p=wd.get("c_p", 4),
            n_p=wd.get("n_p", 7),
            c_i=wd.get("c_i", 40),
            cruise_speed=float(
                wd.get("cruise_speed", 0.1 * float(wd.get("cell_side", 4.0)))
            ),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config.world: {exc}") from None

    sensor = _require(raw, "sensor", dict, "config")
    sensor_path: str | None = None
    sensor_synth: tuple[int, float, float] | None = None
    if "path" in sensor:
        sensor_path = str(sensor["path"])
        if not Path(sensor_path).is_absolute():
            sensor_path = str((path.parent / sensor_path).resolve())
        if not Path(sensor_path).exists():
            raise ConfigError(f"config.sensor.path: file {sensor_path} does not exist")
    elif "synthesize" in sensor:
        sd = sensor["synthesize"]
        sensor_synth = (
            int(sd.get("n_w", world.n_w)),
            float(sd.get("sigma0", 0.5)),
            float(sd.get("sigma1", 0.1)),
        )
        if sensor_synth[0] != world.n_w:
            raise ConfigError("config.sensor.synthesize.n_w must match world.n_w")
    else:
        raise ConfigError("config.sensor: needs either 'path' or 'synthesize'")

    strategies = []
    for k, sd in enumerate(_require(raw, "strategies", list, "config")):
        try:
            strategies.append(StrategyConfig(**sd))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config.strategies[{k}]: {exc}") from None
    if not strategies:
        raise ConfigError("config.strategies: must not be empty")

    n_agents = tuple(int(n) for n in _require(raw, "n_agents", list, "config"))
    if not n_agents or any(n < 1 for n in n_agents):
        raise ConfigError("config.n_agents: need at least one positive value")

    ranges = tuple(
        _parse_range(v, f"config.comm_range[{k}]")
        for k, v in enumerate(_require(raw, "comm_range", list, "config"))
    )
    if not ranges:
        raise ConfigError("config.comm_range: must not be empty")

    dd = _require(raw, "duration", dict, "config")
    if "max_tn" in dd:
        duration = Duration(max_tn=float(dd["max_tn"]))
        if duration.max_tn <= 0:
            raise ConfigError("config.duration.max_tn: must be > 0")
    elif dd.get("until_coverage"):
        duration = Duration(until_coverage=True, cap_tn=float(dd.get("cap_tn", 40.0)))
    else:
        raise ConfigError("config.duration: needs 'max_tn' or 'until_coverage'")

    seeds = tuple(int(s) for s in _require(raw, "seeds", list, "config"))
    if not seeds:
        raise ConfigError("config.seeds: must not be empty")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("config.seeds: duplicate seeds")

    output_dir = _require(raw, "output_dir", str, "config")
    if not Path(output_dir).is_absolute():
        output_dir = str((path.parent / output_dir).resolve())

    return RunConfig(
        world=world,
        sensor_path=sensor_path,
        sensor_synth=sensor_synth,
        strategies=tuple(strategies),
        n_agents=n_agents,
        comm_ranges=ranges,
        duration=duration,
        seeds=seeds,
        output_dir=output_dir,
    )


def expand_matrix(cfg: RunConfig) -> list[RunSpec]:
    """One run per (strategy, N, R, seed), in deterministic order."""
    specs = []
    for strategy in cfg.strategies:
        for n in cfg.n_agents:
            for r in cfg.comm_ranges:
                r_txt = "inf" if math.isinf(r) else f"{r:g}"
                for seed in cfg.seeds:
                    specs.append(
                        RunSpec(
                            run_id=f"{strategy.label()}_N{n}_R{r_txt}_s{seed}",
                            strategy=strategy,
                            n=n,
                            comm_range=r,
                            seed=seed,
                        )
                    )
    return specs


def build_sensor(cfg: RunConfig) -> SensorModel:
    if cfg.sensor_path is not None:
        return load_sensor_model(cfg.sensor_path)
    return synthesize_sensor_model(*cfg.sensor_synth)


def build_field(cfg: RunConfig, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    world = WorldConfig(
        c=cfg.world.c,
        cell_side=cfg.world.cell_side,
        n_w=cfg.world.n_w,
        c_p=cfg.world.c_p,
        n_p=cfg.world.n_p,
        c_i=cfg.world.c_i,
        cruise_speed=cfg.world.cruise_speed,
        seed=seed,
    )
    return world, generate_field(world, rng)


def _preplanned_records(cfg: RunConfig, spec: RunSpec, world, field, model):
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 3]))
    curve = preplanned_baseline_mse(
        field, model, spec.strategy.passes, spec.n, world, rng
    )
    records = []
    for m, (t, mse) in enumerate(curve):
        records.append(
            MetricsRecord(
                time_s=t,
                time_over_tn=t / world.t_n(spec.n),
                mse=mse,
                coverage_fraction=0.0 if m == 0 else 1.0,
                pearson_r=None,
            )
        )
    return records, world.t_n(spec.n)


def execute_run(
    cfg: RunConfig,
    spec: RunSpec,
    trace_messages: bool = False,
    snapshot_every: float | None = None,
) -> tuple[str, list[str], dict]:
    """Run one spec; writes per-run artifacts, returns aggregate CSV rows."""
    out = Path(cfg.output_dir)
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    world, field = build_field(cfg, spec.seed)
    world = replace(world, comm_range_cells=spec.comm_range)
    model = build_sensor(cfg)

    if spec.strategy.kind == PREPLANNED:
        records, t_n = _preplanned_records(cfg, spec, world, field, model)
        coverage_time_s: float | None = t_n
        final_mse = records[-1].mse
        observations = field.c**2 * spec.strategy.passes
    else:
        trace_fh = None
        trace = None
        if trace_messages:
            trace_dir = out / "trace"
            trace_dir.mkdir(parents=True, exist_ok=True)
            trace_fh = (trace_dir / f"{spec.run_id}.log").open("w")
            def trace(tick, msg_id, origin, recipient, kind):
                trace_fh.write(f"{tick},{msg_id},{origin},{recipient},{kind}\n")
        snapshot_dir = None
        if snapshot_every is not None:
            snapshot_dir = out / "snapshots" / spec.run_id
        sim = init_run(world, field, model, spec.strategy, spec.n, spec.seed, trace=trace)
        t_n = world.t_n(spec.n)
        result = run_simulation(
            sim,
            duration_s=(
                cfg.duration.max_tn * t_n if cfg.duration.max_tn is not None else None
            ),
            until_coverage=cfg.duration.until_coverage,
            cap_s=(cfg.duration.cap_tn * t_n if cfg.duration.until_coverage else None),
            snapshot_every=snapshot_every,
            snapshot_dir=snapshot_dir,
        )
        if trace_fh is not None:
            trace_fh.close()
        records = result.records
        coverage_time_s = result.coverage_time_s
        final_mse = result.final_mse
        observations = result.observations

    write_run_csv(
        runs_dir / f"{spec.run_id}.csv",
        spec.run_id,
        spec.strategy.label(),
        spec.n,
        spec.comm_range,
        spec.seed,
        records,
    )
    summary = {
        "strategy": spec.strategy.label(),
        "n_agents": spec.n,
        "comm_range": "inf" if math.isinf(spec.comm_range) else spec.comm_range,
        "seed": spec.seed,
        "observations": observations,
    }
    write_run_summary(
        runs_dir / f"{spec.run_id}.json",
        spec.run_id,
        t_n,
        coverage_time_s,
        final_mse,
        extra=summary,
    )
    rows = [
        format_csv_row(
            spec.run_id, spec.strategy.label(), spec.n, spec.comm_range, spec.seed, rec
        )
        for rec in records
    ]
    return spec.run_id, rows, {**summary, "run_id": spec.run_id}


def _pool_entry(args):
    cfg, spec, trace_messages, snapshot_every = args
    return execute_run(cfg, spec, trace_messages, snapshot_every)


def run_experiment(
    config_path: str | Path,
    jobs: int = 1,
    trace_messages: bool = False,
    snapshot_every: float | None = None,
) -> Path:
    """Execute the full run matrix; returns the output directory."""
    cfg = parse_config(config_path)
    specs = expand_matrix(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    tasks = [(cfg, spec, trace_messages, snapshot_every) for spec in specs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_pool_entry, tasks))
    else:
        results = [_pool_entry(t) for t in tasks]

    with (out / "aggregate.csv").open("w") as fh:
        fh.write(CSV_HEADER + "\n")
        for _run_id, rows, _summary in results:
            for row in rows:
                fh.write(row + "\n")

    manifest = {
        "version": __version__,
        "config_sha256": hashlib.sha256(Path(config_path).read_bytes()).hexdigest(),
        "seeds": list(cfg.seeds),
        "runs": [run_id for run_id, _rows, _s in results],
    }
    with (out / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="swarmmap", description="Swarm field-mapping experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the run matrix of a config file")
    p_run.add_argument("config", help="JSON run configuration")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.add_argument(
        "--trace-messages", action="store_true", help="log every message delivery"
    )
    p_run.add_argument(
        "--snapshot-every", type=float, default=None, metavar="SECONDS",
        help="dump agent positions and the mapped mask at this interval",
    )

    p_dump = sub.add_parser("dump-field", help="write the generated ground truth")
    p_dump.add_argument("config", help="JSON run configuration")
    p_dump.add_argument("--seed", type=int, required=True)
    p_dump.add_argument("-o", "--output", default=None, help="output path")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            out = run_experiment(
                args.config,
                jobs=args.jobs,
                trace_messages=args.trace_messages,
                snapshot_every=args.snapshot_every,
            )
            print(f"wrote {out}/aggregate.csv")
            return 0
        if args.command == "dump-field":
            cfg = parse_config(args.config)
            _world, field = build_field(cfg, args.seed)
            target = args.output or str(
                Path(cfg.output_dir) / f"field_s{args.seed}.txt"
            )
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            dump_field(field, target)
            print(f"wrote {target}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
