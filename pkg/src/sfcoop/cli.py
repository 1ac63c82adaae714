"""Command-line entry point.

Subcommands: ``gen-net``, ``stats``, ``run``, ``sweep``. Settings come from
built-in defaults, then an optional TOML config file (``--config``), then
command-line flags. Exit codes: 0 success, 1 I/O failure, 2 invalid input.
Relative output paths are resolved against ``$SFCOOP_OUTPUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import asdict
from typing import Any, Callable, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .engine import PayoffParams, PopulationState, Strategy
from .errors import ContractError, FormatError, ParameterError
from .mechanisms import LC, NI, NI_AND_LC, NONE, POP, MechanismSpec
from .netgen import GenParams, compute_stats, format_edgelist, generate, load_edgelist
from .report import atomic_write, dumps, grid_csv, trajectory_csv
from .sim import SimConfig, run
from .sweep import PRESETS, SweepSpec, derived_int_seed, graph_seed, run_sweep

OUTPUT_DIR_ENV = "SFCOOP_OUTPUT_DIR"


def _floats(text: str | Sequence[float]) -> list[float]:
    if isinstance(text, str):
        return [float(x) for x in text.split(",") if x.strip()]
    return [float(x) for x in text]


# key -> converter; threshold keys carry their unit in the name.
CONFIG_KEYS: dict[str, Callable[[Any], Any]] = {
    "model": str,
    "n": int,
    "m": int,
    "m0": int,
    "graph_seed": int,
    "graph_file": str,
    "b": float,
    "mechanism": str,
    "theta": float,
    "pop_threshold_percent": float,
    "ni_threshold_ratio": float,
    "lc_threshold_fraction": float,
    "lc_threshold_count": float,
    "generations": int,
    "tail_window": int,
    "strategy_seed": int,
    "initial_strategy": str,
    "preset": str,
    "theta_grid": _floats,
    "pop_threshold_percent_grid": _floats,
    "ni_threshold_ratio_grid": _floats,
    "lc_threshold_fraction_grid": _floats,
    "lc_threshold_count_grid": _floats,
    "graph_count": int,
    "realisations_per_graph": int,
    "master_seed": int,
    "workers": int,
    "output": str,
    "manifest": str,
    "trajectory": str,
    "summary": str,
}

DEFAULTS: dict[str, Any] = {
    "model": "ba",
    "n": 5000,
    "m": 2,
    "b": 1.8,
    "generations": 75,
    "tail_window": 25,
    "strategy_seed": 0,
    "graph_seed": 0,
    "graph_count": 10,
    "realisations_per_graph": 30,
    "master_seed": 0,
}


class UsageError(Exception):
    pass


def load_config(path: str) -> dict[str, Any]:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
    return _coerce(raw, source=path)


def _coerce(raw: dict[str, Any], source: str) -> dict[str, Any]:
    out = {}
    for key, value in raw.items():
        norm = key.replace("-", "_")
        if norm not in CONFIG_KEYS:
            raise UsageError(f"{source}: unknown key {key!r}")
        if isinstance(value, dict):
            raise UsageError(f"{source}: key {key!r} must be a flat value, not a table")
        try:
            out[norm] = CONFIG_KEYS[norm](value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{source}: bad value for {key!r}: {exc}") from None
    return out


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, config file and flags (later wins)."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(load_config(args.config))
    flags = {k: v for k, v in vars(args).items() if k in CONFIG_KEYS and v is not None}
    settings.update(_coerce(flags, source="command line"))
    return settings


def output_path(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _gen_params(s: dict[str, Any], seed: int | None = None) -> GenParams:
    model = s["model"].upper()
    kwargs = dict(model=model, n=s["n"], m=s["m"] if model == "BA" else 2,
                  seed=s["graph_seed"] if seed is None else seed)
    if model == "BA" and "m0" in s:
        kwargs["m0"] = s["m0"]
    return GenParams(**kwargs)


def _mechanism(s: dict[str, Any]) -> MechanismSpec:
    kind = s.get("mechanism", NONE).upper()
    theta = s.get("theta", 0.0)
    absolute = "lc_threshold_count" in s
    n_c = s.get("lc_threshold_count") if absolute else s.get("lc_threshold_fraction")
    if kind == NONE:
        return MechanismSpec(NONE)
    if kind == POP:
        return MechanismSpec(POP, p_c=s.get("pop_threshold_percent"), theta=theta)
    if kind == NI:
        return MechanismSpec(NI, c_i=s.get("ni_threshold_ratio"), theta=theta)
    if kind == LC:
        return MechanismSpec(LC, n_c=n_c, theta=theta, lc_absolute=absolute)
    if kind == NI_AND_LC:
        return MechanismSpec(NI_AND_LC, c_i=s.get("ni_threshold_ratio"), n_c=n_c,
                             theta=theta, lc_absolute=absolute)
    raise ParameterError(f"unknown mechanism {s['mechanism']!r}")


# -- subcommands ---------------------------------------------------------------

def cmd_gen_net(args: argparse.Namespace) -> int:
    s = resolve(args)
    g = generate(_gen_params(s))
    text = format_edgelist(g)
    out = s.get("output")
    if out:
        atomic_write(output_path(out), text)
    else:
        sys.stdout.write(text)
    stats = compute_stats(g).as_dict()
    report = {"params": asdict(_gen_params(s)), "stats": stats,
              "edge_list": output_path(out) if out else None}
    (sys.stderr if not out else sys.stdout).write(dumps(report))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    g = load_edgelist(args.graph)
    sys.stdout.write(dumps(compute_stats(g).as_dict()))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    s = resolve(args)
    g = load_edgelist(s["graph_file"]) if s.get("graph_file") else generate(_gen_params(s))
    cfg = SimConfig(payoff=PayoffParams(s["b"]), mechanism=_mechanism(s),
                    generations=s["generations"], tail_window=s["tail_window"],
                    strategy_seed=s["strategy_seed"])
    initial = None
    forced = s.get("initial_strategy")
    if forced:
        if set(forced) <= {"C", "D"} and len(forced) == g.node_count:
            initial = PopulationState.from_string(forced)
        elif forced in ("C", "D"):
            initial = PopulationState.uniform(g.node_count, Strategy(forced))
        else:
            raise ParameterError(
                "initial_strategy must be C, D, or one C/D symbol per node")
    result = run(g, cfg, initial)
    summary = result.summary()
    summary["config"] = {k: v for k, v in sorted(s.items())}
    if s.get("trajectory"):
        atomic_write(output_path(s["trajectory"]), trajectory_csv(result))
    else:
        sys.stderr.write(trajectory_csv(result))
    text = dumps(summary)
    if s.get("summary"):
        atomic_write(output_path(s["summary"]), text)
    sys.stdout.write(text)
    return 0


def sweep_spec(s: dict[str, Any]) -> SweepSpec:
    kwargs: dict[str, Any] = {}
    if s.get("preset"):
        name = s["preset"].lower()
        if name not in PRESETS:
            raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        kwargs.update(PRESETS[name])
    kind = s.get("mechanism", kwargs.get("mechanism_kind", NONE)).upper()
    grid_key = {POP: "pop_threshold_percent", NI: "ni_threshold_ratio",
                LC: "lc_threshold_fraction", NI_AND_LC: "lc_threshold_fraction",
                NONE: None}[kind]
    absolute = "lc_threshold_count_grid" in s
    if absolute and kind in (LC, NI_AND_LC):
        grid_key = "lc_threshold_count"
    if grid_key:
        if f"{grid_key}_grid" in s:
            kwargs["threshold_grid"] = s[f"{grid_key}_grid"]
        elif grid_key in s:
            kwargs["threshold_grid"] = [s[grid_key]]
        elif "threshold_grid" not in kwargs:
            raise ParameterError(f"mechanism {kind} needs {grid_key}_grid")
    else:
        kwargs["threshold_grid"] = [0.0]
    if "theta_grid" in s:
        kwargs["theta_grid"] = s["theta_grid"]
    elif "theta" in s:
        kwargs["theta_grid"] = [s["theta"]]
    elif kind == NONE:
        kwargs["theta_grid"] = [0.0]
    kwargs.update(
        mechanism_kind=kind,
        gen_params=_gen_params(s),
        payoff=PayoffParams(s["b"]),
        graph_count=s["graph_count"],
        realisations_per_graph=s["realisations_per_graph"],
        master_seed=s["master_seed"],
        generations=s["generations"],
        tail_window=s["tail_window"],
        lc_absolute=absolute,
    )
    if kind == NI_AND_LC and "ni_threshold_ratio" in s:
        kwargs["fixed_c_i"] = s["ni_threshold_ratio"]
    return SweepSpec(**kwargs)


def _versions() -> dict[str, str]:
    import numba
    import scipy
    return {"sfcoop": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def cmd_sweep(args: argparse.Namespace) -> int:
    s = resolve(args)
    spec = sweep_spec(s)
    workers = s.get("workers") or os.cpu_count() or 1
    started = time.perf_counter()
    grid = run_sweep(spec, workers=workers)
    elapsed = time.perf_counter() - started
    text = grid_csv(grid)
    out = s.get("output")
    if out:
        atomic_write(output_path(out), text)
    else:
        sys.stdout.write(text)
    manifest = {
        "settings": {k: v for k, v in sorted(s.items())},
        "sweep": json.loads(json.dumps(asdict(spec), default=str)),
        "graph_seeds": [derived_int_seed(graph_seed(spec.master_seed, g))
                        for g in range(spec.graph_count)],
        "seed_rule": "SeedSequence(master_seed, spawn_key=(0, graph)) for graphs; "
                     "(1, graph, run) for initial strategies; PCG64",
        "versions": _versions(),
        "workers": workers,
        "wall_time_seconds": elapsed,
    }
    manifest_path = s.get("manifest") or (f"{out}.manifest.json" if out else None)
    if manifest_path:
        atomic_write(output_path(manifest_path), dumps(manifest))
    return 0


# -- parser --------------------------------------------------------------------

def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", type=str.lower, choices=["ba", "dms"])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--m0", type=int)
    p.add_argument("--graph-seed", "--seed", dest="graph_seed", type=int)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--b", type=float, help="temptation payoff, 1 < b <= 2")
    p.add_argument("--mechanism", type=str.upper,
                   choices=[NONE, POP, NI, LC, NI_AND_LC])
    p.add_argument("--theta", type=float)
    p.add_argument("--pop-threshold-percent", type=float)
    p.add_argument("--ni-threshold-ratio", type=float)
    p.add_argument("--lc-threshold-fraction", type=float)
    p.add_argument("--lc-threshold-count", type=float)
    p.add_argument("--generations", type=int)
    p.add_argument("--tail-window", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfcoop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-net", help="generate a BA or DMS network")
    p.add_argument("--config")
    _add_gen_flags(p)
    p.add_argument("--output", "-o", help="edge-list path (default: stdout)")
    p.set_defaults(func=cmd_gen_net)

    p = sub.add_parser("stats", help="structural statistics of an edge-list file")
    p.add_argument("graph")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="simulate one realisation")
    p.add_argument("--config")
    p.add_argument("--graph-file")
    _add_gen_flags(p)
    _add_sim_flags(p)
    p.add_argument("--strategy-seed", type=int)
    p.add_argument("--initial-strategy",
                   help="force the initial state: C, D, or one C/D symbol per node")
    p.add_argument("--trajectory", help="trajectory CSV path (default: stderr)")
    p.add_argument("--summary", help="also write the summary JSON here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a (theta x threshold) grid")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    _add_gen_flags(p)
    _add_sim_flags(p)
    p.add_argument("--theta-grid")
    p.add_argument("--pop-threshold-percent-grid")
    p.add_argument("--ni-threshold-ratio-grid")
    p.add_argument("--lc-threshold-fraction-grid")
    p.add_argument("--lc-threshold-count-grid")
    p.add_argument("--graph-count", type=int)
    p.add_argument("--realisations-per-graph", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--workers", type=int, help="process count (default: all cores)")
    p.add_argument("--output", "-o", help="grid CSV path (default: stdout)")
    p.add_argument("--manifest", help="manifest JSON path (default: <output>.manifest.json)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError, ContractError, FormatError) as exc:
        print(f"sfcoop {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sfcoop {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
