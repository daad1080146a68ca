"""Command line front door: ``confham run config.json [--output DIR] [--seed N]``.

The configuration is one JSON object::

    {"model": {...}, "task": "closure", "seed": 7, "output": "out", "options": {...}}

``model`` is either a full parameter record (``n``, ``k``, ``s`` and the
optional ``gamma``, ``central_sign``, ``omegas``, ``alphas``) or a catalog
reference ``{"name": ..., <bindings>}`` (bindings may also be nested under
``"bindings"``).  Exit status: 0 on success, 1 on domain or integration
errors (and on a failing ``verify``), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import jsonio, svg
from .catalog import ReductionEntry, instantiate_reduction
from .core import ModelParams, PhaseState, eval_breakdown
from .dynamics import METHODS, integrate
from .errors import DomainError, IntegrationAbort, NonConvergenceError, ParameterError
from .probes import ClosureOptions, closure_test, draw_initial_condition, parameter_scan
from .quantum import GridSpec, compute_spectrum
from .verify import VerifyOptions, run_verification, summary

TASKS = ("eval", "integrate", "verify", "closure", "scan", "spectrum")
TOP_KEYS = {"model", "task", "seed", "output", "options"}


class ConfigError(ParameterError):
    """Malformed configuration file or task option."""


# --------------------------------------------------------------------------
# configuration


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    extra = set(data) - TOP_KEYS
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown top-level key")
    if data.get("task") not in TASKS:
        raise ConfigError("task", f"must be one of {', '.join(TASKS)}, got {data.get('task')!r}")
    if "model" not in data or not isinstance(data["model"], dict):
        raise ConfigError("model", "a model object is required")
    if "options" in data and not isinstance(data["options"], dict):
        raise ConfigError("options", "must be a JSON object")
    return data


def resolve_model(spec: Mapping[str, Any]) -> tuple[ModelParams, ReductionEntry | None]:
    if "name" in spec:
        bindings = dict(spec.get("bindings", {}))
        bindings.update({k: v for k, v in spec.items() if k not in ("name", "bindings")})
        entry = instantiate_reduction(spec["name"], bindings)
        return entry.params, entry
    return ModelParams.from_dict(spec), None


def _positive(opts: Mapping, key: str, default, kind=float):
    value = opts.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"must be a number, got {value!r}")
    if kind is int and not float(value).is_integer():
        raise ConfigError(key, f"must be an integer, got {value!r}")
    value = kind(value)
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(key, f"must be positive, got {value!r}")
    return value


def _check_keys(opts: Mapping, allowed: set[str], task: str) -> None:
    extra = set(opts) - allowed
    if extra:
        raise ConfigError(sorted(extra)[0], f"unknown option for task {task!r}")


def _state(opts: Mapping, params: ModelParams) -> PhaseState | None:
    if "state" not in opts:
        return None
    st = opts["state"]
    if not isinstance(st, dict) or "x" not in st or "p" not in st:
        raise ConfigError("state", "must be an object with lists x and p")
    if len(st["x"]) != params.n or len(st["p"]) != params.n:
        raise ConfigError("state", f"x and p need length n = {params.n}")
    return PhaseState.from_dict(st)


def _initial(opts, params, entry, seed) -> PhaseState:
    """Explicit state, else a seeded draw, else the catalog default."""
    state = _state(opts, params)
    if state is not None:
        return state
    if seed is not None:
        return draw_initial_condition(params, np.random.default_rng(seed))
    if entry is not None and entry.initial is not None:
        return entry.initial
    raise ConfigError("state", "needed for a raw model without a seed")


_CLOSURE_KEYS = {f.name for f in fields(ClosureOptions)}


def _closure_options(raw: Mapping) -> ClosureOptions:
    data = dict(raw)
    if "plane" in data:
        plane = data["plane"]
        if not isinstance(plane, list) or len(plane) != 2:
            raise ConfigError("plane", "must be a pair of axis indices")
        data["plane"] = tuple(int(v) for v in plane)
    for key in ("n_periods", "q_max", "rational_q_max", "probe_periods"):
        if key in data:
            data[key] = _positive(data, key, None, int)
    for key in ("h", "epsilon", "window", "escape_factor", "rational_tol", "t_probe", "t_cap"):
        if key in data:
            data[key] = _positive(data, key, None)
    if "method" in data and data["method"] not in METHODS:
        raise ConfigError("method", f"must be one of {METHODS}")
    return ClosureOptions(**data)


# --------------------------------------------------------------------------
# tasks


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _task_eval(params, entry, opts, seed, out) -> int:
    _check_keys(opts, {"state"}, "eval")
    state = _initial(opts, params, entry, seed)
    record = {"params": params.to_dict(), "state": state.to_dict(), **eval_breakdown(params, state).to_dict()}
    text = jsonio.dumps(record, indent=2) + "\n"
    sys.stdout.write(text)
    _write(out, "eval.json", text)
    return 0


def _task_integrate(params, entry, opts, seed, out) -> int:
    _check_keys(opts, {"state", "t_max", "h", "method", "stride", "time_transform"}, "integrate")
    state = _initial(opts, params, entry, seed)
    t_max = _positive(opts, "t_max", 20.0)
    h = _positive(opts, "h", 1e-3)
    stride = _positive(opts, "stride", 10, int)
    method = opts.get("method", "midpoint4")
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {METHODS}")
    beta = float(opts.get("time_transform", 0.0))
    try:
        traj = integrate(params, state, t_max, h, method, time_transform=beta)
        status = 0
    except IntegrationAbort as exc:
        traj = exc.trajectory
        status = 1
        sys.stderr.write(f"integration aborted: {exc}\n")
    records = list(traj.jsonl_records())
    lines = [jsonio.dumps(records[0] | {"stride": stride, "status": traj.status})]
    body = records[1:]
    keep = list(range(0, len(body), stride))
    if keep and keep[-1] != len(body) - 1:
        keep.append(len(body) - 1)
    lines.extend(jsonio.dumps(body[i]) for i in keep)
    _write(out, "trajectory.jsonl", "\n".join(lines) + "\n")
    if params.n >= 2:
        _write(out, "orbit.svg", svg.polyline(traj.x[:, 0], traj.x[:, 1], title=f"orbit ({method})"))
    return status


def _task_verify(params, entry, opts, seed, out) -> int:
    allowed = {f.name for f in fields(VerifyOptions)} | {"state"}
    _check_keys(opts, allowed, "verify")
    vopts = {k: v for k, v in opts.items() if k != "state"}
    if seed is not None:
        vopts["seed"] = seed
    records = run_verification(params, entry, VerifyOptions(**vopts), _state(opts, params))
    result = summary(records)
    _write(out, "verify.jsonl", "".join(jsonio.dumps(r) + "\n" for r in records))
    _write(out, "summary.txt", result + "\n")
    sys.stdout.write(result + "\n")
    return 0 if result == "PASS" else 1


def _task_closure(params, entry, opts, seed, out) -> int:
    _check_keys(opts, _CLOSURE_KEYS | {"state"}, "closure")
    state = _initial(opts, params, entry, seed)
    copts = _closure_options({k: v for k, v in opts.items() if k != "state"})
    report = closure_test(params, state, copts)
    data = report.to_dict() | {"options": copts.to_dict()}
    if entry is not None:
        data["reduction"] = entry.name
    text = jsonio.dumps(data, indent=2) + "\n"
    _write(out, "closure.json", text)
    sys.stdout.write(text)
    return 0


def _task_scan(params, entry, opts, seed, out) -> int:
    _check_keys(opts, _CLOSURE_KEYS | {"k_grid", "s_grid", "n_ic"}, "scan")
    for key in ("k_grid", "s_grid"):
        if not isinstance(opts.get(key), list) or not opts[key]:
            raise ConfigError(key, "must be a nonempty list of numbers")
    n_ic = _positive(opts, "n_ic", 10, int)
    copts = _closure_options({k: v for k, v in opts.items() if k not in ("k_grid", "s_grid", "n_ic")})
    table = parameter_scan(params, opts["k_grid"], opts["s_grid"], n_ic, 0 if seed is None else seed, copts)
    _write(out, "scan.csv", table.to_csv())
    values = np.array([[table.cell(k, s).closure_fraction for s in table.s_grid] for k in table.k_grid])
    _write(out, "scan.svg", svg.heatmap(table.k_grid, table.s_grid, values, title="closure fraction"))
    return 0


def _task_spectrum(params, entry, opts, seed, out) -> int:
    _check_keys(opts, {"box", "points", "count", "cluster_tol"}, "spectrum")
    if "box" not in opts or "points" not in opts:
        raise ConfigError("box" if "box" not in opts else "points", "required for the spectrum task")
    grid = GridSpec(params.n, tuple(tuple(b) for b in opts["box"]), tuple(opts["points"]))
    count = _positive(opts, "count", 10, int)
    tol = _positive(opts, "cluster_tol", 1e-6)
    result = compute_spectrum(params, grid, count, tol)
    _write(out, "spectrum.csv", result.to_csv())
    _write(out, "spectrum.json", jsonio.dumps(result.header(), indent=2) + "\n")
    _write(out, "levels.svg", svg.level_diagram(result.eigenvalues, result.clusters, title="lowest levels"))
    return 0


_DISPATCH = {
    "eval": _task_eval,
    "integrate": _task_integrate,
    "verify": _task_verify,
    "closure": _task_closure,
    "scan": _task_scan,
    "spectrum": _task_spectrum,
}


def run(config: Mapping[str, Any], output: str | None = None, seed: int | None = None) -> int:
    """Execute one validated configuration; returns the exit status."""
    params, entry = resolve_model(config["model"])
    if seed is None and config.get("seed") is not None:
        if not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
            raise ConfigError("seed", f"must be an integer, got {config['seed']!r}")
        seed = config["seed"]
    out = Path(output or config.get("output") or "out")
    return _DISPATCH[config["task"]](params, entry, dict(config.get("options", {})), seed, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confham", description="Conformally scaled Hamiltonian toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute a JSON configuration")
    run_p.add_argument("config", help="path to the configuration file")
    run_p.add_argument("--output", default=None, help="output directory (overrides the config)")
    run_p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return run(config, args.output, args.seed)
    except ParameterError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (DomainError, IntegrationAbort, NonConvergenceError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
