"""Command-line driver: configuration, orchestration and tabular output.

Usage::

    qzeno zeno --config exp.json --set physical.hbar=0.1 --out results/
    qzeno hierarchy | wigner | verify | sweep  [same flags]

Exit codes: 0 success, 1 a verified property failed, 2 invalid config,
3 a guard refused the run, 4 a numerical guard tripped mid-run (partial
results are flushed with a ``FAILED`` marker row).
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    BoundaryMassError,
    CaptureError,
    DirichletBasis,
    FlowExitError,
    dirichlet_evolve,
    free_propagate,
    project,
)
from .phase_space import PhaseSpaceGrid, PhysicalParams, SpatialGrid, make_grid
from .quantization import CostGuardError, ResolutionError, wigner_transform
from .semiclassical import (
    DEFAULT_BUDGET,
    MAX_HIERARCHY_N,
    MAX_HIERARCHY_ORDER,
    ResolutionGuardError,
    SupportInconsistency,
    escape_sweep,
    estimate_cost,
)
from .symbols import EPS_FLOOR_CELLS, Region, build_mollifier
from .verify import run_checks
from .zeno import ZenoConfig, iter_zeno, product_formula_state

__all__ = ["main", "load_config", "build_experiment", "Experiment", "ResultTable", "ConfigError"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_CONFIG = 2
EXIT_GUARD = 3
EXIT_NUMERIC = 4

COMMANDS = ("zeno", "hierarchy", "wigner", "verify", "sweep")
NUMERIC_GUARDS = (BoundaryMassError, CaptureError, FlowExitError, SupportInconsistency)
REFUSALS = (CostGuardError, ResolutionGuardError, ResolutionError)


class ConfigError(ValueError):
    """The configuration is malformed or violates a precondition."""


# ---------------------------------------------------------------- config

def default_config() -> dict:
    text = resources.files("qzeno").joinpath("data/default.json").read_text()
    return json.loads(text)


def _merge(base: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in user.items():
        where = path + key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and where != "sweep.axes":
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(cfg: dict, dotted: str, value) -> None:
    """Assign ``value`` at a dotted path that must already exist (sweep axes excepted)."""
    keys = dotted.split(".")
    node = cfg
    for i, k in enumerate(keys[:-1]):
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"unknown config key {'.'.join(keys[:i + 1])!r}")
        node = node[k]
    leaf = keys[-1]
    free = keys[:-1] == ["sweep", "axes"]
    if not isinstance(node, dict) or (leaf not in node and not free):
        raise ConfigError(f"unknown config key {dotted!r}")
    if isinstance(node.get(leaf), dict) and not isinstance(value, dict):
        raise ConfigError(f"{dotted!r} must be an object")
    node[leaf] = value


def load_config(path: str | Path | None = None, overrides=()) -> dict:
    """Defaults, then the JSON file at ``path``, then ``key=value`` overrides."""
    cfg = default_config()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, user)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        set_path(cfg, key.strip(), _parse_value(value))
    return cfg


def _positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{name} must be a finite number, got {value!r}")
    return float(value)


def _increasing_ints(values, name: str) -> tuple:
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} must be a non-empty list")
    ns = tuple(_positive_int(v, name) for v in values)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError(f"{name} must be strictly increasing, got {list(ns)}")
    return ns


def _t_grid(value) -> tuple:
    if isinstance(value, list):
        ts = tuple(_number(v, "schedule.t_grid") for v in value)
    elif isinstance(value, dict) and set(value) == {"start", "stop", "step"}:
        start, stop, step = (_number(value[k], f"schedule.t_grid.{k}") for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigError("schedule.t_grid needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        ts = tuple(float(v) for v in np.round(start + step * np.arange(n), 12))
    else:
        raise ConfigError("schedule.t_grid must be a list or {start, stop, step}")
    if not ts or any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] < 0:
        raise ConfigError("schedule.t_grid must be non-negative and strictly increasing")
    return ts


@dataclass(frozen=True, eq=False)
class Experiment:
    """A validated configuration with the domain objects it describes."""

    raw: dict
    params: PhysicalParams
    region: Region
    grid: SpatialGrid
    xi_points: int
    state: dict
    t_list: tuple
    N_list: tuple
    hierarchy_N_list: tuple
    t_grid: tuple
    xi_list: tuple
    J: int
    projector: str
    eps: float | None
    wigner_evolution: str
    wigner_N: int
    formats: tuple
    timing: bool
    seed: int

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def zeno_config(self, t: float) -> ZenoConfig:
        return ZenoConfig(self.region, self.params, self.grid, self.state, t,
                          self.N_list, self.projector, self.eps)

    def phase_space_grid(self) -> PhaseSpaceGrid:
        xi = SpatialGrid(math.pi * self.params.hbar / self.grid.dx, self.xi_points)
        return PhaseSpaceGrid(self.grid, xi)


def build_experiment(cfg: dict) -> Experiment:
    """Validate every section; raises :class:`ConfigError` with the offending key."""
    try:
        return _build(cfg)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(cfg: dict) -> Experiment:
    phys = cfg["physical"]
    params = PhysicalParams(_number(phys["hbar"], "physical.hbar"),
                            _number(phys["mass"], "physical.mass"))
    reg = cfg["region"]
    if not isinstance(reg, list) or len(reg) != 2:
        raise ConfigError("region must be [a, b]")
    region = Region(_number(reg[0], "region[0]"), _number(reg[1], "region[1]"))
    g = cfg["grid"]
    grid = make_grid(_number(g["L"], "grid.L"), _positive_int(g["M_x"], "grid.M_x"))
    xi_points = _positive_int(g["M_xi"], "grid.M_xi")
    if xi_points < 8 or xi_points & (xi_points - 1):
        raise ConfigError(f"grid.M_xi must be a power of two >= 8, got {xi_points}")
    margin = 0.1 * grid.half_width
    if not (region.a > -grid.half_width + margin and region.b < grid.half_width - margin):
        raise ConfigError("region must lie inside the grid, away from the boundary layer")

    st = dict(cfg["state"])
    if st.get("kind") == "gaussian":
        if _number(st["width"], "state.width") <= 0:
            raise ConfigError("state.width must be positive")
        _number(st["center"], "state.center")
        _number(st["momentum"], "state.momentum")
    elif st.get("kind") == "dirichlet_mode":
        _positive_int(st["k"], "state.k")
    else:
        raise ConfigError(f"state.kind must be 'gaussian' or 'dirichlet_mode', got {st.get('kind')!r}")

    sch = cfg["schedule"]
    if not isinstance(sch["t"], list) or not sch["t"]:
        raise ConfigError("schedule.t must be a non-empty list")
    t_list = tuple(_number(v, "schedule.t") for v in sch["t"])
    if any(t <= 0 for t in t_list):
        raise ConfigError("schedule.t values must be positive")
    N_list = _increasing_ints(sch["N_list"], "schedule.N_list")
    hN = _increasing_ints(sch["hierarchy_N_list"], "schedule.hierarchy_N_list")
    if hN[-1] > MAX_HIERARCHY_N:
        raise ConfigError(f"schedule.hierarchy_N_list is limited to N <= {MAX_HIERARCHY_N}")
    if not isinstance(sch["xi_list"], list) or not sch["xi_list"]:
        raise ConfigError("schedule.xi_list must be a non-empty list")
    xi_list = tuple(_number(v, "schedule.xi_list") for v in sch["xi_list"])
    J = sch["J"]
    if isinstance(J, bool) or not isinstance(J, int) or not 0 <= J <= MAX_HIERARCHY_ORDER:
        raise ConfigError(f"schedule.J must be an integer in 0..{MAX_HIERARCHY_ORDER}, got {J!r}")

    pj = cfg["projector"]
    if pj["kind"] not in ("sharp", "mollified"):
        raise ConfigError(f"projector.kind must be 'sharp' or 'mollified', got {pj['kind']!r}")
    eps = None if pj["eps"] == "auto" else _number(pj["eps"], "projector.eps")
    if eps is not None and eps <= 0:
        raise ConfigError("projector.eps must be 'auto' or positive")

    wg = cfg["wigner"]
    if wg["evolution"] not in ("free", "zeno", "dirichlet"):
        raise ConfigError(f"wigner.evolution must be free, zeno or dirichlet, got {wg['evolution']!r}")

    sw = cfg["sweep"]
    if sw["command"] not in ("zeno", "hierarchy"):
        raise ConfigError(f"sweep.command must be 'zeno' or 'hierarchy', got {sw['command']!r}")
    if not isinstance(sw["axes"], dict):
        raise ConfigError("sweep.axes must be an object")
    for key, values in sw["axes"].items():
        if key.startswith("sweep") or not isinstance(values, list) or not values:
            raise ConfigError(f"sweep axis {key!r} must be a non-empty list over a non-sweep key")

    out = cfg["output"]
    formats = tuple(out["formats"])
    if not set(formats) <= {"csv", "bin"}:
        raise ConfigError(f"output.formats must be drawn from csv, bin; got {list(formats)}")
    if not isinstance(out["timing"], bool):
        raise ConfigError("output.timing must be true or false")
    seed = cfg["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    return Experiment(cfg, params, region, grid, xi_points, st, t_list, N_list, hN,
                      _t_grid(sch["t_grid"]), xi_list, J, pj["kind"], eps, wg["evolution"],
                      _positive_int(wg["N"], "wigner.N"), formats, out["timing"], seed)


# ---------------------------------------------------------------- output

def fmt(value) -> str:
    """Deterministic text for one cell; floats carry 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


@dataclass
class ResultTable:
    columns: tuple
    header: dict
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(values)

    def write_csv(self, path: Path, failure: str | None = None) -> Path:
        lines = [f"# {k}: {v}" for k, v in self.header.items()]
        lines.append(",".join(self.columns))
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        if failure is not None:
            lines.append(",".join(["FAILED"] + [""] * (len(self.columns) - 1)))
            lines.append(f"# failure: {failure}")
        path.write_text("\n".join(lines) + "\n")
        return path


def provenance(exp: Experiment, command: str, eps_note: str) -> dict:
    head = {
        "generator": f"qzeno {__version__}",
        "command": command,
        "config_sha256": exp.config_hash,
        "hbar": fmt(exp.params.hbar),
        "mass": fmt(exp.params.mass),
        "grid": f"L={fmt(exp.grid.half_width)} M_x={exp.grid.points} M_xi={exp.xi_points} "
                f"dx={fmt(exp.grid.dx)}",
        "region": f"[{fmt(exp.region.a)}, {fmt(exp.region.b)}]",
        "eps": eps_note,
        "seed": str(exp.seed),
    }
    if exp.timing:
        head["created"] = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return head


def _eps_note(exp: Experiment, Ns) -> str:
    if exp.projector == "sharp":
        return "none (sharp projector)"
    return " ".join(f"N={N}:{fmt(build_mollifier(exp.region, N, exp.eps, grid=exp.grid).eps)}"
                    for N in Ns)


def _wall(exp: Experiment, ms: float) -> float:
    return ms if exp.timing else float("nan")


# ---------------------------------------------------------------- commands

def cmd_zeno(exp: Experiment, out: Path, jobs: int = 1, budget: float = DEFAULT_BUDGET) -> int:
    code = EXIT_OK
    for i, t in enumerate(exp.t_list):
        name = "zeno.csv" if len(exp.t_list) == 1 else f"zeno_t{i}.csv"
        head = provenance(exp, "zeno", _eps_note(exp, exp.N_list))
        head["t"] = fmt(t)
        head["projector"] = exp.projector
        head["convergence"] = "empirical"
        table = ResultTable(("N", "p_N", "e_N", "reg_residual", "eps", "wall_ms"), head)
        try:
            for row in iter_zeno(exp.zeno_config(t)):
                table.add(row.N, row.p_N, row.e_N, row.reg_residual, row.eps,
                          _wall(exp, row.wall_ms))
        except NUMERIC_GUARDS as exc:
            table.write_csv(out / name, failure=f"{type(exc).__name__}: {exc}")
            print(f"numerical guard tripped: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        table.write_csv(out / name)
        print(f"wrote {out / name} ({len(table.rows)} rows)")
    return code


def _hierarchy_one(exp: Experiment, N: int, sink: list):
    return escape_sweep([N], exp.t_grid, exp.xi_list, exp.J, exp.region, exp.params,
                        exp.grid, exp.eps, budget=math.inf, sink=sink)


def _hierarchy_worker(args):
    exp, N = args
    sink: list = []
    try:
        res = _hierarchy_one(exp, N, sink)
        return N, sink, res.thresholds, res.eps, None
    except NUMERIC_GUARDS as exc:
        return N, sink, {}, {}, f"{type(exc).__name__}: {exc}"


def predicted_work(exp: Experiment, command: str) -> float:
    """Cost units for one run of ``command``."""
    if command == "hierarchy":
        return estimate_cost(exp.hierarchy_N_list, len(exp.t_grid), len(exp.xi_list), exp.J,
                             exp.grid.points)
    m = exp.grid.points
    return float(sum(m * N * math.log2(m) for N in exp.N_list) * len(exp.t_list))


def cmd_hierarchy(exp: Experiment, out: Path, jobs: int = 1, budget: float = DEFAULT_BUDGET) -> int:
    cost = predicted_work(exp, "hierarchy")
    if cost > budget:
        print(f"refused: predicted work {cost:.3g} exceeds budget {budget:.3g}", file=sys.stderr)
        return EXIT_GUARD
    widths = {N: build_mollifier(exp.region, N, exp.eps, grid=exp.grid).eps
              for N in exp.hierarchy_N_list}
    for N, eps in widths.items():
        if eps < EPS_FLOOR_CELLS * exp.grid.dx * (1 - 1e-12):
            print(f"refused: eps {eps:g} for N={N} is below {EPS_FLOOR_CELLS} grid cells",
                  file=sys.stderr)
            return EXIT_GUARD
    note = " ".join(f"N={N}:{fmt(eps)}" for N, eps in widths.items())
    head = provenance(exp, "hierarchy", note)
    head["J"] = str(exp.J)
    cols = ("N", "j", "xi", "t", "sup_norm", "support_lo", "support_hi", "verdict", "T_xi", "T_xi_N")
    table = ResultTable(cols, head)
    thr = ResultTable(("N", "j", "xi", "eps", "t_star", "T_xi_N"), dict(head))
    tasks = [(exp, N) for N in exp.hierarchy_N_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_hierarchy_worker, tasks))
    else:
        results = []
        for task in tasks:
            results.append(_hierarchy_worker(task))
            if results[-1][4]:
                break
    failure = None
    for N, rows, thresholds, eps_used, err in results:
        for r in rows:
            table.add(*(r[c] for c in cols))
        for (n, j, xi), t_star in thresholds.items():
            T_N = next((r["T_xi_N"] for r in rows if r["j"] == j and r["xi"] == xi), float("nan"))
            thr.add(n, j, xi, eps_used[n], float("nan") if t_star is None else t_star, T_N)
        if err:
            failure = err
            break
    table.write_csv(out / "hierarchy.csv", failure=failure)
    thr.write_csv(out / "hierarchy_thresholds.csv", failure=failure)
    if failure:
        print(f"numerical guard tripped: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {out / 'hierarchy.csv'} ({len(table.rows)} rows)")
    return EXIT_OK


def _evolved_state(exp: Experiment, t: float):
    psi = exp.zeno_config(t).initial_state()
    if exp.wigner_evolution == "free":
        return free_propagate(psi, t, exp.params), None
    if exp.wigner_evolution == "dirichlet":
        basis = DirichletBasis.for_state(psi, exp.region, exp.params)
        return dirichlet_evolve(project(psi, exp.region), basis, t), None
    cut = exp.zeno_config(t).cutoff(exp.wigner_N)
    eps = getattr(cut, "eps", None)
    return product_formula_state(psi, exp.wigner_N, t, cut, exp.params), eps


def cmd_wigner(exp: Experiment, out: Path, jobs: int = 1, budget: float = DEFAULT_BUDGET) -> int:
    grid = exp.phase_space_grid()
    if "bin" in exp.formats:
        grid.x_axis.nodes.astype("<f8").tofile(out / "x_axis.bin")
        grid.xi_axis.nodes.astype("<f8").tofile(out / "xi_axis.bin")
    eps_note = _eps_note(exp, [exp.wigner_N]) if exp.wigner_evolution == "zeno" else "n/a"
    summary = ResultTable(("t", "norm2", "integral", "w_min", "w_max"),
                          provenance(exp, "wigner", eps_note))
    for i, t in enumerate(exp.t_list):
        try:
            psi, eps = _evolved_state(exp, t)
        except NUMERIC_GUARDS as exc:
            summary.write_csv(out / "wigner.csv", failure=f"{type(exc).__name__}: {exc}")
            return EXIT_NUMERIC
        w = wigner_transform(psi, exp.params, grid).values.real
        integral = float(np.sum(w) * grid.cell_area)
        summary.add(t, psi.norm2(), integral, float(w.min()), float(w.max()))
        if "bin" in exp.formats:
            w.astype("<f8").tofile(out / f"wigner_t{i}.bin")
            sidecar = {
                "file": f"wigner_t{i}.bin", "dtype": "<f8", "order": "C",
                "shape": [grid.x_axis.points, grid.xi_axis.points],
                "axes": [
                    {"name": "x", "file": "x_axis.bin", "half_width": grid.x_axis.half_width,
                     "points": grid.x_axis.points},
                    {"name": "xi", "file": "xi_axis.bin", "half_width": grid.xi_axis.half_width,
                     "points": grid.xi_axis.points},
                ],
                "t": t, "hbar": exp.params.hbar, "mass": exp.params.mass,
                "evolution": exp.wigner_evolution, "N": exp.wigner_N, "eps": eps,
                "config_sha256": exp.config_hash,
            }
            (out / f"wigner_t{i}.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    if "csv" in exp.formats:
        summary.write_csv(out / "wigner.csv")
    print(f"wrote Wigner dumps for {len(exp.t_list)} times to {out}")
    return EXIT_OK


def cmd_verify(exp: Experiment, out: Path, jobs: int = 1, budget: float = DEFAULT_BUDGET) -> int:
    checks = run_checks(exp.grid, exp.params, exp.region, exp.xi_list, exp.seed)
    table = ResultTable(("check", "value", "tol", "passed"), provenance(exp, "verify", "auto"))
    for c in checks:
        print(c.line())
        table.add(c.name, c.value, c.tol, c.passed)
    if "csv" in exp.formats:
        table.write_csv(out / "verify.csv")
    ok = all(c.passed for c in checks)
    print("verify: all properties hold" if ok else "verify: FAILED")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _sweep_run(args):
    cfg, command, run_dir = args
    run_dir.mkdir(parents=True, exist_ok=True)
    exp = build_experiment(cfg)
    return COMMAND_TABLE[command](exp, run_dir, 1, math.inf)


def cmd_sweep(exp: Experiment, out: Path, jobs: int = 1, budget: float = DEFAULT_BUDGET) -> int:
    axes = exp.raw["sweep"]["axes"]
    command = exp.raw["sweep"]["command"]
    keys = list(axes)
    combos = list(itertools.product(*(axes[k] for k in keys))) if keys else [()]
    runs = []
    for i, values in enumerate(combos):
        cfg = copy.deepcopy(exp.raw)
        for k, v in zip(keys, values):
            set_path(cfg, k, v)
        runs.append((cfg, command, out / f"run_{i:03d}", build_experiment(cfg), values))
    cost = sum(predicted_work(r[3], command) for r in runs)
    if cost > budget:
        print(f"refused: predicted work {cost:.3g} for {len(runs)} runs exceeds "
              f"budget {budget:.3g}", file=sys.stderr)
        return EXIT_GUARD
    tasks = [(r[0], command, r[2]) for r in runs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(_sweep_run, tasks))
    else:
        codes = [_sweep_run(t) for t in tasks]
    index = ResultTable(("run",) + tuple(keys) + ("exit_code",),
                        provenance(exp, f"sweep/{command}", "per run"))
    for i, (r, code) in enumerate(zip(runs, codes)):
        index.add(i, *(json.dumps(v) for v in r[4]), code)
    index.write_csv(out / "index.csv")
    print(f"sweep: {len(runs)} runs, predicted work {cost:.3g}")
    return max(codes)


COMMAND_TABLE = {
    "zeno": cmd_zeno,
    "hierarchy": cmd_hierarchy,
    "wigner": cmd_wigner,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qzeno",
                                     description="Quantum Zeno product formulas and their "
                                                 "semiclassical symbol hierarchy.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "zeno": "survival probability and distance to the Dirichlet limit",
        "hierarchy": "escape sweep of the symbol hierarchy",
        "wigner": "dump Wigner functions at the scheduled times",
        "verify": "run the invariant suite (exit 0 iff all pass)",
        "sweep": "cartesian sweep over config axes",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON experiment file (defaults are used otherwise)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path override, e.g. physical.hbar=0.1 (repeatable)")
        p.add_argument("--out", help="output directory (default: output.directory)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--budget", type=float, default=DEFAULT_BUDGET,
                       help="refuse runs predicted to exceed this many work units")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    try:
        exp = build_experiment(load_config(args.config, args.set))
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    out = Path(args.out or exp.raw["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMAND_TABLE[args.command](exp, out, args.jobs, args.budget)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except REFUSALS as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NUMERIC_GUARDS as exc:
        print(f"numerical guard tripped: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
