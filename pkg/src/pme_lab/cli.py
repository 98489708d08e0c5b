"""Command-line entry point: ``pme-lab <subcommand> --config cfg.json --out DIR``.

Every subcommand validates its JSON config against a schema before any
computation, writes its artifacts into a scratch directory and moves them
into ``--out`` only on success.

Exit codes: 0 success, 1 check failure, 2 config or precondition error,
3 numerical abort, 4 inconclusive trend.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import diagnostics as dg
from . import exact_solutions as ex
from . import experiments as xp
from .elliptic_profile import ShootingError, rescale_profile, solve_profile, write_profile_csv
from .fields import BarenblattField, ConstantField, FieldFunction, GiantField, PowerField, as_field, truncate
from .pme_solver import (
    Field,
    Grid1D,
    NumericalAbort,
    SolveConfig,
    indicator_field,
    l1_distance,
    read_trajectory_csv,
    solve_ivp,
    write_trajectory_csv,
    write_trajectory_meta,
)
from .reports import CheckReport, InconclusiveError, Verdict, to_json

log = logging.getLogger("pme_lab")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ABORT, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
MASS_RTOL = 1e-8
MIN_ORDER = 0.8


class CheckFailure(RuntimeError):
    pass


# --- schemas -----------------------------------------------------------------

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_times = {"type": "array", "items": _num, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_PME = {"m": {"type": "number", "exclusiveMinimum": 1}, "n": _posint}
_REGION = _obj({"radius": _pos, "t_start": _num, "t_end": _num, "focus_t": _num}, ["radius", "t_start", "t_end"])
_TRENDS = {"levels": {"type": "integer", "minimum": 1}, "base": {"type": "integer", "minimum": 8}}

_SOURCE = {
    "oneOf": [
        _obj({"kind": {"const": "barenblatt"}, "C": _pos, "t_shift": _num}, ["kind"]),
        _obj({"kind": {"const": "giant"}, "R": _pos, "t0": _num, "steps": {"type": "integer", "minimum": 50}}, ["kind"]),
        _obj({"kind": {"const": "constant"}, "value": {"type": "number", "minimum": 0}, "R": _pos}, ["kind", "value"]),
        _obj(
            {
                "kind": {"const": "trajectory_csv"},
                "path": {"type": "string"},
                "geometry": {"enum": ["slab", "radial"]},
                "R": _pos,
                "N": {"type": "integer", "minimum": 8},
            },
            ["kind", "path", "R", "N"],
        ),
    ]
}
_TRUNC = _obj({"upper": _pos, "lower": _pos})
_CUTOFF = _obj(
    {
        "r_in": {"type": "number", "minimum": 0},
        "r_out": _pos,
        "t_in": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        "t_out": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
    },
    ["r_in", "r_out", "t_in", "t_out"],
)
_CHECK = {
    "oneOf": [
        _obj(
            {
                "kind": {"const": "harnack"},
                "source": _SOURCE,
                "samples": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}, "minItems": 1},
                "r": _pos,
                "C2_grid": {"type": "array", "items": _pos, "minItems": 1},
            },
            ["kind", "source", "samples", "r", "C2_grid"],
        ),
        _obj(
            {
                "kind": {"const": "weak_harnack"},
                "source": _SOURCE,
                "x0": _num,
                "r": _pos,
                "t0": _num,
                "T": _num,
                "C1_grid": {"type": "array", "items": _pos, "minItems": 1},
            },
            ["kind", "source", "x0", "r", "t0", "T"],
        ),
        _obj(
            {
                "kind": {"const": "caccioppoli"},
                "source": _SOURCE,
                "eps": _pos,
                "truncate": _TRUNC,
                "cutoff": _CUTOFF,
                "resolution": {"type": "integer", "minimum": 8},
            },
            ["kind", "source", "eps", "cutoff"],
        ),
        _obj(
            {
                "kind": {"const": "log_caccioppoli"},
                "source": _SOURCE,
                "truncate": _TRUNC,
                "cutoff": _CUTOFF,
                "resolution": {"type": "integer", "minimum": 8},
            },
            ["kind", "source", "cutoff"],
        ),
        _obj(
            {
                "kind": {"const": "sobolev"},
                "source": _SOURCE,
                "power": _pos,
                "p": {"type": "number", "minimum": 1},
                "r": _pos,
                "sup_power": {"enum": ["q/n", "p/n"]},
                "cutoff": _CUTOFF,
                "resolution": {"type": "integer", "minimum": 8},
            },
            ["kind", "source", "p", "r", "cutoff"],
        ),
    ]
}

SCHEMAS: dict[str, dict] = {
    "barenblatt": _obj(
        {
            **_PME,
            "C": _pos,
            "times": _times,
            "R": _pos,
            "N": {"type": "integer", "minimum": 8},
            "q_values": {"type": "array", "items": _pos},
            "region": _REGION,
            **_TRENDS,
        },
        ["m", "n"],
    ),
    "giant": _obj(
        {
            **_PME,
            "R": _pos,
            "steps": {"type": "integer", "minimum": 50},
            "tol": _pos,
            "classify": {"type": "boolean"},
            "region": _REGION,
            **_TRENDS,
        },
        ["m", "n"],
    ),
    "solve": _obj(
        {
            **_PME,
            "geometry": {"enum": ["slab", "radial"]},
            "R": _pos,
            "N": {"type": "integer", "minimum": 8},
            "t_start": _num,
            "t_end": _num,
            "snapshot_times": {"type": "array", "items": _num},
            "cfl_safety": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "initial": {
                "oneOf": [
                    _obj({"kind": {"const": "barenblatt"}, "C": _pos}, ["kind"]),
                    _obj({"kind": {"const": "giant"}, "R": _pos, "t0": _num}, ["kind"]),
                    _obj({"kind": {"const": "constant"}, "value": {"type": "number", "minimum": 0}}, ["kind", "value"]),
                    _obj({"kind": {"const": "indicator"}, "radius": _pos, "amplitude": _pos}, ["kind", "radius"]),
                    _obj({"kind": {"const": "csv"}, "path": {"type": "string"}, "time": _num}, ["kind", "path"]),
                ]
            },
            "convergence": _obj({"N_values": {"type": "array", "items": {"type": "integer", "minimum": 8}, "minItems": 2}}, ["N_values"]),
            "comparison": _obj({"lower_factor": {"type": "number", "minimum": 0, "maximum": 1}}, ["lower_factor"]),
        },
        ["m", "n", "R", "N", "t_end", "initial"],
    ),
    "classify": _obj({**_PME, "source": _SOURCE, "region": _REGION, **_TRENDS}, ["m", "n", "source", "region"]),
    "dichotomy": _obj(
        {
            **_PME,
            "k_values": {"type": "array", "items": _posint, "minItems": 1},
            "a_rule": _obj({"coef": _pos, "power": _pos}, ["power"]),
            "direction": {"enum": ["BLOWUP", "MEASURE"]},
            "C0": _pos,
            "N": {"type": "integer", "minimum": 8},
            "snapshots": {"type": "integer", "minimum": 2},
            "refine": {"type": "boolean"},
            "slice_radius": _pos,
            "slice_time": _pos,
            "measure_time": _pos,
        },
        ["m", "n", "k_values", "a_rule"],
    ),
    "checks": _obj({**_PME, "checks": {"type": "array", "items": _CHECK}}, ["m", "n", "checks"]),
}


# --- helpers -----------------------------------------------------------------


class Outputs:
    """Collects artifacts in a scratch directory; ``promote`` moves them to the target."""

    def __init__(self, target: Path):
        self.target = target
        target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".pme-lab-", dir=target.parent))

    def path(self, name: str) -> Path:
        return self.tmp / name

    def text(self, name: str, content: str) -> None:
        self.path(name).write_text(content if content.endswith("\n") else content + "\n")

    def json(self, name: str, obj: Any) -> None:
        self.text(name, to_json(obj))

    def promote(self) -> None:
        self.target.mkdir(parents=True, exist_ok=True)
        for p in sorted(self.tmp.iterdir()):
            shutil.move(str(p), str(self.target / p.name))
        self.discard()

    def discard(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _pme(cfg: dict) -> ex.PmeParams:
    return ex.PmeParams(float(cfg["m"]), int(cfg["n"]))


def _region(item: dict) -> dg.Region:
    return dg.Region(item["radius"], item["t_start"], item["t_end"], 0.0, item.get("focus_t", 0.0))


def _source(item: dict, pme: ex.PmeParams):
    kind = item["kind"]
    if kind == "barenblatt":
        return BarenblattField(ex.BarenblattParams(pme, C=item.get("C", 1.0), t_shift=item.get("t_shift", 0.0)))
    if kind == "giant":
        prof = solve_profile(pme, item.get("R", 1.0), steps=item.get("steps", 2000))
        return GiantField(prof, item.get("t0", 0.0))
    if kind == "constant":
        return ConstantField(item["value"], pme.m, pme.n, item.get("R", math.inf))
    grid = Grid1D(item.get("geometry", "radial"), item["R"], item["N"], pme.n)
    return read_trajectory_csv(item["path"], grid, pme.m)


def _trend_kw(cfg: dict) -> dict:
    return {"levels": cfg.get("levels", 3), "base": cfg.get("base", 256)}


# --- subcommands -------------------------------------------------------------


def cmd_barenblatt(cfg: dict, out: Outputs) -> int:
    pme = _pme(cfg)
    bp = ex.BarenblattParams(pme, C=cfg.get("C", 1.0))
    times = sorted(cfg.get("times", [0.5, 1.0, 2.0]))
    if times[0] <= 0:
        raise ValueError("sample times must be positive")
    R = cfg.get("R", 1.1 * ex.barenblatt_support_radius(bp, times[-1]))
    r = Grid1D("radial", R, cfg.get("N", 200), pme.n).centers
    rows = [(t, ri, ui) for t in times for ri, ui in zip(r, ex.barenblatt_value(bp, r, t))]
    out.text("slices.csv", _csv(["t", "r", "u"], rows))
    masses = [ex.barenblatt_mass(bp, t) for t in times]
    out.text("mass.csv", _csv(["t", "mass"], zip(times, masses)))
    radii = [ex.barenblatt_support_radius(bp, t) for t in times]
    out.text("support.csv", _csv(["t", "support_radius"], zip(times, radii)))
    region = _region(cfg.get("region", {"radius": 1.0, "t_start": -1.0, "t_end": 1.0}))
    field = BarenblattField(bp)
    trends = {}
    for q in cfg.get("q_values", []):
        trends[repr(float(q))] = dg.lq_spacetime_trend(field, region, q, **_trend_kw(cfg))
    drift = (max(masses) - min(masses)) / max(masses)
    out.json("report.json", {"mass_spread": drift, "masses": masses, "support_radii": radii, "trends": trends})
    if drift > MASS_RTOL:
        raise CheckFailure(f"mass varies by {drift:.3g} across sample times")
    if any(t.verdict is Verdict.INCONCLUSIVE for t in trends.values()):
        raise InconclusiveError("an L^q trend is inconclusive")
    return EXIT_OK


def cmd_giant(cfg: dict, out: Outputs) -> int:
    pme = _pme(cfg)
    R = cfg.get("R", 1.0)
    prof = solve_profile(pme, R, steps=cfg.get("steps", 2000), tol=cfg.get("tol", 1e-8))
    write_profile_csv(prof, out.path("profile.csv"))
    unit = rescale_profile(solve_profile(pme, 1.0, steps=cfg.get("steps", 2000)), R) if R != 1.0 else prof
    rel = float(np.max(np.abs(unit.U(prof.r_grid) - prof.U_values)) / prof.U_values[0])
    report = {
        "U0": float(prof.U_values[0]),
        "w0": prof.w0,
        "residual_max": prof.residual_max,
        "boundary_residual": prof.boundary_residual,
        "rescaling_max_rel_diff": rel,
    }
    if cfg.get("classify", True):
        region = _region(cfg.get("region", {"radius": 0.5 * R, "t_start": -0.5 * R * R, "t_end": 0.5 * R * R}))
        label = dg.classify(GiantField(prof, 0.0), region, **_trend_kw(cfg))
        report["class"] = label
        out.text("class.txt", label.record())
    out.json("report.json", report)
    return EXIT_OK


def _initial(item: dict, grid: Grid1D, pme: ex.PmeParams, t: float) -> Field:
    kind = item["kind"]
    if kind == "barenblatt":
        bp = ex.BarenblattParams(pme, C=item.get("C", 1.0))
        return Field(grid, np.asarray(ex.barenblatt_value(bp, grid.centers, t), dtype=float), t)
    if kind == "giant":
        prof = solve_profile(pme, item.get("R", grid.R))
        return Field(grid, np.asarray(GiantField(prof, item.get("t0", 0.0)).value(grid.centers, t), dtype=float), t)
    if kind == "constant":
        return Field(grid, np.full(grid.N, float(item["value"])), t)
    if kind == "indicator":
        return indicator_field(grid, item["radius"], item.get("amplitude", 1.0), t)
    traj = read_trajectory_csv(item["path"], grid, pme.m)
    snap = traj.snapshots[-1] if "time" not in item else traj.at(item["time"])
    return Field(grid, snap.values, t)


def cmd_solve(cfg: dict, out: Outputs) -> int:
    pme = _pme(cfg)
    geometry = cfg.get("geometry", "radial")
    t0 = cfg.get("t_start", 0.0)
    snaps = tuple(cfg.get("snapshot_times", [])) or (cfg["t_end"],)
    scfg = SolveConfig(t_end=cfg["t_end"], cfl_safety=cfg.get("cfl_safety", 0.4), snapshot_times=snaps)

    def grid(N):
        return Grid1D(geometry, cfg["R"], N, pme.n)

    u0 = _initial(cfg["initial"], grid(cfg["N"]), pme, t0)
    traj = solve_ivp(u0, pme.m, scfg)
    write_trajectory_csv(traj, out.path("trajectory.csv"))
    write_trajectory_meta(traj, out.path("trajectory.json"), scfg)
    failures = []
    if "convergence" in cfg:
        if cfg["initial"]["kind"] != "barenblatt":
            raise ValueError("convergence tables need Barenblatt initial data")
        bp = ex.BarenblattParams(pme, C=cfg["initial"].get("C", 1.0))
        Ns = sorted(cfg["convergence"]["N_values"])
        errs = []
        for N in Ns:
            g = grid(N)
            tr = solve_ivp(_initial(cfg["initial"], g, pme, t0), pme.m, SolveConfig(t_end=cfg["t_end"], cfl_safety=scfg.cfl_safety))
            exact = np.asarray(ex.barenblatt_value(bp, g.centers, cfg["t_end"]), dtype=float)
            errs.append(l1_distance(tr.snapshots[-1], exact) / max(tr.snapshots[-1].mass(), 1e-300))
        orders = [math.log(a / b) / math.log(Nb / Na) for (Na, a), (Nb, b) in zip(zip(Ns, errs), zip(Ns[1:], errs[1:]))]
        out.text("convergence.csv", _csv(["N", "rel_l1_error"], zip(Ns, errs)))
        out.json("convergence.json", {"N": Ns, "errors": errs, "orders": orders, "min_order": min(orders)})
        if min(orders) < MIN_ORDER:
            failures.append(f"empirical order {min(orders):.3g} below {MIN_ORDER}")
    if "comparison" in cfg:
        v0 = Field(u0.grid, cfg["comparison"]["lower_factor"] * u0.values, t0)
        rep = xp.comparison_harness(u0, v0, pme.m, scfg)
        out.json("comparison.json", rep)
        if not rep.passed:
            failures.append(f"{rep.details['violations']} ordering violations")
    if failures:
        raise CheckFailure("; ".join(failures))
    return EXIT_OK


def cmd_classify(cfg: dict, out: Outputs) -> int:
    pme = _pme(cfg)
    src = _source(cfg["source"], pme)
    label = dg.classify(src, _region(cfg["region"]), **_trend_kw(cfg))
    out.json("class.json", label)
    out.text("class.txt", label.record())
    return EXIT_OK


def cmd_dichotomy(cfg: dict, out: Outputs) -> int:
    pme = _pme(cfg)
    rule = xp.PowerRule(cfg["a_rule"].get("coef", 1.0), cfg["a_rule"]["power"])
    keys = ("C0", "N", "snapshots", "refine", "slice_radius", "slice_time", "measure_time")
    dcfg = xp.DichotomyConfig(pme, tuple(cfg["k_values"]), rule, **{k: cfg[k] for k in keys if k in cfg})
    direction = cfg.get("direction")
    if direction is None:
        # a_k growing faster than k^n points at blow-up, otherwise at a measure limit
        direction = "BLOWUP" if rule.power > pme.n else "MEASURE"
    try:
        result = xp.classify_dichotomy_limit(dcfg, direction)
    except xp.ComparisonViolation as exc:
        raise CheckFailure(str(exc)) from exc
    out.text("dichotomy.csv", xp.rows_to_csv(result.rows))
    out.json("manifest.json", xp.manifest(dcfg, [result]))
    out.text("class.txt", result.label.record())
    return EXIT_OK


def _cutoff(item: dict) -> dg.CutoffFunction:
    return dg.CutoffFunction(item["r_in"], item["r_out"], tuple(item["t_in"]), tuple(item["t_out"]))


def _run_check(item: dict, pme: ex.PmeParams) -> CheckReport:
    kind = item["kind"]
    f: FieldFunction = as_field(_source(item["source"], pme))
    if "truncate" in item:
        f = truncate(f, upper=item["truncate"].get("upper"), lower=item["truncate"].get("lower"))
    if kind == "harnack":
        return dg.harnack_check(f, [tuple(p) for p in item["samples"]], item["r"], item["C2_grid"])
    if kind == "weak_harnack":
        kw = {"C1_grid": item["C1_grid"]} if "C1_grid" in item else {}
        return dg.weak_harnack_check(f, item["x0"], item["r"], item["t0"], item["T"], **kw)
    res = item.get("resolution", 200)
    if kind == "caccioppoli":
        return dg.caccioppoli_check(f, _cutoff(item["cutoff"]), item["eps"], res)
    if kind == "log_caccioppoli":
        return dg.log_caccioppoli_check(f, _cutoff(item["cutoff"]), res)
    w = PowerField(f, item["power"]) if "power" in item else f
    return dg.sobolev_check(w, _cutoff(item["cutoff"]), item["p"], item["r"], item.get("sup_power", "q/n"), res)


def cmd_checks(cfg: dict, out: Outputs) -> int:
    if not cfg["checks"]:
        raise ValueError("nothing to do: the checker list is empty")
    pme = _pme(cfg)
    failed = []
    for i, item in enumerate(cfg["checks"]):
        rep = _run_check(item, pme)
        out.json(f"{i:02d}_{item['kind']}.json", rep)
        if not rep.passed:
            failed.append(f"{i:02d}_{item['kind']}")
    if failed:
        raise CheckFailure("failed checks: " + ", ".join(failed))
    return EXIT_OK


COMMANDS: dict[str, Callable[[dict, Outputs], int]] = {
    "barenblatt": cmd_barenblatt,
    "giant": cmd_giant,
    "solve": cmd_solve,
    "classify": cmd_classify,
    "dichotomy": cmd_dichotomy,
    "checks": cmd_checks,
}


def load_config(command: str, path: Path) -> dict:
    cfg = json.loads(Path(path).read_text())
    jsonschema.validate(cfg, SCHEMAS[command])
    return cfg


def run(command: str, config: Path, out_dir: Path, seed: int | None = None) -> int:
    try:
        cfg = load_config(command, config)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    # the seed is reserved for randomised suites; no subcommand draws random numbers
    out = Outputs(out_dir)
    try:
        code = COMMANDS[command](cfg, out)
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        code = EXIT_CHECK
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        if exc.trend is not None:
            print(to_json(exc.trend))
        code = EXIT_INCONCLUSIVE
    except (NumericalAbort, ShootingError, ArithmeticError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        code = EXIT_ABORT
    except (ValueError, KeyError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    if code == EXIT_OK:
        out.promote()
    else:
        out.discard()
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pme-lab", description="Porous medium equation laboratory.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, required=True)
        s.add_argument("--out", type=Path, required=True)
        s.add_argument("--seed", type=int, default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(args.command, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
