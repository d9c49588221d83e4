"""Command-line driver: ``g2soliton {verify,adjudicate,solve,list-families}``.

Exit status: 0 when every claim holds, 1 when a claim fails (the report is
still written), 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from . import catalog as C
from . import fields as F
from . import geometry as G
from . import pde

log = logging.getLogger("g2soliton")

REPORT_VERSION = "1"

DEFAULT_TOLERANCES = {
    "residual": 1e-8,
    "curvature": 1e-8,
    "constraint": 1e-10,
    "assumptions": 1e-9,
    "null": 1e-10,
}


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


# -- configuration ----------------------------------------------------------------

_TOP_KEYS = {"family", "params", "slots", "variants", "grid", "margin", "z", "tolerances", "output", "perturb", "solve"}
_GRID_KEYS = {"window", "n", "n1", "n2"}
_PERTURB_KEYS = {"slot", "amplitude", "width"}
_SLOT_KEYS = {"closed_form", "grid_file", "solve", "ode"}


def _check_keys(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(map(str, unknown)))}")


@dataclass
class RunConfig:
    family: str
    params: dict = field(default_factory=dict)
    slots: dict = field(default_factory=dict)
    variants: dict = field(default_factory=dict)
    window: tuple | None = None
    n1: int = 41
    n2: int = 41
    margin: int = 3
    z: tuple = (0.0, 0.0)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str | None = None
    perturb: dict | None = None
    solve: dict | None = None
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path = Path(".")) -> "RunConfig":
        _check_keys(d, _TOP_KEYS, "config")
        if "family" not in d:
            raise ConfigError("config needs 'family'")
        if d["family"] not in C.TAGS:
            raise ConfigError(f"unknown family {d['family']!r}; known: {', '.join(C.TAGS)}")
        params = dict(d.get("params") or {})
        _check_keys(params, set(C.PARAM_NAMES), "params")
        slots = dict(d.get("slots") or {})
        for k, v in slots.items():
            if isinstance(v, dict):
                _check_keys(v, _SLOT_KEYS, f"slots.{k}")
                if len(v) != 1:
                    raise ConfigError(f"slots.{k} must name exactly one source")
        grid = dict(d.get("grid") or {})
        _check_keys(grid, _GRID_KEYS, "grid")
        tol = dict(DEFAULT_TOLERANCES)
        user_tol = d.get("tolerances") or {}
        _check_keys(user_tol, set(DEFAULT_TOLERANCES), "tolerances")
        tol.update({k: float(v) for k, v in user_tol.items()})
        perturb = d.get("perturb")
        if perturb is not None:
            _check_keys(perturb, _PERTURB_KEYS, "perturb")
        window = grid.get("window")
        if window is not None:
            window = _parse_window(window)
        n = grid.get("n")
        n1 = int(grid.get("n1", n if n is not None else 41))
        n2 = int(grid.get("n2", n if n is not None else n1))
        z = tuple(float(x) for x in d.get("z", (0.0, 0.0)))
        if len(z) != 2:
            raise ConfigError("z must have two entries")
        return cls(
            family=d["family"],
            params=params,
            slots=slots,
            variants=dict(d.get("variants") or {}),
            window=window,
            n1=n1,
            n2=n2,
            margin=int(d.get("margin", 3)),
            z=z,
            tolerances=tol,
            output=d.get("output"),
            perturb=perturb,
            solve=d.get("solve"),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            d = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if d is None:
            raise ConfigError(f"config {path} is empty")
        return cls.from_dict(d, path.parent)


def _parse_window(w) -> tuple:
    if isinstance(w, str):
        w = w.split(",")
    try:
        vals = tuple(float(x) for x in w)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad window {w!r}") from exc
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise ConfigError("window must be a,b,c,d with a<b and c<d")
    return vals


# -- instance assembly ----------------------------------------------------------------


def _bump(window, width: float = 0.25) -> F.ScalarField:
    """Gaussian centred in the window; ``width`` is a fraction of the shorter side."""
    a, b, c, d = window
    t1, t2 = F.coordinates(2)
    m1, m2 = 0.5 * (a + b), 0.5 * (c + d)
    w = width * min(b - a, d - c)
    return F.exp(-1.0 * (((t1 - m1) ** 2 + (t2 - m2) ** 2) / (w * w)))


@dataclass
class Assembled:
    spec: C.FamilySpec
    grid: F.Grid2
    grid_backed: bool
    solver_residuals: dict


def _slot_order(tag):
    order = list(C.REQUIRED_SLOTS[tag]) + list(C.OPTIONAL_SLOTS.get(tag, ()))
    # P and R feed the other slot equations
    return sorted(order, key=lambda s: 0 if s in ("P", "R") else 1)


def assemble(cfg: RunConfig) -> Assembled:
    """Resolve slots (closed forms, grid files, solver requests) into a FamilySpec."""
    tag = cfg.family
    window = cfg.window or C.DEFAULT_WINDOWS[tag]
    params = dict(cfg.params)
    params.setdefault("t2_base", window[2])
    spec = C.FamilySpec(tag, params, {}, cfg.variants)
    grid = F.Grid2.from_window(window, cfg.n1, cfg.n2)
    slots: dict[str, F.ScalarField] = {}
    grid_backed = False
    solver_res = {}
    for name in _slot_order(tag):
        if name not in cfg.slots:
            if name in C.REQUIRED_SLOTS[tag]:
                raise ConfigError(f"family {tag} needs slot {name!r}")
            continue
        src = cfg.slots[name]
        cur = C.FamilySpec(tag, spec.params, dict(slots), spec.variants)
        if isinstance(src, dict) and "grid_file" in src:
            gf = F.read_grid(cfg.base_dir / src["grid_file"])
            if (gf.grid.n1, gf.grid.n2) != (grid.n1, grid.n2) or not np.allclose(gf.grid.window, grid.window):
                if cfg.window is None:
                    grid = gf.grid.with_mask(None)
                else:
                    raise ConfigError(f"grid file for slot {name} does not match the run grid")
            slots[name] = gf
            grid_backed = True
        elif isinstance(src, dict) and "solve" in src:
            fld, res = _solve_slot(cur, name, src["solve"] or {}, grid)
            slots[name] = fld
            solver_res[name] = res
            grid_backed = grid_backed or isinstance(fld, F.GridField)
        elif isinstance(src, dict) and "ode" in src:
            o = src["ode"] or {}
            _check_keys(o, {"R0", "step"}, f"slots.{name}.ode")
            c = spec.params["c"] if tag == "TypeAprime" else 0.0
            slots[name] = C.resolve_slot(("ode", float(o.get("R0", 1.0))), spec.params, spec.variants, window, float(o.get("step", 1e-3)), ode_c=c)
        else:
            if isinstance(src, dict):
                src = src["closed_form"]
            slots[name] = C.resolve_slot(src, spec.params, spec.variants, window)
    if cfg.perturb:
        name = cfg.perturb.get("slot")
        if name not in slots:
            raise ConfigError(f"perturb.slot {name!r} is not a slot of {tag}")
        amp = float(cfg.perturb.get("amplitude", 1e-2))
        bump = _bump(window, float(cfg.perturb.get("width", 0.25)))
        if isinstance(slots[name], F.GridField):
            g0 = slots[name].grid
            slots[name] = F.GridField(g0, slots[name].values + amp * bump(g0.nodes()))
        else:
            slots[name] = slots[name] + amp * bump
    return Assembled(spec.with_slots(**slots), grid, grid_backed, solver_res)


def _data_field(src, spec) -> F.ScalarField:
    if isinstance(src, (int, float)):
        return F.Constant(float(src))
    return C.closed_form_auxiliaries(src, spec.params, spec.variants)


def _solve_slot(spec: C.FamilySpec, name: str, req: dict, grid: F.Grid2):
    _check_keys(req, {"data", "data_t2", "R0", "step"}, f"slots.{name}.solve")
    if name == "R":
        c = spec.params["c"] if spec.tag == "TypeAprime" else 0.0
        sol = pde.solve_R_ode(c, float(req.get("R0", 1.0)), grid.window[:2], float(req.get("step", 1e-3)), require_inequality=spec.tag == "TypeAprime")
        return sol.field, sol.residual
    if "data" not in req:
        raise ConfigError(f"slots.{name}.solve needs 'data' (a closed-form name or number)")
    data = _data_field(req["data"], spec)
    data_t2 = _data_field(req["data_t2"], spec) if "data_t2" in req else None
    if name == "P":
        sol = pde.solve_liouville(spec.params["Lambda"], spec.params["eps0"], grid, data, data_t2)
    else:
        lc = C.linear_constraint(spec)
        if lc.unknown != name:
            raise ConfigError(f"slot {name} has no linear equation in family {spec.tag}")
        sol = pde.solve_linear2(lc.problem(grid, data, data_t2, name))
    return sol.field(), sol.residual


# -- verification -------------------------------------------------------------------------


def verify(cfg: RunConfig) -> dict:
    """Build, scan, and check one configuration; returns the report dictionary."""
    asm = assemble(cfg)
    spec, grid = asm.spec, asm.grid
    inst = C.build_family(spec)
    tol = cfg.tolerances
    edge = 2 if asm.grid_backed else 0
    rep = G.residual_scan(inst, grid, cfg.z, cfg.margin, edge)
    claims = [G.claim_le("soliton_residual", rep.sup_norm, tol["residual"])]
    pts, _ = G.scan_points(inst, grid, cfg.z, cfg.margin, edge)
    if not asm.grid_backed:
        cr = float(np.max(np.abs(C.constraint_residual(spec, pts))))
        claims.append(G.claim_le("constraint_residual", cr, tol["constraint"]))
    for name, r in asm.solver_residuals.items():
        claims.append(G.Claim(f"solver_residual_{name}", float(r), 0.0, math.nan, True))
    if inst.orbit_curvature is not None:
        claims.append(G.orbit_curvature_claim(inst, grid, tol["curvature"], cfg.margin, edge))
    checks = G.validate_assumptions(inst, grid, cfg.z, cfg.margin, edge, tol=tol["assumptions"], cc_tol=tol["null"])
    claims.extend(checks.checks)
    rep.claims = claims
    status = 0 if rep.passed else 1
    return {
        "version": REPORT_VERSION,
        "family": spec.tag,
        "params": {k: spec.params[k] for k in C.PARAM_NAMES},
        "variant": dict(spec.variants),
        "grid": {
            "window": list(grid.window),
            "n1": grid.n1,
            "n2": grid.n2,
            "masked": rep.points_masked,
        },
        "residual": {
            "sup": rep.sup_norm,
            "rms": rep.rms,
            "per_component": rep.per_component.tolist(),
        },
        "claims": [c.to_dict() for c in claims],
        "status": status,
    }


def adjudicate(cfg: RunConfig) -> dict:
    """Run ``verify`` for every value of the family's adjudicated switch."""
    switch = C.ADJUDICATED.get(cfg.family)
    if switch is None:
        raise UsageError(f"family {cfg.family} has no variants to adjudicate")
    rows = []
    for value in C.VARIANTS[cfg.family][switch]:
        sub = RunConfig(**{**cfg.__dict__, "variants": {**cfg.variants, switch: value}})
        r = verify(sub)
        rows.append(
            {
                "variant": value,
                "sup": r["residual"]["sup"],
                "claims": r["claims"],
                "pass": r["status"] == 0,
            }
        )
    passing = [r["variant"] for r in rows if r["pass"]]
    return {
        "version": REPORT_VERSION,
        "family": cfg.family,
        "switch": switch,
        "fixed_variants": {k: v for k, v in cfg.variants.items() if k != switch},
        "variants": rows,
        "passing": passing,
        "status": 0 if passing else 1,
    }


# -- JSON with 17 significant digits -----------------------------------------------------------


def _num(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON writer; floats use 17 significant digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(report: dict, out: str | None) -> None:
    text = dumps(report) + "\n"
    if out:
        Path(out).write_text(text)
        log.info("report written to %s", out)
    else:
        sys.stdout.write(text)


# -- argument handling -----------------------------------------------------------------------


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "grid", None):
        cfg.n1 = cfg.n2 = int(args.grid)
    if getattr(args, "window", None):
        cfg.window = _parse_window(args.window)
    if getattr(args, "tolerance", None) is not None:
        cfg.tolerances["residual"] = float(args.tolerance)
    if getattr(args, "out", None):
        cfg.output = args.out
    return cfg


def _apply_variant(cfg: RunConfig, name: str | None, allow_all: bool) -> RunConfig:
    if name is None:
        return cfg
    switch = C.ADJUDICATED.get(cfg.family)
    if switch is None:
        raise UsageError(f"family {cfg.family} has no variants")
    if name == "all":
        if not allow_all:
            raise UsageError("--variant all is only valid for 'adjudicate'")
        return cfg
    if name not in C.VARIANTS[cfg.family][switch]:
        raise UsageError(f"variant must be one of {C.VARIANTS[cfg.family][switch]} or 'all'")
    cfg.variants = {**cfg.variants, switch: name}
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="g2soliton", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, variant=True):
        p.add_argument("--config", required=True, help="YAML run configuration")
        if variant:
            p.add_argument("--variant", help="variant name of the family's printed-formula switch, or 'all'")
        p.add_argument("--grid", type=int, help="nodes per axis")
        p.add_argument("--window", help="t1_min,t1_max,t2_min,t2_max")
        p.add_argument("--out", help="output path (report JSON or grid file)")
        p.add_argument("--tolerance", type=float, help="soliton-residual tolerance")

    common(sub.add_parser("verify", help="verify one family instance"))
    common(sub.add_parser("adjudicate", help="compare the printed-formula variants"))
    common(sub.add_parser("solve", help="solve a slot equation and write the grid"), variant=False)
    lf = sub.add_parser("list-families", help="print family tags, constraints and claims")
    lf.add_argument("--json", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s %(message)s")
    if args.command == "list-families":
        fams = C.list_families()
        if args.json:
            sys.stdout.write(dumps(fams) + "\n")
        else:
            for f in fams:
                print(f"{f['tag']}\n  slots: {', '.join(f['slots'])}\n  constraints: {f['constraints']}\n  claims: {f['claims']}")
                if f["variants"]:
                    print("  variants: " + "; ".join(f"{k} in {v}" for k, v in f["variants"].items()))
        return 0
    try:
        cfg = _apply_overrides(RunConfig.load(args.config), args)
        if args.command == "verify":
            cfg = _apply_variant(cfg, args.variant, allow_all=False)
            report = verify(cfg)
        elif args.command == "adjudicate":
            cfg = _apply_variant(cfg, args.variant or "all", allow_all=True)
            if args.variant not in (None, "all"):
                raise UsageError("adjudicate runs every variant; use --variant all")
            report = adjudicate(cfg)
        else:
            return _run_solve(cfg)
    except (ConfigError, UsageError, C.ParameterError, C.SlotError, KeyError, F.OutOfDomainError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    _emit(report, cfg.output)
    for c in report.get("claims", []):
        if not c["pass"]:
            log.warning("claim failed: %s (measured %g, tolerance %g)", c["name"], c["measured"], c["tolerance"])
    return int(report["status"])


def _run_solve(cfg: RunConfig) -> int:
    """Solve the slot named in ``solve: {slot: NAME}`` and write it in the grid layout."""
    req = dict(cfg.solve or {})
    _check_keys(req, {"slot"}, "solve")
    name = req.get("slot")
    if name is None:
        raise ConfigError("solve needs 'slot'")
    if not cfg.output:
        raise UsageError("solve needs --out or 'output'")
    asm = assemble(cfg)
    fld = asm.spec.slots[name]
    grid = asm.grid
    if isinstance(fld, F.GridField):
        values = fld.values
    else:
        values = fld(grid.nodes())
    F.write_grid(cfg.output, grid, values)
    res = asm.solver_residuals.get(name)
    print(dumps({"slot": name, "output": str(cfg.output), "residual": res if res is not None else "n/a"}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
