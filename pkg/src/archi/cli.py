"""Command-line front end.

Exit codes: 0 success, 1 a verification or numerical check failed, 2 bad
usage or configuration.  Every option can also come from an INI file given
with ``--config``; flags win over file values.  Example file::

    [run]
    tiling = trihexagonal
    lambda_max = 60

    [potential]
    kind = piecewise
    a = 1
    breakpoints = 0.25, 0.75
    values = 1, -2, 1

    [tolerances]
    residual = 1e-9

    [output]
    format = json
    path = th.json
"""
from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _output, chardet, dispersion, potentials, spectrum
from .hill import SolverConfig, SolverError, basis_arrays, solve_basis
from .tiling import Quasimomentum, Tiling

COMMANDS = ("basis", "verify-char", "dispersion", "bands", "point-spectrum", "surface",
            "union-check", "identity-check")
DEFAULT_FORMAT = {"basis": "csv", "verify-char": "json", "dispersion": "json", "bands": "csv",
                  "point-spectrum": "csv", "surface": "csv", "union-check": "json",
                  "identity-check": "json"}


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    """Raised after output is written when a verification did not pass."""


@dataclass
class RunConfig:
    command: str
    tiling: Optional[Tiling] = None
    potential: dict = field(default_factory=dict)
    lambda_max: float = 60.0
    lambda_range: Optional[tuple] = None
    lambda_value: Optional[float] = None
    theta: tuple = (0.0, 0.0)
    theta_grid: Optional[int] = None
    lambda_grid: int = spectrum.LAMBDA_GRID
    seed: int = 0
    trials: int = 1000
    method: str = "auto"
    step_count: int = 4096
    tolerances: dict = field(default_factory=lambda: {"wronskian": 1e-8, "band_edge": 1e-8,
                                                      "residual": 1e-9})
    output: dict = field(default_factory=lambda: {"format": None, "path": None})

    def validate(self):
        if self.theta_grid is None:
            self.theta_grid = 101 if self.command == "identity-check" else 41
        if self.theta_grid < 1 or self.lambda_grid < 2:
            raise UsageError("theta grid must be >= 1 and lambda grid >= 2")
        if any(not v > 0 for v in self.tolerances.values()):
            raise UsageError("tolerances must be positive")
        if not self.lambda_max > 0:
            raise UsageError("lambda-max must be positive")
        fmt = self.output["format"] or DEFAULT_FORMAT[self.command]
        if fmt not in ("csv", "json", "svg"):
            raise UsageError(f"unknown format {fmt!r}")
        self.output["format"] = fmt
        path = self.output["path"]
        if path and not os.access(os.path.dirname(os.path.abspath(path)), os.W_OK):
            raise UsageError(f"cannot write to {path}")


def _floats(text) -> list[float]:
    if text is None:
        return []
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    text = str(text).strip()
    if text.startswith("@"):
        return [float(t) for t in np.loadtxt(text[1:], ndmin=1)]
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _lambda_range(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise UsageError(f"--lambda expects lo:hi:n, got {text!r}") from exc
    if n < 1 or (n > 1 and not hi > lo):
        raise UsageError("--lambda needs hi > lo and n >= 1")
    return lo, hi, n


def build_potential(spec: dict, require_a: bool) -> potentials.Potential:
    kind = (spec.get("kind") or "zero").lower()
    a = spec.get("a")
    if kind == "graphene":
        return potentials.graphene(float(a) if a is not None else potentials.GRAPHENE_BOND,
                                   float(spec["d"]) if spec.get("d") is not None else None)
    if a is None:
        if require_a:
            raise UsageError(f"--a is required for the {kind} potential")
        a = 1.0
    a = float(a)
    try:
        if kind == "zero":
            return potentials.zero(a)
        if kind == "constant":
            vals = _floats(spec.get("values")) or [0.0]
            return potentials.constant(vals[0], a)
        if kind in ("piecewise", "piecewise-constant"):
            inner = _floats(spec.get("breakpoints"))
            return potentials.piecewise_constant([0.0, *inner, a], _floats(spec.get("values")), a)
        if kind == "sampled":
            return potentials.sampled(_floats(spec.get("samples")), a,
                                      int(spec.get("order") or 3))
    except potentials.PotentialError as exc:
        raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown potential kind {kind!r}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="archi", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config")
        s.add_argument("--tiling")
        s.add_argument("--q", dest="kind")
        s.add_argument("--a", type=float)
        s.add_argument("--d", type=float)
        s.add_argument("--values")
        s.add_argument("--breakpoints")
        s.add_argument("--samples")
        s.add_argument("--order", type=int)
        s.add_argument("--lambda-max", type=float)
        s.add_argument("--lambda", dest="lam")
        s.add_argument("--theta1", type=float)
        s.add_argument("--theta2", type=float)
        s.add_argument("--theta-grid", type=int)
        s.add_argument("--lambda-grid", type=int)
        s.add_argument("--method")
        s.add_argument("--steps", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--tol", type=float, help="main tolerance of the command")
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "json", "svg"))
    return p


def _read_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return cp


def make_config(ns: argparse.Namespace) -> RunConfig:
    cp = _read_config(ns.config) if ns.config else configparser.ConfigParser()

    def pick(flag, section, key, conv=str):
        if flag is not None:
            return flag
        if cp.has_option(section, key):
            try:
                return conv(cp.get(section, key))
            except ValueError as exc:
                raise UsageError(f"bad value for [{section}] {key}") from exc
        return None

    cfg = RunConfig(ns.command)
    tiling = pick(ns.tiling, "run", "tiling")
    if tiling is not None:
        try:
            cfg.tiling = Tiling.from_name(tiling)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    cfg.potential = {
        "kind": pick(ns.kind, "potential", "kind"),
        "a": pick(ns.a, "potential", "a", float),
        "d": pick(ns.d, "potential", "d", float),
        "values": pick(ns.values, "potential", "values"),
        "breakpoints": pick(ns.breakpoints, "potential", "breakpoints"),
        "samples": pick(ns.samples, "potential", "samples"),
        "order": pick(ns.order, "potential", "order", int),
    }
    for attr, flag, key, conv in (("lambda_max", ns.lambda_max, "lambda_max", float),
                                  ("theta_grid", ns.theta_grid, "theta_grid", int),
                                  ("lambda_grid", ns.lambda_grid, "lambda_grid", int),
                                  ("seed", ns.seed, "seed", int),
                                  ("trials", ns.trials, "trials", int),
                                  ("method", ns.method, "method", str),
                                  ("step_count", ns.steps, "steps", int)):
        v = pick(flag, "run", key, conv)
        if v is not None:
            setattr(cfg, attr, v)
    lam = pick(ns.lam, "run", "lambda")
    if lam is not None:
        if ":" in str(lam):
            cfg.lambda_range = _lambda_range(str(lam))
        else:
            try:
                cfg.lambda_value = float(lam)
            except ValueError as exc:
                raise UsageError(f"bad --lambda {lam!r}") from exc
    cfg.theta = (pick(ns.theta1, "run", "theta1", float) or 0.0,
                 pick(ns.theta2, "run", "theta2", float) or 0.0)
    for key in cfg.tolerances:
        v = pick(None, "tolerances", key, float)
        if v is not None:
            cfg.tolerances[key] = v
    if ns.tol is not None:
        key = {"basis": "wronskian", "union-check": "band_edge"}.get(ns.command, "residual")
        cfg.tolerances[key] = ns.tol
    cfg.output = {"format": pick(ns.format, "output", "format"),
                  "path": pick(ns.out, "output", "path")}
    cfg.validate()
    return cfg


def _need_tiling(cfg: RunConfig) -> Tiling:
    if cfg.tiling is None:
        raise UsageError("--tiling is required")
    return cfg.tiling


def _solver(cfg: RunConfig) -> SolverConfig:
    try:
        return SolverConfig(cfg.method, cfg.step_count)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ARCHI_THREADS", "1")))
    except ValueError:
        return 1


# -- commands ----------------------------------------------------------------

def cmd_basis(cfg: RunConfig):
    q = build_potential(cfg.potential, require_a=True)
    lo, hi, n = cfg.lambda_range or (0.0, cfg.lambda_max, 50)
    lam = np.linspace(lo, hi, n)
    c, s, cp, sp = basis_arrays(q, lam, _solver(cfg))
    w = np.abs(c * sp - s * cp - 1).astype(float)
    rows = list(zip(lam, *(np.asarray(v, float) for v in (c, s, cp, sp)), w))
    header = ["lambda", "C", "S", "Cp", "Sp", "wronskian_residual"]
    ok = bool(np.all(w <= cfg.tolerances["wronskian"] * np.maximum(1.0, np.abs(c * sp).astype(float))))
    if cfg.output["format"] == "json":
        text = _output.to_json({"potential": repr(q), "rows": [dict(zip(header, r)) for r in rows]})
    else:
        text = _output.to_csv(header, rows)
    return text, ok


def cmd_verify_char(cfg: RunConfig):
    tiling = _need_tiling(cfg)
    if cfg.trials < 1:
        raise UsageError("--trials must be at least 1")
    rep = chardet.verify_closed_form(tiling, cfg.trials, cfg.seed,
                                     tol=cfg.tolerances["residual"], n_jobs=_threads())
    return _output.to_json(rep.to_dict()), rep.status != "failed"


def cmd_dispersion(cfg: RunConfig):
    tiling = _need_tiling(cfg)
    q = build_potential(cfg.potential, require_a=False)
    if cfg.lambda_value is None:
        raise UsageError("--lambda L is required")
    basis = solve_basis(q, cfg.lambda_value, _solver(cfg))
    rel = dispersion.ReducedRelation(tiling, float(basis.s), float(basis.sp), cfg.theta)
    out = rel.breakdown()
    out.update({"lambda": cfg.lambda_value, "potential": repr(q),
                "even": potentials.check_even(q),
                "ac_member": dispersion.ac_membership(tiling, float(basis.sp))})
    if tiling in chardet.REDUCTION_SCALE:
        cf = chardet.closed_form(tiling, [basis] * tiling.edge_count, rel.theta)
        out["closed_form"] = cf
    return _output.to_json(out), True


def _spectral_inputs(cfg):
    tiling = _need_tiling(cfg)
    q = build_potential(cfg.potential, require_a=False)
    if not potentials.check_even(q):
        raise UsageError("band computations need an even potential")
    return tiling, q, _solver(cfg)


def cmd_bands(cfg: RunConfig):
    tiling, q, solver = _spectral_inputs(cfg)
    rep = spectrum.spectrum_report(tiling, q, cfg.lambda_max, solver, cfg.lambda_grid)
    fmt = cfg.output["format"]
    if fmt == "json":
        return _output.to_json(rep.to_dict()), True
    if fmt == "svg":
        return _output.svg_bands(rep.ac_bands, [p.lam for p in rep.point_eigenvalues],
                                 rep.grid["lambda_min"], cfg.lambda_max,
                                 f"{tiling.slug} bands, q = {q.kind}"), True
    rows = [(i, b.lo, b.hi, b.width) for i, b in enumerate(rep.ac_bands, 1)]
    return _output.to_csv(["band", "lo", "hi", "width"], rows), True


def cmd_point_spectrum(cfg: RunConfig):
    tiling, q, solver = _spectral_inputs(cfg)
    pts = spectrum.point_spectrum(tiling, q, cfg.lambda_max, solver, cfg.lambda_grid)
    if cfg.output["format"] == "json":
        return _output.to_json([{"lambda": p.lam, "tag": p.tag, "residual": p.residual}
                                for p in pts]), True
    if cfg.output["format"] == "svg":
        lo = spectrum.lambda_floor(q)
        return _output.svg_bands([], [p.lam for p in pts], lo, cfg.lambda_max,
                                 f"{tiling.slug} flat bands"), True
    return _output.to_csv(["lambda", "tag", "residual"],
                          [(p.lam, p.tag, p.residual) for p in pts]), True


def cmd_surface(cfg: RunConfig):
    tiling, q, solver = _spectral_inputs(cfg)
    n = cfg.theta_grid
    thetas = spectrum.theta_grid(n)
    roots = [spectrum.band_functions(tiling, q, th, cfg.lambda_max, solver, cfg.lambda_grid)
             for th in thetas]
    k = max((r.size for r in roots), default=0)
    if cfg.output["format"] == "svg":
        cube = np.full((n, n, k), np.nan)
        for idx, r in enumerate(roots):
            cube[idx // n, idx % n, :r.size] = r
        return _output.svg_surface(cube, f"{tiling.slug} band functions"), True
    rows = [(th[0], th[1], j + 1, x) for th, r in zip(thetas, roots) for j, x in enumerate(r)]
    if cfg.output["format"] == "json":
        return _output.to_json([dict(zip(("theta1", "theta2", "branch", "lambda"), r))
                                for r in rows]), True
    return _output.to_csv(["theta1", "theta2", "branch", "lambda"], rows), True


def cmd_union_check(cfg: RunConfig):
    tiling, q, solver = _spectral_inputs(cfg)
    rep = spectrum.union_check(tiling, q, cfg.lambda_max, cfg.theta_grid, solver,
                               cfg.lambda_grid, tol=cfg.tolerances["band_edge"])
    return _output.to_json(rep.to_dict()), rep.passed


def cmd_identity_check(cfg: RunConfig):
    n = cfg.theta_grid
    axis = np.linspace(-math.pi, math.pi, n)
    worst, where = 0.0, (0.0, 0.0)
    for t1 in axis:
        for t2 in axis:
            vals = dispersion.triple_cos_identity((t1, t2))
            spread = max(vals) - min(vals)
            if spread > worst:
                worst, where = spread, (t1, t2)
    tol = min(cfg.tolerances["residual"], 1e-12)
    return _output.to_json({"grid": n, "max_spread": worst, "worst_theta": list(where),
                            "tolerance": tol, "passed": worst <= tol}), worst <= tol


_DISPATCH = {"basis": cmd_basis, "verify-char": cmd_verify_char, "dispersion": cmd_dispersion,
             "bands": cmd_bands, "point-spectrum": cmd_point_spectrum, "surface": cmd_surface,
             "union-check": cmd_union_check, "identity-check": cmd_identity_check}


def main(argv=None) -> int:
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(ns)
        text, ok = _DISPATCH[cfg.command](cfg)
    except UsageError as exc:
        print(f"archi {ns.command}: {exc}", file=sys.stderr)
        return 2
    except (SolverError, FloatingPointError) as exc:
        print(f"archi {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    path = cfg.output["path"]
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"archi {ns.command}: check failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
