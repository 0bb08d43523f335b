"""Scenario runner: load a JSON config, run checks, write reports and plot data.

Exit codes: 0 every check passed, 1 some check failed, 2 invalid config or a
violated precondition (non-convex F where convexity is needed, H_F <= 0 for
the Heintze-Karcher check, degenerate chart).
"""

import argparse
import csv
import json
import math
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from .anisotropy import AnisotropyError, ConvexityError, anisotropy_from_config, check_convexity, require_convex, wulff_point
from .flow import run_flow, trace_to_dict, write_trace_csv
from .hypersurface import DegenerateChartError, WulffHomothety, make_grid, surface_from_config, umbilicity_defect, wulff_fit
from .integrals import (
    PreconditionError,
    garding_check,
    hk_terms,
    identity_residuals,
    minkowski_residual,
    write_integrands_csv,
)
from .sphere import sample_sphere

CHECKS = ("convexity", "wulff", "minkowski", "hk", "identities", "garding", "flow", "umbilic")
DEFAULT_TOLERANCES = {
    "convexity": 0.0,
    "wulff": 1e-8,
    "minkowski": 1e-8,
    "hk": 1e-8,
    "identities": 1e-5,
    "garding": 1e-10,
    "flow": 1e-4,
    "umbilic": 1e-6,
}
NEEDS_CONVEX = {"wulff", "hk", "flow", "umbilic"}
NEEDS_SURFACE = {"minkowski", "hk", "identities", "garding", "flow", "umbilic"}
CONFIG_KEYS = {"anisotropy", "surface", "resolution", "checks", "tolerances", "flow", "wulff",
               "convexity_resolution", "output_dir"}
DEFAULT_FLOW = {"dt": 0.05, "t_max": 0.9}
DEFAULT_WULFF_SAMPLES = {1: 256, 2: 32}

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class ConfigError(ValueError):
    pass


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0+local"


def load_config(path, checks=None):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if checks is not None and isinstance(cfg, dict):
        cfg["checks"] = list(checks)
    return validate_config(cfg)


def validate_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "anisotropy" not in cfg:
        raise ConfigError("config needs an 'anisotropy' entry")
    checks = cfg.get("checks", "all")
    if checks == "all":
        checks = list(CHECKS)
    if not isinstance(checks, list) or not checks:
        raise ConfigError("'checks' must be a non-empty list or \"all\"")
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}; choose from {list(CHECKS)}")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in cfg.get("tolerances", {}).items():
        if k not in CHECKS:
            raise ConfigError(f"tolerance given for unknown check {k!r}")
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0 or (v == 0 and k != "convexity"):
            raise ConfigError(f"tolerance for {k!r} must be positive, got {v!r}")
        tol[k] = float(v)
    if NEEDS_SURFACE & set(checks) and "surface" not in cfg:
        raise ConfigError(f"checks {sorted(NEEDS_SURFACE & set(checks))} need a 'surface' entry")
    flow = dict(DEFAULT_FLOW, **cfg.get("flow", {}))
    if not (flow["dt"] > 0 and flow["t_max"] >= 0):
        raise ConfigError("flow needs dt > 0 and t_max >= 0")
    out = dict(cfg)
    out["checks"] = list(dict.fromkeys(checks))
    out["tolerances"] = tol
    out["flow"] = flow
    return out


def _float(x):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _result(name, passed, tolerance, **values):
    return {"name": name, "pass": bool(passed), "tolerance": tolerance,
            "values": {k: (_float(v) if isinstance(v, (float, np.floating)) else v) for k, v in values.items()}}


def emit_wulff(F, path, resolution=None):
    """Write samples of the Wulff shape as rows x,y[,z],nx,ny[,nz]; the normal at phi(w) is w."""
    require_convex(F)
    if resolution is None:
        resolution = DEFAULT_WULFF_SAMPLES[F.dimension]
    w = sample_sphere(F.ambient_dim, resolution)
    x = wulff_point(F, w)
    axes = "xyz"[: F.ambient_dim]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(list(axes) + [f"n{a}" for a in axes])
        for p, n in zip(x, w):
            out.writerow([repr(float(v)) for v in (*p, *n)])
    return x, w


class Scenario:
    """Parsed config plus the lazily built objects the checks share."""

    def __init__(self, cfg, output_dir):
        self.cfg = cfg
        self.output_dir = Path(output_dir)
        try:
            self.F = anisotropy_from_config(cfg["anisotropy"])
            self.surface = surface_from_config(cfg["surface"], self.F) if "surface" in cfg else None
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed anisotropy/surface entry: {exc!r}") from exc
        if self.surface is not None and self.surface.dimension != self.F.dimension:
            raise ConfigError("surface and anisotropy dimensions differ")
        self.tol = cfg["tolerances"]
        self.convexity_resolution = int(cfg.get("convexity_resolution", 64))
        self._grid = None

    @property
    def grid(self):
        if self._grid is None:
            self._grid = make_grid(self.surface, self.cfg.get("resolution"))
        return self._grid

    def run(self, checks):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if NEEDS_CONVEX & set(checks):
            require_convex(self.F, self.convexity_resolution)
        results = [getattr(self, f"check_{name}")() for name in checks]
        if self.surface is not None and {"minkowski", "identities"} & set(checks):
            write_integrands_csv(self.surface, self.F, self.grid, self.output_dir / "integrands.csv")
        return {
            "tool": "wulffkit",
            "version": tool_version(),
            "config": self.cfg,
            "checks": results,
            "pass": all(r["pass"] for r in results),
        }

    def check_convexity(self):
        cert = check_convexity(self.F, self.convexity_resolution)
        tol = self.tol["convexity"]
        return _result("convexity", cert.min_eigenvalue_found > tol, tol,
                       min_eigenvalue=cert.min_eigenvalue_found,
                       argmin_point=[float(v) for v in cert.argmin_point],
                       grid_resolution=cert.grid_resolution)

    def check_wulff(self):
        """The Wulff shape itself must be anisotropically umbilic and fit itself."""
        tol = self.tol["wulff"]
        emit_wulff(self.F, self.output_dir / "wulff.csv", self.cfg.get("wulff", {}).get("resolution"))
        W = WulffHomothety(dimension=self.F.dimension, F=self.F, scale=1.0)
        grid = make_grid(W, self.cfg.get("resolution"))
        defect = umbilicity_defect(W, self.F, grid)
        fit = wulff_fit(W, self.F, grid)
        ok = defect < tol and fit.rms_residual < tol and abs(fit.scale - 1.0) < tol
        return _result("wulff", ok, tol, umbilicity_defect=defect, fit_scale=fit.scale,
                       fit_residual=fit.rms_residual)

    def check_minkowski(self):
        tol = self.tol["minkowski"]
        res = [minkowski_residual(self.surface, self.F, self.grid, r) for r in range(self.surface.dimension)]
        worst = max(m[1] for m in res)
        return _result("minkowski", worst < tol, tol, raw=[_float(m[0]) for m in res],
                       normalized=[_float(m[1]) for m in res])

    def check_hk(self):
        tol = self.tol["hk"]
        hk = hk_terms(self.surface, self.F, self.grid)
        return _result("hk", hk.gap >= -tol * hk.hk_integral, tol, gap=hk.gap, hk_integral=hk.hk_integral,
                       volume=hk.volume, min_hf=hk.min_hf)

    def check_identities(self):
        tol = self.tol["identities"]
        ids = identity_residuals(self.surface, self.F, self.grid)
        norm = [ids.scalar_normalized, ids.vector_normalized, ids.support_normalized]
        return _result("identities", max(norm) < tol, tol, scalar=ids.scalar_normalized,
                       vector=ids.vector_normalized, support=ids.support_normalized)

    def check_garding(self):
        tol = self.tol["garding"]
        g = garding_check(self.surface, self.F, self.grid, tol)
        return _result("garding", g.passed, tol, worst_margin=g.worst_margin, nodes_checked=g.nodes_checked)

    def check_flow(self):
        tol = self.tol["flow"]
        fc = self.cfg["flow"]
        trace = run_flow(self.surface, self.F, fc["dt"], fc["t_max"], self.grid)
        write_trace_csv(trace, self.output_dir / "trace.csv")
        if not trace.samples:
            raise PreconditionError(f"foliation is invalid at t = 0 ({trace.reason})")
        an, fd, bound = (trace.column(c) for c in ("dQ_analytic", "dQ_fd", "dQ_bound"))
        fd_err = float(np.max(np.abs(fd - an) / np.abs(an)))
        slack = float(np.max((an - bound) / np.abs(bound)))
        ok = trace.q_strictly_decreasing() and fd_err <= tol and slack <= tol
        return _result("flow", ok, tol, samples=len(trace.samples), termination=trace.reason,
                       last_t=trace.samples[-1].t, fd_relative_error=fd_err, bound_slack=slack,
                       q_strictly_decreasing=trace.q_strictly_decreasing())

    def check_umbilic(self):
        """Umbilicity must agree with being a Wulff homothety (Wulff fit residual)."""
        tol = self.tol["umbilic"]
        defect = umbilicity_defect(self.surface, self.F, self.grid)
        fit = wulff_fit(self.surface, self.F, self.grid)
        umbilic = defect < tol
        wulff = fit.rms_residual < tol
        return _result("umbilic", umbilic == wulff, tol, umbilicity_defect=defect,
                       fit_center=[float(c) for c in fit.center], fit_scale=fit.scale,
                       fit_residual=fit.rms_residual, umbilic=umbilic, wulff_homothety=wulff)


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_scenario(config_path, checks=None, output_dir=None):
    """Run a scenario file; returns (exit code, report or None)."""
    cfg = load_config(config_path, checks)
    out = Path(output_dir if output_dir is not None else cfg.get("output_dir", "."))
    scen = Scenario(cfg, out)
    report = scen.run(cfg["checks"])
    write_report(report, out / "report.json")
    return (EXIT_PASS if report["pass"] else EXIT_FAIL), report


def build_parser():
    p = argparse.ArgumentParser(prog="wulffkit", description="Anisotropic geometry checks from JSON scenarios.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("check", "run the config's check list"),
        ("wulff", "write Wulff shape samples (wulff.csv) and check the Wulff shape"),
        ("flow", "run the parallel foliation and write trace.csv"),
        ("convexity", "certify convexity of the anisotropy"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="scenario JSON file")
        sp.add_argument("--output-dir", default=None, help="overrides the config's output_dir")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    checks = None if args.command == "check" else [args.command]
    try:
        code, report = run_scenario(args.config, checks, args.output_dir)
    except (ConfigError, ConvexityError, PreconditionError, AnisotropyError, DegenerateChartError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for r in report["checks"]:
        print(f"{r['name']:<11} {'PASS' if r['pass'] else 'FAIL'}")
    print("overall", "PASS" if report["pass"] else "FAIL")
    return code


if __name__ == "__main__":
    sys.exit(main())
