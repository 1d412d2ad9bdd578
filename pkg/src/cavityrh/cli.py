"""Command line driver: mapping diagnostics, solves, sweeps and residuals.

Exit codes: 0 success, 2 config or geometry error, 3 solver failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .annulus_map import compose
from .annulus_map import diagnostics as annulus_diagnostics
from .csm_map import MappingError
from .csm_map import diagnostics as csm_diagnostics
from .field_eval import FieldSample
from .geometry import (PRESET_DEPTHS, PRESET_LENGTH_SCALE, CavitySpec, GeometryError, MaterialParams, axisymmetric,
                       load_csv, verruijt_circle, composite_ellipse)
from .pipeline import Solution, solve
from .rh_solver import SolverConfig, SolverError

SCHEMA = "cavityrh/1"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

FIELD_COLUMNS = ["theta_deg", "rho", "x", "y", "sigma_rho", "sigma_theta", "tau_rhotheta",
                 "sigma_x", "sigma_y", "tau_xy", "u", "v", "filtered"]

log = logging.getLogger("cavityrh")


class ConfigError(ValueError):
    pass


_MATERIAL_KEYS = {"E_mpa", "nu", "gamma_kpa_per_m", "k0", "plane_mode"}
_GEOMETRY_KEYS = {"preset", "csv", "zc_m", "N", "k2", "a_m", "alpha", "b_m", "h"}
_SOLVER_KEYS = {"N0", "M", "eps", "rel_eps", "max_iters"}
_GRID_KEYS = {"theta_points", "rings"}
_TOP_KEYS = {"material", "geometry", "solver", "x0", "outputs", "filter", "grids"}


@dataclass
class RunConfig:
    material: MaterialParams
    geometry: dict
    solver: SolverConfig
    x0: float
    outputs: str
    filter: str
    theta_points: int
    rings: List[float]
    raw: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def echo(self) -> dict:
        return self.raw

    def cavity(self, x0: Optional[float] = None) -> CavitySpec:
        return build_geometry(self.geometry, self.x0 if x0 is None else x0, self.base_dir)


def _check_keys(section: dict, allowed: set, name: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{name}: expected an object")
    extra = sorted(set(section) - allowed)
    if extra:
        raise ConfigError(f"{name}.{extra[0]}: unknown key")


def _num(section: dict, key: str, name: str, default, kind=float):
    val = section.get(key, default)
    try:
        return kind(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key}: expected {kind.__name__}, got {val!r}")


def parse_config(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    _check_keys(raw, _TOP_KEYS, "config")
    m = raw.get("material", {})
    _check_keys(m, _MATERIAL_KEYS, "material")
    try:
        mat = MaterialParams(_num(m, "E_mpa", "material", 20.0), _num(m, "nu", "material", 0.3),
                             _num(m, "gamma_kpa_per_m", "material", 20.0),
                             _num(m, "k0", "material", 0.8), m.get("plane_mode", "plane_strain"))
    except GeometryError as e:
        raise ConfigError(f"material: {e}")
    g = raw.get("geometry", {"preset": "case1"})
    _check_keys(g, _GEOMETRY_KEYS, "geometry")
    if ("preset" in g) == ("csv" in g):
        raise ConfigError("geometry: give exactly one of 'preset' or 'csv'")
    s = raw.get("solver", {})
    _check_keys(s, _SOLVER_KEYS, "solver")
    x0 = _num(raw, "x0", "config", 1.0)
    try:
        cfg = SolverConfig(_num(s, "N0", "solver", 80, int), _num(s, "M", "solver", 360, int),
                           _num(s, "eps", "solver", 1e-16), _num(s, "rel_eps", "solver", 1e-14),
                           _num(s, "max_iters", "solver", 100, int), x0)
    except ValueError as e:
        raise ConfigError(f"solver: {e}")
    filt = raw.get("filter", "on")
    if filt not in ("on", "off", "both"):
        raise ConfigError("filter: expected 'on', 'off' or 'both'")
    gr = raw.get("grids", {})
    _check_keys(gr, _GRID_KEYS, "grids")
    nth = _num(gr, "theta_points", "grids", 720, int)
    if nth < 8:
        raise ConfigError("grids.theta_points: need at least 8")
    rings = [float(r) for r in gr.get("rings", [])]
    return RunConfig(mat, g, cfg, x0, str(raw.get("outputs", "out")), filt, nth, rings,
                     raw, base_dir)


def build_geometry(g: dict, x0: float, base_dir: Path) -> CavitySpec:
    N = int(g.get("N", 30))
    if "csv" in g:
        path = Path(g["csv"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"geometry.csv: file not found: {path}")
        zc = g.get("zc_m")
        return load_csv(path, x0=x0, zc=None if zc is None else complex(*zc))
    preset = str(g["preset"]).lower()
    if preset in PRESET_DEPTHS:
        return composite_ellipse(PRESET_DEPTHS[preset], N=N, x0=x0, label=preset,
                                 length_scale=PRESET_LENGTH_SCALE)
    if preset == "axisymmetric":
        try:
            return axisymmetric(float(g["a_m"]), float(g["alpha"]), g.get("b_m", []), N=N, x0=x0,
                                label=preset)
        except KeyError as e:
            raise ConfigError(f"geometry.{e.args[0]}: required for axisymmetric")
    if preset == "circle":
        return verruijt_circle(float(g.get("h", 4.0)), N=N, x0=x0)
    raise ConfigError(f"geometry.preset: unknown preset {preset!r}")


def default_k2(g: dict) -> float:
    if "k2" in g:
        return float(g["k2"])
    return 0.8 if str(g.get("preset", "")).lower() in ("axisymmetric", "circle") else 1.2


# -- output helpers -------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _header(fh, cfg: RunConfig, extra: Optional[dict] = None) -> None:
    fh.write(f"# schema: {SCHEMA}\n")
    fh.write("# config: " + json.dumps(cfg.echo(), sort_keys=True) + "\n")
    if extra:
        fh.write("# meta: " + json.dumps(extra, sort_keys=True) + "\n")


def _rows(fs: FieldSample):
    th = np.degrees(fs.theta)
    for i in range(len(fs.zeta)):
        yield [th[i], fs.rho[i], fs.z[i].real, fs.z[i].imag, fs.sigma_rho[i], fs.sigma_theta[i],
               fs.tau_rhotheta[i], fs.sigma_x[i], fs.sigma_y[i], fs.tau_xy[i], fs.u[i], fs.v[i],
               fs.filtered]


def write_fields(path: Path, cfg: RunConfig, samples: List[FieldSample], prefix=None) -> None:
    with path.open("w", newline="") as fh:
        _header(fh, cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((list(prefix[0]) if prefix else []) + FIELD_COLUMNS)
        for j, fs in enumerate(samples):
            lead = list(prefix[1][j]) if prefix else []
            for row in _rows(fs):
                w.writerow([_fmt(v) for v in lead + row])


def write_json(path: Path, cfg: RunConfig, payload: dict) -> None:
    doc = {"schema": SCHEMA, "version": __version__, "config": cfg.echo()}
    doc.update(payload)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def theta_grid(n: int) -> np.ndarray:
    """Cell-centred angles; never lands on the image of infinity."""
    return (np.arange(n) + 0.5) * 2 * np.pi / n


def filter_flags(mode: str) -> List[bool]:
    return {"on": [True], "off": [False], "both": [True, False]}[mode]


# -- commands ---------------------------------------------------------------------------

def cmd_map(cfg: RunConfig, out: Path) -> int:
    spec = cfg.cavity()
    cmap = compose(spec, default_k2(cfg.geometry))
    diag = {"csm": csm_diagnostics(cmap.fwd, cmap.bwd, spec),
            "annulus": annulus_diagnostics(cmap)}
    nth = cfg.theta_points
    th = theta_grid(nth)
    rhos = np.linspace(cmap.alpha, 1.0, 11)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "mapping.json", cfg, diag)
    with (out / "annulus_grid.csv").open("w", newline="") as fh:
        _header(fh, cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho", "theta_deg", "x", "y"])
        for r in rhos:
            z = cmap.z_of_zeta(r * np.exp(1j * th))
            for t, zz in zip(th, z):
                w.writerow([_fmt(r), _fmt(np.degrees(t)), _fmt(zz.real), _fmt(zz.imag)])
    xs = np.linspace(cmap.spec.T1.real, cmap.spec.T2.real, 401) + 0j
    zeta = cmap.zeta_of_z(xs)
    with (out / "surface_image.csv").open("w", newline="") as fh:
        _header(fh, cfg)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "rho", "theta_deg", "deviation"])
        for x, zt in zip(xs, zeta):
            w.writerow([_fmt(x.real), _fmt(abs(zt)), _fmt(np.degrees(np.angle(zt))),
                        _fmt(abs(zt) - 1)])
    print(f"validity metric {cmap.validity_metric:.4g}; outputs in {out}")
    return EXIT_OK


def _solve_report(sol: Solution) -> dict:
    return {"solver": sol.state.report(), "equilibrium": sol.equilibrium(),
            "mapping": annulus_diagnostics(sol.cmap), "W": sol.W}


def cmd_solve(cfg: RunConfig, out: Path, compare_filter: bool = False) -> int:
    spec = cfg.cavity()
    flags = [True, False] if compare_filter else filter_flags(cfg.filter)
    try:
        sol = solve(spec, cfg.material, cfg.solver, default_k2(cfg.geometry))
    except SolverError as e:
        out.mkdir(parents=True, exist_ok=True)
        payload = {"error": str(e)}
        if e.state is not None:
            payload["solver"] = e.state.report()
        write_json(out / "solver_report.json", cfg, payload)
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    for r in cfg.rings:
        if not (sol.alpha <= r <= 1.0):
            raise ConfigError(f"grids.rings: radius {r} outside [{sol.alpha:.6g}, 1]")
    out.mkdir(parents=True, exist_ok=True)
    th = theta_grid(cfg.theta_points)
    write_fields(out / "surface_trace.csv", cfg, [sol.surface(th, f) for f in flags])
    write_fields(out / "cavity_trace.csv", cfg, [sol.cavity(th, f) for f in flags])
    for r in cfg.rings:
        write_fields(out / f"ring_{r:.6g}.csv", cfg, [sol.ring(r, th, f) for f in flags])
    write_json(out / "solver_report.json", cfg, _solve_report(sol))
    print(f"converged in {sol.state.iterations} passes ({sol.state.stop_reason}); outputs in {out}")
    return EXIT_OK


def _sweep_member(cfg: RunConfig, param: str, value):
    if param == "x0":
        scfg = SolverConfig(cfg.solver.N0, cfg.solver.M, cfg.solver.eps, cfg.solver.rel_eps,
                            cfg.solver.max_iters, float(value))
        spec = cfg.cavity(float(value))
    else:
        scfg = SolverConfig(int(value), cfg.solver.M, cfg.solver.eps, cfg.solver.rel_eps,
                            cfg.solver.max_iters, cfg.x0)
        spec = cfg.cavity()
    return solve(spec, cfg.material, scfg, default_k2(cfg.geometry))


TRACE_KEYS = ("cavity_sigma_theta", "cavity_disp", "surface_sigma_theta", "surface_disp")


def sweep_traces(sol: Solution, th: np.ndarray, filt: bool):
    cav = sol.cavity(th, filt)
    sur = sol.surface(th, filt)
    return cav, sur, {"cavity_sigma_theta": cav.sigma_theta, "cavity_disp": cav.u + 1j * cav.v,
                      "surface_sigma_theta": sur.sigma_theta, "surface_disp": sur.u + 1j * sur.v}


def successive_differences(traces: List[dict]) -> List[dict]:
    out = []
    for prev, cur in zip(traces, traces[1:]):
        out.append({k: float(np.abs(cur[k] - prev[k]).max()) for k in TRACE_KEYS})
    return out


def cmd_converge(cfg: RunConfig, out: Path, param: str, values: List[float],
                 workers: int = 1) -> int:
    if param == "N0":
        for v in values:
            if 2 * int(v) + 1 > cfg.solver.M or int(v) < 4:
                raise ConfigError(f"--sweep-n0: N0={int(v)} violates 4 <= N0, 2*N0+1 <= M")
    else:
        for v in values:
            if not v > 0:
                raise ConfigError(f"--sweep-x0: x0={v} must be positive")
    cfg.cavity()  # validate geometry before touching the output directory
    out.mkdir(parents=True, exist_ok=True)

    def run(v):
        try:
            return _sweep_member(cfg, param, v), None
        except (SolverError, GeometryError, MappingError) as e:
            return None, str(e)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        results = list(ex.map(run, values))
    th = theta_grid(cfg.theta_points)
    filt = cfg.filter != "off"
    samples, lead, traces, ok_vals, failures = [], [], [], [], {}
    for v, (sol, err) in zip(values, results):
        if sol is None:
            failures[_fmt(v)] = err
            continue
        cav, sur, tr = sweep_traces(sol, th, filt)
        samples += [cav, sur]
        lead += [(param, v, "cavity"), (param, v, "surface")]
        traces.append(tr)
        ok_vals.append(v)
    write_fields(out / "sweep_traces.csv", cfg, samples, (("param", "value", "boundary"), lead))
    diffs = successive_differences(traces)
    with (out / "sweep_summary.csv").open("w", newline="") as fh:
        _header(fh, cfg, {"param": param, "failures": failures})
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value_prev", "value"] + ["supdiff_" + k for k in TRACE_KEYS])
        for (a, b), d in zip(zip(ok_vals, ok_vals[1:]), diffs):
            w.writerow([_fmt(a), _fmt(b)] + [_fmt(d[k]) for k in TRACE_KEYS])
    mono = all(all(d1[k] > d2[k] for k in TRACE_KEYS) for d1, d2 in zip(diffs, diffs[1:]))
    print(f"{len(ok_vals)} solves, {len(failures)} failures; successive differences "
          f"{'decrease' if mono else 'do not decrease'} monotonically; outputs in {out}")
    return EXIT_SOLVER if failures else EXIT_OK


def cmd_residuals(cfg: RunConfig, out: Path) -> int:
    spec = cfg.cavity()
    out.mkdir(parents=True, exist_ok=True)
    try:
        sol = solve(spec, cfg.material, cfg.solver, default_k2(cfg.geometry))
    except SolverError as e:
        write_json(out / "residuals.json", cfg, {"error": str(e)})
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    res = {("filtered" if f else "unfiltered"): sol.residuals(f) for f in filter_flags(cfg.filter)}
    res["equilibrium"] = sol.equilibrium()
    res["solver"] = sol.state.report()
    write_json(out / "residuals.json", cfg, res)
    for k, v in res.items():
        if k in ("filtered", "unfiltered"):
            print(f"{k}: free traction {v['free_traction_max']:.4g} (limit {v['free_traction_limit']:.4g}), "
                  f"constrained displacement {v['constrained_displacement_max']:.4g} "
                  f"(limit {v['constrained_displacement_limit']:.4g}), "
                  f"cavity L2 {v['cavity_traction_rel_l2']:.4g}")
    return EXIT_OK


def _parse_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavityrh", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("map", "solve", "converge", "residuals"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help="output directory (overrides config 'outputs')")
        s.add_argument("--filter", choices=["on", "off", "both"], help="Lanczos filtering")
        s.add_argument("--rings", help="comma separated interior ring radii")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "solve":
            s.add_argument("--compare-filter", action="store_true",
                           help="emit filtered and unfiltered traces")
        if name == "converge":
            g = s.add_mutually_exclusive_group(required=True)
            g.add_argument("--sweep-x0", help="comma separated x0 values")
            g.add_argument("--sweep-n0", help="comma separated N0 values")
            s.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"--config: file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"--config: invalid JSON ({e})")
        if args.filter:
            raw["filter"] = args.filter
        if args.rings:
            raw.setdefault("grids", {})["rings"] = _parse_list(args.rings)
        cfg = parse_config(raw, path.parent)
        out = Path(args.out or cfg.outputs)
        if args.command == "map":
            return cmd_map(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out, args.compare_filter)
        if args.command == "converge":
            if args.sweep_x0:
                return cmd_converge(cfg, out, "x0", _parse_list(args.sweep_x0), args.workers)
            vals = [int(v) for v in _parse_list(args.sweep_n0)]
            return cmd_converge(cfg, out, "N0", vals, args.workers)
        return cmd_residuals(cfg, out)
    except (ConfigError, GeometryError, MappingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
