"""Command-line front end.

Commands
--------
benchmark-eigen   convergence study of the disk eigen benchmark -> eigen_<mode>.csv
solve-poisson     fractional Poisson solve -> poisson.csv (x, y, u)
simulate-porous   porous-medium run -> trajectory.csv, field.csv
geometry          info | refine | export for the built-in or a saved surface

Settings come from an optional JSON file (``--config``) overridden by flags.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .assembly import DiscretizationParams
from .benchmarks import LADDERS, convergence_study, eigen_pair
from .errors import ConfigError, DomainError, FracIGAError
from .nurbs import NurbsSurface, refine_dyadic, refine_uniform, square, unit_disk
from .solvers import SCHEMES, simulate_porous, solve_poisson, write_field_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
SOURCES = ("eigen", "constant")

# per-command defaults that differ from RunConfig's
COMMAND_DEFAULTS = {
    "benchmark-eigen": {"geometry": "disk", "s": 0.8, "levels": 3},
    "solve-poisson": {"geometry": "disk", "s": 0.5, "levels": 2},
    "simulate-porous": {"geometry": "square", "s": 0.5, "elements": 17,
                        "dt": 1e-4, "n_t": 1000},
    "geometry": {"geometry": "disk", "levels": 0},
}


@dataclass
class RunConfig:
    """Everything a command needs; see ``COMMAND_DEFAULTS`` for per-command values."""

    geometry: str = "disk"
    half_width: float = 1.0
    s: float = 0.8
    a: float = 0.1
    h: float = 0.001
    R: float = 20.0
    n_quad: int = 1000
    m_quad: int = 20
    levels: int = 3
    elements: int | None = None
    ladder: str = "dyadic"
    mode: int = 1
    source: str = "eigen"
    value: float = 1.0
    m_exp: float = 1.0
    dt: float = 1e-4
    n_t: int = 1000
    scheme: str = "cn"
    probes: list = field(default_factory=lambda: [[0.0, 0.0]])
    samples: int = 33
    out: str = "."
    threads: int | None = None

    def params(self):
        try:
            return DiscretizationParams(s=self.s, a=self.a, h=self.h, R=self.R,
                                        n=self.n_quad, m=self.m_quad)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        self.params()
        if self.ladder not in LADDERS:
            raise ConfigError(f"ladder must be one of {LADDERS}, got {self.ladder!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {sorted(SCHEMES)}, got {self.scheme!r}")
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.levels < 0 or (self.elements is not None and self.elements < 1):
            raise ConfigError("levels must be >= 0 and elements >= 1")
        if not self.dt > 0 or self.n_t < 0 or self.m_exp < 1:
            raise ConfigError("need dt > 0, nt >= 0 and mexp >= 1")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        try:
            probes = np.asarray(self.probes, dtype=float).reshape(-1, 2)
        except ValueError as exc:
            raise ConfigError(f"probes must be a list of [x, y] pairs: {exc}") from exc
        self.probes = probes.tolist()
        return self


# flag name -> RunConfig field
FLAG_FIELDS = {
    "geometry": "geometry", "half_width": "half_width", "s": "s", "a": "a",
    "hstep": "h", "R": "R", "nquad": "n_quad", "mquad": "m_quad", "levels": "levels",
    "elements": "elements", "ladder": "ladder", "mode": "mode", "source": "source",
    "value": "value", "mexp": "m_exp", "dt": "dt", "nt": "n_t", "scheme": "scheme",
    "samples": "samples", "out": "out", "threads": "threads",
}


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file with settings (flags override it)")
    p.add_argument("--geometry", help="disk, square, or a surface JSON file")
    p.add_argument("--half-width", dest="half_width", type=float, help="half width of the square")
    p.add_argument("--s", type=float, help="fractional order in (0, 1)")
    p.add_argument("--a", type=float, help="window size")
    p.add_argument("--hstep", type=float, help="finite-difference step of the Laplacian stencil")
    p.add_argument("--R", type=float, help="quadrature truncation radius")
    p.add_argument("--nquad", type=int, help="radial Gauss-Legendre points")
    p.add_argument("--mquad", type=int, help="angular directions")
    p.add_argument("--levels", type=int, help="refinement levels (dyadic knot insertion)")
    p.add_argument("--threads", type=int, help="assembly threads (default: $FRAC_IGA_THREADS or 1)")
    p.add_argument("--out", help="output directory")
    return p


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="fraciga", description="Isogeometric collocation for the fractional Laplacian.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark-eigen", parents=[common], help="eigen benchmark convergence study")
    p.add_argument("--mode", type=int, help="eigenmode index n")
    p.add_argument("--ladder", choices=LADDERS, help="refinement ladder")

    p = sub.add_parser("solve-poisson", parents=[common], help="solve the fractional Poisson problem")
    p.add_argument("--source", choices=SOURCES, help="eigen right-hand side or a constant")
    p.add_argument("--mode", type=int, help="eigenmode index for --source eigen")
    p.add_argument("--value", type=float, help="value for --source constant")
    p.add_argument("--elements", type=int, help="uniform elements per direction (overrides --levels)")

    p = sub.add_parser("simulate-porous", parents=[common], help="fractional porous-medium run")
    p.add_argument("--mexp", type=float, help="porous-medium exponent m >= 1")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--nt", type=int, help="number of steps")
    p.add_argument("--scheme", choices=sorted(SCHEMES), help="time-stepping variant")
    p.add_argument("--elements", type=int, help="uniform elements per direction (overrides --levels)")

    p = sub.add_parser("geometry", parents=[common], help="inspect, refine or sample a surface")
    p.add_argument("action", choices=("info", "refine", "export"))
    p.add_argument("--samples", type=int, help="samples per direction for export")
    return parser


def load_config(args):
    """Merge defaults, the JSON config file and explicit flags (in that order)."""
    cfg = RunConfig(**COMMAND_DEFAULTS.get(args.command, {}))
    names = {f.name for f in fields(RunConfig)}
    if args.config:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
        cfg = replace(cfg, **doc)
    overrides = {}
    for flag, name in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    cfg = replace(cfg, **overrides)
    if cfg.threads is None and os.environ.get("FRAC_IGA_THREADS"):
        try:
            cfg.threads = int(os.environ["FRAC_IGA_THREADS"])
        except ValueError as exc:
            raise ConfigError(f"FRAC_IGA_THREADS must be an integer: {exc}") from exc
    try:
        return cfg.validate()
    except TypeError as exc:
        raise ConfigError(f"invalid setting type: {exc}") from exc


def base_surface(cfg):
    if cfg.geometry == "disk":
        return unit_disk()
    if cfg.geometry == "square":
        if not cfg.half_width > 0:
            raise ConfigError(f"half width must be positive, got {cfg.half_width}")
        return square(cfg.half_width)
    path = Path(cfg.geometry)
    if not path.is_file():
        raise ConfigError(f"geometry file not found: {path}")
    try:
        return NurbsSurface.load(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read surface from {path}: {exc}") from exc


def refined_surface(cfg):
    surface = base_surface(cfg)
    if cfg.elements is not None:
        return refine_uniform(surface, cfg.elements)
    return refine_dyadic(surface, cfg.levels) if cfg.levels > 0 else surface


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_benchmark_eigen(cfg):
    if cfg.geometry != "disk":
        raise ConfigError("the eigen benchmark is defined on the disk only")
    if cfg.levels < 2:
        raise ConfigError(f"benchmark-eigen needs --levels >= 2, got {cfg.levels}")
    print("level,dof,error,seconds")
    study = convergence_study(
        cfg.mode, cfg.s, cfg.params(), cfg.levels, ladder=cfg.ladder, threads=cfg.threads,
        callback=lambda r: print(f"{r.level},{r.dof},{r.error:.6e},{r.seconds:.2f}", flush=True))
    path = _out_dir(cfg) / f"eigen_{cfg.mode}.csv"
    study.write_csv(path)
    print(f"slope {study.slope:.4f}; wrote {path}")


def cmd_solve_poisson(cfg):
    surface = refined_surface(cfg)
    if cfg.source == "eigen":
        source = eigen_pair(cfg.mode, cfg.s).source
    else:
        value = cfg.value
        source = lambda x: np.full(x.shape[0], value)  # noqa: E731
    sol = solve_poisson(surface, source, cfg.params(), threads=cfg.threads)
    path = _out_dir(cfg) / "poisson.csv"
    write_field_csv(path, np.column_stack([sol.points.points, sol.values]))
    print(f"dof {surface.n_dof}; residual {sol.residual:.3e}; wrote {path}")


def gaussian(points):
    return np.exp(-100.0 * np.einsum("ij,ij->i", points, points))


def cmd_simulate_porous(cfg):
    surface = refined_surface(cfg)
    for x in cfg.probes:
        if not surface.contains(np.asarray(x, dtype=float)):
            raise ConfigError(f"probe {x} lies outside the geometry")
    result = simulate_porous(surface, gaussian, cfg.m_exp, cfg.params(), cfg.dt, cfg.n_t,
                             probes=cfg.probes, scheme=cfg.scheme, threads=cfg.threads)
    out = _out_dir(cfg)
    result.write_trajectory(out / "trajectory.csv")
    result.write_field(out / "field.csv")
    if result.final.min_value < 0:
        print(f"warning: negative values (min {result.final.min_value:.3e})", file=sys.stderr)
    print(f"dof {surface.n_dof}; final probe values "
          f"{', '.join(f'{v:.6f}' for v in result.trajectory[-1])}; wrote {out}")


def surface_info(surface):
    p, q = surface.degrees
    return {
        "degrees": [p, q],
        "shape": list(surface.shape),
        "control_points": surface.n_dof,
        "knots_u": surface.kv_u.knots.tolist(),
        "knots_v": surface.kv_v.knots.tolist(),
    }


def cmd_geometry(cfg, action):
    surface = refined_surface(cfg)
    if action == "info":
        print(json.dumps(surface_info(surface)))
    elif action == "refine":
        path = _out_dir(cfg) / "surface.json"
        surface.save(path)
        print(json.dumps(surface_info(surface)))
        print(f"wrote {path}")
    else:
        if cfg.samples < 2:
            raise ConfigError(f"need at least 2 samples, got {cfg.samples}")
        g = np.linspace(0.0, 1.0, cfg.samples)
        uu, vv = np.meshgrid(g, g, indexing="xy")
        u, v = uu.ravel(), vv.ravel()
        x = surface.map_many(u, v)
        path = _out_dir(cfg) / "geometry.csv"
        write_field_csv(path, np.column_stack([u, v, x]), header=("u", "v", "x", "y"))
        print(f"wrote {path}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "benchmark-eigen":
            cmd_benchmark_eigen(cfg)
        elif args.command == "solve-poisson":
            cmd_solve_poisson(cfg)
        elif args.command == "simulate-porous":
            cmd_simulate_porous(cfg)
        else:
            cmd_geometry(cfg, args.action)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FracIGAError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
