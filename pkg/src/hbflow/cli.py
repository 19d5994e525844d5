"""Command-line driver: single runs and parameter sweeps.

``hbflow run`` solves one configuration and writes a convergence CSV per
stage, a VTK file with the solution fields, and a JSON summary. ``hbflow
sweep`` runs a grid of configurations into per-point directories and
aggregates the endpoints into one CSV.

Configuration precedence, lowest to highest: built-in defaults, --preset,
--config key=value file, explicit flags. Exit codes: 0 success, 1 solver
did not converge, 2 bad configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import build_discrete_gradient, expand_dirichlet, gradient_magnitudes
from .export import write_history_csv, write_vtk
from .linalg import LinearSolveError
from .linesearch import LineSearchConfig
from .mesh import Mesh, MeshError, build_unit_disk_mesh, build_unit_square_mesh
from .solver import SolveOutcome, SolverConfig, continuation_solve, solve, wp_seminorm


class ConfigError(ValueError):
    """Invalid manifest values; maps to exit code 2."""


@dataclass
class RunManifest:
    domain: str = "square"
    n: int | None = None
    level: int | None = None
    p: float = 2.0
    g: float = 0.2
    gamma: float = 1e3
    epsilon: float = 1e-6
    f: float = 1.0
    tol: float = 1e-6
    max_iters: int = 100
    sigma1: float = 1e-4
    continuation: bool = False
    gamma_start: float = 10.0
    gamma_end: float = 1e6
    out: str = "out"
    preset: str | None = None


PRESETS: dict[str, dict] = {
    # shear-thinning pipe flow on the disk (level 6 is the first level with h <= 0.01)
    "exp1-thinning": dict(domain="disk", level=6, p=1.75, g=0.2, gamma=1e3,
                          epsilon=1e-6, f=1.0),
    # shear-thickening flow on the square
    "exp1-thickening": dict(domain="square", n=101, p=4.0, g=0.2, gamma=1e3, f=3.0),
    # mesh-independence sweep template (pair with --g-list / --n-list)
    "exp2-mesh-study": dict(domain="square", p=1.5, gamma=1e3, f=3.0, n=101),
    # strongly shear-thickening flow, needs gamma continuation
    "exp3-continuation": dict(domain="square", n=50, p=100.0, g=0.3, f=3.0,
                              continuation=True),
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunManifest)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if name in ("n", "level", "max_iters"):
        return int(raw)
    if name == "continuation":
        low = raw.strip().lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigError(f"cannot parse boolean {name}={raw!r}")
    if kind in ("str", "str | None") or name in ("domain", "out", "preset"):
        return raw
    return float(raw)


def parse_config_file(path) -> dict:
    """key=value lines; blank lines and # comments ignored; dashes in keys
    normalized to underscores."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def build_manifest(args: argparse.Namespace) -> RunManifest:
    """Merge defaults, preset, config file, and explicit flags."""
    manifest = RunManifest()
    if args.preset is not None:
        if args.preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError(f"unknown preset {args.preset!r} (known: {known})")
        manifest = dataclasses.replace(manifest, preset=args.preset, **PRESETS[args.preset])
    if getattr(args, "config", None) is not None:
        manifest = dataclasses.replace(manifest, **parse_config_file(args.config))
    explicit = {
        name: value
        for name, value in vars(args).items()
        if name in _FIELD_TYPES and name != "preset" and value is not None
    }
    if explicit:
        manifest = dataclasses.replace(manifest, **explicit)
    return manifest


def build_mesh(manifest: RunManifest) -> Mesh:
    if manifest.domain == "square":
        if manifest.n is None:
            raise ConfigError("square domain needs --n")
        if manifest.n < 2:
            raise ConfigError(f"square mesh needs n >= 2 for interior vertices, got {manifest.n}")
        return build_unit_square_mesh(manifest.n)
    if manifest.domain == "disk":
        if manifest.level is None:
            raise ConfigError("disk domain needs --level")
        if manifest.level < 1:
            raise ConfigError(f"disk mesh needs level >= 1 for interior vertices, got {manifest.level}")
        return build_unit_disk_mesh(manifest.level)
    raise ConfigError(f"unknown domain {manifest.domain!r} (square or disk)")


def solver_config(manifest: RunManifest) -> SolverConfig:
    if manifest.p <= 1.0:
        raise ConfigError(f"p must be > 1, got {manifest.p}")
    if manifest.g <= 0.0 or manifest.gamma <= 0.0 or manifest.epsilon <= 0.0:
        raise ConfigError("g, gamma, epsilon must be positive")
    return SolverConfig(
        p=manifest.p, g=manifest.g, gamma=manifest.gamma, epsilon=manifest.epsilon,
        tol=manifest.tol, max_iters=manifest.max_iters,
        linesearch=LineSearchConfig(sigma1=manifest.sigma1),
    )


def _stage_summary(gamma: float, outcome: SolveOutcome) -> dict:
    return {
        "gamma": gamma,
        "iterations": outcome.iterations,
        "converged": outcome.converged,
        "final_objective": outcome.final_objective,
        "final_rel_residual": outcome.final_rel_residual,
    }


def _write_outputs(outdir: Path, manifest: RunManifest, mesh: Mesh,
                   stages: list, wall_time: float, error: str | None) -> dict:
    final = stages[-1][1]
    G = build_discrete_gradient(mesh)
    xi = gradient_magnitudes(G, final.u)
    if len(stages) == 1:
        write_history_csv(outdir / "history.csv", final.history)
    else:
        for idx, (gamma, outcome) in enumerate(stages, start=1):
            write_history_csv(
                outdir / f"history_stage{idx:02d}_gamma_{gamma:.0e}.csv",
                outcome.history,
            )
    write_vtk(
        outdir / "solution.vtk",
        mesh,
        point_data={"u": expand_dirichlet(mesh, final.u)},
        cell_data={
            "grad_norm": xi,
            "active": final.dual.active.astype(np.int64),
            "multiplier_norm": np.linalg.norm(final.dual.w, axis=1),
        },
    )
    converged = all(outcome.converged for _, outcome in stages)
    summary = {
        "preset": manifest.preset,
        "domain": manifest.domain,
        "n": manifest.n,
        "level": manifest.level,
        "p": manifest.p,
        "g": manifest.g,
        "gamma": manifest.gamma,
        "epsilon": manifest.epsilon,
        "f": manifest.f,
        "tol": manifest.tol,
        "max_iters": manifest.max_iters,
        "sigma1": manifest.sigma1,
        "continuation": manifest.continuation,
        "h": mesh.h,
        "num_vertices": mesh.num_vertices,
        "num_triangles": mesh.num_triangles,
        "num_interior": mesh.num_interior,
        "converged": converged,
        "iterations": sum(outcome.iterations for _, outcome in stages),
        "final_objective": final.final_objective,
        "final_rel_residual": final.final_rel_residual,
        "u_euclidean_norm": float(np.linalg.norm(final.u)),
        "wp_seminorm": wp_seminorm(mesh, G, final.u, manifest.p),
        "stages": [_stage_summary(gamma, outcome) for gamma, outcome in stages],
        "error": error,
        "wall_time_seconds": wall_time,
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def run_single(manifest: RunManifest) -> tuple[int, dict]:
    """Solve one manifest and write its outputs. Returns (exit_code, summary)."""
    mesh = build_mesh(manifest)
    config = solver_config(manifest)
    try:
        outdir = Path(manifest.out)
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create output directory {manifest.out!r}: {exc}") from exc

    t0 = time.perf_counter()
    error = None
    # a LinearSolveError propagates: without a completed stage there is
    # nothing worth writing
    if manifest.continuation:
        stages = continuation_solve(mesh, config, manifest.f,
                                    gamma_start=manifest.gamma_start,
                                    gamma_end=manifest.gamma_end)
    else:
        stages = [(manifest.gamma, solve(mesh, config, manifest.f))]
    wall = time.perf_counter() - t0

    bad = [outcome for _, outcome in stages if not outcome.converged]
    if bad:
        error = bad[0].failure_reason or "iteration limit reached before tolerance"
    summary = _write_outputs(Path(manifest.out), manifest, mesh, stages, wall, error)
    return (0 if not bad else 1), summary


def _parse_list(raw: str, cast) -> list:
    return [cast(tok) for tok in raw.split(",") if tok.strip()]


def run_sweep(manifest: RunManifest, args: argparse.Namespace) -> int:
    """Cartesian product of the requested value lists; one directory per point."""
    axes: list[tuple[str, list]] = []
    if args.g_list:
        axes.append(("g", _parse_list(args.g_list, float)))
    if args.p_list:
        axes.append(("p", _parse_list(args.p_list, float)))
    if args.gamma_list:
        axes.append(("gamma", _parse_list(args.gamma_list, float)))
    if args.n_list:
        axes.append(("n", _parse_list(args.n_list, int)))
    if args.level_list:
        axes.append(("level", _parse_list(args.level_list, int)))

    base_out = Path(manifest.out)
    try:
        base_out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create output directory {manifest.out!r}: {exc}") from exc

    names = [name for name, _ in axes]
    rows = []
    for combo in itertools.product(*(values for _, values in axes)):
        point = dict(zip(names, combo))
        tag = "-".join(f"{k}{v:g}" if isinstance(v, float) else f"{k}{v}"
                       for k, v in point.items()) or "single"
        sub = dataclasses.replace(manifest, out=str(base_out / "runs" / tag), **point)
        try:
            code, summary = run_single(sub)
            rows.append((point, sub, summary, None))
        except (ConfigError, LinearSolveError, MeshError) as exc:
            rows.append((point, sub, None, str(exc)))

    lines = ["domain,resolution,p,g,gamma,f,h,iterations,final_J,final_rel_residual,converged"]
    for point, sub, summary, failure in rows:
        resolution = sub.n if sub.domain == "square" else sub.level
        if summary is None:
            lines.append(f"{sub.domain},{resolution},{sub.p:g},{sub.g:g},{sub.gamma:g},"
                         f"{sub.f:g},,,,,failed: {failure}")
        else:
            lines.append(
                f"{sub.domain},{resolution},{sub.p:g},{sub.g:g},{sub.gamma:g},{sub.f:g},"
                f"{summary['h']:.10e},{summary['iterations']},"
                f"{summary['final_objective']:.10e},{summary['final_rel_residual']:.10e},"
                f"{summary['converged']}"
            )
    (base_out / "aggregate.csv").write_text("\n".join(lines) + "\n")
    return 0


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--domain", choices=["square", "disk"])
    sub.add_argument("--n", type=int, help="square subdivisions per side")
    sub.add_argument("--level", type=int, help="disk refinement level")
    sub.add_argument("--p", type=float, help="flow index, > 1")
    sub.add_argument("--g", type=float, help="plasticity threshold")
    sub.add_argument("--gamma", type=float, help="Huber regularization parameter")
    sub.add_argument("--epsilon", type=float, help="preconditioner shift, p < 2 only")
    sub.add_argument("--f", type=float, help="constant right-hand side")
    sub.add_argument("--tol", type=float, help="relative residual stopping tolerance")
    sub.add_argument("--max-iters", dest="max_iters", type=int)
    sub.add_argument("--sigma1", type=float, help="Armijo slope fraction")
    sub.add_argument("--continuation", action="store_const", const=True, default=None,
                     help="solve over the gamma ladder 1e1..1e6 with warm starts")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--preset", help="named parameter bundle: " + ", ".join(sorted(PRESETS)))
    sub.add_argument("--config", help="key=value file, overridden by explicit flags")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbflow",
        description="P1 finite element solver for Herschel-Bulkley pipe flow",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run_p = commands.add_parser("run", help="solve one configuration")
    _add_common_flags(run_p)
    sweep_p = commands.add_parser("sweep", help="solve a parameter grid")
    _add_common_flags(sweep_p)
    sweep_p.add_argument("--g-list", help="comma-separated g values")
    sweep_p.add_argument("--p-list", help="comma-separated p values")
    sweep_p.add_argument("--gamma-list", help="comma-separated gamma values")
    sweep_p.add_argument("--n-list", help="comma-separated square resolutions")
    sweep_p.add_argument("--level-list", help="comma-separated disk levels")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        manifest = build_manifest(args)
        if args.command == "run":
            code, summary = run_single(manifest)
            print(f"converged={summary['converged']} iterations={summary['iterations']} "
                  f"J={summary['final_objective']:.6g} out={manifest.out}")
            return code
        return run_sweep(manifest, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except MeshError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except LinearSolveError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
