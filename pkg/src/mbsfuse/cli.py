"""Command-line entry point.

Subcommands
-----------
simulate   write an epoch-frame JSONL stream for a config
run        compare fusion schemes on a scenario, emit CSV reports
study      linearization-error studies (pdf | mesh), emit CSVs

Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numerical
failure. The environment variable MBSFUSE_SEED (an integer) overrides
the seed from the config file or the --seed flag.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time

import numpy as np

from . import __version__, analysis, io, sim
from .config import SCHEMA_VERSION, RunConfig, load_config
from .errors import ConfigError, MbsfuseError, NonPsdCovariance, SingularInnovation
from .fusion import SchemeId

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _env_seed() -> int | None:
    raw = os.environ.get("MBSFUSE_SEED")
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(
            f"MBSFUSE_SEED must be an integer, got {raw!r}", field="MBSFUSE_SEED"
        ) from None


def _effective_config(path: str) -> RunConfig:
    cfg = load_config(path)
    seed = _env_seed()
    if seed is not None:
        cfg = dataclasses.replace(
            cfg, scenario=dataclasses.replace(cfg.scenario, seed=seed)
        )
    return cfg


def _base_manifest(command: str, out_dir: str) -> dict:
    return {
        "tool": "mbsfuse",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "out_dir": os.path.abspath(out_dir),
        "csv_schemas": io.CSV_SCHEMAS,
    }


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _effective_config(args.config)
    t0 = time.perf_counter()
    _, _, frames = sim.build_scenario(cfg.scenario, args.mode)
    os.makedirs(args.out, exist_ok=True)
    io.write_frames_jsonl(os.path.join(args.out, "frames.jsonl"), frames)
    manifest = _base_manifest("simulate", args.out)
    manifest.update(
        {
            "config_text": cfg.raw_text,
            "seed": cfg.scenario.seed,
            "mode": args.mode,
            "n_epochs": len(frames),
            "duration_s": round(time.perf_counter() - t0, 3),
        }
    )
    io.write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    print(f"wrote {len(frames)} epochs to {args.out}/frames.jsonl")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _effective_config(args.config)
    try:
        schemes = [SchemeId.from_token(tok) for tok in args.schemes.split(",") if tok]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not schemes:
        print("error: no schemes given", file=sys.stderr)
        return EXIT_CONFIG
    gate_on = args.gate == "on"
    t0 = time.perf_counter()
    _, _, frames = sim.build_scenario(cfg.scenario, args.mode)
    os.makedirs(args.out, exist_ok=True)

    reports: dict[str, analysis.MetricsReport] = {}
    failures: dict[str, str] = {}
    for scheme in schemes:
        try:
            series, report = analysis.run_frames(
                frames, cfg.scenario.dt, scheme, gate_on=gate_on, tuning=cfg.tuning
            )
        except (SingularInnovation, NonPsdCovariance, MbsfuseError) as exc:
            failures[scheme.value] = f"{type(exc).__name__}: {exc}"
            print(f"scheme {scheme.value} failed: {exc}", file=sys.stderr)
            continue
        scheme_dir = os.path.join(args.out, scheme.value)
        os.makedirs(scheme_dir, exist_ok=True)
        io.write_errors_csv(os.path.join(scheme_dir, "errors.csv"), series)
        io.write_cdf_csv(os.path.join(scheme_dir, "cdf.csv"), report)
        reports[scheme.value] = report
        print(
            f"{scheme.value}: rms {report.rms:.3f} m, max {report.max:.3f} m, "
            f"<1m {100 * report.pct_lt[1.0]:.1f}%"
        )
    if reports:
        io.write_metrics_csv(os.path.join(args.out, "metrics.csv"), reports)
    manifest = _base_manifest("run", args.out)
    manifest.update(
        {
            "config_text": cfg.raw_text,
            "seed": cfg.scenario.seed,
            "mode": args.mode,
            "gate": args.gate,
            "schemes": [s.value for s in schemes],
            "failures": failures,
            "duration_s": round(time.perf_counter() - t0, 3),
        }
    )
    io.write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    if not reports:
        print("error: every scheme failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _parse_grid(spec: str) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    try:
        xs, ys = spec.split(",")
        xa = tuple(float(v) for v in xs.split(":"))
        ya = tuple(float(v) for v in ys.split(":"))
        if len(xa) != 3 or len(ya) != 3:
            raise ValueError
    except ValueError:
        raise ConfigError(
            f"--grid must look like xmin:xmax:step,ymin:ymax:step, got {spec!r}",
            field="grid",
        ) from None
    for lo, hi, step in (xa, ya):
        if step <= 0 or hi < lo:
            raise ConfigError(f"empty grid axis {lo}:{hi}:{step}", field="grid")
    return xa, ya


def _cmd_study(args: argparse.Namespace) -> int:
    seed = _env_seed()
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    manifest = _base_manifest(f"study {args.kind}", args.out)
    if args.kind == "pdf":
        if args.n < 1:
            print("error: --n must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        used_seed = seed if seed is not None else args.seed
        rng = np.random.default_rng(used_seed)
        rng_study, ang_study = analysis.pdf_transform_study(
            (args.dx, args.dy), args.sigma, args.n, rng
        )
        io.write_pdfstudy_csv(
            os.path.join(args.out, "pdfstudy.csv"),
            [rng_study, ang_study],
            comments=[
                f"point cloud: N(({args.dx}, {args.dy}), {args.sigma}^2 I), n={args.n}, seed={used_seed}",
                "values: range in m, angle in rad; linearized about the cloud mean",
            ],
        )
        manifest.update(
            {
                "seed": used_seed,
                "params": {
                    "dx_m": args.dx,
                    "dy_m": args.dy,
                    "sigma_m": args.sigma,
                    "n": args.n,
                },
            }
        )
        print(
            f"range var nonlinear {rng_study.nonlinear_var:.6g} "
            f"linearized {rng_study.linearized_var:.6g}; "
            f"angle var nonlinear {ang_study.nonlinear_var:.6g} "
            f"linearized {ang_study.linearized_var:.6g}"
        )
    else:  # mesh
        x_spec, y_spec = _parse_grid(args.grid)
        lin = (
            args.lin_radius * math.cos(math.radians(args.lin_deg)),
            args.lin_radius * math.sin(math.radians(args.lin_deg)),
        )
        mesh = analysis.mesh_linearization_study(x_spec, y_spec, lin)
        io.write_mesh_csv(
            os.path.join(args.out, "mesh.csv"),
            mesh,
            comments=[
                f"linearization point ({lin[0]:.6g}, {lin[1]:.6g}) m "
                f"({args.lin_deg} deg at {args.lin_radius} m)",
                "cells within 1e-6 m of the BS are omitted",
            ],
        )
        manifest.update(
            {
                "params": {
                    "lin_deg": args.lin_deg,
                    "lin_radius_m": args.lin_radius,
                    "grid": args.grid,
                }
            }
        )
        finite = mesh.angle_err[~np.isnan(mesh.angle_err)]
        print(
            f"mesh {mesh.angle_err.shape[1]}x{mesh.angle_err.shape[0]}; "
            f"max angle err {math.degrees(float(finite.max())):.1f} deg"
        )
    manifest["duration_s"] = round(time.perf_counter() - t0, 3)
    io.write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbsfuse",
        description="Multi-BS positioning: simulate, compare fusion schemes, study linearization errors.",
    )
    parser.add_argument("--version", action="version", version=f"mbsfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write an epoch-frame JSONL stream")
    p_sim.add_argument("--config", required=True, help="TOML config path")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument(
        "--mode", choices=["perfect", "noisy"], default="noisy", help="measurement mode"
    )
    p_sim.set_defaults(func=_cmd_simulate)

    p_run = sub.add_parser("run", help="run fusion schemes and emit reports")
    p_run.add_argument("--config", required=True)
    p_run.add_argument(
        "--schemes",
        default=",".join(s.value for s in SchemeId),
        help="comma-separated scheme list",
    )
    p_run.add_argument("--mode", choices=["perfect", "noisy"], default="noisy")
    p_run.add_argument("--gate", choices=["on", "off"], default="on")
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=_cmd_run)

    p_study = sub.add_parser("study", help="linearization-error studies")
    study_sub = p_study.add_subparsers(dest="kind", required=True)

    p_pdf = study_sub.add_parser("pdf", help="distribution transformation study")
    p_pdf.add_argument("--dx", type=float, required=True, help="cloud mean x offset (m)")
    p_pdf.add_argument("--dy", type=float, required=True, help="cloud mean y offset (m)")
    p_pdf.add_argument("--sigma", type=float, default=0.1, help="cloud std dev (m)")
    p_pdf.add_argument("--n", type=int, default=100_000, help="sample count")
    p_pdf.add_argument("--seed", type=int, default=20240801)
    p_pdf.add_argument("--out", required=True)
    p_pdf.set_defaults(func=_cmd_study)

    p_mesh = study_sub.add_parser("mesh", help="point-prediction error surface")
    p_mesh.add_argument(
        "--lin-deg", type=float, default=45.0, help="linearization azimuth (deg)"
    )
    p_mesh.add_argument(
        "--lin-radius",
        type=float,
        default=math.sqrt(50.0),
        help="linearization point distance from the BS (m)",
    )
    p_mesh.add_argument(
        "--grid",
        default="0.5:100:0.5,0.5:100:0.5",
        help="xmin:xmax:step,ymin:ymax:step in m",
    )
    p_mesh.add_argument("--out", required=True)
    p_mesh.set_defaults(func=_cmd_study)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        loc = f" (field: {exc.field})" if exc.field else ""
        print(f"config error: {exc}{loc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SingularInnovation, NonPsdCovariance, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MbsfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
