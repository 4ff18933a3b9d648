"""File formats: epoch-frame JSONL streams, CSV reports, run manifests.

All writers are deterministic: same data in, same bytes out. Floats are
serialized with repr (shortest round-trip form). The manifest is the
only file allowed to contain non-reproducible content (wall-clock
duration); the CSVs never do.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from .analysis import ErrorSeries, MeshStudyResult, MetricsReport, PdfStudyResult
from .fusion import EpochFrame, RawMeasurement
from .geom import BsSite, Position3

CSV_SCHEMAS = {
    "errors.csv": ["t", "error_m", "n_bs"],
    "metrics.csv": [
        "scheme",
        "rms_m",
        "max_m",
        "pct_lt_2m",
        "pct_lt_1m",
        "pct_lt_0p3m",
    ],
    "cdf.csv": ["error_m", "quantile"],
    "pdfstudy.csv": ["sample_id", "nonlinear_value", "linearized_value", "quantity"],
    "mesh.csv": ["dx_m", "dy_m", "range_err_m", "angle_err_rad"],
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    header_comments: Sequence[str] = (),
) -> None:
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_errors_csv(path: str, series: ErrorSeries) -> None:
    write_csv(
        path,
        CSV_SCHEMAS["errors.csv"],
        zip(series.t, series.error_m, series.n_bs),
    )


def write_cdf_csv(path: str, report: MetricsReport) -> None:
    write_csv(
        path,
        CSV_SCHEMAS["cdf.csv"],
        zip(report.cdf_errors, report.cdf_quantiles),
    )


def write_metrics_csv(path: str, rows: dict[str, MetricsReport]) -> None:
    body = [
        (
            scheme,
            rep.rms,
            rep.max,
            rep.pct_lt[2.0],
            rep.pct_lt[1.0],
            rep.pct_lt[0.3],
        )
        for scheme, rep in rows.items()
    ]
    write_csv(path, CSV_SCHEMAS["metrics.csv"], body)


def write_pdfstudy_csv(
    path: str, results: Sequence[PdfStudyResult], comments: Sequence[str] = ()
) -> None:
    def rows():
        for res in results:
            for i, (nl, lin) in enumerate(zip(res.nonlinear, res.linearized)):
                yield (i, nl, lin, res.quantity)

    write_csv(path, CSV_SCHEMAS["pdfstudy.csv"], rows(), comments)


def write_mesh_csv(path: str, mesh: MeshStudyResult, comments: Sequence[str] = ()) -> None:
    def rows():
        for iy, dy in enumerate(mesh.dy):
            for ix, dx in enumerate(mesh.dx):
                r_err = mesh.range_err[iy, ix]
                a_err = mesh.angle_err[iy, ix]
                if np.isnan(r_err):
                    continue  # excluded origin cell
                yield (dx, dy, r_err, a_err)

    write_csv(path, CSV_SCHEMAS["mesh.csv"], rows(), comments)


def write_manifest(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def frame_to_record(frame: EpochFrame) -> dict:
    return {
        "t_s": frame.t,
        "truth": {
            "x_m": float(frame.truth[0]),
            "y_m": float(frame.truth[1]),
            "vx_mps": float(frame.truth[2]),
            "vy_mps": float(frame.truth[3]),
        },
        "ue_height_m": frame.ue_height,
        "obs": [
            {
                "bs_id": bs.id,
                "bs_pos_m": [bs.pos.x, bs.pos.y, bs.pos.z],
                "r_toa_m": m.r_toa_m,
                "azimuth_rad": m.azimuth_rad,
                "r_rss_m": m.r_rss_m,
                "los_truth": m.los_truth,
            }
            for bs, m in frame.obs
        ],
    }


def record_to_frame(rec: dict) -> EpochFrame:
    obs = []
    for o in rec["obs"]:
        bs = BsSite(id=int(o["bs_id"]), pos=Position3(*o["bs_pos_m"]))
        obs.append(
            (
                bs,
                RawMeasurement(
                    r_toa_m=float(o["r_toa_m"]),
                    azimuth_rad=float(o["azimuth_rad"]),
                    r_rss_m=float(o["r_rss_m"]),
                    los_truth=bool(o["los_truth"]),
                ),
            )
        )
    tr = rec["truth"]
    truth = np.array([tr["x_m"], tr["y_m"], tr["vx_mps"], tr["vy_mps"]])
    return EpochFrame(
        t=float(rec["t_s"]), truth=truth, obs=obs, ue_height=float(rec["ue_height_m"])
    )


def write_frames_jsonl(path: str, frames: Iterable[EpochFrame]) -> None:
    lines = [
        json.dumps(frame_to_record(f), separators=(",", ":")) for f in frames
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_frames_jsonl(path: str) -> list[EpochFrame]:
    frames = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                frames.append(record_to_frame(json.loads(line)))
    return frames
