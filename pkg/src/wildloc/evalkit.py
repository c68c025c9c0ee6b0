"""Ground-truth comparison, accuracy metrics, and report emission.

A photo counts as a success when its error is strictly below the threshold
(default 50 m). The headline MAE is computed over the success set; the
all-localized variant is reported alongside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from wildloc.errors import IoError, MissingGroundTruth
from wildloc.geo import haversine_m
from wildloc.localizer import LocalizationResult, PhotoMeta

DEFAULT_SUCCESS_THRESHOLD_M = 50.0

RESULTS_HEADER = "filename,status,best_tile_id,raw_matches,inliers,lat,lon,error_m"


@dataclass(frozen=True)
class EvalSummary:
    n_total: int
    n_localized: int
    n_success: int
    success_threshold_m: float
    mae_m: Optional[float]            # mean error over the success set
    mae_all_localized_m: Optional[float]
    errors: tuple[tuple[str, Optional[float]], ...]


def compute_errors(
    results: Sequence[LocalizationResult],
    truth: Mapping[str, PhotoMeta],
) -> list[tuple[str, Optional[float]]]:
    """Per-photo haversine error against ground truth; None when not localized."""
    out = []
    for r in results:
        if not r.localized or r.position is None:
            out.append((r.photo, None))
            continue
        meta = truth.get(r.photo)
        if meta is None or not meta.has_truth:
            raise MissingGroundTruth(r.photo)
        out.append((r.photo, haversine_m(r.position, meta.truth)))
    return out


def summarize(
    errors: Sequence[tuple[str, Optional[float]]],
    threshold_m: float = DEFAULT_SUCCESS_THRESHOLD_M,
) -> EvalSummary:
    """Counts and MAE at the given success threshold."""
    if threshold_m <= 0:
        raise ValueError("threshold_m must be > 0")
    present = [e for _, e in errors if e is not None]
    successes = [e for e in present if e < threshold_m]
    return EvalSummary(
        n_total=len(errors),
        n_localized=len(present),
        n_success=len(successes),
        success_threshold_m=threshold_m,
        mae_m=sum(successes) / len(successes) if successes else None,
        mae_all_localized_m=sum(present) / len(present) if present else None,
        errors=tuple(errors),
    )


def _fmt_opt(v, spec: str) -> str:
    return "" if v is None else format(v, spec)


def write_results_csv(
    results: Sequence[LocalizationResult],
    errors: Sequence[tuple[str, Optional[float]]],
    path,
) -> None:
    """Per-photo results with empty cells where a field does not apply."""
    err_by_name = dict(errors)
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for r in results:
            lat = r.position.lat if r.position else None
            lon = r.position.lon if r.position else None
            tile = "" if r.best_tile_id is None else str(r.best_tile_id)
            fh.write(
                f"{r.photo},{r.status.value},{tile},{r.raw_match_count},{r.inlier_count},"
                f"{_fmt_opt(lat, '.10f')},{_fmt_opt(lon, '.10f')},"
                f"{_fmt_opt(err_by_name.get(r.photo), '.6f')}\n"
            )


def emit_report(
    summary: EvalSummary,
    results: Sequence[LocalizationResult],
    truth: Mapping[str, PhotoMeta],
    out_dir,
) -> dict[str, Path]:
    """Write the results CSV, a key=value summary, and two plot-data files.

    error_plot.txt holds "photo_index error_m" rows for localized photos;
    coords_plot.txt holds "computed_lat computed_lon truth_lat truth_lon"
    rows. Identical inputs produce byte-identical files.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"{out}: {exc.strerror or exc}") from None

    paths = {
        "results": out / "results.csv",
        "summary": out / "summary.txt",
        "error_plot": out / "error_plot.txt",
        "coords_plot": out / "coords_plot.txt",
    }

    write_results_csv(results, summary.errors, paths["results"])

    with open(paths["summary"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"n_total={summary.n_total}\n")
        fh.write(f"n_localized={summary.n_localized}\n")
        fh.write(f"n_success={summary.n_success}\n")
        fh.write(f"success_threshold_m={summary.success_threshold_m:.6f}\n")
        fh.write(f"mae_m={_fmt_opt(summary.mae_m, '.6f')}\n")
        fh.write(f"mae_all_localized_m={_fmt_opt(summary.mae_all_localized_m, '.6f')}\n")

    with open(paths["error_plot"], "w", encoding="utf-8", newline="\n") as fh:
        for index, (_, err) in enumerate(summary.errors):
            if err is not None:
                fh.write(f"{index} {err:.6f}\n")

    with open(paths["coords_plot"], "w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            if r.localized and r.position is not None:
                t = truth[r.photo].truth
                fh.write(
                    f"{r.position.lat:.10f} {r.position.lon:.10f} {t.lat:.10f} {t.lon:.10f}\n"
                )

    return paths
