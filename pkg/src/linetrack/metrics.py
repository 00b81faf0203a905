"""Estimate quality measures and the outlier-sensitivity study.

Accuracy compares how many points the estimate explains against how many
the truth explains, where a point is explained when it lies within a
threshold distance of some conductor. Clutter that happens to sit near a
fitted curve counts, so the ratio can exceed 100 when the estimate drifts
onto clutter the truth ignores; that case is flagged, never clipped,
because it marks exactly the failure modes worth seeing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import ConductorConfig, ParamVector, PointCloud, distance_field
from .simulator import Scenario, default_prior_sigma, generate_sequence, random_prior
from .solver import EstimatorSettings, SolverError, track_sequence

EXPLAIN_THRESHOLD = 1.0  # meters
STUDY_WINDOW = 10  # trailing frames of each run that enter the statistics


def wrap_angle(angle: float) -> float:
    """Reduce an angle difference to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class FrameMetrics:
    """Per-frame comparison of an estimate against the ground truth."""

    accuracy_pct: float  # NaN when the truth explains no point
    explained_est: int
    explained_truth: int
    over_explained: bool  # estimate explains more points than the truth
    psi_error: float  # rad, signed, wrapped to (-pi, pi]
    a_error: float  # m, signed
    translation_error: np.ndarray  # (3,) m, estimate minus truth
    delta_errors: np.ndarray  # (l,) m, signed
    n_pts: int
    solve_time: float  # seconds, all starts of the frame combined


def accuracy(
    p_est: ParamVector,
    p_truth: ParamVector,
    cloud: PointCloud | np.ndarray,
    config: ConductorConfig,
    threshold: float = EXPLAIN_THRESHOLD,
) -> tuple[float, int, int]:
    """Explained-point ratio as a percent, with the two raw counts.

    Returns (accuracy_pct, explained_est, explained_truth); the percent is
    NaN when the truth explains no point (0/0 has no meaningful value).
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    d_est, _, _, _, _ = distance_field(p_est, config, cloud)
    d_truth, _, _, _, _ = distance_field(p_truth, config, cloud)
    n_est = int(np.sum(d_est <= threshold))
    n_truth = int(np.sum(d_truth <= threshold))
    pct = 100.0 * n_est / n_truth if n_truth > 0 else float("nan")
    return pct, n_est, n_truth


def parameter_errors(
    p_est: ParamVector, p_truth: ParamVector
) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Signed (psi, a, translation, deltas) differences, estimate minus truth."""
    if p_est.deltas.size != p_truth.deltas.size:
        raise ValueError(
            f"estimate has {p_est.deltas.size} offsets, truth has {p_truth.deltas.size}"
        )
    return (
        wrap_angle(p_est.psi - p_truth.psi),
        p_est.a - p_truth.a,
        np.array([p_est.x_o - p_truth.x_o, p_est.y_o - p_truth.y_o, p_est.z_o - p_truth.z_o]),
        p_est.deltas - p_truth.deltas,
    )


def frame_metrics(
    p_est: ParamVector,
    p_truth: ParamVector,
    cloud: PointCloud | np.ndarray,
    config: ConductorConfig,
    solve_time: float = 0.0,
    threshold: float = EXPLAIN_THRESHOLD,
) -> FrameMetrics:
    """Bundle the accuracy ratio and all parameter errors for one frame."""
    pct, n_est, n_truth = accuracy(p_est, p_truth, cloud, config, threshold)
    psi_e, a_e, t_e, d_e = parameter_errors(p_est, p_truth)
    n_pts = len(cloud) if isinstance(cloud, PointCloud) else np.asarray(cloud).shape[0]
    return FrameMetrics(
        accuracy_pct=pct,
        explained_est=n_est,
        explained_truth=n_truth,
        over_explained=n_est > n_truth,
        psi_error=psi_e,
        a_error=a_e,
        translation_error=t_e,
        delta_errors=d_e,
        n_pts=int(n_pts),
        solve_time=solve_time,
    )


@dataclass(frozen=True)
class FrameRecord:
    """One raw study datum: which run and frame produced which metrics."""

    n_outliers: int
    repeat: int
    frame: int
    in_window: bool
    metrics: FrameMetrics
    per_start_times: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FailedRun:
    """A run whose solver died, kept so failures stay visible."""

    n_outliers: int
    repeat: int
    frame: int | None
    message: str


@dataclass(frozen=True)
class StudyRow:
    """One sensitivity-study table row: aggregates over a window of frames.

    Means and stds of the parameter errors are signed, matching how the
    study table reports them; take absolute values from the raw records
    when a magnitude is needed.
    """

    n_outliers: int
    n_runs: int
    n_failed: int
    n_pts_mean: float
    n_pts_std: float
    dt_ms_mean: float
    dt_ms_std: float
    acc_mean: float
    acc_std: float
    psi_e_mean: float
    psi_e_std: float
    a_e_mean: float
    a_e_std: float


def _moments(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return float("nan"), float("nan")
    return float(np.mean(x)), float(np.std(x))


def aggregate_records(records: list[FrameRecord], n_outliers: int, n_failed: int) -> StudyRow:
    """Fold the in-window frame records of one study cell into a table row.

    Statistics are over per-frame values pooled across repeats. Frames
    with undefined accuracy are dropped from the accuracy moments only.
    """
    window = [r for r in records if r.in_window and r.n_outliers == n_outliers]
    if not window:
        raise ValueError(f"no in-window records for n_outliers={n_outliers}")
    acc = np.array([r.metrics.accuracy_pct for r in window])
    acc = acc[~np.isnan(acc)]
    acc_m, acc_s = _moments(acc)
    psi_m, psi_s = _moments(np.array([r.metrics.psi_error for r in window]))
    a_m, a_s = _moments(np.array([r.metrics.a_error for r in window]))
    pts_m, pts_s = _moments(np.array([float(r.metrics.n_pts) for r in window]))
    dt_m, dt_s = _moments(np.array([r.metrics.solve_time * 1e3 for r in window]))
    repeats = {r.repeat for r in window}
    return StudyRow(
        n_outliers=n_outliers,
        n_runs=len(repeats),
        n_failed=n_failed,
        n_pts_mean=pts_m,
        n_pts_std=pts_s,
        dt_ms_mean=dt_m,
        dt_ms_std=dt_s,
        acc_mean=acc_m,
        acc_std=acc_s,
        psi_e_mean=psi_m,
        psi_e_std=psi_s,
        a_e_mean=a_m,
        a_e_std=a_s,
    )


@dataclass(frozen=True)
class StudyResult:
    """Table rows plus the raw per-frame log they were computed from."""

    rows: list[StudyRow]
    records: list[FrameRecord]
    failures: list[FailedRun]


def sensitivity_study(
    scenario_template: Scenario,
    outlier_counts: list[int],
    n_repeats: int,
    settings: EstimatorSettings = EstimatorSettings(),
    prior_sigma: np.ndarray | None = None,
    window: int = STUDY_WINDOW,
    base_seed: int = 0,
) -> StudyResult:
    """Tracking performance versus clutter volume.

    For each outlier count, runs n_repeats independent sequences of the
    template scenario; each repeat gets a fresh simulation seed and a
    random initial prior drawn around the truth. Only the last `window`
    frames of each run enter the table statistics (the lead-in is
    tracking warm-up). Failed runs are recorded, never silently dropped.
    """
    if n_repeats < 1:
        raise ValueError(f"n_repeats must be >= 1, got {n_repeats}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if not outlier_counts:
        raise ValueError("need at least one outlier count")
    config = scenario_template.config
    if prior_sigma is None:
        prior_sigma = default_prior_sigma(config)

    master = np.random.default_rng(base_seed)
    rows: list[StudyRow] = []
    records: list[FrameRecord] = []
    failures: list[FailedRun] = []
    for n_o in outlier_counts:
        n_failed = 0
        for rep in range(n_repeats):
            sim_seed, prior_seed, solver_seed = (
                int(v) for v in master.integers(0, 2**31 - 1, size=3)
            )
            scenario = replace(scenario_template, n_outliers=n_o, seed=sim_seed)
            frames = generate_sequence(scenario)
            prior0 = random_prior(
                scenario.truth, prior_sigma, np.random.default_rng(prior_seed)
            )
            run_settings = replace(settings, seed=solver_seed)
            try:
                results = track_sequence(
                    [f.cloud for f in frames], prior0, config, run_settings
                )
            except SolverError as exc:
                n_failed += 1
                failures.append(
                    FailedRun(n_outliers=n_o, repeat=rep, frame=exc.frame, message=str(exc))
                )
                continue
            first_window = len(frames) - window
            for t, (frame, result) in enumerate(zip(frames, results)):
                m = frame_metrics(
                    result.p, scenario.truth, frame.cloud, config, result.solve_time
                )
                records.append(
                    FrameRecord(
                        n_outliers=n_o,
                        repeat=rep,
                        frame=t,
                        in_window=t >= first_window,
                        metrics=m,
                        per_start_times=result.per_start_times,
                    )
                )
        rows.append(aggregate_records(records, n_o, n_failed))
    return StudyResult(rows=rows, records=records, failures=failures)
