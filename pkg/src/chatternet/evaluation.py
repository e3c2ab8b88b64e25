"""Evaluation metrics and report emission.

Rank correlations use the tie-corrected definitions (Kendall tau-b,
Spearman over average ranks); degenerate inputs (all ties / zero rank
variance) yield NaN, reported as undefined rather than raising.  The
step-wise tau bins discussion sizes into floor(size / k) labels before
correlating; predicted log-chatter is mapped back to a count with
expm1 and rounded first.

MAPE shares the epsilon-guarded denominator of the training loss and is
reported both on the log-chatter scale (primary) and on raw counts
(secondary column).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from chatternet.errors import ConfigurationError, DataError
from chatternet.training import PredictionRecord

STEP_BIN_SIZE = 10

METRICS_CSV_COLUMNS = ("run_id", "variant", "m", "delta_pred_days", "subreddit",
                       "n", "mape", "kendall_tau", "spearman_rho", "stepwise_tau",
                       "mape_raw")


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ConfigurationError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def mape(y_true, y_pred, epsilon: float = 1e-7) -> float:
    """Mean absolute percentage error with an epsilon-guarded denominator."""
    t, p = _paired(y_true, y_pred)
    if t.size < 1:
        raise ConfigurationError("mape needs at least one sample")
    return float(100.0 * np.mean(np.abs(t - p) / (t + epsilon)))


def kendall_tau(x, y) -> float:
    """Kendall tau-b; NaN when every pair ties on either side."""
    a, b = _paired(x, y)
    if a.size < 2:
        raise ConfigurationError("kendall_tau needs at least two samples")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = sps.kendalltau(a, b, variant="b")
    return float(result.statistic)


def spearman_rho(x, y) -> float:
    """Spearman rank correlation (average ranks); NaN on zero rank variance."""
    a, b = _paired(x, y)
    if a.size < 2:
        raise ConfigurationError("spearman_rho needs at least two samples")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = sps.spearmanr(a, b)
    return float(result.statistic)


def stepwise_labels(sizes, k: int = STEP_BIN_SIZE) -> np.ndarray:
    """floor(size / k) growth-step labels for raw discussion sizes."""
    if k < 1:
        raise ConfigurationError("step bin size must be >= 1")
    arr = np.asarray(sizes)
    if (arr < 0).any():
        raise ConfigurationError("discussion sizes must be nonnegative")
    return (arr // k).astype(np.int64)


def counts_from_chatter(y_pred) -> np.ndarray:
    """Invert the log1p chatter transform to integer counts (rounded, >= 0)."""
    return np.maximum(np.rint(np.expm1(np.asarray(y_pred, dtype=np.float64))), 0.0).astype(np.int64)


def stepwise_tau(true_counts, y_pred, k: int = STEP_BIN_SIZE) -> float:
    """Kendall tau-b over step labels of true vs predicted discussion size."""
    true_labels = stepwise_labels(true_counts, k)
    pred_labels = stepwise_labels(counts_from_chatter(y_pred), k)
    return kendall_tau(true_labels, pred_labels)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class MetricReport:
    mape: float
    kendall_tau: float
    spearman_rho: float
    stepwise_tau: float
    n: int
    mape_raw: float
    per_subreddit: dict[str, "MetricReport"] | None = None


def _report_for(records: list[PredictionRecord], epsilon: float, k: int) -> MetricReport:
    targets = np.array([r.target for r in records])
    preds = np.array([r.predicted for r in records])
    counts = np.array([r.raw_count for r in records])
    if len(records) >= 2:
        tau = kendall_tau(targets, preds)
        rho = spearman_rho(targets, preds)
        s_tau = stepwise_tau(counts, preds, k)
    else:
        tau = rho = s_tau = float("nan")
    return MetricReport(
        mape=mape(targets, preds, epsilon),
        kendall_tau=tau,
        spearman_rho=rho,
        stepwise_tau=s_tau,
        n=len(records),
        mape_raw=mape(counts, np.expm1(preds), epsilon),
    )


def build_report(records: list[PredictionRecord], epsilon: float = 1e-7,
                 k: int = STEP_BIN_SIZE, per_subreddit: bool = False,
                 include_warmup: bool = False) -> MetricReport:
    """Aggregate metrics over scored prediction records.

    Warmup-phase records are excluded unless requested; an empty scored set
    is an error.
    """
    scored = [r for r in records if include_warmup or not r.warmup]
    if not scored:
        raise DataError("no scored predictions to report on")
    report = _report_for(scored, epsilon, k)
    if per_subreddit:
        groups: dict[str, list[PredictionRecord]] = {}
        for r in scored:
            groups.setdefault(r.subreddit, []).append(r)
        report.per_subreddit = {
            name: _report_for(rows, epsilon, k) for name, rows in sorted(groups.items())
        }
    return report


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_metrics_csv(path, run_id: str, variant: str, m: int, delta_pred_days: float,
                      report: MetricReport) -> None:
    """Pinned-schema metrics CSV: one ALL row plus per-subreddit rows if present."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_CSV_COLUMNS)

        def emit(name: str, rep: MetricReport) -> None:
            writer.writerow([run_id, variant, m, f"{delta_pred_days:g}", name, rep.n,
                             _fmt(rep.mape), _fmt(rep.kendall_tau), _fmt(rep.spearman_rho),
                             _fmt(rep.stepwise_tau), _fmt(rep.mape_raw)])

        emit("ALL", report)
        for name, rep in (report.per_subreddit or {}).items():
            emit(name, rep)


def write_predictions_csv(path, records: list[PredictionRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["submission_id", "subreddit", "timestamp", "target", "raw_count",
                         "predicted", "potential", "scale", "base", "truncated", "warmup"])
        for r in records:
            writer.writerow([r.submission_id, r.subreddit, r.timestamp, _fmt(r.target),
                             r.raw_count, _fmt(r.predicted), _fmt(r.potential),
                             _fmt(r.scale), _fmt(r.base), int(r.truncated), int(r.warmup)])


def plot_error_scatter(records: list[PredictionRecord], path) -> None:
    """Absolute prediction error against ground-truth chatter."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    scored = [r for r in records if not r.warmup]
    if not scored:
        raise DataError("no scored predictions to plot")
    truth = np.array([r.target for r in scored])
    err = np.abs(np.array([r.predicted for r in scored]) - truth)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(truth, err, s=4, alpha=0.4)
    ax.set_xlabel("ground-truth chatter (log scale count)")
    ax.set_ylabel("absolute error")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
