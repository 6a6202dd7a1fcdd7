"""Episode metric suite: grasp accuracy, search latency, and outcome rates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mission import EpisodeResult, Outcome


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate over one batch of episodes.

    Grasp accuracy (GA) is the Euclidean error between the executed grasp
    center and the ground-truth best center, over runs that reached a
    decision; search-to-grasp latency (SGL) is simulated seconds from episode
    start to the execute decision. CFGR/OSF/CIF plus the miss and timeout
    fractions partition all runs.
    """

    n_runs: int
    n_decided: int
    ga_mean_cm: float | None
    ga_std_cm: float | None
    sgl_mean_s: float | None
    cfgr: float
    osf: float
    cif: float
    miss_fraction: float
    timeout_fraction: float
    latency_p50_ms: float | None
    latency_p90_ms: float | None
    latency_p99_ms: float | None

    def outcome_fractions(self) -> dict:
        return {
            "cfgr": self.cfgr,
            "cif": self.cif,
            "osf": self.osf,
            "miss": self.miss_fraction,
            "timeout": self.timeout_fraction,
        }


def compute_metrics(results: list[EpisodeResult]) -> MetricsReport:
    """Aggregate episode results; population std for GA, percentiles for latency."""
    if not results:
        raise ValueError("compute_metrics needs at least one episode result")
    n = len(results)

    errors = [r.grasp_error for r in results if r.grasp_error is not None]
    latencies = [r.decision_time_s for r in results if r.decision_time_s is not None]
    cycle_times = [t for r in results for t in r.cycle_times_ms]

    counts = {outcome: 0 for outcome in Outcome}
    for r in results:
        counts[r.outcome] += 1

    ga_mean = ga_std = None
    if errors:
        errors_cm = 100.0 * np.asarray(errors)
        ga_mean = float(errors_cm.mean())
        ga_std = float(errors_cm.std())

    p50 = p90 = p99 = None
    if cycle_times:
        arr = np.asarray(cycle_times)
        p50, p90, p99 = (float(np.percentile(arr, q)) for q in (50, 90, 99))

    return MetricsReport(
        n_runs=n,
        n_decided=len(errors),
        ga_mean_cm=ga_mean,
        ga_std_cm=ga_std,
        sgl_mean_s=float(np.mean(latencies)) if latencies else None,
        cfgr=counts[Outcome.SUCCESS] / n,
        osf=counts[Outcome.SEARCH_FAILURE] / n,
        cif=counts[Outcome.COLLISION_FAILURE] / n,
        miss_fraction=counts[Outcome.GRASP_MISS] / n,
        timeout_fraction=counts[Outcome.TIMEOUT] / n,
        latency_p50_ms=p50,
        latency_p90_ms=p90,
        latency_p99_ms=p99,
    )


def format_report(name: str, report: MetricsReport) -> str:
    def fmt(value, suffix=""):
        return "n/a" if value is None else f"{value:.2f}{suffix}"

    lines = [
        f"[{name}] N={report.n_runs} decided={report.n_decided}",
        f"  CFGR {100 * report.cfgr:.1f}%  CIF {100 * report.cif:.1f}%  "
        f"OSF {100 * report.osf:.1f}%  miss {100 * report.miss_fraction:.1f}%  "
        f"timeout {100 * report.timeout_fraction:.1f}%",
        f"  GA {fmt(report.ga_mean_cm)} +/- {fmt(report.ga_std_cm)} cm   "
        f"SGL {fmt(report.sgl_mean_s, ' s')}",
        f"  compute/cycle p50 {fmt(report.latency_p50_ms, ' ms')}  "
        f"p90 {fmt(report.latency_p90_ms, ' ms')}  p99 {fmt(report.latency_p99_ms, ' ms')}",
    ]
    return "\n".join(lines)
