"""Run evaluation: aggregated maps, MSE, coverage time, and correlation.

The swarm-level map takes, per cell, the knowledge vector of the agent that
is most certain about it (lowest entropy; ties to the lowest agent id), and
reads off the most likely count (ties to the lowest count).  Times are also
reported normalized by t_n, the ideal time for the group to sweep the field
once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .belief import BeliefMap
from .world import FieldTruth

CSV_HEADER = "run_id,strategy,N,R,seed,time_s,time_over_tn,mse,coverage_fraction,pearson_r"


@dataclass(frozen=True)
class MetricsRecord:
    time_s: float
    time_over_tn: float
    mse: float
    coverage_fraction: float
    pearson_r: float | None


def aggregate_from_arrays(
    entropy: np.ndarray, probs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Min-entropy aggregation over stacked per-agent maps.

    ``entropy`` is (n_agents, c, c) and ``probs`` (n_agents, c, c, n_w+1).
    Returns the aggregated count grid and the winning entropies.
    """
    best = np.argmin(entropy, axis=0)  # ties resolve to the lowest agent id
    sel_entropy = np.take_along_axis(entropy, best[None], axis=0)[0]
    sel_probs = np.take_along_axis(probs, best[None, :, :, None], axis=0)[0]
    return np.argmax(sel_probs, axis=2), sel_entropy


def aggregate_map(maps: Sequence[BeliefMap]) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate count map and entropy over per-agent belief maps."""
    if not maps:
        raise ValueError("need at least one belief map")
    entropy = np.stack([m.entropy for m in maps])
    probs = np.stack([m.probs for m in maps])
    return aggregate_from_arrays(entropy, probs)


def map_mse(w_map: np.ndarray, truth: FieldTruth | np.ndarray) -> float:
    """Mean squared error of a count grid against the ground truth."""
    weeds = truth.weeds if isinstance(truth, FieldTruth) else truth
    if w_map.shape != weeds.shape:
        raise ValueError(f"shape mismatch {w_map.shape} vs {weeds.shape}")
    diff = w_map.astype(float) - weeds.astype(float)
    return float(np.mean(diff * diff))


def coverage_time(first_visit: np.ndarray) -> float | None:
    """Instant the last unseen cell was first visited, or None while pending.

    ``first_visit`` holds per-cell first-visit times, +inf for unvisited.
    """
    latest = float(np.max(first_visit))
    return None if math.isinf(latest) else latest


def coverage_fraction(first_visit: np.ndarray) -> float:
    return float(np.mean(np.isfinite(first_visit)))


def weed_observation_correlation(
    weeds: np.ndarray, counts: np.ndarray
) -> float | None:
    """Pearson correlation between true counts and observation effort.

    Returns None (an undefined marker, rendered as a missing value) when
    either variable has zero variance.
    """
    x = np.asarray(weeds, dtype=float).ravel()
    y = np.asarray(counts, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("grids must have matching shapes")
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(np.dot(xm, xm))
    syy = float(np.dot(ym, ym))
    if sxx <= 0.0 or syy <= 0.0:
        return None
    return float(np.dot(xm, ym) / math.sqrt(sxx * syy))


def format_csv_row(
    run_id: str,
    strategy: str,
    n_agents: int,
    comm_range: float,
    seed: int,
    rec: MetricsRecord,
) -> str:
    r_txt = "inf" if math.isinf(comm_range) else f"{comm_range:g}"
    pearson = "" if rec.pearson_r is None else repr(rec.pearson_r)
    return (
        f"{run_id},{strategy},{n_agents},{r_txt},{seed},{rec.time_s!r},"
        f"{rec.time_over_tn!r},{rec.mse!r},{rec.coverage_fraction!r},{pearson}"
    )


def write_run_csv(
    path: str | Path,
    run_id: str,
    strategy: str,
    n_agents: int,
    comm_range: float,
    seed: int,
    records: Sequence[MetricsRecord],
) -> None:
    with Path(path).open("w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(
                format_csv_row(run_id, strategy, n_agents, comm_range, seed, rec) + "\n"
            )


def write_run_summary(
    path: str | Path,
    run_id: str,
    t_n: float,
    coverage_time_s: float | None,
    final_mse: float,
    extra: dict | None = None,
) -> None:
    payload = {
        "run_id": run_id,
        "t_n_s": t_n,
        "coverage_time_s": coverage_time_s,
        "coverage_time_over_tn": None if coverage_time_s is None else coverage_time_s / t_n,
        "final_mse": final_mse,
    }
    if extra:
        payload.update(extra)
    with Path(path).open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
