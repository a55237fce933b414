"""Observation model: a confusion table over observed vs. true weed counts.

The table abstracts the detector: ``table[o, w]`` is the probability of
reporting ``o`` weeds in a cell that truly contains ``w``.  Rows run over
observations ``0..n_w+1`` where the last row aggregates every detection
larger than ``n_w``; columns run over true counts ``0..n_w`` and each column
is a probability distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Column sums may drift this far from 1 before a table is rejected.
COLUMN_SUM_TOL = 1e-6


class SensorModelError(ValueError):
    """Raised when a confusion table fails validation."""


@dataclass(frozen=True)
class SensorModel:
    """Validated, immutable column-stochastic confusion table."""

    n_w: int
    table: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if self.n_w < 1:
            raise SensorModelError(f"n_w must be >= 1, got {self.n_w}")
        expected = (self.n_w + 2, self.n_w + 1)
        if table.shape != expected:
            raise SensorModelError(
                f"table shape {table.shape} does not match expected {expected}"
            )
        if np.any(table < -1e-12) or np.any(table > 1 + 1e-12):
            raise SensorModelError("table entries must lie in [0, 1]")
        sums = table.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > COLUMN_SUM_TOL)
        if bad.size:
            w = int(bad[0])
            raise SensorModelError(
                f"column {w} sums to {sums[w]:.8f}, expected 1 within {COLUMN_SUM_TOL}"
            )
        # Snap to exact stochasticity so downstream sums hold to 1e-9.
        table = np.clip(table, 0.0, 1.0)
        table = table / table.sum(axis=0)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        cdf = np.cumsum(table, axis=0)
        cdf[-1, :] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def n_observations(self) -> int:
        """Number of observation classes, including the overshoot row."""
        return self.n_w + 2

    @property
    def overshoot(self) -> int:
        """Index of the aggregated more-than-n_w observation class."""
        return self.n_w + 1


def _normal_cdf(x: float, mu: float, sigma: float) -> float:
    return 0.5 * (1.0 + math.erf((x - mu) / (sigma * math.sqrt(2.0))))


def synthesize_sensor_model(n_w: int, sigma0: float, sigma1: float) -> SensorModel:
    """Build a confusion table from a discretized Gaussian error family.

    Column ``w`` is a Gaussian centred at ``w`` with standard deviation
    ``sigma0 + sigma1 * w``, integrated over unit bins around each count
    ``0..n_w``.  Mass above ``n_w + 1/2`` lands in the overshoot row; mass
    below ``-1/2`` is dropped and the column renormalized.  ``sigma1 > 0``
    makes errors more frequent for larger true counts.
    """
    if n_w < 1:
        raise SensorModelError(f"n_w must be >= 1, got {n_w}")
    if sigma0 <= 0:
        raise SensorModelError(f"sigma0 must be > 0, got {sigma0}")
    if sigma1 < 0:
        raise SensorModelError(f"sigma1 must be >= 0, got {sigma1}")
    table = np.zeros((n_w + 2, n_w + 1))
    for w in range(n_w + 1):
        sigma = sigma0 + sigma1 * w
        for o in range(n_w + 1):
            table[o, w] = _normal_cdf(o + 0.5, w, sigma) - _normal_cdf(o - 0.5, w, sigma)
        table[n_w + 1, w] = 1.0 - _normal_cdf(n_w + 0.5, w, sigma)
    table /= table.sum(axis=0)
    return SensorModel(n_w=n_w, table=table)


def load_sensor_model(path: str | Path) -> SensorModel:
    """Load a confusion table from CSV (rows = observations, optional header)."""
    path = Path(path)
    rows: list[list[float]] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise SensorModelError(
                    f"{path}: line {lineno} is not numeric: {line!r}"
                ) from None
    if not rows:
        raise SensorModelError(f"{path}: no numeric rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SensorModelError(f"{path}: ragged rows with widths {sorted(widths)}")
    table = np.array(rows, dtype=float)
    n_rows, n_cols = table.shape
    if n_rows != n_cols + 1 or n_cols < 2:
        raise SensorModelError(
            f"{path}: shape {table.shape} is not (n_w+2) x (n_w+1) for n_w >= 1"
        )
    return SensorModel(n_w=n_cols - 1, table=table)


def sample_observation(model: SensorModel, w_true: int, rng: np.random.Generator) -> int:
    """Draw one observation from column ``w_true`` of the table."""
    if not 0 <= w_true <= model.n_w:
        raise ValueError(f"w_true={w_true} outside [0, {model.n_w}]")
    u = rng.random()
    return int(np.searchsorted(model._cdf[:, w_true], u, side="right"))


def sample_observations(
    model: SensorModel, w_true: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized :func:`sample_observation` for an array of true counts."""
    w_true = np.asarray(w_true)
    u = rng.random(w_true.shape)
    out = np.empty(w_true.shape, dtype=np.int64)
    for w in range(model.n_w + 1):
        mask = w_true == w
        if np.any(mask):
            out[mask] = np.searchsorted(model._cdf[:, w], u[mask], side="right")
    return out
