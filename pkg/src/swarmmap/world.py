"""Ground truth generation: a square field of cells with weed patches.

Weeds appear in a few dense square patches (Gaussian profile, thickest in
the middle) plus a scattering of isolated weedy cells.  Everything else is
weed free.  Positions are measured in cell units throughout; one cell has
physical side ``cell_side`` meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class FieldGenerationError(RuntimeError):
    """Raised when patch placement cannot satisfy the layout constraints."""


@dataclass(frozen=True)
class WorldConfig:
    """Static world geometry and motion/communication constants.

    Flight altitude is abstracted away: one observation covers exactly one
    cell, which holds for any altitude whose camera footprint spans the cell
    (e.g. at least half the cell side for a 90-degree aperture).
    """

    c: int = 50
    cell_side: float = 4.0
    n_w: int = 12
    c_p: int = 4
    n_p: int = 7
    c_i: int = 40
    cruise_speed: float = 0.4  # m/s; defaults to 0.1 * cell_side
    comm_range_cells: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if self.c_p * self.n_p**2 + self.c_i > self.c**2:
            raise ValueError("weedy cells would exceed the field size")
        if self.cruise_speed <= 0:
            raise ValueError("cruise_speed must be > 0")
        if self.c_p > 0 and self.n_p > self.c:
            raise ValueError("patch side exceeds field side")

    @property
    def speed_cells(self) -> float:
        """Cruise speed in cell units per second."""
        return self.cruise_speed / self.cell_side

    @property
    def t_1(self) -> float:
        """Seconds for a single agent to sweep every cell once."""
        return self.c**2 * self.cell_side / self.cruise_speed

    def t_n(self, n_agents: int) -> float:
        """Seconds for ``n_agents`` to sweep the field once, ideally split."""
        return self.t_1 / n_agents


@dataclass(frozen=True)
class FieldTruth:
    """Immutable ground truth: weed count per cell and patch layout."""

    c: int
    cell_side: float
    n_w: int
    weeds: np.ndarray  # (c, c) ints, indexed [x, y]
    patch_centers: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.weeds.setflags(write=False)

    @property
    def weedy_cells(self) -> int:
        return int(np.count_nonzero(self.weeds))


def generate_field(config: WorldConfig, rng: np.random.Generator) -> FieldTruth:
    """Place weed patches and isolated weeds at random on an empty field.

    Patches are axis-aligned n_p x n_p squares, fully inside the field and
    non-overlapping (rejection sampling).  Within a patch the count falls off
    with distance from the patch centre as a Gaussian with spread n_p/4 plus
    unit-normal noise, clamped to [1, n_w] so every patch cell has some weed.
    Isolated cells land uniformly outside the patches with a uniform count in
    {1..n_w}.
    """
    c, n_p = config.c, config.n_p
    weeds = np.zeros((c, c), dtype=np.int64)
    in_patch = np.zeros((c, c), dtype=bool)
    centers: list[tuple[float, float]] = []

    max_attempts = 200 * max(config.c_p, 1)
    placed = 0
    attempts = 0
    origins: list[tuple[int, int]] = []
    while placed < config.c_p:
        if attempts >= max_attempts:
            raise FieldGenerationError(
                f"could not place {config.c_p} non-overlapping patches "
                f"after {attempts} attempts; retry with another seed"
            )
        attempts += 1
        ox = int(rng.integers(0, c - n_p + 1))
        oy = int(rng.integers(0, c - n_p + 1))
        if any(abs(ox - px) < n_p and abs(oy - py) < n_p for px, py in origins):
            continue
        origins.append((ox, oy))
        placed += 1

    sigma_p = n_p / 4.0
    for ox, oy in origins:
        cx = ox + (n_p - 1) / 2.0
        cy = oy + (n_p - 1) / 2.0
        centers.append((cx, cy))
        for x in range(ox, ox + n_p):
            for y in range(oy, oy + n_p):
                d2 = (x - cx) ** 2 + (y - cy) ** 2
                base = config.n_w * math.exp(-d2 / (2.0 * sigma_p**2))
                w = round(base + rng.standard_normal())
                weeds[x, y] = min(max(w, 1), config.n_w)
                in_patch[x, y] = True

    free = np.flatnonzero(~in_patch.ravel())
    if config.c_i > free.size:
        raise FieldGenerationError("not enough free cells for isolated weeds")
    if config.c_i:
        chosen = rng.choice(free, size=config.c_i, replace=False)
        counts = rng.integers(1, config.n_w + 1, size=config.c_i)
        xs, ys = np.unravel_index(chosen, (c, c))
        weeds[xs, ys] = counts

    return FieldTruth(
        c=c,
        cell_side=config.cell_side,
        n_w=config.n_w,
        weeds=weeds,
        patch_centers=centers,
    )


def travel_time(
    frm: tuple[float, float], to: tuple[float, float], config: WorldConfig
) -> float:
    """Seconds to fly between two cell centres at cruise speed."""
    dist_cells = math.hypot(to[0] - frm[0], to[1] - frm[1])
    return dist_cells * config.cell_side / config.cruise_speed


def chebyshev_ring(center: tuple[int, int], d: int, c: int) -> list[tuple[int, int]]:
    """In-field cells at Chebyshev distance exactly ``d`` from ``center``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    cx, cy = center
    out = []
    for x in range(cx - d, cx + d + 1):
        for y in range(cy - d, cy + d + 1):
            if max(abs(x - cx), abs(y - cy)) != d:
                continue
            if 0 <= x < c and 0 <= y < c:
                out.append((x, y))
    return out


def dump_field(truth: FieldTruth, path: str | Path) -> None:
    """Write the field as a text grid with a config header line."""
    with Path(path).open("w") as fh:
        fh.write(
            f"# c={truth.c} cell_side={truth.cell_side!r} n_w={truth.n_w} "
            f"patches={len(truth.patch_centers)}\n"
        )
        for x in range(truth.c):
            fh.write(" ".join(str(int(v)) for v in truth.weeds[x]) + "\n")


def load_field(path: str | Path) -> FieldTruth:
    """Read a field written by :func:`dump_field`."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing header line")
        meta = dict(kv.split("=", 1) for kv in header[1:].split())
        rows = [[int(v) for v in line.split()] for line in fh if line.strip()]
    c = int(meta["c"])
    weeds = np.array(rows, dtype=np.int64)
    if weeds.shape != (c, c):
        raise ValueError(f"{path}: grid shape {weeds.shape} does not match c={c}")
    return FieldTruth(
        c=c,
        cell_side=float(meta["cell_side"]),
        n_w=int(meta["n_w"]),
        weeds=weeds,
    )
