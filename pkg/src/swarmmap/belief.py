"""Per-cell Bayesian beliefs over weed counts, entropy, and information gain.

Each cell carries a knowledge vector: a distribution over the possible true
counts ``0..n_w``.  Natural logarithms are used throughout, so entropies and
the mapped threshold are in nats.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sensor import SensorModel

log = logging.getLogger(__name__)

NORM_TOL = 1e-9


def entropy_of(probs: np.ndarray) -> float:
    """Shannon entropy in nats, with the 0*ln(0) = 0 convention."""
    p = np.asarray(probs, dtype=float)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def entropy_rows(probs: np.ndarray) -> np.ndarray:
    """Entropy of each row of a (k, n_w+1) matrix of distributions."""
    p = np.asarray(probs, dtype=float)
    safe = np.where(p > 0.0, p, 1.0)
    return -np.sum(p * np.log(safe), axis=-1)


def mapped_threshold(n_w: int) -> float:
    """Entropy level below which a cell counts as mapped.

    This is the entropy of a two-alternative belief at odds (n_w-1):1, i.e.
    the point where only two candidate counts remain and one dominates.
    """
    if n_w < 1:
        raise ValueError(f"n_w must be >= 1, got {n_w}")
    a = (n_w - 1) / n_w
    b = 1 / n_w
    h = -b * np.log(b)
    if a > 0:
        h -= a * np.log(a)
    return float(h)


@dataclass(frozen=True)
class KnowledgeVector:
    """Belief over the true weed count of one cell."""

    probs: np.ndarray
    entropy: float
    mapped: bool

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "KnowledgeVector":
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise ValueError("knowledge vector needs at least two entries")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > NORM_TOL:
            raise ValueError("knowledge vector is not a distribution")
        probs = probs.copy()
        probs.setflags(write=False)
        h = entropy_of(probs)
        return cls(probs=probs, entropy=h, mapped=h <= mapped_threshold(probs.size - 1))

    @property
    def n_w(self) -> int:
        return self.probs.size - 1

    def argmax(self) -> int:
        """Most likely count; ties resolve to the lowest count."""
        return int(np.argmax(self.probs))


def uniform_prior(n_w: int) -> KnowledgeVector:
    """The no-knowledge belief: every count 0..n_w equally likely."""
    if n_w < 1:
        raise ValueError(f"n_w must be >= 1, got {n_w}")
    return KnowledgeVector.from_probs(np.full(n_w + 1, 1.0 / (n_w + 1)))


def is_mapped(kv: KnowledgeVector, threshold: float) -> bool:
    return kv.entropy <= threshold


def bayes_update(kv: KnowledgeVector, model: SensorModel, o: int) -> KnowledgeVector:
    """Condition a belief on one observation ``o`` drawn from the sensor.

    An observation with zero predictive probability under the current belief
    cannot be conditioned on; it is logged and the belief returned unchanged.
    """
    if not 0 <= o <= model.n_w + 1:
        raise ValueError(f"observation {o} outside [0, {model.n_w + 1}]")
    likelihood = model.table[o]
    weighted = kv.probs * likelihood
    denom = weighted.sum()
    if denom <= 0.0:
        log.warning("impossible observation o=%d under current belief; skipped", o)
        return kv
    return KnowledgeVector.from_probs(weighted / denom)


def bayes_update_rows(
    probs: np.ndarray, likelihood: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Bayes step for many beliefs and one shared observation.

    Returns the posterior rows and a mask of rows that could be updated
    (zero-denominator rows are returned unchanged and flagged False).
    """
    weighted = probs * likelihood
    denom = weighted.sum(axis=-1)
    ok = denom > 0.0
    weighted[ok] /= denom[ok, None]
    weighted[~ok] = probs[~ok]
    return weighted, ok


def information_gain(kv: KnowledgeVector, model: SensorModel) -> float:
    """Expected entropy drop from one more observation of the cell."""
    return float(information_gain_rows(kv.probs[None, :], model.table)[0])


def information_gain_rows(probs: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Vectorized information gain for each row of a (k, n_w+1) matrix.

    Uses H(W) - H(W|O) with H(W|O) expanded over the joint: for joint
    m(o, w) = T(o, w) p(w) and predictive q(o) = sum_w m(o, w),
    H(W|O) = -sum m*ln(m) + sum q*ln(q).  Observations with zero predictive
    probability contribute nothing.
    """
    p = np.asarray(probs, dtype=float)
    joint = table[None, :, :] * p[:, None, :]  # (k, O, W)
    q = joint.sum(axis=2)  # (k, O)
    safe_joint = np.where(joint > 0.0, joint, 1.0)
    safe_q = np.where(q > 0.0, q, 1.0)
    h_joint = -np.sum(joint * np.log(safe_joint), axis=(1, 2))
    h_q = -np.sum(q * np.log(safe_q), axis=1)
    h_cond = h_joint - h_q
    ig = entropy_rows(p) - h_cond
    return np.maximum(ig, 0.0)


class BeliefMap:
    """One agent's grid of knowledge vectors with latched mapped flags.

    The mapped flag latches: once a cell's entropy has crossed below the
    threshold it stays marked even if later observations raise the entropy
    again.  ``counts`` records how many observations were incorporated per
    cell (own and relayed alike).
    """

    def __init__(
        self,
        probs: np.ndarray,
        entropy: np.ndarray,
        mapped: np.ndarray,
        counts: np.ndarray,
        threshold: float,
    ):
        self.probs = probs
        self.entropy = entropy
        self.mapped = mapped
        self.counts = counts
        self.threshold = threshold

    @classmethod
    def uniform(cls, c: int, n_w: int) -> "BeliefMap":
        probs = np.full((c, c, n_w + 1), 1.0 / (n_w + 1))
        entropy = np.full((c, c), np.log(n_w + 1))
        mapped = np.zeros((c, c), dtype=bool)
        counts = np.zeros((c, c), dtype=np.int64)
        return cls(probs, entropy, mapped, counts, mapped_threshold(n_w))

    @property
    def c(self) -> int:
        return self.probs.shape[0]

    @property
    def n_w(self) -> int:
        return self.probs.shape[2] - 1

    def kv_at(self, x: int, y: int) -> KnowledgeVector:
        """Snapshot of one cell; ``mapped`` reflects the latched flag."""
        return KnowledgeVector(
            probs=self.probs[x, y].copy(),
            entropy=float(self.entropy[x, y]),
            mapped=bool(self.mapped[x, y]),
        )

    def update(self, x: int, y: int, model: SensorModel, o: int) -> bool:
        """Incorporate one observation of cell (x, y); returns False if skipped."""
        p = self.probs[x, y]
        weighted = p * model.table[o]
        denom = weighted.sum()
        if denom <= 0.0:
            log.warning(
                "impossible observation o=%d at cell (%d, %d); skipped", o, x, y
            )
            return False
        post = weighted / denom
        self.probs[x, y] = post
        h = entropy_of(post)
        self.entropy[x, y] = h
        if h <= self.threshold:
            self.mapped[x, y] = True
        self.counts[x, y] += 1
        return True

    def argmax_grid(self) -> np.ndarray:
        """Most likely count per cell (ties to the lowest count)."""
        return np.argmax(self.probs, axis=2)

    def dump(self, path: str | Path) -> None:
        """Write one line per cell: x, y, argmax, entropy, mapped, count."""
        amax = self.argmax_grid()
        with Path(path).open("w") as fh:
            fh.write("# x,y,w_map,entropy,mapped,observations\n")
            for x in range(self.c):
                for y in range(self.c):
                    fh.write(
                        f"{x},{y},{amax[x, y]},{float(self.entropy[x, y])!r},"
                        f"{int(self.mapped[x, y])},{self.counts[x, y]}\n"
                    )
