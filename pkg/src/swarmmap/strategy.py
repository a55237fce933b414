"""Target selection: information-gain random walks and the two baselines.

An agent picks its next cell from a local candidate set (ring of Chebyshev
distance 1, falling back to distance 2, then to a relocation move across
already-mapped cells).  Candidates are weighted by relative information gain
discounted by the chance that nearby peers pick the same cell, then chosen
greedily, proportionally, or through a softmax.  A potential-field walker and
an idealized uniform-coverage sweep serve as baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .belief import BeliefMap, entropy_rows, information_gain_rows, mapped_threshold
from .sensor import SensorModel, sample_observations
from .world import FieldTruth, WorldConfig

IG_GREEDY = "ig-g"
IG_RANDOM = "ig-r"
IG_SOFTMAX = "ig-s"
POTENTIAL_FIELD = "pf"
PREPLANNED = "preplanned"

KINDS = (IG_GREEDY, IG_RANDOM, IG_SOFTMAX, POTENTIAL_FIELD, PREPLANNED)

# Ring offsets at Chebyshev distance 1 and 2, row-major order.
_RING1 = np.array(
    [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)],
    dtype=np.int64,
)
_RING2 = np.array(
    [
        (dx, dy)
        for dx in range(-2, 3)
        for dy in range(-2, 3)
        if max(abs(dx), abs(dy)) == 2
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class StrategyConfig:
    kind: str
    gamma: float = 1.0
    sigma_a: float = 2.0
    sigma_r: float = 8.0
    beta: float = 1.0
    passes: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == IG_SOFTMAX and self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.kind == POTENTIAL_FIELD:
            if self.sigma_a < 0 or self.sigma_r < 0:
                raise ValueError("sigma_a and sigma_r must be >= 0")
            if self.beta <= 0:
                raise ValueError("beta must be > 0")
        if self.kind == PREPLANNED and self.passes < 1:
            raise ValueError("passes must be >= 1")

    def label(self) -> str:
        """Stable name used in run ids and CSV rows."""
        if self.kind == IG_SOFTMAX:
            g = int(self.gamma) if float(self.gamma).is_integer() else self.gamma
            return f"ig-s{g}"
        if self.kind == POTENTIAL_FIELD:
            return f"pf-a{self.sigma_a:g}-r{self.sigma_r:g}"
        return self.kind


@dataclass
class CandidateSet:
    cells: np.ndarray  # (k, 2) int cell coordinates
    provenance: str  # ring1 | ring2 | relocation | fallback


def _ring_cells(cell: tuple[int, int], offsets: np.ndarray, c: int) -> np.ndarray:
    cells = offsets + np.asarray(cell, dtype=np.int64)
    ok = (cells >= 0).all(axis=1) & (cells < c).all(axis=1)
    return cells[ok]


def candidate_cells(
    cell: tuple[int, int],
    mapped: np.ndarray,
    targeted: np.ndarray,
    c: int,
) -> CandidateSet:
    """Candidate targets around ``cell`` per the two-ring fallback rule.

    ``mapped`` is the agent's latched mapped grid and ``targeted`` a boolean
    grid of cells currently claimed by live peers.  Valid cells are in-field,
    unmapped, and unclaimed.  If neither ring offers a valid cell the agent
    relocates across mapped ring-2 cells (or, degenerately, any ring-2 cell).
    """
    ring1 = _ring_cells(cell, _RING1, c)
    free1 = ~mapped[ring1[:, 0], ring1[:, 1]] & ~targeted[ring1[:, 0], ring1[:, 1]]
    if free1.any():
        return CandidateSet(ring1[free1], "ring1")
    ring2 = _ring_cells(cell, _RING2, c)
    free2 = ~mapped[ring2[:, 0], ring2[:, 1]] & ~targeted[ring2[:, 0], ring2[:, 1]]
    if free2.any():
        return CandidateSet(ring2[free2], "ring2")
    relocate = mapped[ring2[:, 0], ring2[:, 1]]
    if relocate.any():
        return CandidateSet(ring2[relocate], "relocation")
    return CandidateSet(ring2, "fallback")


def relative_ig_probabilities(igs: np.ndarray) -> np.ndarray:
    """Selection probabilities proportional to information gain.

    A candidate set whose gains all vanish (everything effectively mapped)
    falls back to the uniform distribution.
    """
    igs = np.asarray(igs, dtype=float)
    total = igs.sum()
    if total <= 0.0:
        return np.full(igs.size, 1.0 / igs.size)
    return igs / total


def social_utility(
    candidates: np.ndarray,
    p_ig: np.ndarray,
    peer_cells: np.ndarray,
    peer_probs: list[dict[tuple[int, int], float]],
) -> np.ndarray:
    """Discount own selection probabilities by peers' estimated choices.

    For each candidate cell, every peer whose last known cell lies within
    Chebyshev distance 2 of it contributes a factor (1 - P_peer(cell)); a
    peer whose estimated candidate set excludes the cell contributes 1.
    """
    u = p_ig.astype(float).copy()
    if len(peer_probs) == 0:
        return u
    peer_cells = np.asarray(peer_cells, dtype=np.int64).reshape(-1, 2)
    for k in range(candidates.shape[0]):
        cell = (int(candidates[k, 0]), int(candidates[k, 1]))
        cheb = np.max(np.abs(peer_cells - candidates[k]), axis=1)
        for j in np.flatnonzero(cheb <= 2):
            u[k] *= 1.0 - peer_probs[j].get(cell, 0.0)
    return u


def estimate_peer_probs(
    peer_cell: tuple[int, int],
    mapped: np.ndarray,
    targeted: np.ndarray,
    c: int,
    ig_of_cells,
) -> dict[tuple[int, int], float]:
    """Estimated per-cell selection probabilities of one peer.

    The peer's candidate set is approximated as the valid ring-1 cells around
    its last known cell, evaluated with the estimating agent's own belief;
    an empty estimate yields no claim on any cell.
    """
    ring1 = _ring_cells(peer_cell, _RING1, c)
    free = ~mapped[ring1[:, 0], ring1[:, 1]] & ~targeted[ring1[:, 0], ring1[:, 1]]
    cells = ring1[free]
    if cells.shape[0] == 0:
        return {}
    probs = relative_ig_probabilities(ig_of_cells(cells))
    return {(int(x), int(y)): float(p) for (x, y), p in zip(cells, probs)}


def _sample_proportional(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = weights.sum()
    if total <= 0.0:
        return int(rng.integers(weights.size))
    cum = np.cumsum(weights)
    r = rng.random() * total
    return int(min(np.searchsorted(cum, r, side="right"), weights.size - 1))


def select_target(
    utilities: np.ndarray, kind: str, gamma: float, rng: np.random.Generator
) -> int:
    """Pick a candidate index: greedy, utility-proportional, or softmax."""
    u = np.asarray(utilities, dtype=float)
    if kind == IG_GREEDY:
        best = np.flatnonzero(u == u.max())
        return int(best[rng.integers(best.size)])
    if kind == IG_RANDOM:
        return _sample_proportional(u, rng)
    if kind == IG_SOFTMAX:
        w = np.exp(gamma * (u - u.max()))  # shift-invariant, avoids overflow
        return _sample_proportional(w, rng)
    raise ValueError(f"select_target does not handle kind {kind!r}")


# --- potential-field baseline -------------------------------------------------


def _gaussian_pull(vec: np.ndarray, sigma: float) -> np.ndarray:
    """Vector of length 2*exp(-|v| / (2 sigma^2)) along ``vec``."""
    norm = float(np.hypot(vec[0], vec[1]))
    if norm <= 0.0 or sigma <= 0.0:
        return np.zeros(2)
    return (2.0 * math.exp(-norm / (2.0 * sigma**2)) / norm) * vec


def pf_bias_vector(
    pos: np.ndarray,
    cell: tuple[int, int],
    peer_positions: np.ndarray,
    last_obs_w: np.ndarray,
    mapped: np.ndarray,
    n_w: int,
    sigma_a: float,
    sigma_r: float,
) -> np.ndarray:
    """Repulsion from nearby peers plus attraction to recently seen weeds.

    Peers within Chebyshev distance 4 (by cell) repel; unmapped cells within
    Chebyshev distance 2 whose last known observation found weeds attract,
    scaled by the observed count.  A zero sigma disables that force.
    """
    c = mapped.shape[0]
    vec = np.zeros(2)
    peer_positions = np.asarray(peer_positions, dtype=float).reshape(-1, 2)
    if sigma_r > 0.0 and peer_positions.shape[0]:
        peer_cells = np.rint(peer_positions).astype(np.int64)
        cheb = np.max(np.abs(peer_cells - np.asarray(cell)), axis=1)
        for j in np.flatnonzero(cheb <= 4):
            vec += _gaussian_pull(pos - peer_positions[j], sigma_r)
    if sigma_a > 0.0:
        x0, y0 = cell
        for x in range(max(x0 - 2, 0), min(x0 + 3, c)):
            for y in range(max(y0 - 2, 0), min(y0 + 3, c)):
                w_hat = last_obs_w[x, y]
                if w_hat <= 0 or mapped[x, y]:
                    continue
                pull = _gaussian_pull(np.array([x, y], dtype=float) - pos, sigma_a)
                vec += (min(int(w_hat), n_w) / n_w) * pull
    return vec


def wrapped_cauchy_pdf(theta: np.ndarray, p: float) -> np.ndarray:
    """Wrapped Cauchy density on [-pi, pi] with persistence ``p`` in [0, 1)."""
    theta = np.asarray(theta, dtype=float)
    return (1.0 - p**2) / (2.0 * math.pi * (1.0 + p**2 - 2.0 * p * np.cos(theta)))


def pf_persistence(beta: float, bias_norm: float) -> float:
    """Directional persistence grows toward 0.9 with the bias magnitude."""
    return 0.9 * (1.0 - math.exp(-beta * bias_norm))


def pf_select(
    candidates: np.ndarray,
    pos: np.ndarray,
    bias: np.ndarray,
    beta: float,
    rng: np.random.Generator,
) -> int:
    """Sample a candidate with wrapped-Cauchy weights around the bias heading."""
    norm = float(np.hypot(bias[0], bias[1]))
    p = pf_persistence(beta, norm)
    if norm <= 0.0 or p <= 0.0:
        return int(rng.integers(candidates.shape[0]))
    headings = candidates.astype(float) - pos
    dots = headings @ bias
    lens = np.hypot(headings[:, 0], headings[:, 1]) * norm
    cos_theta = np.clip(np.divide(dots, lens, out=np.zeros_like(dots), where=lens > 0), -1.0, 1.0)
    utilities = wrapped_cauchy_pdf(np.arccos(cos_theta), p)
    return _sample_proportional(utilities, rng)


# --- pre-planned uniform-coverage baseline -------------------------------------


def preplanned_baseline_mse(
    field: FieldTruth,
    model: SensorModel,
    passes: int,
    n_agents: int,
    config: WorldConfig,
    rng: np.random.Generator,
) -> list[tuple[float, float]]:
    """MSE timeline of the idealized uniform sweep, without spatial motion.

    Every cell receives one observation per pass; after pass m the map error
    is recorded at time m * t_n.  The initial uniform-belief error is included
    at time 0.
    """
    if passes < 1:
        raise ValueError("passes must be >= 1")
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    t_n = config.t_n(n_agents)
    c = field.c
    bmap = BeliefMap.uniform(c, field.n_w)
    truth = field.weeds.astype(float)
    out = [(0.0, float(np.mean((bmap.argmax_grid() - truth) ** 2)))]
    flat_w = field.weeds.ravel()
    for m in range(1, passes + 1):
        obs = sample_observations(model, flat_w, rng)
        likelihood = model.table[obs]  # (c*c, n_w+1)
        probs = bmap.probs.reshape(c * c, -1)
        weighted = probs * likelihood
        denom = weighted.sum(axis=1)
        ok = denom > 0.0
        weighted[ok] /= denom[ok, None]
        weighted[~ok] = probs[~ok]
        bmap.probs[:] = weighted.reshape(c, c, -1)
        ent = entropy_rows(weighted).reshape(c, c)
        bmap.entropy[:] = ent
        bmap.mapped |= ent <= bmap.threshold
        bmap.counts += ok.reshape(c, c)
        mse = float(np.mean((bmap.argmax_grid() - truth) ** 2))
        out.append((m * t_n, mse))
    return out
