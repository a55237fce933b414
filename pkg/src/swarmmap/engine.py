"""Deterministic fixed-tick simulation of the monitoring swarm.

Each tick, in agent-id order: in-transit agents advance toward their target
at cruise speed; agents reaching a target centre observe the cell, update
their own map, announce the observation, and pick the next target; every
in-transit agent then beacons its position and target; finally all queued
messages are delivered and processed (one hop per tick).

Interference is handled by cell reservation instead of velocity-space
avoidance: with unlimited communication a global reservation table arbitrates
same-tick conflicts (lowest agent id wins), while under a finite range agents
only know the targets their neighbours have beaconed.  A stalled agent
abandons its target after five times the nominal travel time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import strategy as strat
from .belief import (
    BeliefMap,
    bayes_update_rows,
    entropy_rows,
    information_gain_rows,
    mapped_threshold,
)
from .comms import BEACON, OBSERVATION, MessageBus, adjacency_matrix
from .metrics import (
    MetricsRecord,
    aggregate_from_arrays,
    map_mse,
    weed_observation_correlation,
)
from .sensor import SensorModel, sample_observation
from .strategy import StrategyConfig
from .world import FieldTruth, WorldConfig

log = logging.getLogger(__name__)

DT = 1.0  # seconds per tick
BEACON_STALENESS_S = 60.0
TIMEOUT_FACTOR = 5.0
_EPS = 1e-9


@dataclass
class SimClock:
    tick: int = 0
    dt: float = DT

    @property
    def now(self) -> float:
        return self.tick * self.dt


@dataclass
class PeerInfo:
    position: tuple[float, float]
    target: tuple[int, int] | None
    last_heard: float


@dataclass
class AgentState:
    """Inspection snapshot of one agent (the engine itself runs on arrays)."""

    id: int
    position: tuple[float, float]
    current_cell: tuple[int, int]
    target_cell: tuple[int, int] | None
    belief: BeliefMap
    peer_registry: dict[int, PeerInfo]
    rng: np.random.Generator


class Simulation:
    """One seeded run: world state, agent state, message flow, and hooks."""

    def __init__(
        self,
        world: WorldConfig,
        field: FieldTruth,
        model: SensorModel,
        strategy: StrategyConfig,
        n_agents: int,
        seed: int,
        trace=None,
    ):
        if n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if n_agents > world.c**2:
            raise ValueError(
                f"cannot place {n_agents} agents on {world.c}x{world.c} distinct cells"
            )
        if not (world.n_w == field.n_w == model.n_w):
            raise ValueError("world, field, and sensor disagree on the count range")
        if strategy.kind == strat.PREPLANNED:
            raise ValueError("the pre-planned baseline does not run in the engine")
        self.world = world
        self.field = field
        self.model = model
        self.strategy = strategy
        self.n = n_agents
        self.seed = seed
        c, n_w = world.c, world.n_w
        self.c = c
        self.n_w = n_w

        placement_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self.agent_rng = [
            np.random.default_rng(np.random.SeedSequence([seed, 2, i]))
            for i in range(n_agents)
        ]
        flat = placement_rng.choice(c * c, size=n_agents, replace=False)
        xs, ys = np.unravel_index(flat, (c, c))
        self.current_cell = np.stack([xs, ys], axis=1).astype(np.int64)
        self.pos = self.current_cell.astype(float)
        self.target = np.full((n_agents, 2), -1, dtype=np.int64)
        self.has_target = np.zeros(n_agents, dtype=bool)
        self.target_set_time = np.zeros(n_agents)
        self.nominal_travel = np.zeros(n_agents)

        # Per-agent belief bank; each agent's BeliefMap is a view into it.
        self.threshold = mapped_threshold(n_w)
        self.probs = np.full((n_agents, c, c, n_w + 1), 1.0 / (n_w + 1))
        self.entropy = np.full((n_agents, c, c), math.log(n_w + 1))
        self.mapped = np.zeros((n_agents, c, c), dtype=bool)
        self.counts = np.zeros((n_agents, c, c), dtype=np.int64)
        self.ig = np.zeros((n_agents, c, c))
        self.ig_valid = np.zeros((n_agents, c, c), dtype=bool)
        self.belief_maps = [
            BeliefMap(
                self.probs[i], self.entropy[i], self.mapped[i], self.counts[i],
                self.threshold,
            )
            for i in range(n_agents)
        ]
        self.last_obs_w = np.full((n_agents, c, c), -1, dtype=np.int16)
        self.last_obs_t = np.full((n_agents, c, c), -math.inf)

        # Peer registry: freshest beacon info per (listener, peer).
        self.reg_time = np.full((n_agents, n_agents), -math.inf)
        self.reg_pos = np.zeros((n_agents, n_agents, 2))
        self.reg_target = np.full((n_agents, n_agents, 2), -1, dtype=np.int64)

        self.reservations_global = math.isinf(world.comm_range_cells)
        self.res_holder = np.full((c, c), -1, dtype=np.int32)
        self.res_cell_of = np.full((n_agents, 2), -1, dtype=np.int64)

        self.bus = MessageBus(n_agents, trace)
        self.union_counts = np.zeros((c, c), dtype=np.int64)
        self.first_visit = np.full((c, c), math.inf)
        self.visited = 0
        self.observations_taken = 0
        self.impossible_observations = 0

        self.clock = SimClock()
        self._started = False
        self._targeted_scratch = np.zeros((c, c), dtype=bool)

    # ------------------------------------------------------------------ tick

    def step(self) -> float:
        """Advance one tick; returns the simulation time it represents."""
        now = self.clock.now
        if self._started:
            arrivals = self._move()
        else:
            arrivals = list(range(self.n))
            self._started = True
        arrived_cells = []
        for i in arrivals:
            arrived_cells.append(self._handle_arrival(i, now))
        if self.reservations_global and len(arrived_cells) != len(set(arrived_cells)):
            raise RuntimeError(f"two agents observed one cell at t={now}")
        self._check_timeouts(now)
        self._send_beacons(now)
        self._deliver(now)
        self.clock.tick += 1
        return now

    def _move(self) -> list[int]:
        idx = np.flatnonzero(self.has_target)
        if idx.size == 0:
            return []
        tgt = self.target[idx].astype(float)
        delta = tgt - self.pos[idx]
        dist = np.hypot(delta[:, 0], delta[:, 1])
        step_len = self.world.speed_cells * DT
        arrive = dist <= step_len + _EPS
        self.pos[idx[arrive]] = tgt[arrive]
        moving = ~arrive
        midx = idx[moving]
        if midx.size:
            self.pos[midx] += delta[moving] * (step_len / dist[moving])[:, None]
        return [int(i) for i in idx[arrive]]

    def _handle_arrival(self, i: int, now: float) -> tuple[int, int]:
        if self.has_target[i]:
            self.current_cell[i] = self.target[i]
            self.has_target[i] = False
            self._release_reservation(i)
        x, y = int(self.current_cell[i, 0]), int(self.current_cell[i, 1])
        if math.isinf(self.first_visit[x, y]):
            self.first_visit[x, y] = now
            self.visited += 1
        w = int(self.field.weeds[x, y])
        o = sample_observation(self.model, w, self.agent_rng[i])
        self.observations_taken += 1
        self._incorporate(np.array([i]), x, y, o, now)
        self.union_counts[x, y] += 1
        self.bus.originate(
            OBSERVATION,
            np.array([i]),
            {"cell": np.array([[x, y]]), "o": np.array([o])},
            now,
        )
        self._select_target(i, now)
        return (x, y)

    def _check_timeouts(self, now: float) -> None:
        overdue = self.has_target & (
            now - self.target_set_time > TIMEOUT_FACTOR * self.nominal_travel + _EPS
        )
        for i in np.flatnonzero(overdue):
            i = int(i)
            log.debug("agent %d timed out on %s", i, self.target[i])
            self.has_target[i] = False
            self._release_reservation(i)
            self.current_cell[i] = np.rint(self.pos[i]).astype(np.int64)
            self._select_target(i, now)

    def _send_beacons(self, now: float) -> None:
        idx = np.flatnonzero(self.has_target)
        if idx.size:
            self.bus.originate(
                BEACON,
                idx,
                {"pos": self.pos[idx].copy(), "target": self.target[idx].copy()},
                now,
            )

    def _deliver(self, now: float) -> None:
        if math.isinf(self.world.comm_range_cells):
            adj = None  # fully connected: skip the distance matrix entirely
        else:
            adj = adjacency_matrix(self.pos, self.world.comm_range_cells)
        for cohort, new in self.bus.deliver_tick(adj, self.clock.tick):
            if cohort.kind == BEACON:
                m_idx, recv = np.nonzero(new)
                origins = cohort.origins[m_idx]
                fresh = cohort.t0 > self.reg_time[recv, origins]
                r, o_idx, m_sel = recv[fresh], origins[fresh], m_idx[fresh]
                self.reg_time[r, o_idx] = cohort.t0
                self.reg_pos[r, o_idx] = cohort.payload["pos"][m_sel]
                self.reg_target[r, o_idx] = cohort.payload["target"][m_sel]
            else:
                for m in range(cohort.msg_ids.size):
                    recv = np.flatnonzero(new[m])
                    if recv.size == 0:
                        continue
                    x, y = (
                        int(cohort.payload["cell"][m, 0]),
                        int(cohort.payload["cell"][m, 1]),
                    )
                    self._incorporate(recv, x, y, int(cohort.payload["o"][m]), cohort.t0)

    def _incorporate(
        self, agents: np.ndarray, x: int, y: int, o: int, t0: float
    ) -> None:
        """Apply one observation of cell (x, y) to the given agents' maps."""
        probs = self.probs[agents, x, y]
        post, ok = bayes_update_rows(probs, self.model.table[o])
        if not ok.all():
            self.impossible_observations += int((~ok).sum())
            log.warning(
                "observation o=%d at (%d, %d) impossible for %d agent(s); skipped",
                o, x, y, int((~ok).sum()),
            )
        upd = agents[ok]
        if upd.size:
            self.probs[upd, x, y] = post[ok]
            ent = entropy_rows(post[ok])
            self.entropy[upd, x, y] = ent
            self.mapped[upd, x, y] = self.mapped[upd, x, y] | (ent <= self.threshold)
            self.counts[upd, x, y] += 1
            self.ig_valid[upd, x, y] = False
        newer = t0 >= self.last_obs_t[agents, x, y]
        heard = agents[newer]
        self.last_obs_t[heard, x, y] = t0
        self.last_obs_w[heard, x, y] = min(o, self.n_w)

    # ------------------------------------------------------- target selection

    def _ig_of_cells(self, i: int, cells: np.ndarray) -> np.ndarray:
        xs, ys = cells[:, 0], cells[:, 1]
        stale = ~self.ig_valid[i, xs, ys]
        if stale.any():
            vals = information_gain_rows(
                self.probs[i, xs[stale], ys[stale]], self.model.table
            )
            self.ig[i, xs[stale], ys[stale]] = vals
            self.ig_valid[i, xs[stale], ys[stale]] = True
        return self.ig[i, xs, ys]

    def _targeted_grid(self, i: int, now: float) -> np.ndarray:
        """Cells claimed by live peers (and reserved cells under global mode)."""
        g = self._targeted_scratch
        g[:] = False
        fresh = self.reg_time[i] > now - BEACON_STALENESS_S
        fresh[i] = False
        tj = self.reg_target[i][fresh]
        tj = tj[tj[:, 0] >= 0]
        g[tj[:, 0], tj[:, 1]] = True
        if self.reservations_global:
            g |= (self.res_holder >= 0) & (self.res_holder != i)
        return g

    def _fresh_peers(self, i: int, now: float) -> np.ndarray:
        fresh = self.reg_time[i] > now - BEACON_STALENESS_S
        fresh[i] = False
        return np.flatnonzero(fresh)

    def _peer_estimates(self, i, cand_cells, targeted, now):
        js = self._fresh_peers(i, now)
        if js.size == 0:
            return np.empty((0, 2), dtype=np.int64), []
        peer_cells = np.clip(
            np.rint(self.reg_pos[i][js]).astype(np.int64), 0, self.c - 1
        )
        # candidates sit within Chebyshev 2 of the agent, so only peers
        # within distance 4 can be within 2 of any candidate
        near = (
            np.max(np.abs(peer_cells - self.current_cell[i]), axis=1) <= 4
        )
        if not near.any():
            return np.empty((0, 2), dtype=np.int64), []
        js = js[near]
        peer_cells = peer_cells[near]
        cheb = np.max(
            np.abs(peer_cells[:, None, :] - cand_cells[None, :, :]), axis=2
        )
        involved = (cheb <= 2).any(axis=1)
        cells_out, probs_out = [], []
        for k in np.flatnonzero(involved):
            j = int(js[k])
            jt = self.reg_target[i, j]
            flipped = jt[0] >= 0 and targeted[jt[0], jt[1]]
            if flipped:
                targeted[jt[0], jt[1]] = False  # a peer may keep its own target
            probs_out.append(
                strat.estimate_peer_probs(
                    (int(peer_cells[k, 0]), int(peer_cells[k, 1])),
                    self.mapped[i],
                    targeted,
                    self.c,
                    lambda cells: self._ig_of_cells(i, cells),
                )
            )
            if flipped:
                targeted[jt[0], jt[1]] = True
            cells_out.append(peer_cells[k])
        if not cells_out:
            return np.empty((0, 2), dtype=np.int64), []
        return np.stack(cells_out), probs_out

    def _utilities(self, i, cands, targeted, now) -> np.ndarray:
        igs = self._ig_of_cells(i, cands.cells)
        p_ig = strat.relative_ig_probabilities(igs)
        peer_cells, peer_probs = self._peer_estimates(i, cands.cells, targeted, now)
        return strat.social_utility(cands.cells, p_ig, peer_cells, peer_probs)

    def _select_target(self, i: int, now: float) -> bool:
        cell = (int(self.current_cell[i, 0]), int(self.current_cell[i, 1]))
        kind = self.strategy.kind
        for _round in range(2):
            targeted = self._targeted_grid(i, now)
            cands = strat.candidate_cells(cell, self.mapped[i], targeted, self.c)
            if kind == strat.POTENTIAL_FIELD:
                peers = self._fresh_peers(i, now)
                bias = strat.pf_bias_vector(
                    self.pos[i],
                    cell,
                    self.reg_pos[i][peers],
                    self.last_obs_w[i],
                    self.mapped[i],
                    self.n_w,
                    self.strategy.sigma_a,
                    self.strategy.sigma_r,
                )
            while cands.cells.shape[0]:
                if kind == strat.POTENTIAL_FIELD:
                    idx = strat.pf_select(
                        cands.cells, self.pos[i], bias, self.strategy.beta,
                        self.agent_rng[i],
                    )
                else:
                    u = self._utilities(i, cands, targeted, now)
                    idx = strat.select_target(u, kind, self.strategy.gamma, self.agent_rng[i])
                chosen = (int(cands.cells[idx, 0]), int(cands.cells[idx, 1]))
                if self.reservations_global and not self._try_reserve(i, chosen):
                    cands.cells = np.delete(cands.cells, idx, axis=0)
                    continue
                self.target[i] = chosen
                self.has_target[i] = True
                self.target_set_time[i] = now
                dist = math.hypot(chosen[0] - self.pos[i, 0], chosen[1] - self.pos[i, 1])
                self.nominal_travel[i] = dist / self.world.speed_cells
                return True
        log.debug("agent %d found no target at t=%s; idling one tick", i, now)
        return False

    # ----------------------------------------------------------- reservations

    def _try_reserve(self, i: int, cell: tuple[int, int]) -> bool:
        """Claim a cell in the global table; the first claimant keeps it."""
        x, y = cell
        holder = int(self.res_holder[x, y])
        if holder >= 0 and holder != i:
            return False
        self._release_reservation(i)
        self.res_holder[x, y] = i
        self.res_cell_of[i] = (x, y)
        return True

    def _release_reservation(self, i: int) -> None:
        x, y = int(self.res_cell_of[i, 0]), int(self.res_cell_of[i, 1])
        if x >= 0:
            self.res_holder[x, y] = -1
            self.res_cell_of[i] = (-1, -1)

    def timed_out(self, i: int, now: float) -> bool:
        """Whether agent i has been en route over 5x its nominal travel time."""
        return bool(
            self.has_target[i]
            and now - self.target_set_time[i]
            > TIMEOUT_FACTOR * self.nominal_travel[i] + _EPS
        )

    # -------------------------------------------------------------- snapshots

    def agent_state(self, i: int) -> AgentState:
        registry = {}
        for j in range(self.n):
            if j != i and math.isfinite(self.reg_time[i, j]):
                tgt = self.reg_target[i, j]
                registry[j] = PeerInfo(
                    position=(float(self.reg_pos[i, j, 0]), float(self.reg_pos[i, j, 1])),
                    target=None if tgt[0] < 0 else (int(tgt[0]), int(tgt[1])),
                    last_heard=float(self.reg_time[i, j]),
                )
        return AgentState(
            id=i,
            position=(float(self.pos[i, 0]), float(self.pos[i, 1])),
            current_cell=(int(self.current_cell[i, 0]), int(self.current_cell[i, 1])),
            target_cell=(
                (int(self.target[i, 0]), int(self.target[i, 1]))
                if self.has_target[i]
                else None
            ),
            belief=self.belief_maps[i],
            peer_registry=registry,
            rng=self.agent_rng[i],
        )

    def sample_metrics(self, now: float, t_n: float) -> MetricsRecord:
        w_map, _ = aggregate_from_arrays(self.entropy, self.probs)
        return MetricsRecord(
            time_s=now,
            time_over_tn=now / t_n,
            mse=map_mse(w_map, self.field),
            coverage_fraction=self.visited / self.c**2,
            pearson_r=weed_observation_correlation(self.field.weeds, self.union_counts),
        )


def init_run(
    world: WorldConfig,
    field: FieldTruth,
    model: SensorModel,
    strategy: StrategyConfig,
    n_agents: int,
    seed: int,
    trace=None,
) -> Simulation:
    """Place agents on distinct random cells with uniform priors."""
    return Simulation(world, field, model, strategy, n_agents, seed, trace=trace)


@dataclass
class RunResult:
    records: list[MetricsRecord]
    t_n: float
    coverage_time_s: float | None
    final_mse: float
    observations: int


def run_simulation(
    sim: Simulation,
    *,
    duration_s: float | None = None,
    until_coverage: bool = False,
    cap_s: float | None = None,
    sample_every: float | None = None,
    snapshot_every: float | None = None,
    snapshot_dir: str | Path | None = None,
) -> RunResult:
    """Drive a simulation to its stopping rule, sampling metrics on the way.

    Metrics are recorded at t=0, every ``sample_every`` seconds (default
    t_n/20), and at the final tick.
    """
    t_n = sim.world.t_n(sim.n)
    if sample_every is None:
        sample_every = t_n / 20.0
    if duration_s is None and not until_coverage:
        raise ValueError("need duration_s or until_coverage")
    if until_coverage and duration_s is None and cap_s is None:
        cap_s = 40.0 * t_n
    stop_at = duration_s if duration_s is not None else cap_s

    records = [sim.sample_metrics(0.0, t_n)]
    next_sample = sample_every
    next_snap = 0.0
    now = 0.0
    while True:
        now = sim.step()
        if snapshot_every is not None and now >= next_snap - _EPS:
            _write_snapshot(sim, now, snapshot_dir)
            next_snap += snapshot_every
        while now >= next_sample - _EPS:
            records.append(sim.sample_metrics(now, t_n))
            next_sample += sample_every
        if until_coverage and sim.visited == sim.c**2:
            break
        if stop_at is not None and now >= stop_at - _EPS:
            break
    if records[-1].time_s != now:
        records.append(sim.sample_metrics(now, t_n))

    return RunResult(
        records=records,
        t_n=t_n,
        coverage_time_s=(
            None if sim.visited < sim.c**2 else float(np.max(sim.first_visit))
        ),
        final_mse=records[-1].mse,
        observations=sim.observations_taken,
    )


def _write_snapshot(sim: Simulation, now: float, snapshot_dir) -> None:
    if snapshot_dir is None:
        return
    path = Path(snapshot_dir)
    path.mkdir(parents=True, exist_ok=True)
    mapped_any = sim.mapped.any(axis=0)
    with (path / f"t{int(round(now)):08d}.txt").open("w") as fh:
        fh.write(f"# t={now!r} agents={sim.n}\n")
        for i in range(sim.n):
            fh.write(f"agent {i} {sim.pos[i, 0]!r} {sim.pos[i, 1]!r}\n")
        for x in range(sim.c):
            fh.write("".join("1" if mapped_any[x, y] else "0" for y in range(sim.c)) + "\n")
