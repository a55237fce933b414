"""Range-limited broadcast with a rebroadcast-once-and-blacklist relay.

Two message kinds circulate: observations (cell, count, time) and beacons
(position, current target, time).  Both are relayed: the first time an agent
hears a message id it processes the payload, blacklists the id, and
rebroadcasts it exactly once on the following tick; later copies are dropped.
Delivery is instantaneous within a tick over a closed ball of radius
``range_cells`` (positions in cell units).

:class:`MessageBus` implements the same protocol for whole message cohorts
with numpy masks so the engine can flood beacons every tick cheaply; its
semantics are pinned to :func:`deliver` / :func:`on_receive` by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PROCESS_AND_REBROADCAST = "process-and-rebroadcast"
DROP = "drop"

BEACON = "beacon"
OBSERVATION = "observation"


@dataclass(frozen=True)
class Observation:
    cell: tuple[int, int]
    o: int
    time: float


@dataclass(frozen=True)
class Beacon:
    position: tuple[float, float]
    target: tuple[int, int] | None
    time: float


@dataclass(frozen=True)
class Message:
    msg_id: int
    origin: int
    kind: Observation | Beacon


@dataclass
class RelayState:
    """Per-agent blacklist of message ids already seen."""

    blacklist: set[int] = field(default_factory=set)

    def register_own(self, msg_id: int) -> None:
        """Pre-blacklist a message this agent originated itself."""
        self.blacklist.add(msg_id)


def deliver(
    sender_id: int,
    sender_position: tuple[float, float],
    message: Message,
    positions: dict[int, tuple[float, float]],
    range_cells: float,
) -> set[int]:
    """Agent ids receiving one transmission (closed ball, sender excluded).

    ``sender_id`` is the transmitting agent, which for a relayed message need
    not be ``message.origin``.
    """
    sx, sy = sender_position
    out = set()
    for agent_id, (x, y) in positions.items():
        if agent_id == sender_id:
            continue
        if math.hypot(x - sx, y - sy) <= range_cells:
            out.add(agent_id)
    return out


def on_receive(relay: RelayState, message: Message) -> str:
    """Apply the relay rule: process new ids once, drop everything seen."""
    if message.msg_id in relay.blacklist:
        return DROP
    relay.blacklist.add(message.msg_id)
    return PROCESS_AND_REBROADCAST


@dataclass
class Cohort:
    """All messages originated on the same tick with the same kind.

    ``received[m, a]`` records whether agent ``a`` has seen message ``m``
    (origins start received); ``pending[m, a]`` marks agents that will
    transmit message ``m`` on the next delivery pass.
    """

    kind: str
    t0: float
    msg_ids: np.ndarray
    origins: np.ndarray
    payload: dict[str, np.ndarray]
    received: np.ndarray
    pending: np.ndarray


class MessageBus:
    """Tick-synchronous flooding of message cohorts.

    The engine originates cohorts during a tick and calls
    :meth:`deliver_tick` once per tick with the adjacency matrix of current
    positions.  Each call returns, per live cohort, the mask of first-time
    receptions to process; rebroadcasts go out on the following call.
    """

    def __init__(
        self,
        n_agents: int,
        trace: Callable[[int, int, int, int, str], None] | None = None,
    ):
        self.n = n_agents
        self.trace = trace
        self._next_id = 0
        self.cohorts: list[Cohort] = []
        self.originated = {BEACON: 0, OBSERVATION: 0}

    def _new_ids(self, k: int) -> np.ndarray:
        ids = np.arange(self._next_id, self._next_id + k, dtype=np.int64)
        self._next_id += k
        return ids

    def originate(
        self,
        kind: str,
        origins: np.ndarray,
        payload: dict[str, np.ndarray],
        t0: float,
    ) -> np.ndarray:
        """Queue one cohort; origins transmit on this tick's delivery pass."""
        origins = np.asarray(origins, dtype=np.int64)
        m = origins.size
        if m == 0:
            return np.empty(0, dtype=np.int64)
        ids = self._new_ids(m)
        received = np.zeros((m, self.n), dtype=bool)
        received[np.arange(m), origins] = True
        self.cohorts.append(
            Cohort(
                kind=kind,
                t0=t0,
                msg_ids=ids,
                origins=origins,
                payload=payload,
                received=received,
                pending=received.copy(),
            )
        )
        self.originated[kind] += m
        return ids

    def deliver_tick(
        self, adjacency: np.ndarray | None, tick: int
    ) -> list[tuple[Cohort, np.ndarray]]:
        """Run one delivery pass; returns (cohort, first-reception mask) pairs.

        ``adjacency=None`` means a fully connected swarm (infinite range):
        any transmission reaches every other agent, so the reachability
        product reduces to an any() per message.
        """
        events: list[tuple[Cohort, np.ndarray]] = []
        alive: list[Cohort] = []
        adj_u8 = None if adjacency is None else adjacency.astype(np.uint8)
        for cohort in self.cohorts:
            tx = cohort.pending
            if not tx.any():
                continue
            if adj_u8 is None:
                # reached iff some *other* agent transmitted this message
                reach = (tx.sum(axis=1)[:, None] - tx) > 0
            else:
                reach = (tx.astype(np.uint8) @ adj_u8) > 0
            new = reach & ~cohort.received
            if self.trace is not None:
                self._trace_deliveries(cohort, reach, tick)
            cohort.received |= new
            cohort.pending = new
            if new.any():
                events.append((cohort, new))
                alive.append(cohort)
        self.cohorts = alive
        return events

    def _trace_deliveries(self, cohort: Cohort, reach: np.ndarray, tick: int) -> None:
        for m, a in zip(*np.nonzero(reach)):
            self.trace(
                tick,
                int(cohort.msg_ids[m]),
                int(cohort.origins[m]),
                int(a),
                cohort.kind,
            )


def adjacency_matrix(positions: np.ndarray, range_cells: float) -> np.ndarray:
    """Symmetric closed-ball reachability between agents, self excluded."""
    n = positions.shape[0]
    if math.isinf(range_cells):
        adj = np.ones((n, n), dtype=bool)
    else:
        diff = positions[:, None, :] - positions[None, :, :]
        adj = np.einsum("ijk,ijk->ij", diff, diff) <= range_cells**2 + 1e-12
    np.fill_diagonal(adj, False)
    return adj
