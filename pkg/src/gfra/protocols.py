"""Per-frame engines for S-ALOHA, IRSA, RapIRSA and their service-priority variants.

Every engine takes an explicit ``numpy.random.Generator``. IRSA and RapIRSA
consume the generator identically for replica placement (connecting-node
visibility comes from a separate topology draw), so RapIRSA without
connecting nodes reproduces IRSA draw for draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    DegreeDistribution,
    FrameParams,
    Outcome,
    TransmissionRecord,
    build_frame_graph,
    sample_degrees,
    select_slots_batch,
)
from .errors import PriorityOutOfRange
from .sic import CnAllocation, DecodingResult, network_decode, peel

SP_VARIANTS = ("sp-saloha", "sp-irsa", "sp-rapirsa")


@dataclass(frozen=True)
class RapParams:
    q: int = 2
    eta: float = 0.25
    p_vis: float = 0.5

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if not 0 <= self.eta < 1:
            raise ValueError("eta must be in [0, 1)")
        if not 0 <= self.p_vis <= 1:
            raise ValueError("p_vis must be in [0, 1]")

    def forward_slots(self, n_raf: int) -> int:
        """Extra cN slots appended to each RAF: ceil(eta * n_raf)."""
        return math.ceil(self.eta * n_raf - 1e-9)

    def slots_per_frame(self, n_raf: int) -> int:
        return n_raf + (self.forward_slots(n_raf) if self.q > 0 else 0)


@dataclass(frozen=True)
class RapTopology:
    """Which connecting nodes hear which users, and each node's forwarding budget."""

    visibility: dict = field(default_factory=dict)
    allocations: tuple[CnAllocation, ...] = ()

    def __post_init__(self):
        known = {a.cn_id for a in self.allocations}
        for u, cns in self.visibility.items():
            missing = set(cns) - known
            if missing:
                raise ValueError(f"user {u!r} visible to unallocated cN {sorted(missing)}")

    @property
    def n_q(self) -> int:
        return sum(a.forward_budget for a in self.allocations)


@dataclass(frozen=True)
class SalohaParams:
    backoff_limit: int = 50
    fresh_only: bool = False

    def __post_init__(self):
        if self.backoff_limit < 1:
            raise ValueError("backoff_limit must be >= 1")


@dataclass
class Backlog:
    """Collided S-ALOHA users waiting for their backoff to expire.

    ``next_tx`` holds the global slot of each user's next attempt,
    ``attempts`` the transmissions made so far.
    """

    records: list = field(default_factory=list)
    next_tx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    attempts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    limits: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class FrameOutcome:
    frame_index: int
    records: tuple[TransmissionRecord, ...]
    slots_used: int
    decode_result: DecodingResult
    backlog: Backlog | None = None

    @property
    def decoded_records(self) -> list[TransmissionRecord]:
        return [r for r in self.records if r.outcome is Outcome.DECODED]

    @property
    def throughput(self) -> float:
        return len(self.decode_result.decoded) / self.slots_used


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _check_priority(p):
    if not 0 <= p <= 100:
        raise PriorityOutOfRange(p)


def priority_degree_cap(p: float, d_m: int) -> int:
    """Maximum replicas for priority ``p``: all ``d_m`` at p=0 down to 1 at p=100."""
    _check_priority(p)
    return min(max(_round_half_up(d_m * (100 - p) / 100), 1), d_m)


def priority_backoff_limit(p: float, b_off: int) -> int:
    """Backoff window for priority ``p``: ``b_off`` at p=0, stretched to 2*b_off at p=100.

    Higher priority (smaller p) keeps the shorter window; the highest
    priority leaves the base protocol untouched.
    """
    _check_priority(p)
    return min(max(_round_half_up(b_off * (100 + p) / 100), 1), 2 * b_off)


# ---------------------------------------------------------------- S-ALOHA


def _as_records(arrivals, window_start: int) -> list[TransmissionRecord]:
    arrivals = list(arrivals)
    if arrivals and not isinstance(arrivals[0], TransmissionRecord):
        out = []
        for k, count in enumerate(arrivals):
            slot = window_start + k
            out.extend(TransmissionRecord((slot, j), slot) for j in range(int(count)))
        return out
    return arrivals


def saloha_window(
    backlog: Backlog | None,
    arrivals: Sequence[TransmissionRecord] | Sequence[int],
    params: SalohaParams,
    rng: np.random.Generator,
    *,
    n_slots: int,
    window_start: int = 0,
    frame_index: int = 0,
    backoff_limit_for: Callable[[TransmissionRecord], int] | None = None,
) -> FrameOutcome:
    """Run ``n_slots`` slots of slotted ALOHA with backoff.

    New users send in their arrival slot, backlogged users when their
    counter expires. A lone transmission succeeds; otherwise every sender
    redraws a backoff uniformly in [1, limit] (or is dropped when
    ``params.fresh_only``). ``arrivals`` are records whose arrival slot lies
    in the window, or per-slot counts of anonymous arrivals.
    """
    window_end = window_start + n_slots
    new = _as_records(arrivals, window_start)
    for r in new:
        if not window_start <= r.arrival_slot < window_end:
            raise ValueError(f"arrival slot {r.arrival_slot} outside window")
    if backlog is None:
        backlog = Backlog()

    def limit(r):
        return params.backoff_limit if backoff_limit_for is None else backoff_limit_for(r)

    records = backlog.records + new
    next_tx = np.concatenate([backlog.next_tx, np.array([r.arrival_slot for r in new], dtype=np.int64)])
    attempts = np.concatenate([backlog.attempts, np.zeros(len(new), dtype=np.int64)])
    limits = np.concatenate([backlog.limits, np.array([limit(r) for r in new], dtype=np.int64)])

    finished: list[TransmissionRecord] = []
    decoded = []
    done = -1
    for t in range(window_start, window_end):
        idx = np.flatnonzero(next_tx == t)
        if len(idx) == 0:
            continue
        attempts[idx] += 1
        if len(idx) == 1:
            i = idx[0]
            r = records[i]
            finished.append(TransmissionRecord(
                r.user_id, r.arrival_slot, (), r.priority, r.latency_budget_ms,
                Outcome.DECODED, t, int(attempts[i]),
            ))
            decoded.append((r.user_id, 1, t))
            next_tx[i] = done
        elif params.fresh_only:
            for i in idx:
                r = records[i]
                finished.append(TransmissionRecord(
                    r.user_id, r.arrival_slot, (), r.priority, r.latency_budget_ms,
                    Outcome.FAILED, None, int(attempts[i]),
                ))
            next_tx[idx] = done
        else:
            next_tx[idx] = t + 1 + np.floor(rng.random(len(idx)) * limits[idx]).astype(np.int64)

    keep = np.flatnonzero(next_tx != done)
    remaining = Backlog([records[i] for i in keep], next_tx[keep], attempts[keep], limits[keep])
    residual = frozenset(r.user_id for r in remaining.records) | frozenset(
        r.user_id for r in finished if r.outcome is Outcome.FAILED
    )
    result = DecodingResult(tuple(decoded), 1 if decoded else 0, residual)
    return FrameOutcome(frame_index, tuple(finished), n_slots, result, remaining)


# ---------------------------------------------------------------- IRSA family


def _place_replicas(active_users, dist, frame, rng, caps):
    degrees = sample_degrees(dist, caps, rng, len(active_users))
    slots = select_slots_batch(frame.n_raf, degrees, rng)
    return [
        TransmissionRecord(r.user_id, r.arrival_slot, s, r.priority, r.latency_budget_ms, attempts=1)
        for r, s in zip(active_users, slots)
    ]


def _finalize(placed, result: DecodingResult, frame_start: int) -> tuple[TransmissionRecord, ...]:
    slot_of = result.slot_of()
    out = []
    for r in placed:
        s = slot_of.get(r.user_id)
        out.append(r.decoded(frame_start + s) if s is not None else r.failed())
    return tuple(out)


def irsa_frame(
    active_users: Sequence[TransmissionRecord],
    dist: DegreeDistribution,
    frame: FrameParams,
    rng: np.random.Generator,
    *,
    frame_index: int = 0,
    frame_start: int = 0,
    caps: Sequence[int] | None = None,
) -> FrameOutcome:
    """One IRSA frame: place replicas, peel at the BS, record outcomes.

    Decoded users are stamped with the global slot ``frame_start + s`` of
    the clean replica that revealed them; undecoded users fail (no
    retransmission across frames).
    """
    placed = _place_replicas(active_users, dist, frame, rng, caps)
    result = peel(build_frame_graph(placed), frame.max_sic_iters)
    return FrameOutcome(frame_index, _finalize(placed, result, frame_start), frame.n_raf, result)


def _split_budget(n_q: int, q: int) -> list[int]:
    base, extra = divmod(n_q, q)
    return [base + (1 if j < extra else 0) for j in range(q)]


def assign_topology(user_ids, rap: RapParams, frame: FrameParams, rng: np.random.Generator) -> RapTopology:
    """Independent Bernoulli(p_vis) visibility per (user, cN); n_q slots dealt round-robin."""
    user_ids = list(user_ids)
    if rap.q == 0:
        return RapTopology({}, ())
    allocations = tuple(
        CnAllocation(j, b) for j, b in enumerate(_split_budget(rap.forward_slots(frame.n_raf), rap.q))
    )
    hits = rng.random((len(user_ids), rap.q)) < rap.p_vis
    visibility = {u: frozenset(np.flatnonzero(row).tolist()) for u, row in zip(user_ids, hits)}
    return RapTopology(visibility, allocations)


def rapirsa_frame(
    active_users: Sequence[TransmissionRecord],
    dist: DegreeDistribution,
    frame: FrameParams,
    rap: RapParams,
    topology: RapTopology,
    rng: np.random.Generator,
    *,
    frame_index: int = 0,
    frame_start: int = 0,
    caps: Sequence[int] | None = None,
) -> FrameOutcome:
    """IRSA replica placement decoded with connecting-node forwarding.

    Each cN sees the sub-graph of the users it hears. Forwarded packets are
    stamped with their forwarding slot (>= n_raf) in the current frame.
    """
    if len(topology.allocations) != rap.q:
        raise ValueError(f"topology has {len(topology.allocations)} cNs, rap.q is {rap.q}")
    placed = _place_replicas(active_users, dist, frame, rng, caps)
    bs_graph = build_frame_graph(placed)
    members: dict[int, list] = {a.cn_id: [] for a in topology.allocations}
    for r in placed:
        for j in topology.visibility.get(r.user_id, ()):
            members[j].append(r.user_id)
    cn_graphs = [bs_graph.subgraph(members[a.cn_id]) for a in topology.allocations]
    result = network_decode(bs_graph, cn_graphs, topology.allocations, frame.max_sic_iters, n_raf=frame.n_raf)
    slots = frame.n_raf + topology.n_q
    return FrameOutcome(frame_index, _finalize(placed, result, frame_start), slots, result)


# ---------------------------------------------------------------- service priority


def sp_frame(
    variant: str,
    active_users: Sequence[TransmissionRecord],
    rng: np.random.Generator,
    *,
    dist: DegreeDistribution | None = None,
    frame: FrameParams | None = None,
    rap: RapParams | None = None,
    topology: RapTopology | None = None,
    saloha: SalohaParams | None = None,
    backlog: Backlog | None = None,
    n_slots: int | None = None,
    window_start: int = 0,
    frame_start: int = 0,
    frame_index: int = 0,
) -> FrameOutcome:
    """Dispatch a service-priority variant to its base engine.

    sp-irsa / sp-rapirsa cap each user's replica count by priority;
    sp-saloha scales each user's backoff window by priority.
    """
    for r in active_users:
        _check_priority(r.priority)
    frame = frame or FrameParams()
    if variant == "sp-saloha":
        saloha = saloha or SalohaParams()
        b_off = saloha.backoff_limit
        return saloha_window(
            backlog, active_users, saloha, rng,
            n_slots=n_slots or frame.n_raf, window_start=window_start, frame_index=frame_index,
            backoff_limit_for=lambda r: priority_backoff_limit(r.priority, b_off),
        )
    if dist is None:
        raise ValueError(f"{variant} needs a degree distribution")
    caps = [priority_degree_cap(r.priority, dist.d_max) for r in active_users]
    if variant == "sp-irsa":
        return irsa_frame(active_users, dist, frame, rng, frame_index=frame_index, frame_start=frame_start, caps=caps)
    if variant == "sp-rapirsa":
        if rap is None or topology is None:
            raise ValueError("sp-rapirsa needs rap parameters and a topology")
        return rapirsa_frame(
            active_users, dist, frame, rap, topology, rng,
            frame_index=frame_index, frame_start=frame_start, caps=caps,
        )
    raise ValueError(f"unknown service-priority variant {variant!r}")
