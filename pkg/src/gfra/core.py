"""Domain types shared by every protocol: degree distributions, frames,
transmission records and the user/slot bipartite graph of one MAC frame.

Slot indices are 0-based everywhere. Replica slots are frame-relative,
arrival and decode slots are global.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegreeOutOfRange,
    DuplicateUserId,
    NegativeMass,
    NotNormalized,
    PriorityOutOfRange,
    TooManyReplicas,
)

UserId = Hashable

NORMALIZATION_TOL = 1e-9


def validate_distribution(mass: Mapping[int, float], d_max: int) -> None:
    """Raise if ``mass`` is not a probability mass over degrees 1..d_max."""
    if not isinstance(d_max, (int, np.integer)) or isinstance(d_max, bool) or d_max < 1:
        raise DegreeOutOfRange(d_max)
    for d, p in mass.items():
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or not 1 <= d <= d_max:
            raise DegreeOutOfRange(d)
        if not p >= 0:
            raise NegativeMass(d)
    total = math.fsum(mass.values())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(total)


@dataclass(frozen=True)
class DegreeDistribution:
    """Probability of a user sending ``d`` replicas, for d in 1..d_max."""

    mass: Mapping[int, float]
    d_max: int | None = None

    def __post_init__(self):
        mass = {int(d): float(p) for d, p in sorted(dict(self.mass).items())}
        d_max = self.d_max if self.d_max is not None else max(mass, default=0)
        validate_distribution(mass, d_max)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "d_max", int(d_max))

    @property
    def degrees(self) -> np.ndarray:
        return np.array([d for d, p in self.mass.items() if p > 0], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for p in self.mass.values() if p > 0], dtype=float)

    @property
    def mean(self) -> float:
        """Average number of replicas per user (the derivative of the polynomial at 1)."""
        return math.fsum(d * p for d, p in self.mass.items())

    def truncated(self, cap: int) -> "DegreeDistribution":
        """Mass restricted to degrees <= cap and renormalized; point mass at 1 if empty."""
        kept = {d: p for d, p in self.mass.items() if d <= cap and p > 0}
        total = math.fsum(kept.values())
        if total <= 0:
            return DegreeDistribution({1: 1.0}, max(1, min(self.d_max, cap)))
        return DegreeDistribution({d: p / total for d, p in kept.items()}, min(self.d_max, cap))

    def to_dict(self) -> dict[int, float]:
        return dict(self.mass)


# 0.5x^2 + 0.28x^3 + 0.22x^8
LAMBDA_8 = DegreeDistribution({2: 0.5, 3: 0.28, 8: 0.22}, 8)


@dataclass(frozen=True)
class FrameParams:
    n_raf: int = 50
    slot_ms: float = 1.0
    max_sic_iters: int = 20

    def __post_init__(self):
        if self.n_raf < 1:
            raise ValueError("n_raf must be >= 1")
        if not self.slot_ms > 0:
            raise ValueError("slot_ms must be > 0")
        if self.max_sic_iters < 1:
            raise ValueError("max_sic_iters must be >= 1")

    @property
    def frame_ms(self) -> float:
        return self.n_raf * self.slot_ms


@dataclass(frozen=True)
class AppProfile:
    name: str
    latency_ms: float
    priority: int

    def __post_init__(self):
        if not self.latency_ms > 0:
            raise ValueError(f"{self.name}: latency_ms must be > 0")
        if not 0 <= self.priority <= 100:
            raise PriorityOutOfRange(self.priority)


# Smart-grid latency budgets and priorities (0 = highest, 100 = lowest).
APP_PROFILES: dict[str, AppProfile] = {
    p.name: p
    for p in [
        AppProfile("teleprotection-60hz", 8, 10),
        AppProfile("teleprotection-50hz", 10, 10),
        AppProfile("scada-10ms", 10, 20),
        AppProfile("teleprotection-16ms", 16, 15),
        AppProfile("synchrophasors", 20, 12),
        AppProfile("scada-100ms", 100, 25),
        AppProfile("distribution-automation", 100, 26),
        AppProfile("dg-ds", 100, 27),
        AppProfile("mwf", 100, 30),
        AppProfile("business-voice", 200, 60),
        AppProfile("dlr", 200, 28),
        AppProfile("cctv", 200, 55),
        AppProfile("scada-da-dg-dlr", 200, 45),
        AppProfile("business-data", 250, 70),
        AppProfile("ami", 250, 40),
        AppProfile("protection", 500, 80),
        AppProfile("others", 2000, 100),
    ]
}


class Outcome(str, enum.Enum):
    PENDING = "pending"
    DECODED = "decoded"
    FAILED = "failed"


@dataclass(frozen=True)
class TransmissionRecord:
    """One user's packet: when it arrived, where it was sent, and what became of it."""

    user_id: UserId
    arrival_slot: int
    replica_slots: tuple[int, ...] = ()
    priority: int = 0
    latency_budget_ms: float = math.inf
    outcome: Outcome = Outcome.PENDING
    decoded_at: int | None = None
    attempts: int = 0

    def __post_init__(self):
        if len(set(self.replica_slots)) != len(self.replica_slots):
            raise ValueError(f"user {self.user_id!r}: replica slots must be distinct")
        if any(s < 0 for s in self.replica_slots):
            raise ValueError(f"user {self.user_id!r}: negative replica slot")
        if not 0 <= self.priority <= 100:
            raise PriorityOutOfRange(self.priority)
        if self.outcome is Outcome.DECODED:
            if self.decoded_at is None or self.decoded_at < self.arrival_slot:
                raise ValueError(f"user {self.user_id!r}: decode slot precedes arrival")

    def decoded(self, at_slot: int) -> "TransmissionRecord":
        return replace(self, outcome=Outcome.DECODED, decoded_at=int(at_slot))

    def failed(self) -> "TransmissionRecord":
        return replace(self, outcome=Outcome.FAILED, decoded_at=None)

    @property
    def delay_slots(self) -> int | None:
        if self.outcome is not Outcome.DECODED:
            return None
        return self.decoded_at - self.arrival_slot


def _truncated_cdf(dist: DegreeDistribution, cap: int) -> tuple[np.ndarray, np.ndarray]:
    degrees, probs = dist.degrees, dist.probs
    keep = degrees <= cap
    if not keep.any():
        # single transmission is always physically possible
        return np.array([1]), np.array([1.0])
    degrees, probs = degrees[keep], probs[keep]
    cdf = np.cumsum(probs)
    return degrees, cdf / cdf[-1]


def _invert(degrees: np.ndarray, cdf: np.ndarray, u):
    idx = np.searchsorted(cdf, u, side="right")
    return degrees[np.minimum(idx, len(degrees) - 1)]


def sample_degree(dist: DegreeDistribution, cap: int, rng: np.random.Generator) -> int:
    """Draw a replica count, restricting ``dist`` to degrees <= cap.

    Consumes exactly one uniform from ``rng`` whatever the cap, so capped
    and uncapped runs stay aligned on a shared stream.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    degrees, cdf = _truncated_cdf(dist, cap)
    return int(_invert(degrees, cdf, rng.random()))


def sample_degrees(
    dist: DegreeDistribution, caps: Sequence[int] | np.ndarray | None, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Vectorised :func:`sample_degree` for ``size`` users with per-user caps."""
    u = rng.random(size)
    if caps is None:
        degrees, cdf = _truncated_cdf(dist, dist.d_max)
        return _invert(degrees, cdf, u).astype(np.int64)
    caps = np.asarray(caps, dtype=np.int64)
    out = np.empty(size, dtype=np.int64)
    for cap in np.unique(caps):
        if cap < 1:
            raise ValueError("cap must be >= 1")
        sel = caps == cap
        degrees, cdf = _truncated_cdf(dist, int(cap))
        out[sel] = _invert(degrees, cdf, u[sel])
    return out


def select_slots(n_raf: int, d: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Pick ``d`` distinct slots uniformly among all d-subsets of range(n_raf)."""
    if d > n_raf:
        raise TooManyReplicas(d, n_raf)
    if d < 1:
        raise ValueError("d must be >= 1")
    keys = rng.random(n_raf)
    return tuple(sorted(int(s) for s in np.argsort(keys, kind="stable")[:d]))


def select_slots_batch(n_raf: int, degrees: np.ndarray, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Row-wise :func:`select_slots`; one row of ``n_raf`` uniforms per user."""
    degrees = np.asarray(degrees, dtype=np.int64)
    if len(degrees) == 0:
        return []
    if degrees.max() > n_raf:
        raise TooManyReplicas(int(degrees.max()), n_raf)
    order = np.argsort(rng.random((len(degrees), n_raf)), axis=1, kind="stable")
    return [tuple(sorted(row[:d].tolist())) for row, d in zip(order, degrees)]


@dataclass(frozen=True)
class FrameGraph:
    """Bipartite graph of users and the slots their replicas occupy.

    ``user_edges`` maps each user to its sorted slots, ``slot_edges`` each
    occupied slot to the users transmitting there (in insertion order).
    """

    user_edges: Mapping[UserId, tuple[int, ...]] = field(default_factory=dict)
    slot_edges: Mapping[int, tuple[UserId, ...]] = field(default_factory=dict)

    @classmethod
    def from_replicas(cls, replicas: Mapping[UserId, Iterable[int]] | Iterable[tuple[UserId, Iterable[int]]]):
        items = replicas.items() if isinstance(replicas, Mapping) else replicas
        user_edges: dict = {}
        slot_edges: dict = {}
        for u, slots in items:
            if u in user_edges:
                raise DuplicateUserId(u)
            slots = tuple(sorted(set(int(s) for s in slots)))
            user_edges[u] = slots
            for s in slots:
                slot_edges.setdefault(s, []).append(u)
        return cls(user_edges, {s: tuple(us) for s, us in sorted(slot_edges.items())})

    @property
    def users(self) -> list:
        return list(self.user_edges)

    @property
    def slots(self) -> list[int]:
        return list(self.slot_edges)

    @property
    def edges(self) -> frozenset:
        return frozenset((u, s) for u, slots in self.user_edges.items() for s in slots)

    def slot_degree(self, slot: int) -> int:
        return len(self.slot_edges.get(slot, ()))

    def user_degree(self, user: UserId) -> int:
        return len(self.user_edges[user])

    def is_consistent(self) -> bool:
        from_users = {(u, s) for u, slots in self.user_edges.items() for s in slots}
        from_slots = {(u, s) for s, users in self.slot_edges.items() for u in users}
        return from_users == from_slots

    def without_users(self, users: Iterable[UserId]) -> "FrameGraph":
        drop = set(users)
        return FrameGraph.from_replicas((u, s) for u, s in self.user_edges.items() if u not in drop)

    def subgraph(self, users: Iterable[UserId]) -> "FrameGraph":
        keep = set(users)
        return FrameGraph.from_replicas((u, s) for u, s in self.user_edges.items() if u in keep)


def build_frame_graph(records: Sequence[TransmissionRecord]) -> FrameGraph:
    return FrameGraph.from_replicas((r.user_id, r.replica_slots) for r in records)
