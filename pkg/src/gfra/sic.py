"""Successive interference cancellation as peeling on a FrameGraph.

One iteration collects every slot that currently holds exactly one packet,
decodes those users and cancels all of their replicas. A user freed by
several clean slots in the same iteration is attributed to the last of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import FrameGraph, UserId
from .errors import UnknownUser

CN_ITERATION = 0  # iteration index used for packets delivered by a connecting node


@dataclass(frozen=True)
class DecodingResult:
    decoded: tuple[tuple[UserId, int, int], ...] = ()
    iterations_used: int = 0
    residual_users: frozenset = field(default_factory=frozenset)

    @property
    def decoded_users(self) -> list:
        return [u for u, _, _ in self.decoded]

    @property
    def decoded_set(self) -> frozenset:
        return frozenset(u for u, _, _ in self.decoded)

    def slot_of(self) -> dict:
        return {u: s for u, _, s in self.decoded}


@dataclass(frozen=True)
class CnAllocation:
    cn_id: int
    forward_budget: int

    def __post_init__(self):
        if self.forward_budget < 0:
            raise ValueError("forward_budget must be >= 0")


class _Peeler:
    """Mutable working copy of a graph that supports cancellation."""

    __slots__ = ("user_slots", "occupants")

    def __init__(self, graph: FrameGraph):
        self.user_slots = dict(graph.user_edges)
        self.occupants = {s: set(us) for s, us in graph.slot_edges.items()}

    def cancel(self, user):
        for s in self.user_slots.pop(user, ()):
            occ = self.occupants.get(s)
            if occ is not None:
                occ.discard(user)
                if not occ:
                    del self.occupants[s]

    def clean_round(self) -> list[tuple[UserId, int]]:
        """Users exposed by singleton slots, each with its last clean slot."""
        found: dict = {}
        for s, occ in self.occupants.items():
            if len(occ) == 1:
                (u,) = occ
                if s > found.get(u, -1):
                    found[u] = s
        return sorted(found.items(), key=lambda us: us[1])

    def run(self, max_iters: int, start_iter: int = 1) -> tuple[list, int]:
        decoded = []
        it = 0
        while it < max_iters:
            batch = self.clean_round()
            if not batch:
                break
            it += 1
            for u, s in batch:
                decoded.append((u, start_iter + it - 1, s))
                self.cancel(u)
        return decoded, it


def peel(graph: FrameGraph, max_iters: int) -> DecodingResult:
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    p = _Peeler(graph)
    decoded, iters = p.run(max_iters)
    return DecodingResult(tuple(decoded), iters, frozenset(p.user_slots))


def cn_local_decode(cn_graph: FrameGraph, budget: int, max_iters: int) -> list:
    """Users a connecting node forwards: its earliest ``budget`` peeled users."""
    if budget <= 0 or not cn_graph.user_edges:
        return []
    return peel(cn_graph, max_iters).decoded_users[:budget]


def network_decode(
    bs_graph: FrameGraph,
    cn_graphs: Sequence[FrameGraph],
    allocations: Sequence[CnAllocation],
    max_iters: int,
    n_raf: int | None = None,
) -> DecodingResult:
    """cN decode-and-forward pass followed by SIC at the base station.

    Connecting nodes are processed in order. Each forwards up to its budget
    of locally peeled users in its own dedicated slots, numbered after the
    RAF (starting at ``n_raf``); forwarded users are cancelled from the BS
    graph and from every later cN graph. The BS then peels what remains.
    """
    if len(cn_graphs) != len(allocations):
        raise ValueError("need one allocation per cN graph")
    for g in cn_graphs:
        for u in g.user_edges:
            if u not in bs_graph.user_edges:
                raise UnknownUser(u)
    if n_raf is None:
        n_raf = max(bs_graph.slot_edges, default=-1) + 1

    bs = _Peeler(bs_graph)
    forwarded: list = []
    removed: set = set()
    next_slot = n_raf
    for graph, alloc in zip(cn_graphs, allocations):
        if removed and any(u in removed for u in graph.user_edges):
            graph = graph.without_users(removed)
        sent = cn_local_decode(graph, alloc.forward_budget, max_iters)
        for k, u in enumerate(sent):
            forwarded.append((u, CN_ITERATION, next_slot + k))
            bs.cancel(u)
            removed.add(u)
        next_slot += alloc.forward_budget

    decoded, iters = bs.run(max_iters)
    return DecodingResult(tuple(forwarded + decoded), iters, frozenset(bs.user_slots))
