"""QoS metrics, the slotted ALOHA throughput law and IRSA density evolution."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .core import DegreeDistribution, FrameParams, Outcome, TransmissionRecord
from .errors import CountMismatch, NegativeCount


def saloha_theory(G):
    """Slotted ALOHA throughput G*exp(-G); accepts scalars or arrays."""
    G = np.asarray(G, dtype=float)
    if np.any(G < 0):
        raise ValueError("load must be >= 0")
    out = G * np.exp(-G)
    return float(out) if out.ndim == 0 else out


def latency_ms(record: TransmissionRecord, frame: FrameParams) -> float | None:
    """Arrival-to-decode time in ms, or None when the packet was not delivered."""
    if record.outcome is not Outcome.DECODED:
        return None
    return (record.decoded_at - record.arrival_slot) * frame.slot_ms


def worst_case_latency_ms(frame: FrameParams, wait_ms: float | None = None) -> float:
    """Upper bound wait + 2 frames for frame-synchronous access; wait defaults to one frame."""
    if wait_ms is None:
        wait_ms = frame.frame_ms
    return wait_ms + 2 * frame.frame_ms


def pdr(received: int, generated: int) -> float:
    if received < 0 or generated < 0:
        raise NegativeCount("packet counts must be >= 0")
    if received > generated:
        raise CountMismatch(received, generated)
    if generated == 0:
        return 1.0
    return received / generated


def plr(pdr_value: float) -> float:
    return 1.0 - pdr_value


@dataclass(frozen=True)
class LatencyBudget:
    tau_req_ms: float
    grid_freq_hz: float = 60.0
    delay_factor: float | None = None

    def __post_init__(self):
        if not self.tau_req_ms > 0:
            raise ValueError("tau_req_ms must be > 0")
        if not self.grid_freq_hz > 0:
            raise ValueError("grid_freq_hz must be > 0")

    @classmethod
    def from_cycles(cls, cycles: float, grid_freq_hz: float = 60.0) -> "LatencyBudget":
        """Budget of ``cycles`` periods of the grid frequency."""
        return cls(cycles * 1000.0 / grid_freq_hz, grid_freq_hz, cycles)

    @property
    def cycle_ms(self) -> float:
        return 1000.0 / self.grid_freq_hz


def reliability(pdr_value: float, tau_ms: float, budget: LatencyBudget) -> float:
    """Hard-delay reliability: the PDR if the delay meets the budget, otherwise 0."""
    return pdr_value if tau_ms <= budget.tau_req_ms else 0.0


def acr(slot_records: Iterable[tuple[int, int]]) -> float:
    """Application complying ratio: mean per-slot fraction of compliant users.

    ``slot_records`` holds (compliant, active) pairs; slots without active
    users are left out of the average. Returns 1.0 when no slot had any.
    """
    total = 0.0
    n = 0
    for compliant, active in slot_records:
        if compliant < 0 or active < 0:
            raise NegativeCount(f"negative count in slot record ({compliant}, {active})")
        if compliant > active:
            raise CountMismatch(compliant, active)
        if active == 0:
            continue
        total += compliant / active
        n += 1
    return total / n if n else 1.0


def bw_req(packet_size_bytes: float, tau_req_s: float, n_users: int) -> float:
    """Bandwidth needed for ``n_users`` to each deliver one packet within ``tau_req_s``."""
    return packet_size_bytes * 8 * (1.0 / tau_req_s) * n_users


def irsa_density_evolution(dist: DegreeDistribution, G: float, iters: int) -> float:
    """Asymptotic fraction of users left undecoded by IRSA peeling at load G.

    And-or tree recursion on edge erasure probabilities, started from 1:
    slot side q = 1 - exp(-G * mean_degree * p), user side p = lambda(q)
    with lambda the edge-perspective degree polynomial. Returns Lambda(q).
    """
    if G <= 0:
        return 0.0
    degrees = np.array(list(dist.mass), dtype=float)
    node = np.array(list(dist.mass.values()), dtype=float)
    mean_deg = float(np.dot(degrees, node))
    edge = degrees * node / mean_deg
    p = 1.0
    q = 1.0
    for _ in range(iters):
        q = 1.0 - math.exp(-G * mean_deg * p)
        p = float(np.dot(edge, q ** (degrees - 1)))
    return float(np.dot(node, q ** degrees))


def irsa_asymptotic_throughput(dist: DegreeDistribution, G: float, iters: int = 1000) -> float:
    return G * (1.0 - irsa_density_evolution(dist, G, iters))


def de_threshold(
    dist: DegreeDistribution, iters: int = 2000, level: float = 0.5, lo: float = 0.05, hi: float = 2.0, tol: float = 1e-4
) -> float:
    """Load at which the density-evolution residual crosses ``level`` (bisection)."""
    if irsa_density_evolution(dist, hi, iters) < level:
        raise ValueError("residual never reaches the level inside the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if irsa_density_evolution(dist, mid, iters) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def half_width(values: Sequence[float], z: float = 1.96) -> float:
    """Normal-approximation confidence half-width of the mean of ``values``."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return 0.0
    return float(z * v.std(ddof=1) / math.sqrt(len(v)))


@dataclass(frozen=True)
class MetricsReport:
    protocol: str
    G: float
    throughput_raf: float
    throughput_rapc: float
    pdr: float
    plr: float
    mean_delay_slots: float
    delay_per_active: float
    delay_p95_ms: float
    reliability: float
    acr: float
    realizations: int
    ci_throughput: float
    ci_plr: float
    ci_acr: float

    def __post_init__(self):
        if abs(self.plr - (1.0 - self.pdr)) > 1e-12:
            raise ValueError("plr must equal 1 - pdr")
        for name in ("pdr", "plr", "reliability", "acr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.throughput_raf < 0 or self.throughput_rapc < 0:
            raise ValueError("throughput must be >= 0")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]
