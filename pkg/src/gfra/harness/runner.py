"""Seeded Monte Carlo execution of an ExperimentConfig over its load sweep.

Realization ``r`` draws from ``SeedSequence(seed ^ r)`` split into four
independent streams (traffic, access, topology, profile), so a
realization's output does not depend on how realizations are distributed
over workers, and protocols run under the same seed share arrivals and
replica placements.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import Outcome, TransmissionRecord
from ..metrics import MetricsReport, half_width, pdr as pdr_ratio
from ..protocols import (
    Backlog,
    SalohaParams,
    assign_topology,
    irsa_frame,
    priority_backoff_limit,
    priority_degree_cap,
    rapirsa_frame,
    saloha_window,
)
from ..traffic import arrival_slots, beta_arrivals, poisson_arrivals, uniform_arrivals
from .config import ExperimentConfig

MASK64 = (1 << 64) - 1


def realization_streams(seed: int, r: int) -> dict[str, np.random.Generator]:
    ss = np.random.SeedSequence((seed ^ r) & MASK64)
    names = ("traffic", "access", "topology", "profile")
    return {n: np.random.Generator(np.random.PCG64(s)) for n, s in zip(names, ss.spawn(len(names)))}


@dataclass
class RealizationStats:
    """Everything one realization contributes to a MetricsReport.

    Sums and counts only, so pooling realizations in any order gives the
    same report.
    """

    generated: int = 0
    delivered: int = 0
    frames: int = 0
    raf_slots: int = 0
    total_slots: int = 0
    delays: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    acr_sum: float = 0.0
    acr_slots: int = 0
    # per application profile: generated, delivered, delay-sample sum, delay-sample count
    profile_gen: np.ndarray = field(default_factory=lambda: np.zeros(0))
    profile_del: np.ndarray = field(default_factory=lambda: np.zeros(0))
    profile_delay_sum: np.ndarray = field(default_factory=lambda: np.zeros(0))
    profile_delay_n: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def throughput_raf(self) -> float:
        return self.delivered / self.raf_slots if self.raf_slots else 0.0

    @property
    def throughput_total(self) -> float:
        return self.delivered / self.total_slots if self.total_slots else 0.0

    @property
    def plr(self) -> float:
        return 1.0 - pdr_ratio(self.delivered, self.generated)

    @property
    def acr(self) -> float:
        return self.acr_sum / self.acr_slots if self.acr_slots else 1.0


def _new_records(slots: np.ndarray, first_id: int, cfg: ExperimentConfig, rng: np.random.Generator):
    profiles = cfg.app_profiles
    if len(profiles) == 1:
        picks = np.zeros(len(slots), dtype=np.int64)
    else:
        picks = rng.integers(0, len(profiles), size=len(slots))
    recs = [
        TransmissionRecord(first_id + i, int(s), (), profiles[k].priority, profiles[k].latency_ms)
        for i, (s, k) in enumerate(zip(slots.tolist(), picks.tolist()))
    ]
    return recs, picks


def _arrivals(cfg: ExperimentConfig, G: float, rng: np.random.Generator, period: int, n_periods: int) -> np.ndarray:
    """Global arrival slots over ``n_periods`` frame periods, mean G*n_raf per period."""
    n_slots = period * n_periods
    rate = G * cfg.frame.n_raf / period
    t = cfg.traffic
    if t.model == "poisson":
        if period == 1 or cfg.protocol in ("saloha", "sp-saloha"):
            return arrival_slots(poisson_arrivals(rate, n_slots, rng))
        # per-frame batch first, then positions: same law as per-slot Poisson,
        # but the batch sizes do not depend on the frame period
        counts = rng.poisson(G * cfg.frame.n_raf, size=n_periods)
        offsets = np.floor(rng.random(int(counts.sum())) * period).astype(np.int64)
        base = np.repeat(np.arange(n_periods, dtype=np.int64) * period, counts)
        return np.sort(base + offsets)
    window_slots = t.window_s * 1000.0 / cfg.frame.slot_ms
    M = t.total_devices or int(round(rate * window_slots))
    if t.model == "beta":
        counts = beta_arrivals(M, t.window_s, t.beta_alpha, t.beta_beta, n_slots, cfg.frame.slot_ms, rng)
    else:
        counts = uniform_arrivals(M, t.window_s, n_slots, cfg.frame.slot_ms, rng)
    return arrival_slots(counts)


def _collect(stats: RealizationStats, cfg: ExperimentConfig, records, picks, end_slot: int):
    """Fold finished and still-pending records into ``stats``."""
    n_prof = len(cfg.app_profiles)
    n = len(records)
    arrival = np.fromiter((r.arrival_slot for r in records), dtype=np.int64, count=n)
    delivered = np.fromiter((r.outcome is Outcome.DECODED for r in records), dtype=bool, count=n)
    pending = np.fromiter((r.outcome is Outcome.PENDING for r in records), dtype=bool, count=n)
    decoded_at = np.fromiter(
        (r.decoded_at if r.decoded_at is not None else -1 for r in records), dtype=np.int64, count=n
    )
    budget_slots = np.array([p.latency_ms / cfg.frame.slot_ms for p in cfg.app_profiles])[picks]

    delay = np.where(delivered, decoded_at - arrival, 0)
    # backlog left at the end is censored at its age so far
    age = np.where(pending, end_slot - arrival, 0)
    sample = delivered | pending
    observed = np.where(delivered, delay, age)

    stats.generated = n
    stats.delivered = int(delivered.sum())
    stats.delays = observed[sample]

    compliant = delivered & (delay <= budget_slots + 1e-9)
    if n:
        active = np.bincount(arrival)
        ok = np.bincount(arrival, weights=compliant.astype(float), minlength=len(active))
        used = active > 0
        stats.acr_sum = math.fsum((ok[used] / active[used]).tolist())
        stats.acr_slots = int(used.sum())
    stats.profile_gen = np.bincount(picks, minlength=n_prof).astype(float)
    stats.profile_del = np.bincount(picks, weights=delivered.astype(float), minlength=n_prof)
    stats.profile_delay_sum = np.bincount(picks, weights=np.where(sample, observed, 0).astype(float), minlength=n_prof)
    stats.profile_delay_n = np.bincount(picks, weights=sample.astype(float), minlength=n_prof)


def _simulate_frames(cfg: ExperimentConfig, G: float, streams) -> RealizationStats:
    period = cfg.frame_period
    n_periods = max(1, cfg.sim_slots // period)
    slots = _arrivals(cfg, G, streams["traffic"], period, n_periods)
    users, picks = _new_records(slots, 0, cfg, streams["profile"])
    dist, frame, rap = cfg.dist, cfg.frame, cfg.rap
    sp = cfg.protocol.startswith("sp-")
    rap_mode = cfg.protocol in ("rapirsa", "sp-rapirsa")

    # users arriving during period k wait for frame k+1
    bounds = np.searchsorted(slots, np.arange(n_periods + 1) * period)
    finished: list[TransmissionRecord] = []
    stats = RealizationStats()
    for k in range(n_periods):
        active = users[bounds[k]:bounds[k + 1]]
        start = (k + 1) * period
        caps = [priority_degree_cap(r.priority, dist.d_max) for r in active] if sp else None
        if rap_mode:
            topo = assign_topology([r.user_id for r in active], rap, frame, streams["topology"])
            out = rapirsa_frame(
                active, dist, frame, rap, topo, streams["access"], frame_index=k + 1, frame_start=start, caps=caps
            )
        else:
            out = irsa_frame(active, dist, frame, streams["access"], frame_index=k + 1, frame_start=start, caps=caps)
        finished.extend(out.records)

    _collect(stats, cfg, finished, picks, (n_periods + 1) * period)
    stats.frames = n_periods
    stats.raf_slots = n_periods * frame.n_raf
    stats.total_slots = n_periods * period
    return stats


def _simulate_saloha(cfg: ExperimentConfig, G: float, streams) -> RealizationStats:
    n = cfg.frame.n_raf
    n_windows = max(1, cfg.sim_slots // n)
    slots = _arrivals(cfg, G, streams["traffic"], n, n_windows)
    users, picks = _new_records(slots, 0, cfg, streams["profile"])
    params: SalohaParams = cfg.saloha
    limit_for = None
    if cfg.protocol == "sp-saloha":
        b_off = params.backoff_limit
        limit_for = lambda r: priority_backoff_limit(r.priority, b_off)  # noqa: E731

    bounds = np.searchsorted(slots, np.arange(n_windows + 1) * n)
    max_budget = max(p.latency_ms for p in cfg.app_profiles) / cfg.frame.slot_ms
    drain_windows = int(math.ceil(max_budget / n))
    backlog = Backlog()
    finished: list[TransmissionRecord] = []
    w = 0
    while w < n_windows or (len(backlog) and w < n_windows + drain_windows):
        new = users[bounds[w]:bounds[w + 1]] if w < n_windows else []
        out = saloha_window(
            backlog, new, params, streams["access"],
            n_slots=n, window_start=w * n, frame_index=w, backoff_limit_for=limit_for,
        )
        finished.extend(out.records)
        backlog = out.backlog
        w += 1
    end = w * n
    pending = [
        TransmissionRecord(r.user_id, r.arrival_slot, (), r.priority, r.latency_budget_ms, Outcome.PENDING, None, int(a))
        for r, a in zip(backlog.records, backlog.attempts.tolist())
    ]
    records = finished + pending
    order = np.argsort([r.user_id for r in records], kind="stable")
    records = [records[i] for i in order]

    stats = RealizationStats()
    _collect(stats, cfg, records, picks, end)
    stats.frames = n_windows
    stats.raf_slots = end
    stats.total_slots = end
    return stats


def simulate_realization(cfg: ExperimentConfig, G: float, r: int) -> RealizationStats:
    streams = realization_streams(cfg.seed, r)
    if cfg.protocol in ("saloha", "sp-saloha"):
        return _simulate_saloha(cfg, G, streams)
    return _simulate_frames(cfg, G, streams)


def _task(args):
    cfg, G, r = args
    return simulate_realization(cfg, G, r)


def aggregate(cfg: ExperimentConfig, G: float, parts: list[RealizationStats]) -> MetricsReport:
    generated = sum(p.generated for p in parts)
    delivered = sum(p.delivered for p in parts)
    raf_slots = sum(p.raf_slots for p in parts)
    total_slots = sum(p.total_slots for p in parts)
    frames = sum(p.frames for p in parts)
    delays = np.concatenate([p.delays for p in parts]) if parts else np.empty(0)

    pdr = pdr_ratio(delivered, generated)
    mean_delay = float(math.fsum(delays.tolist()) / len(delays)) if len(delays) else float("nan")
    active_per_frame = generated / frames if frames else 0.0
    p95 = float(np.percentile(delays, 95)) * cfg.frame.slot_ms if len(delays) else float("nan")

    gen = np.sum([p.profile_gen for p in parts], axis=0)
    dl = np.sum([p.profile_del for p in parts], axis=0)
    dsum = np.sum([p.profile_delay_sum for p in parts], axis=0)
    dn = np.sum([p.profile_delay_n for p in parts], axis=0)
    rel_num = 0.0
    for k, prof in enumerate(cfg.app_profiles):
        if gen[k] == 0:
            continue
        tau_ms = (dsum[k] / dn[k]) * cfg.frame.slot_ms if dn[k] else 0.0
        rel_num += gen[k] * (dl[k] / gen[k] if tau_ms <= prof.latency_ms else 0.0)
    reliability = rel_num / gen.sum() if gen.sum() else 1.0

    acr_slots = sum(p.acr_slots for p in parts)
    acr = math.fsum(p.acr_sum for p in parts) / acr_slots if acr_slots else 1.0

    return MetricsReport(
        protocol=cfg.protocol,
        G=G,
        throughput_raf=delivered / raf_slots if raf_slots else 0.0,
        throughput_rapc=delivered / total_slots if total_slots else 0.0,
        pdr=pdr,
        plr=1.0 - pdr,
        mean_delay_slots=mean_delay,
        delay_per_active=mean_delay / active_per_frame if active_per_frame else float("nan"),
        delay_p95_ms=p95,
        reliability=min(1.0, max(0.0, reliability)),
        acr=min(1.0, max(0.0, acr)),
        realizations=len(parts),
        ci_throughput=half_width([p.throughput_raf for p in parts]),
        ci_plr=half_width([p.plr for p in parts]),
        ci_acr=half_width([p.acr for p in parts]),
    )


def run_realizations(cfg: ExperimentConfig, G: float, workers: int = 1) -> list[RealizationStats]:
    tasks = [(cfg, G, r) for r in range(cfg.realizations)]
    if workers <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[MetricsReport]:
    """One MetricsReport per load in ``cfg.load_sweep``."""
    return [aggregate(cfg, G, run_realizations(cfg, G, workers)) for G in cfg.load_sweep]
