"""Arrival processes: stationary Poisson load and the two machine-type traffic models
(uniform activations over 60 s, Beta(3, 4) activations over 10 s)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODELS = ("poisson", "beta", "uniform")
DEFAULT_WINDOW_S = {"poisson": 10.0, "beta": 10.0, "uniform": 60.0}


@dataclass(frozen=True)
class TrafficConfig:
    model: str = "poisson"
    total_devices: int = 0  # 0: derived from the load being simulated
    window_s: float | None = None
    beta_alpha: float = 3.0
    beta_beta: float = 4.0
    packet_size_bytes: int = 200

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown traffic model {self.model!r}")
        if self.window_s is None:
            object.__setattr__(self, "window_s", DEFAULT_WINDOW_S[self.model])
        if self.total_devices < 0:
            raise ValueError("total_devices must be >= 0")
        if not self.window_s > 0:
            raise ValueError("window_s must be > 0")
        if not (self.beta_alpha > 0 and self.beta_beta > 0):
            raise ValueError("beta shape parameters must be > 0")
        if self.packet_size_bytes <= 0:
            raise ValueError("packet_size_bytes must be > 0")


def poisson_arrivals(G: float, n_slots: int, rng: np.random.Generator) -> np.ndarray:
    if G < 0:
        raise ValueError("G must be >= 0")
    return rng.poisson(G, size=n_slots).astype(np.int64)


def _bin_times(t_ms: np.ndarray, n_slots: int, slot_ms: float) -> np.ndarray:
    idx = np.floor(t_ms / slot_ms).astype(np.int64)
    idx = idx[idx < n_slots]
    return np.bincount(idx, minlength=n_slots)[:n_slots].astype(np.int64)


def _window_slots(window_s: float, slot_ms: float) -> int:
    return int(np.ceil(window_s * 1000.0 / slot_ms))


def beta_arrivals(
    M: int,
    window_s: float,
    alpha: float,
    beta: float,
    n_slots: int | None,
    slot_ms: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-slot activation counts of ``M`` devices with Beta-distributed start times.

    ``n_slots=None`` covers the whole window, so the counts sum to ``M``;
    a shorter horizon truncates the tail of the window.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("shape parameters must be > 0")
    if n_slots is None:
        n_slots = _window_slots(window_s, slot_ms)
    t_ms = rng.beta(alpha, beta, size=M) * window_s * 1000.0
    return _bin_times(t_ms, n_slots, slot_ms)


def uniform_arrivals(
    M: int, window_s: float, n_slots: int | None, slot_ms: float, rng: np.random.Generator
) -> np.ndarray:
    if n_slots is None:
        n_slots = _window_slots(window_s, slot_ms)
    t_ms = rng.random(M) * window_s * 1000.0
    return _bin_times(t_ms, n_slots, slot_ms)


def arrival_slots(counts: np.ndarray) -> np.ndarray:
    """Expand per-slot counts into one sorted slot index per arrival."""
    counts = np.asarray(counts, dtype=np.int64)
    return np.repeat(np.arange(len(counts), dtype=np.int64), counts)
