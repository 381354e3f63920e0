"""Experiment configuration: strict YAML/JSON parsing with default simulation parameters."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import yaml

from ..core import APP_PROFILES, LAMBDA_8, AppProfile, DegreeDistribution, FrameParams
from ..errors import ConfigSyntaxError, InvalidValue, MissingSection, SimError, UnknownKey
from ..protocols import RapParams, SalohaParams
from ..traffic import TrafficConfig

PROTOCOLS = ("saloha", "irsa", "rapirsa", "sp-saloha", "sp-irsa", "sp-rapirsa")
RAP_PROTOCOLS = ("rapirsa", "sp-rapirsa")

TOP_KEYS = {
    "protocol", "frame", "dist", "rap", "saloha", "traffic", "load_sweep",
    "realizations", "sim_time_s", "seed", "app_profile", "output_path",
}
FRAME_KEYS = {"n_raf", "slot_ms", "max_sic_iters"}
RAP_KEYS = {"q", "eta", "p_vis"}
SALOHA_KEYS = {"backoff_limit", "fresh_only"}
TRAFFIC_KEYS = {"model", "total_devices", "window_s", "beta_alpha", "beta_beta", "packet_size_bytes"}
PROFILE_KEYS = {"name", "latency_ms", "priority"}


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    load_sweep: tuple[float, ...]
    seed: int = 0
    frame: FrameParams = field(default_factory=FrameParams)
    dist: DegreeDistribution = LAMBDA_8
    rap: RapParams | None = None
    saloha: SalohaParams = field(default_factory=SalohaParams)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    realizations: int = 100
    sim_time_s: float = 10.0
    app_profiles: tuple[AppProfile, ...] = (APP_PROFILES["ami"],)
    output_path: str | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise InvalidValue("protocol", f"expected one of {', '.join(PROTOCOLS)}")
        if self.protocol in RAP_PROTOCOLS and self.rap is None:
            raise MissingSection("rap", self.protocol)
        if self.realizations < 1:
            raise InvalidValue("realizations", "must be >= 1")
        if not self.load_sweep:
            raise InvalidValue("load_sweep", "must list at least one load")
        if any(not g > 0 for g in self.load_sweep):
            raise InvalidValue("load_sweep", "loads must be > 0")
        if not self.sim_time_s > 0:
            raise InvalidValue("sim_time_s", "must be > 0")
        if not self.app_profiles:
            raise InvalidValue("app_profile", "at least one profile required")

    @property
    def sim_slots(self) -> int:
        return max(1, int(round(self.sim_time_s * 1000.0 / self.frame.slot_ms)))

    @property
    def frame_period(self) -> int:
        """Slots between consecutive frame starts (RAF plus any cN slots)."""
        if self.protocol in RAP_PROTOCOLS:
            return self.rap.slots_per_frame(self.frame.n_raf)
        return self.frame.n_raf

    def replace(self, **changes) -> "ExperimentConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return ExperimentConfig(**data)

    def to_dict(self) -> dict[str, Any]:
        return {
            "protocol": self.protocol,
            "load_sweep": list(self.load_sweep),
            "seed": self.seed,
            "frame": asdict(self.frame),
            "dist": self.dist.to_dict(),
            "rap": asdict(self.rap) if self.rap else None,
            "saloha": asdict(self.saloha),
            "traffic": asdict(self.traffic),
            "realizations": self.realizations,
            "sim_time_s": self.sim_time_s,
            "app_profile": [asdict(p) for p in self.app_profiles],
            "output_path": self.output_path,
        }


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    value = raw.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise InvalidValue(name, "expected a mapping")
    for key in value:
        if key not in allowed:
            raise UnknownKey(f"{name}.{key}")
    return value


def _build(field_name: str, factory, kwargs):
    try:
        return factory(**kwargs)
    except SimError:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidValue(field_name, str(exc)) from None


def _profile(item) -> AppProfile:
    if isinstance(item, str):
        try:
            return APP_PROFILES[item.lower()]
        except KeyError:
            raise InvalidValue("app_profile", f"unknown profile {item!r}") from None
    if isinstance(item, dict):
        for key in item:
            if key not in PROFILE_KEYS:
                raise UnknownKey(f"app_profile.{key}")
        return _build("app_profile", AppProfile, item)
    raise InvalidValue("app_profile", "expected a name, a mapping or a list of those")


def _profiles(value) -> tuple[AppProfile, ...]:
    if value is None:
        return (APP_PROFILES["ami"],)
    if isinstance(value, str) and value.lower() == "all":
        return tuple(APP_PROFILES.values())
    if isinstance(value, list):
        return tuple(_profile(v) for v in value)
    return (_profile(value),)


def _dist(value) -> DegreeDistribution:
    if value is None:
        return LAMBDA_8
    if not isinstance(value, dict):
        raise InvalidValue("dist", "expected a mapping degree -> probability")
    try:
        mass = {int(k): float(v) for k, v in value.items()}
    except (TypeError, ValueError):
        raise InvalidValue("dist", "degrees must be integers and probabilities numbers") from None
    try:
        return DegreeDistribution(mass)
    except SimError as exc:
        raise InvalidValue("dist", str(exc)) from None


def _int(raw, key, default):
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidValue(key, "expected an integer")
    return v


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise InvalidValue("<root>", "config must be a mapping")
    for key in raw:
        if key not in TOP_KEYS:
            raise UnknownKey(str(key))
    if "protocol" not in raw:
        raise MissingSection("protocol", "<unset>")
    protocol = raw["protocol"]

    sweep = raw.get("load_sweep")
    if sweep is None:
        raise MissingSection("load_sweep", protocol)
    if isinstance(sweep, (int, float)):
        sweep = [sweep]
    try:
        sweep = tuple(float(g) for g in sweep)
    except (TypeError, ValueError):
        raise InvalidValue("load_sweep", "expected a list of numbers") from None

    frame = _build("frame", FrameParams, _section(raw, "frame", FRAME_KEYS))
    rap_raw = raw.get("rap")
    rap = _build("rap", RapParams, _section(raw, "rap", RAP_KEYS)) if rap_raw is not None else None
    saloha = _build("saloha", SalohaParams, _section(raw, "saloha", SALOHA_KEYS))
    traffic = _build("traffic", TrafficConfig, _section(raw, "traffic", TRAFFIC_KEYS))
    seed = _int(raw, "seed", 0)
    if not 0 <= seed < 2**64:
        raise InvalidValue("seed", "must fit in 64 unsigned bits")
    try:
        sim_time_s = float(raw.get("sim_time_s", 10.0))
    except (TypeError, ValueError):
        raise InvalidValue("sim_time_s", "expected a number") from None

    return ExperimentConfig(
        protocol=protocol,
        load_sweep=sweep,
        seed=seed,
        frame=frame,
        dist=_dist(raw.get("dist")),
        rap=rap,
        saloha=saloha,
        traffic=traffic,
        realizations=_int(raw, "realizations", 100),
        sim_time_s=sim_time_s,
        app_profiles=_profiles(raw.get("app_profile")),
        output_path=raw.get("output_path"),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse a YAML (or JSON) experiment description, rejecting unknown keys."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigSyntaxError(getattr(exc, "problem", None) or str(exc), line) from None
    if raw is None:
        raise ConfigSyntaxError("empty document", 1)
    return config_from_dict(raw)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
