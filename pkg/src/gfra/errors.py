"""Exception types raised across the simulator."""
from __future__ import annotations


class SimError(ValueError):
    """Base class for all simulator input/consistency errors."""


class NotNormalized(SimError):
    def __init__(self, total: float):
        super().__init__(f"degree distribution sums to {total!r}, expected 1")
        self.total = total


class NegativeMass(SimError):
    def __init__(self, degree: int):
        super().__init__(f"negative probability mass at degree {degree}")
        self.degree = degree


class DegreeOutOfRange(SimError):
    def __init__(self, degree):
        super().__init__(f"degree {degree!r} outside [1, d_max]")
        self.degree = degree


class TooManyReplicas(SimError):
    def __init__(self, d: int, n_raf: int):
        super().__init__(f"cannot place {d} distinct replicas in {n_raf} slots")
        self.d = d
        self.n_raf = n_raf


class DuplicateUserId(SimError):
    def __init__(self, user_id):
        super().__init__(f"duplicate user id {user_id!r}")
        self.user_id = user_id


class UnknownUser(SimError):
    def __init__(self, user_id):
        super().__init__(f"user {user_id!r} is not present in the BS graph")
        self.user_id = user_id


class PriorityOutOfRange(SimError):
    def __init__(self, priority):
        super().__init__(f"priority {priority!r} outside [0, 100]")
        self.priority = priority


class CountMismatch(SimError):
    def __init__(self, received: int, generated: int):
        super().__init__(f"received count {received} exceeds generated count {generated}")
        self.received = received
        self.generated = generated


class NegativeCount(SimError):
    pass


class ConfigError(SimError):
    """Any failure while parsing or validating an experiment config."""


class ConfigSyntaxError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"config syntax error{where}: {message}")
        self.line = line


class UnknownKey(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"unknown config key {name!r}")
        self.name = name


class MissingSection(ConfigError):
    def __init__(self, section: str, protocol: str):
        super().__init__(f"protocol {protocol!r} requires a {section!r} section")
        self.section = section
        self.protocol = protocol


class InvalidValue(ConfigError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"invalid value for {field!r}: {reason}")
        self.field = field
