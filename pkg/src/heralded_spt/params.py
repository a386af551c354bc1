"""Simulation parameters and the enumerations shared by every kernel."""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    CHIRAL_OPEN = "chiral-open"


class Semantics(str, enum.Enum):
    """How noise acts on a site that already carries an erasure flag.

    ``AS_PUBLISHED`` follows the random-sequential update listing, in which a
    noise event on a flagged site does nothing. ``FULL_CHANNEL`` keeps the
    ``Z n^e`` jump, so a syndrome-type noise event on a flagged site still
    toggles the two neighbouring stabilizers.
    """

    AS_PUBLISHED = "as-published"
    FULL_CHANNEL = "full-channel"


class Initial(str, enum.Enum):
    CLUSTER = "cluster"
    RANDOM_EVEN_PARITY = "random-even-parity"
    ALL_ERASED = "all-erased"


class ParameterError(ValueError):
    """Raised for invalid or inconsistent simulation parameters."""


class NumericalError(RuntimeError):
    """Raised when an integration or eigensolve leaves its validity range."""


@dataclass(frozen=True)
class SimParams:
    """Full configuration of one ensemble cell.

    Rates are per site per unit time, with time measured in units of
    ``1/gamma`` when ``gamma == 1``.
    """

    L: int
    eta: float
    gamma: float = 1.0
    f_e: float = 1.0
    boundary: Boundary = Boundary.PERIODIC
    mu: float = 0.0
    semantics: Semantics = Semantics.AS_PUBLISHED
    initial: Initial = Initial.CLUSTER
    t_max_sweeps: int = 1000
    measure_stride: int = 1
    master_seed: int = 0
    n_traj: int = 100

    def __post_init__(self):
        # coerce strings coming from config files
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "semantics", Semantics(self.semantics))
        object.__setattr__(self, "initial", Initial(self.initial))
        self.validate()

    def validate(self):
        if int(self.L) != self.L or self.L < 3:
            raise ParameterError(f"L must be an integer >= 3, got {self.L!r}")
        for name in ("eta", "gamma"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be non-negative")
        if not 0.0 <= self.f_e <= 1.0:
            raise ParameterError(f"f_e must lie in [0, 1], got {self.f_e}")
        if not 0.0 <= self.mu <= 1.0:
            raise ParameterError(f"mu must lie in [0, 1], got {self.mu}")
        if self.boundary is Boundary.PERIODIC and self.mu != 0.0:
            raise ParameterError("mu is only meaningful with the chiral-open boundary")
        if self.eta + self.gamma <= 0:
            raise ParameterError("at least one of eta, gamma must be positive")
        if self.t_max_sweeps < 0 or self.measure_stride < 1 or self.n_traj < 1:
            raise ParameterError("t_max_sweeps >= 0, measure_stride >= 1, n_traj >= 1 required")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must fit in 64 unsigned bits")

    def replace(self, **changes) -> "SimParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("boundary", "semantics", "initial"):
            out[key] = out[key].value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown parameter(s): {sorted(unknown)}")
        return cls(**data)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
