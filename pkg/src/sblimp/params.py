"""Vehicle and controller parameter sets.

All quantities are SI. Defaults describe a Crazyflie-scale swing blimp:
60 g, 0.55 N of buoyancy, a 0.3 m support between the center of lift and
the center of mass, and rotors limited to [0, 0.15] N.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np


class InvalidDesignError(ValueError):
    """A parameter set violates a physical invariant."""


class DegenerateDesignError(InvalidDesignError):
    """The rotor tilt is zero, so the force allocation cannot be inverted."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidDesignError(msg)


@dataclass(frozen=True)
class DesignParams:
    """Physical and actuation constants of one vehicle.

    Parameters
    ----------
    m : float
        Mass [kg].
    J_theta : float
        Pitch moment of inertia [kg m^2].
    a_x, a_z : float
        Rotor offsets from the center of mass [m]; rotors sit below it, so
        ``a_z < 0``.
    eta : float
        Rotor tilt [rad] in (-pi/2, pi/2). Rotor 2 carries ``+eta`` and
        rotor 1 carries ``-eta``.
    L_b : float
        Distance from the center of mass to the center of lift [m].
    f_b : float
        Buoyancy force [N].
    d_x, d_z : float
        Translational damping [N s/m].
    d_tau : float
        Rotational damping [N m s].
    f_min, f_max : float
        Per-rotor thrust limits [N].
    g : float
        Gravitational acceleration [m/s^2].
    """

    m: float = 0.06
    J_theta: float = 0.01
    a_x: float = 0.04
    a_z: float = -0.01
    eta: float = math.pi / 6
    L_b: float = 0.3
    f_b: float = 0.55
    d_x: float = 0.05
    d_z: float = 0.05
    d_tau: float = 0.005
    f_min: float = 0.0
    f_max: float = 0.15
    g: float = 9.81

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            _require(
                isinstance(value, (int, float)) and math.isfinite(value),
                f"{f.name} must be a finite number, got {value!r}",
            )
            object.__setattr__(self, f.name, float(value))
        _require(self.m > 0, "m must be > 0")
        _require(self.J_theta > 0, "J_theta must be > 0")
        _require(self.a_x > 0, "a_x must be > 0")
        _require(self.a_z < 0, "a_z must be < 0 (rotors below the center of mass)")
        _require(abs(self.eta) < math.pi / 2, "eta must lie in (-pi/2, pi/2)")
        _require(self.L_b > 0, "L_b must be > 0")
        _require(self.f_b > 0, "f_b must be > 0")
        _require(self.d_x > 0 and self.d_z > 0, "d_x and d_z must be > 0")
        _require(self.d_tau > 0, "d_tau must be > 0")
        _require(0 <= self.f_min < self.f_max, "need 0 <= f_min < f_max")
        _require(self.g > 0, "g must be > 0")

    def replace(self, **changes) -> "DesignParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def as_array(self) -> np.ndarray:
        """Packed float64 vector in field order (the simulation kernel layout)."""
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def require_controllable(self) -> None:
        if self.eta == 0.0:
            raise DegenerateDesignError(
                "eta = 0: the rotors are parallel and the force allocation is singular"
            )

    @property
    def net_weight(self) -> float:
        """Weight minus buoyancy [N]; positive when the vehicle sinks unpowered."""
        return self.m * self.g - self.f_b

    def hover_feasible(self) -> bool:
        """Whether the rotor limits can balance the net weight at zero tilt."""
        c = math.cos(self.eta)
        return 2 * self.f_min * c <= self.net_weight <= 2 * self.f_max * c


@dataclass(frozen=True)
class ControllerGains:
    """Diagonal velocity gains [N s/m].

    ``k_vy`` is only read by the spatial model; ``None`` mirrors ``k_vx``.
    """

    k_vx: float = 0.5
    k_vz: float = 0.5
    k_vy: float | None = None

    def __post_init__(self):
        for name in ("k_vx", "k_vz", "k_vy"):
            value = getattr(self, name)
            if value is None:
                continue
            _require(math.isfinite(value) and value > 0, f"{name} must be > 0")
            object.__setattr__(self, name, float(value))

    @property
    def K(self) -> np.ndarray:
        return np.diag([self.k_vx, self.k_vz])

    @property
    def ky(self) -> float:
        return self.k_vx if self.k_vy is None else self.k_vy

    def scaled(self, factor: float) -> "ControllerGains":
        return ControllerGains(
            self.k_vx * factor,
            self.k_vz * factor,
            None if self.k_vy is None else self.k_vy * factor,
        )
