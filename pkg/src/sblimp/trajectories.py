"""Velocity setpoints and reference positions for the tracking scenarios.

Every open-loop reference returns ``(v_d, p_d)`` with ``p_d`` the exact
integral of ``v_d``. Hover closes an outer proportional position loop and
therefore needs the current position.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

KINDS = ("hover", "circle", "helix", "constant")
KIND_CODES = {k: i for i, k in enumerate(KINDS)}

HELIX_V0 = 0.06
HELIX_RAMP = 0.000537
HELIX_CLIMB = 0.002
HELIX_HEIGHT = 0.35


def circle_setpoint(radius: float, speed: float, t):
    """Constant-speed circle centered at the origin, starting at ``(radius, 0)``.

    ``v_d = speed [-sin(wt), cos(wt)]`` with ``w = speed / radius``. Works on
    scalar or array ``t``; arrays give shape ``(..., 2)`` outputs.
    """
    if radius <= 0 or speed <= 0:
        raise ValueError("radius and speed must be > 0")
    t = np.asarray(t, dtype=np.float64)
    phase = speed / radius * t
    v = speed * np.stack([-np.sin(phase), np.cos(phase)], axis=-1)
    p = radius * np.stack([np.cos(phase), np.sin(phase)], axis=-1)
    return v, p


def helix_setpoint(radius: float = 1.0, v0: float = HELIX_V0, ramp: float = HELIX_RAMP,
                   climb: float = HELIX_CLIMB, t=0.0, height: float = HELIX_HEIGHT):
    """Helix with a linearly increasing planar speed ``v0 + ramp t``.

    The phase is the exact integral of the speed divided by the radius, so
    the planar speed profile holds to rounding at any ``t``. Outputs are
    ``[x, y, z]`` components.
    """
    if radius <= 0 or v0 <= 0 or climb < 0:
        raise ValueError("need radius > 0, v0 > 0, climb >= 0")
    t = np.asarray(t, dtype=np.float64)
    speed = v0 + ramp * t
    phase = (v0 * t + 0.5 * ramp * t * t) / radius
    v = np.stack([-speed * np.sin(phase), speed * np.cos(phase),
                  np.full_like(phase, climb)], axis=-1)
    p = np.stack([radius * np.cos(phase), radius * np.sin(phase),
                  height + climb * t], axis=-1)
    return v, p


def hover_setpoint(target, position, k_p: float = 0.5, v_cap: float = 0.3):
    """Outer position loop: ``v_d = k_p (target - position)``, norm-capped."""
    target = np.asarray(target, dtype=np.float64)
    v = k_p * (target - np.asarray(position, dtype=np.float64))
    n = float(np.linalg.norm(v))
    if n > v_cap:
        v = v * (v_cap / n)
    return v, target.copy()


@dataclass(frozen=True)
class TrajectoryRef:
    """A reference scenario.

    Spatial vectors (``center``, ``target``, ``velocity``, ``origin``) are
    ``(x, y, z)``. The planar model reads their x and z components and puts
    circles in the vertical xz plane; the spatial model flies circles and
    helices in a horizontal plane at ``center[2]``.
    """

    kind: str = "circle"
    radius: float = 1.0
    speed: float = 0.1
    ramp: float = 0.0
    climb: float = 0.0
    center: tuple = (0.0, 0.0, 0.0)
    target: tuple = (0.0, 0.0, 0.0)
    k_p: float = 0.5
    v_cap: float = 0.3
    velocity: tuple = (0.0, 0.0, 0.0)
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}; expected one of {KINDS}")
        for name in ("center", "target", "velocity", "origin"):
            vec = tuple(float(x) for x in getattr(self, name))
            if len(vec) != 3:
                raise ValueError(f"{name} needs three components")
            object.__setattr__(self, name, vec)
        if self.kind in ("circle", "helix") and (self.radius <= 0 or self.speed <= 0):
            raise ValueError("radius and speed must be > 0")
        if self.kind == "helix" and self.climb < 0:
            raise ValueError("climb must be >= 0")
        if self.kind == "hover" and (self.k_p <= 0 or self.v_cap <= 0):
            raise ValueError("k_p and v_cap must be > 0")

    @classmethod
    def circle(cls, radius=1.0, speed=0.1, center=(0.0, 0.0, 0.0)):
        return cls("circle", radius=radius, speed=speed, center=center)

    @classmethod
    def helix(cls, radius=1.0, v0=HELIX_V0, ramp=HELIX_RAMP, climb=HELIX_CLIMB,
              height=HELIX_HEIGHT):
        return cls("helix", radius=radius, speed=v0, ramp=ramp, climb=climb,
                   center=(0.0, 0.0, height))

    @classmethod
    def hover(cls, target=(0.0, 0.0, 0.0), k_p=0.5, v_cap=0.3):
        return cls("hover", target=target, k_p=k_p, v_cap=v_cap)

    @classmethod
    def constant(cls, velocity, origin=(0.0, 0.0, 0.0)):
        return cls("constant", velocity=velocity, origin=origin)

    def to_dict(self) -> dict:
        return asdict(self)

    def kernel_args(self):
        """Integer kind code and packed float parameters for the simulation kernels."""
        packed = [self.radius, self.speed, self.ramp, self.climb, *self.center,
                  *self.target, self.k_p, self.v_cap, *self.velocity, *self.origin]
        return KIND_CODES[self.kind], np.array(packed, dtype=np.float64)

    def planar(self, t, position=None):
        """``(v_d, p_d)`` as ``[x, z]`` vectors at time ``t``."""
        cx, _, cz = self.center
        if self.kind == "circle":
            v, p = circle_setpoint(self.radius, self.speed, t)
            return v, p + np.array([cx, cz])
        if self.kind == "hover":
            if position is None:
                raise ValueError("hover needs the current position")
            tgt = np.array([self.target[0], self.target[2]])
            return hover_setpoint(tgt, position, self.k_p, self.v_cap)
        if self.kind == "constant":
            v = np.array([self.velocity[0], self.velocity[2]])
            o = np.array([self.origin[0], self.origin[2]])
            t = np.asarray(t, dtype=np.float64)
            return np.broadcast_to(v, t.shape + (2,)).copy(), o + np.multiply.outer(t, v)
        raise ValueError("a helix has no planar form; use the spatial model")

    def spatial(self, t, position=None):
        """``(v_d, p_d)`` as ``[x, y, z]`` vectors at time ``t``."""
        center = np.array(self.center)
        if self.kind == "circle":
            v, p = circle_setpoint(self.radius, self.speed, t)
            zeros = np.zeros(v.shape[:-1] + (1,))
            return (np.concatenate([v, zeros], axis=-1),
                    np.concatenate([p, zeros], axis=-1) + center)
        if self.kind == "helix":
            v, p = helix_setpoint(self.radius, self.speed, self.ramp, self.climb, t,
                                  height=self.center[2])
            return v, p + np.array([center[0], center[1], 0.0])
        if self.kind == "hover":
            if position is None:
                raise ValueError("hover needs the current position")
            return hover_setpoint(self.target, position, self.k_p, self.v_cap)
        v = np.array(self.velocity)
        t = np.asarray(t, dtype=np.float64)
        return np.broadcast_to(v, t.shape + (3,)).copy(), np.array(self.origin) + np.multiply.outer(t, v)

    def planar_speed(self, t):
        """Declared speed profile in the tracking plane."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "helix":
            return self.speed + self.ramp * t
        if self.kind == "circle":
            return np.full_like(t, self.speed)
        raise ValueError("speed profile only defined for circle and helix")
