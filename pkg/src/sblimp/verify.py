"""Built-in verification suite run by ``sblimp verify``.

Each check returns a :class:`CheckResult`; a check that raises counts as a
failure carrying the exception message.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controller import closed_form_velocity, feedback_linearize, steady_state_ratio
from .model import (PlanarState, allocation_force_matrix, allocation_torque_matrix,
                    coupling_coefficient, pendulum_energy)
from .params import ControllerGains, DesignParams
from .simulator import SimConfig, run, unactuated_run
from .trajectories import TrajectoryRef


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_designs(n: int, rng: np.random.Generator) -> list[DesignParams]:
    """Random valid designs spanning the geometric parameters."""
    return [
        DesignParams(
            a_x=rng.uniform(1e-3, 0.2), a_z=rng.uniform(-0.1, -1e-3),
            eta=rng.uniform(0.05, math.pi / 2 - 0.05), L_b=rng.uniform(0.01, 1.0),
        )
        for _ in range(n)
    ]


def check_allocation(params: DesignParams, n_random: int = 1000, seed: int = 0,
                     tol: float = 1e-12) -> CheckResult:
    """Torque row equals ``c`` times the body-x force row, and hover thrust balances."""
    designs = [params] + random_designs(n_random, np.random.default_rng(seed))
    worst = 0.0
    for p in designs:
        a_f = allocation_force_matrix(p)
        a_tau = allocation_torque_matrix(p)
        c = coupling_coefficient(p)
        worst = max(worst, float(np.max(np.abs(a_tau - np.array([[c, 0.0]]) @ a_f))))
    u = feedback_linearize(params, 0.0, np.zeros(2))
    hover = float(np.max(np.abs(allocation_force_matrix(params) @ u
                                - np.array([0.0, params.net_weight]))))
    ok = worst <= tol and hover <= tol
    return CheckResult("allocation identity", ok,
                       f"max residual {worst:.3g} over {len(designs)} designs, hover {hover:.3g}")


def check_velocity_oracle(params: DesignParams, gains: ControllerGains, dt: float = 1e-3,
                          duration: float = 10.0, tol: float = 1e-6,
                          ratio_tol: float = 1e-4) -> CheckResult:
    """Pinned-attitude step response against the exact first-order solution."""
    v_d = np.array([0.05, 0.02])
    cfg = SimConfig(dt=dt, duration=duration, pin_attitude=True,
                    initial_state=PlanarState.at_rest(), tracking_loss=False)
    log = run(params, gains, cfg, TrajectoryRef.constant((v_d[0], 0.0, v_d[1])))
    if log.diverged:
        return CheckResult("analytic velocity oracle", False, f"run {log.status}")
    if log.any_saturated.any():
        return CheckResult("analytic velocity oracle", False, "rotors saturated")
    exact = closed_form_velocity(params, gains, v_d, np.zeros(2), log.t)
    err = float(np.max(np.abs(log.velocities - exact)))
    ratio_err = float(np.max(np.abs(log.velocities[-1] / v_d - steady_state_ratio(params, gains))))
    ok = err <= tol and ratio_err <= ratio_tol
    return CheckResult("analytic velocity oracle", ok,
                       f"max |v - v_exact| {err:.3g} m/s, steady-state ratio error {ratio_err:.3g}")


def check_pendulum(params: DesignParams, n_runs: int = 50, seed: int = 0, dt: float = 1e-3,
                   duration: float = 40.0, settle: float = 1e-3,
                   energy_slack: float = 1e-15) -> CheckResult:
    """Unactuated runs from random pitch settle and never gain energy."""
    rng = np.random.default_rng(seed)
    cfg = SimConfig(dt=dt, duration=duration)
    worst_final, worst_rise = 0.0, -np.inf
    for theta0 in rng.uniform(-1.2, 1.2, n_runs):
        log = unactuated_run(params, cfg, PlanarState([0.0, 0.0], [0.0, 0.0], theta0, 0.0))
        if log.diverged:
            return CheckResult("pendulum decay", False, f"theta0={theta0:.3f} {log.status}")
        e = pendulum_energy(params, log.angles[:, 0], log.rates[:, 0])
        worst_rise = max(worst_rise, float(np.max(np.diff(e))))
        worst_final = max(worst_final, abs(float(log.angles[-1, 0])))
    ok = worst_final < settle and worst_rise <= energy_slack
    return CheckResult("pendulum decay", ok,
                       f"max final |theta| {worst_final:.3g} rad, max energy rise {worst_rise:.3g} J")


CHECKS = (
    ("allocation identity", lambda p, g, seed: check_allocation(p, seed=seed)),
    ("analytic velocity oracle", lambda p, g, seed: check_velocity_oracle(p, g)),
    ("pendulum decay", lambda p, g, seed: check_pendulum(p, seed=seed)),
)


def run_checks(params: DesignParams, gains: ControllerGains, seed: int = 0) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        try:
            results.append(fn(params, gains, seed))
        except Exception as exc:  # a raising check is a failed check
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
