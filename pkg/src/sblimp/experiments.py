"""Parameter sweeps, run metrics and stability classification."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .params import ControllerGains, DesignParams, InvalidDesignError
from .simulator import SimConfig, SimLog, run
from .trajectories import TrajectoryRef

STABLE = "stable"
DEGRADED = "saturated-degraded"
DIVERGED = "diverged"
INVALID = "invalid-config"

SWEEP_COLUMNS = ("param_value", "max_verr", "avg_verr", "max_aerr", "avg_aerr",
                 "max_perr", "avg_perr", "sat_frac", "class")
METRIC_NAMES = SWEEP_COLUMNS[1:-1]

# default grid (start, stop, step) per swept parameter
DEFAULT_GRIDS = {
    "L_b": (0.01, 1.0, 0.01),
    "mass": (0.05, 0.1, 0.005),
    "speed": (0.01, 2.0, 0.01),
}


@dataclass(frozen=True)
class Metrics:
    max_verr: float
    avg_verr: float
    max_aerr: float
    avg_aerr: float
    max_perr: float
    avg_perr: float
    sat_frac: float
    n_samples: int

    def as_row(self):
        return [getattr(self, k) for k in METRIC_NAMES]


def _window(log: SimLog, transient: float) -> np.ndarray:
    mask = log.t >= transient
    if not mask.any():
        # runs shorter than the transient (or diverged inside it) use every sample
        mask = np.ones_like(mask)
    return mask


def metrics(log: SimLog, transient: float = 10.0) -> Metrics:
    """Error statistics over samples at or after ``transient`` seconds.

    The window applies to every statistic, including the saturation
    fraction. If no sample lies in the window the whole log is used.
    """
    if len(log) == 0:
        raise ValueError("empty log")
    w = _window(log, transient)
    ve = log.velocity_error_norm[w]
    ae = log.angular_error[w]
    pe = log.position_error_norm[w]
    return Metrics(
        float(ve.max()), float(ve.mean()),
        float(ae.max()), float(ae.mean()),
        float(pe.max()), float(pe.mean()),
        float(log.any_saturated[w].mean()),
        int(w.sum()),
    )


def classify_stability(log: SimLog, transient: float = 10.0, sat_threshold: float = 0.05,
                       degrade_factor: float | None = None) -> str:
    """Label a run ``stable``, ``saturated-degraded`` or ``diverged``.

    A run that did not diverge is degraded when more than ``sat_threshold``
    of its post-transient samples saturate. Passing ``degrade_factor`` adds a
    second condition: the peak post-transient velocity error must also exceed
    ``degrade_factor`` times the median error logged before the first
    saturated sample (a run saturated from its first sample meets it
    trivially).
    """
    if len(log) == 0:
        raise ValueError("empty log")
    if log.diverged:
        return DIVERGED
    w = _window(log, transient)
    if log.any_saturated[w].mean() <= sat_threshold:
        return STABLE
    if degrade_factor is None:
        return DEGRADED
    ve = log.velocity_error_norm
    first = int(np.argmax(log.any_saturated))
    if first == 0:
        return DEGRADED
    baseline = float(np.median(ve[:first]))
    return DEGRADED if ve[w].max() > degrade_factor * baseline else STABLE


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep over ``L_b``, ``mass`` or target ``speed``.

    Every grid point flies ``trajectory`` (by default a 1 m circle at
    0.1 m/s) for ``sim.duration`` seconds.
    """

    parameter: str
    start: float
    stop: float
    step: float
    params: DesignParams = field(default_factory=DesignParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    trajectory: TrajectoryRef = field(default_factory=TrajectoryRef.circle)
    sim: SimConfig = field(default_factory=SimConfig)
    parallel: int = 1
    sat_threshold: float = 0.05
    degrade_factor: float | None = None

    def __post_init__(self):
        if self.parameter not in DEFAULT_GRIDS:
            raise ValueError(f"parameter must be one of {sorted(DEFAULT_GRIDS)}")
        if not (self.step > 0 and self.stop >= self.start):
            raise ValueError("grid needs step > 0 and stop >= start")
        if self.parallel < 1:
            raise ValueError("parallel must be >= 1")
        if self.parameter == "speed" and self.trajectory.kind not in ("circle", "helix"):
            raise ValueError("a speed sweep needs a circle or helix trajectory")

    @classmethod
    def default(cls, parameter: str, **kw) -> "SweepSpec":
        start, stop, step = DEFAULT_GRIDS[parameter]
        return cls(parameter, start, stop, step, **kw)

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(n), 12)

    def configure(self, value: float):
        """Design, gains and trajectory for one grid value (may raise)."""
        params, traj = self.params, self.trajectory
        if self.parameter == "L_b":
            params = params.replace(L_b=value)
        elif self.parameter == "mass":
            params = params.replace(m=value)
        else:
            traj = replace(traj, speed=value)
        params.require_controllable()
        return params, self.gains, traj


@dataclass(frozen=True)
class SweepPoint:
    param_value: float
    stability: str
    status: str
    metrics: Metrics | None = None
    error: str | None = None


@dataclass
class SweepReport:
    parameter: str
    points: list
    anomalies: list = field(default_factory=list)

    def values(self) -> np.ndarray:
        return np.array([p.param_value for p in self.points])

    def column(self, name: str) -> np.ndarray:
        if name == "class":
            return np.array([p.stability for p in self.points])
        return np.array([getattr(p.metrics, name) if p.metrics else np.nan
                         for p in self.points])

    def classes(self) -> list:
        return [p.stability for p in self.points]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for p in self.points:
                row = p.metrics.as_row() if p.metrics else [math.nan] * len(METRIC_NAMES)
                fields_ = ["%.9g" % p.param_value] + ["%.9g" % x for x in row] + [p.stability]
                fh.write(",".join(fields_) + "\n")
        return path

    def write_plot_data(self, directory) -> list:
        """One two-column ``<parameter> <metric>`` file per metric."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = []
        x = self.values()
        for name in METRIC_NAMES:
            path = directory / f"{self.parameter}_{name}.dat"
            np.savetxt(path, np.column_stack([x, self.column(name)]), fmt="%.9g",
                       header=f"{self.parameter} {name}")
            out.append(path)
        return out

    def write_gnuplot(self, directory) -> Path:
        """Error-vs-parameter script over the files from :meth:`write_plot_data`."""
        directory = Path(directory)
        p = self.parameter
        script = directory / f"{p}_errors.gp"
        script.write_text(
            "set terminal pngcairo size 900,600\n"
            f"set output '{p}_errors.png'\n"
            f"set xlabel '{p}'\n"
            "set ylabel 'velocity error [m/s]'\n"
            "set y2label 'angular error [rad]'\n"
            "set y2tics\n"
            f"plot '{p}_max_verr.dat' w l t 'max |v_d - v|', "
            f"'{p}_avg_verr.dat' w l t 'avg |v_d - v|', "
            f"'{p}_max_aerr.dat' axes x1y2 w l t 'max |theta|'\n"
        )
        return script


def evaluate_point(spec: SweepSpec, value: float) -> SweepPoint:
    try:
        params, gains, traj = spec.configure(value)
    except (InvalidDesignError, ValueError) as exc:
        return SweepPoint(float(value), INVALID, "invalid-config", None, str(exc))
    log = run(params, gains, spec.sim, traj)
    return SweepPoint(
        float(value),
        classify_stability(log, spec.sim.transient, spec.sat_threshold, spec.degrade_factor),
        log.status,
        metrics(log, spec.sim.transient),
    )


def _evaluate(args):
    return evaluate_point(*args)


def frontier_anomalies(report: SweepReport) -> list:
    """Grid points that are not diverged although a lower value already was."""
    anomalies = []
    first = None
    for p in report.points:
        if p.stability == DIVERGED and first is None:
            first = p.param_value
        elif first is not None and p.stability not in (DIVERGED, INVALID):
            anomalies.append(
                f"{report.parameter}={p.param_value:g} is {p.stability} "
                f"after divergence at {first:g}")
    return anomalies


def sweep(spec: SweepSpec, values=None) -> SweepReport:
    """Run every grid point; results are returned in ascending grid order.

    Points are independent, so ``spec.parallel > 1`` farms them out to worker
    processes without changing any result.
    """
    grid = spec.grid() if values is None else np.asarray(values, dtype=np.float64)
    jobs = [(spec, float(v)) for v in grid]
    if spec.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
            points = list(pool.map(_evaluate, jobs))
    else:
        points = [_evaluate(j) for j in jobs]
    points.sort(key=lambda p: p.param_value)
    report = SweepReport(spec.parameter, points)
    if spec.parameter == "speed":
        report.anomalies = frontier_anomalies(report)
    return report


def saturation_onset(report: SweepReport):
    """First grid value whose saturation fraction is positive, else ``None``."""
    for p in report.points:
        if p.metrics is not None and p.metrics.sat_frac > 0:
            return p.param_value
    return None


def divergence_onset(report: SweepReport):
    for p in report.points:
        if p.stability == DIVERGED:
            return p.param_value
    return None


def linear_fit(x, y):
    """Least-squares line; returns ``(slope, intercept, r_squared)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def static_feasible(params: DesignParams) -> bool:
    """Whether clamped rotors can balance the net weight (level attitude)."""
    return params.hover_feasible()


@dataclass(frozen=True)
class CalibrationResult:
    drag: float
    onset_speed: float | None
    target: float
    tolerance: float
    axes: str
    evaluations: int

    @property
    def within_tolerance(self) -> bool:
        return self.onset_speed is not None and abs(self.onset_speed - self.target) <= self.tolerance + 1e-9

    def to_dict(self):
        d = asdict(self)
        d["within_tolerance"] = self.within_tolerance
        return d


def _with_drag(params: DesignParams, drag: float, axes: str) -> DesignParams:
    if axes == "x":
        return params.replace(d_x=drag)
    if axes == "xz":
        return params.replace(d_x=drag, d_z=drag)
    raise ValueError("axes must be 'x' or 'xz'")


def find_onset(params, gains, sim, trajectory=None, speeds=None):
    """Lowest grid speed at which any rotor saturates (bisection on the grid).

    Assumes saturation is monotone in target speed, which holds for the
    circle scenario because every force demand grows with speed.
    """
    trajectory = trajectory or TrajectoryRef.circle()
    speeds = np.round(np.arange(0.01, 2.0 + 1e-9, 0.01), 12) if speeds is None else np.asarray(speeds)

    def saturates(i):
        log = run(params, gains, sim, replace(trajectory, speed=float(speeds[i])))
        return metrics(log, sim.transient).sat_frac > 0

    count = 0
    lo, hi = 0, len(speeds) - 1
    count += 1
    if not saturates(hi):
        return None, count
    count += 1
    if saturates(lo):
        return float(speeds[lo]), count
    while hi - lo > 1:
        mid = (lo + hi) // 2
        count += 1
        if saturates(mid):
            hi = mid
        else:
            lo = mid
    return float(speeds[hi]), count


def calibrate_drag(params: DesignParams | None = None, gains: ControllerGains | None = None,
                   target: float = 0.6, tolerance: float = 0.05, axes: str = "xz",
                   sim: SimConfig | None = None, bounds=(1e-4, 0.2),
                   iterations: int = 14) -> CalibrationResult:
    """Search the translational drag that puts saturation onset at ``target``.

    ``axes='xz'`` ties ``d_x`` and ``d_z``; ``axes='x'`` varies ``d_x`` only.
    Onset falls as drag grows, so the search bisects on ``log(drag)`` for the
    largest drag whose onset is still at or above the goal. The goal is
    ``target`` when some drag in ``bounds`` reaches it and otherwise the
    highest onset reachable (the one at the lower drag bound);
    :attr:`CalibrationResult.within_tolerance` reports whether that lands
    within ``tolerance`` of ``target``.
    """
    params = params or DesignParams()
    gains = gains or ControllerGains()
    sim = sim or SimConfig(decimate=10)
    evals = 0

    def onset(d):
        nonlocal evals
        o, n = find_onset(_with_drag(params, d, axes), gains, sim)
        evals += n
        return math.inf if o is None else o

    def result(d, o):
        return CalibrationResult(d, None if o == math.inf else o, target, tolerance, axes, evals)

    lo, hi = bounds
    o_lo = onset(lo)
    goal = min(target, o_lo)
    o_hi = onset(hi)
    if o_hi >= goal:
        return result(hi, o_hi)
    for _ in range(iterations):
        mid = math.sqrt(lo * hi)
        o = onset(mid)
        if o >= goal:
            lo, o_lo = mid, o
        else:
            hi = mid
    return result(lo, o_lo)
