"""INI-style run configuration.

Sections and keys (all optional; anything omitted takes the default shown by
``sblimp simulate --print-defaults``)::

    [params]      m, J_theta, a_x, a_z, eta, L_b, f_b, d_x, d_z, d_tau,
                  f_min, f_max, g                       (SI units)
    [gains]       k_vx, k_vz, k_vy                      (N s/m; k_vy = none mirrors k_vx)
    [model]       kind = planar | spatial, a_y (m), z_share (none = proportional)
    [sim]         dt, duration, integrator = rk4 | euler, controller_rate_hz,
                  seed, decimate, pin_attitude, transient, max_speed,
                  max_angle, tracking_loss, tracking_ratio, tracking_floor,
                  tracking_window
    [trajectory]  kind = hover | circle | helix | constant, radius, speed,
                  ramp, climb, center_x/y/z, target_x/y/z, k_p, v_cap,
                  vel_x/y/z, origin_x/y/z
    [initial]     x, y, z, theta, phi, vx, vy, vz, theta_dot, phi_dot
                  (present = start here; absent = start on the reference)
    [sweep]       parameter = L_b | mass | speed, start, stop, step, parallel,
                  sat_threshold, degrade_factor
    [output]      dir

Unknown sections or keys are rejected with their line number.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .experiments import DEFAULT_GRIDS, SweepSpec
from .model import PlanarState
from .params import ControllerGains, DesignParams
from .simulator import SimConfig
from .spatial import SpatialState
from .trajectories import KINDS, TrajectoryRef


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, unreadable file."""


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {options}, got {t!r}")
        return t
    return parse


_SIM_TYPES = {"integrator": _choice("rk4", "euler"), "controller_rate_hz": _opt_float,
              "seed": int, "decimate": int, "pin_attitude": _bool, "tracking_loss": _bool}

SCHEMA = {
    "params": {f.name: (float, f.default) for f in fields(DesignParams)},
    "gains": {"k_vx": (float, 0.5), "k_vz": (float, 0.5), "k_vy": (_opt_float, None)},
    "model": {"kind": (_choice("planar", "spatial"), "planar"), "a_y": (_opt_float, None),
              "z_share": (_opt_float, None)},
    "sim": {f.name: (_SIM_TYPES.get(f.name, float), f.default)
            for f in fields(SimConfig) if f.name != "initial_state"},
    "trajectory": {
        "kind": (_choice(*KINDS), "circle"), "radius": (float, 1.0), "speed": (float, 0.1),
        "ramp": (float, 0.0), "climb": (float, 0.0), "k_p": (float, 0.5), "v_cap": (float, 0.3),
        **{f"{vec}_{ax}": (float, 0.0) for vec in ("center", "target", "vel", "origin")
           for ax in "xyz"},
    },
    "initial": {k: (float, 0.0) for k in
                ("x", "y", "z", "theta", "phi", "vx", "vy", "vz", "theta_dot", "phi_dot")},
    "sweep": {"parameter": (_choice(*DEFAULT_GRIDS), "speed"), "start": (_opt_float, None),
              "stop": (_opt_float, None), "step": (_opt_float, None), "parallel": (int, 1),
              "sat_threshold": (float, 0.05), "degrade_factor": (_opt_float, None)},
    "output": {"dir": (str, "")},
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section:
            m = re.match(r"\s*([^=:#;\s]+)\s*[=:]", line)
            if m and m.group(1).strip() == key:
                return lineno
    return None


def _where(source, text, section, key=None):
    line = _line_of(text, section, key)
    loc = f"{source}:{line}" if line else source
    return f"{loc}: [{section}]" + (f" {key}" if key else "")


def parse_config(text: str, source: str = "<config>") -> dict:
    """Typed values per section with defaults filled in.

    ``[initial]`` maps to ``None`` when the section is absent.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="\0")
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    out = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{_where(source, text, section)}: unknown section")
    for section, keys in SCHEMA.items():
        present = cp.has_section(section)
        if section == "initial" and not present:
            out[section] = None
            continue
        values = {k: default for k, (_, default) in keys.items()}
        if present:
            for key, raw in cp.items(section):
                if key not in keys:
                    raise ConfigError(f"{_where(source, text, section, key)}: unknown key")
                try:
                    values[key] = keys[key][0](raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"{_where(source, text, section, key)}: bad value {raw!r} ({exc})") from exc
        out[section] = values
    return out


@dataclass
class RunConfig:
    params: DesignParams
    gains: ControllerGains
    sim: SimConfig
    trajectory: TrajectoryRef
    model: str = "planar"
    a_y: float | None = None
    z_share: float | None = None
    sweep: dict | None = None
    output_dir: str = ""
    values: dict | None = None

    @property
    def spatial(self) -> bool:
        return self.model == "spatial"

    def sweep_spec(self) -> SweepSpec:
        if self.spatial:
            raise ConfigError("sweeps run on the planar model; set [model] kind = planar")
        s = self.sweep or SCHEMA["sweep"]
        start, stop, step = DEFAULT_GRIDS[s["parameter"]]
        return SweepSpec(
            s["parameter"],
            start if s["start"] is None else s["start"],
            stop if s["stop"] is None else s["stop"],
            step if s["step"] is None else s["step"],
            self.params, self.gains, self.trajectory, self.sim,
            parallel=s["parallel"], sat_threshold=s["sat_threshold"],
            degrade_factor=s["degrade_factor"],
        )

    def to_ini(self) -> str:
        """Fully resolved configuration; re-reading it reproduces this object."""
        lines = []
        for section, keys in SCHEMA.items():
            vals = self.values[section]
            if vals is None:
                continue
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_fmt(vals[key])}")
            lines.append("")
        return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def build_config(values: dict) -> RunConfig:
    """Construct domain objects; physical invariant violations propagate as
    :class:`~sblimp.params.InvalidDesignError` (a ``ValueError``)."""
    params = DesignParams(**values["params"])
    g = values["gains"]
    gains = ControllerGains(g["k_vx"], g["k_vz"], g["k_vy"])
    t = values["trajectory"]
    vec = lambda name: tuple(t[f"{name}_{a}"] for a in "xyz")
    trajectory = TrajectoryRef(t["kind"], t["radius"], t["speed"], t["ramp"], t["climb"],
                               vec("center"), vec("target"), t["k_p"], t["v_cap"],
                               vec("vel"), vec("origin"))
    model = values["model"]
    init = values["initial"]
    initial = None
    if init is not None:
        if model["kind"] == "spatial":
            initial = SpatialState([init["x"], init["y"], init["z"]],
                                   [init["vx"], init["vy"], init["vz"]],
                                   init["theta"], init["phi"], init["theta_dot"], init["phi_dot"])
        else:
            initial = PlanarState([init["x"], init["z"]], [init["vx"], init["vz"]],
                                  init["theta"], init["theta_dot"])
    sim = SimConfig(initial_state=initial, **values["sim"])
    if model["kind"] == "planar" and trajectory.kind == "helix":
        raise ValueError("a helix needs [model] kind = spatial")
    z_share = model["z_share"]
    if z_share is not None and not 0 <= z_share <= 1:
        raise ValueError("z_share must lie in [0, 1]")
    return RunConfig(params, gains, sim, trajectory, model["kind"], model["a_y"], z_share,
                     values["sweep"], values["output"]["dir"], values)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read, override (``{(section, key): value}``) and build a configuration.

    Structural problems raise :class:`ConfigError`; physically invalid values
    raise :class:`~sblimp.params.InvalidDesignError` or ``ValueError``.
    """
    if path is None:
        text, source = "", "<defaults>"
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        source = str(path)
    values = parse_config(text, source)
    for (section, key), value in (overrides or {}).items():
        values[section][key] = value
    return build_config(values)


def default_ini() -> str:
    return load_config().to_ini()
