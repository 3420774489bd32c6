"""Scenario files: TOML documents holding one platoon study.

A scenario has up to seven sections (platoon, highway, radio, queue,
simulation, optimization, sweep).  Every key is optional and defaults
to the baseline study configuration; unknown sections or keys are
rejected so typos cannot silently fall back to defaults.  Keys whose
unit is not the SI base carry the unit in their name (dBm, Hz, bits)
and are normalized here, so the rest of the package only ever sees
watts, meters, seconds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .exceptions import ScenarioError
from .model import HighwayScene, PlatoonSpec, QueueSpec, RadioSpec

DENSITY_PRESETS = {
    # per-lane densities for the 4-lane layout plus ahead/behind
    "small": {"lanes": (0.01, 0.005, 0.005, 0.0), "ahead": 0.01, "behind": 0.01},
    "high": {"lanes": (0.015, 0.01, 0.01, 0.0), "ahead": 0.015, "behind": 0.015},
}

_PLATOON_DEFAULTS = {
    "followers": 6,
    "target_spacing": 20.0,
    "target_velocity": 15.0,
    "gain_a": 2.0,
    "gain_b": 2.0,
    "v_max": 30.0,
    "d_sparse": 35.0,
    "d_dense": 5.0,
}

_HIGHWAY_DEFAULTS = {
    "lanes": 4,
    "lane_width": 3.7,
    "platoon_lane": 4,
    "density_preset": "small",
    "lane_densities": None,       # overrides the preset when given
    "ahead_density": None,
    "behind_density": None,
    "dist_to_head": None,         # default: platoon midpoint
    "dist_to_tail": None,
    "segment_length": 10_000.0,
}

_RADIO_DEFAULTS = {
    "tx_power_dbm": 27.0,
    "pathloss_exponent": 3.0,
    "nakagami_beta": 3,
    "bandwidth_hz": 40e6,
    "noise_psd_dbm_hz": -174.0,
    "packet_bits": 3200.0,
    "link_distance": None,        # default: target spacing
}

_QUEUE_DEFAULTS = {
    "arrival_rate": 10.0,
    "processor_rate": 10_000.0,
}

_SIMULATION_DEFAULTS = {
    "duration": 60.0,
    "time_step": 1e-3,
    "seed": 1,
    "delay": "uniform",           # fixed | uniform | from_queue
    "delay_s": 0.0139,
    "delay_max_s": 0.0139,
    "initial": "perturbed",       # perturbed | equilibrium
    "initial_velocity": None,     # equilibrium cruise speed
    "spacing_error": 5.0,
    "velocity_error": 3.0,
    "leader_steps": [],
    "mc_draws": 100_000,
    "mc_theta_db_min": -10.0,
    "mc_theta_db_max": 30.0,
    "mc_theta_db_step": 1.0,
}

_OPTIMIZATION_DEFAULTS = {
    "a_min": 2.0,
    "a_max": 4.0,
    "b_min": 2.0,
    "b_max": 4.0,
    "method": "ellipsoid",
    "epsilon": 1e-4,
    "oracle_resolution": 200,
}

_SWEEP_DEFAULTS = {
    "parameter": None,
    "start": None,
    "stop": None,
    "step": None,
    "values": None,
}

_SECTIONS = {
    "platoon": _PLATOON_DEFAULTS,
    "highway": _HIGHWAY_DEFAULTS,
    "radio": _RADIO_DEFAULTS,
    "queue": _QUEUE_DEFAULTS,
    "simulation": _SIMULATION_DEFAULTS,
    "optimization": _OPTIMIZATION_DEFAULTS,
    "sweep": _SWEEP_DEFAULTS,
}

SWEEP_PARAMETERS = ("spacing", "bandwidth", "density_scale", "packet_size",
                    "follower_count", "gain_pair")


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SimSettings:
    """Normalized [simulation] section."""

    duration: float
    time_step: float
    seed: int
    delay: str
    delay_s: float
    delay_max_s: float
    initial: str
    initial_velocity: Optional[float]
    spacing_error: float
    velocity_error: float
    leader_steps: tuple[tuple[float, float], ...]
    mc_draws: int
    mc_theta_db: tuple[float, float, float]


@dataclass(frozen=True)
class OptimizationSettings:
    a_min: float
    a_max: float
    b_min: float
    b_max: float
    method: str
    epsilon: float
    oracle_resolution: int


@dataclass(frozen=True)
class SweepSettings:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class Scenario:
    """Fully validated scenario with derived domain objects."""

    platoon: PlatoonSpec
    highway: HighwayScene
    radio: RadioSpec
    queue: QueueSpec
    simulation: SimSettings
    optimization: OptimizationSettings
    sweep: Optional[SweepSettings]
    source_hash: str
    raw: dict = field(repr=False, default_factory=dict)


def _merge(section, data):
    defaults = _SECTIONS[section]
    unknown = set(data) - set(defaults)
    if unknown:
        raise ScenarioError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    merged = dict(defaults)
    merged.update(data)
    return merged


def _midpoint_distances(followers, spacing):
    mid = max(1, round(followers / 2))
    return mid * spacing, (followers - mid) * spacing


def parse_scenario(text, source_name="<scenario>"):
    """Parse and validate a scenario document; returns a Scenario."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{source_name}: TOML parse error: {exc}") from exc

    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ScenarioError(
            f"{source_name}: unknown section(s): {', '.join(sorted(unknown))}")
    for name, value in doc.items():
        if not isinstance(value, dict):
            raise ScenarioError(f"{source_name}: [{name}] must be a section")

    try:
        return _build(doc, text)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{source_name}: {exc}") from exc


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), source_name=str(path))


def _build(doc, text):
    pl = _merge("platoon", doc.get("platoon", {}))
    hw = _merge("highway", doc.get("highway", {}))
    rd = _merge("radio", doc.get("radio", {}))
    qu = _merge("queue", doc.get("queue", {}))
    sm = _merge("simulation", doc.get("simulation", {}))
    op = _merge("optimization", doc.get("optimization", {}))
    sw = _merge("sweep", doc.get("sweep", {})) if "sweep" in doc else None

    platoon = PlatoonSpec(
        follower_count=int(pl["followers"]),
        target_spacing=float(pl["target_spacing"]),
        target_velocity=float(pl["target_velocity"]),
        gain_a=float(pl["gain_a"]),
        gain_b=float(pl["gain_b"]),
        v_max=float(pl["v_max"]),
        d_sparse=float(pl["d_sparse"]),
        d_dense=float(pl["d_dense"]),
    )

    preset_name = hw["density_preset"]
    if preset_name not in DENSITY_PRESETS:
        raise ScenarioError(f"unknown density_preset {preset_name!r}; "
                            f"choose from {sorted(DENSITY_PRESETS)}")
    preset = DENSITY_PRESETS[preset_name]
    lanes = int(hw["lanes"])
    if hw["lane_densities"] is not None:
        lane_densities = tuple(float(d) for d in hw["lane_densities"])
    else:
        if lanes != 4 or int(hw["platoon_lane"]) != 4:
            raise ScenarioError(
                "density presets are defined for the 4-lane layout; give "
                "lane_densities explicitly for other layouts")
        lane_densities = preset["lanes"]
    ahead = float(preset["ahead"] if hw["ahead_density"] is None
                  else hw["ahead_density"])
    behind = float(preset["behind"] if hw["behind_density"] is None
                   else hw["behind_density"])
    head, tail = _midpoint_distances(platoon.follower_count,
                                     platoon.target_spacing)
    if hw["dist_to_head"] is not None:
        head = float(hw["dist_to_head"])
    if hw["dist_to_tail"] is not None:
        tail = float(hw["dist_to_tail"])

    highway = HighwayScene(
        lane_count=lanes,
        lane_width=float(hw["lane_width"]),
        platoon_lane=int(hw["platoon_lane"]),
        lane_densities=lane_densities,
        ahead_density=ahead,
        behind_density=behind,
        dist_to_head=head,
        dist_to_tail=tail,
        segment_length=float(hw["segment_length"]),
    )

    link = (platoon.target_spacing if rd["link_distance"] is None
            else float(rd["link_distance"]))
    radio = RadioSpec(
        tx_power=dbm_to_watts(float(rd["tx_power_dbm"])),
        pathloss_alpha=float(rd["pathloss_exponent"]),
        nakagami_beta=int(rd["nakagami_beta"]),
        total_bandwidth=float(rd["bandwidth_hz"]),
        noise_psd=dbm_to_watts(float(rd["noise_psd_dbm_hz"])),
        packet_size=float(rd["packet_bits"]),
        link_distance=link,
    )

    queue = QueueSpec(arrival_rate=float(qu["arrival_rate"]),
                      processor_rate=float(qu["processor_rate"]))

    if sm["delay"] not in ("fixed", "uniform", "from_queue"):
        raise ScenarioError(f"unknown delay model {sm['delay']!r}")
    if sm["initial"] not in ("perturbed", "equilibrium"):
        raise ScenarioError(f"unknown initial condition {sm['initial']!r}")
    steps = tuple((float(t), float(v)) for t, v in sm["leader_steps"])
    simulation = SimSettings(
        duration=float(sm["duration"]),
        time_step=float(sm["time_step"]),
        seed=int(sm["seed"]),
        delay=sm["delay"],
        delay_s=float(sm["delay_s"]),
        delay_max_s=float(sm["delay_max_s"]),
        initial=sm["initial"],
        initial_velocity=(None if sm["initial_velocity"] is None
                          else float(sm["initial_velocity"])),
        spacing_error=float(sm["spacing_error"]),
        velocity_error=float(sm["velocity_error"]),
        leader_steps=steps,
        mc_draws=int(sm["mc_draws"]),
        mc_theta_db=(float(sm["mc_theta_db_min"]),
                     float(sm["mc_theta_db_max"]),
                     float(sm["mc_theta_db_step"])),
    )

    optimization = OptimizationSettings(
        a_min=float(op["a_min"]), a_max=float(op["a_max"]),
        b_min=float(op["b_min"]), b_max=float(op["b_max"]),
        method=str(op["method"]), epsilon=float(op["epsilon"]),
        oracle_resolution=int(op["oracle_resolution"]),
    )

    sweep = None
    if sw is not None:
        if sw["parameter"] not in SWEEP_PARAMETERS:
            raise ScenarioError(
                f"sweep parameter must be one of {SWEEP_PARAMETERS}")
        if sw["values"] is not None:
            values = tuple(sw["values"])
        else:
            missing = [k for k in ("start", "stop", "step") if sw[k] is None]
            if missing:
                raise ScenarioError(
                    f"sweep needs either 'values' or start/stop/step "
                    f"(missing {', '.join(missing)})")
            values = []
            v = float(sw["start"])
            stop, step = float(sw["stop"]), float(sw["step"])
            if step <= 0:
                raise ScenarioError("sweep step must be positive")
            while v <= stop + 1e-9 * step:
                values.append(round(v, 12))
                v += step
            values = tuple(values)
        if sw["parameter"] == "gain_pair":
            values = tuple((float(a), float(b)) for a, b in values)
        sweep = SweepSettings(parameter=sw["parameter"], values=values)

    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return Scenario(platoon=platoon, highway=highway, radio=radio,
                    queue=queue, simulation=simulation,
                    optimization=optimization, sweep=sweep,
                    source_hash=digest, raw=doc)


def default_scenario():
    """The baseline configuration (all defaults)."""
    return parse_scenario("", source_name="<defaults>")


def apply_sweep_value(scenario, parameter, value):
    """Rebuild a scenario with one swept parameter overridden.

    Derived defaults (link distance, midpoint head/tail distances)
    follow the override, which is what sweeps over spacing or platoon
    size need.
    """
    import copy

    doc = copy.deepcopy(scenario.raw)
    doc.pop("sweep", None)

    def section(name):
        return doc.setdefault(name, {})

    if parameter == "spacing":
        section("platoon")["target_spacing"] = float(value)
    elif parameter == "bandwidth":
        section("radio")["bandwidth_hz"] = float(value)
    elif parameter == "packet_size":
        section("radio")["packet_bits"] = float(value)
    elif parameter == "follower_count":
        section("platoon")["followers"] = int(value)
    elif parameter == "gain_pair":
        a, b = value
        section("platoon")["gain_a"] = float(a)
        section("platoon")["gain_b"] = float(b)
    elif parameter == "density_scale":
        factor = float(value)
        hw = section("highway")
        base_lanes = scenario.highway.lane_densities
        hw["lane_densities"] = [d * factor for d in base_lanes]
        hw["ahead_density"] = scenario.highway.ahead_density * factor
        hw["behind_density"] = scenario.highway.behind_density * factor
    else:
        raise ScenarioError(f"unknown sweep parameter {parameter!r}")

    return _build(doc, repr(sorted(doc.items())))
