"""TOML config parsing and validation for the CLI.

Angles live in degrees in config files and get converted to radians
here; everything downstream is radians. Unknown keys are rejected so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .fusion import FilterTuning, NoiseDefaults
from .sim import LosProcessConfig, NoiseInjection, ScenarioConfig, SpeedProfile

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    tuning: FilterTuning
    raw_text: str


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in [{where}]",
            field=f"{where}.{sorted(unknown)[0]}",
        )


def _num(table: dict, where: str, key: str, default: float) -> float:
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(
            f"{where}.{key} must be a number, got {type(v).__name__}",
            field=f"{where}.{key}",
        )
    return float(v)


def _int(table: dict, where: str, key: str, default: int) -> int:
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(
            f"{where}.{key} must be an integer, got {type(v).__name__}",
            field=f"{where}.{key}",
        )
    return v


def _pairs(table: dict, where: str, key: str, required: bool) -> tuple | None:
    if key not in table:
        if required:
            raise ConfigError(
                f"missing required field {where}.{key}", field=f"{where}.{key}"
            )
        return None
    v = table[key]
    try:
        pairs = tuple((float(a), float(b)) for a, b in v)
    except (TypeError, ValueError):
        raise ConfigError(
            f"{where}.{key} must be a list of [number, number] pairs",
            field=f"{where}.{key}",
        ) from None
    return pairs


def parse_config(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc

    _check_keys(
        doc,
        {"schema", "seed", "trajectory", "deployment", "injected_noise", "los", "filter"},
        "root",
    )
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema {schema!r}, this tool reads schema {SCHEMA_VERSION}",
            field="schema",
        )
    seed = _int(doc, "root", "seed", ScenarioConfig().seed)

    traj = doc.get("trajectory", {})
    _check_keys(
        traj,
        {
            "dt_s",
            "waypoints_m",
            "nominal_speed_mps",
            "accel_mps2",
            "corner_speed_mps",
            "stops",
        },
        "trajectory",
    )
    waypoints = _pairs(traj, "trajectory", "waypoints_m", required=True)
    stops = _pairs(traj, "trajectory", "stops", required=False)
    speed = SpeedProfile(
        nominal=_num(traj, "trajectory", "nominal_speed_mps", SpeedProfile.nominal),
        accel=_num(traj, "trajectory", "accel_mps2", SpeedProfile.accel),
        corner_speed=_num(
            traj, "trajectory", "corner_speed_mps", SpeedProfile.corner_speed
        ),
        stops=stops if stops is not None else (),
    )

    dep = doc.get("deployment", {})
    _check_keys(
        dep,
        {"bs_spacing_m", "bs_height_m", "ue_height_m", "bs_lateral_offset_m"},
        "deployment",
    )

    noise_tbl = doc.get("injected_noise", {})
    _check_keys(
        noise_tbl,
        {
            "sigma_range_m",
            "sigma_angle_deg",
            "sigma_rss_range_m",
            "nlos_bias_mean_m",
            "nlos_angle_bias_deg",
        },
        "injected_noise",
    )
    nd = NoiseInjection()
    noise = NoiseInjection(
        sigma_range=_num(noise_tbl, "injected_noise", "sigma_range_m", nd.sigma_range),
        sigma_angle=math.radians(
            _num(
                noise_tbl,
                "injected_noise",
                "sigma_angle_deg",
                math.degrees(nd.sigma_angle),
            )
        ),
        sigma_rss_range=_num(
            noise_tbl, "injected_noise", "sigma_rss_range_m", nd.sigma_rss_range
        ),
        nlos_bias_mean=_num(
            noise_tbl, "injected_noise", "nlos_bias_mean_m", nd.nlos_bias_mean
        ),
        nlos_angle_bias=math.radians(
            _num(
                noise_tbl,
                "injected_noise",
                "nlos_angle_bias_deg",
                math.degrees(nd.nlos_angle_bias),
            )
        ),
    )

    los_tbl = doc.get("los", {})
    _check_keys(
        los_tbl,
        {"count_marginals", "mean_dwell_s", "n_obs", "nlos_link_prob"},
        "los",
    )
    ld = LosProcessConfig()
    marginals = los_tbl.get("count_marginals", list(ld.count_marginals))
    if (
        not isinstance(marginals, list)
        or not all(isinstance(x, (int, float)) for x in marginals)
        or len(marginals) < 2
    ):
        raise ConfigError(
            "los.count_marginals must be a list of probabilities",
            field="los.count_marginals",
        )
    try:
        los = LosProcessConfig(
            count_marginals=tuple(float(x) for x in marginals),
            mean_dwell_s=_num(los_tbl, "los", "mean_dwell_s", ld.mean_dwell_s),
            n_obs=_int(los_tbl, "los", "n_obs", ld.n_obs),
            nlos_link_prob=_num(los_tbl, "los", "nlos_link_prob", ld.nlos_link_prob),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), field="los.count_marginals") from exc

    filt = doc.get("filter", {})
    _check_keys(
        filt,
        {
            "sigma_range_m",
            "sigma_angle_deg",
            "sigma_fix_m",
            "accel_sigma_mps2",
            "nlos_epsilon_m",
            "ut_alpha",
            "ut_beta",
            "ut_kappa",
        },
        "filter",
    )
    fd = NoiseDefaults()
    tuning = FilterTuning(
        noise=NoiseDefaults(
            sigma_range_filter=_num(filt, "filter", "sigma_range_m", fd.sigma_range_filter),
            sigma_angle_filter=math.radians(
                _num(
                    filt,
                    "filter",
                    "sigma_angle_deg",
                    math.degrees(fd.sigma_angle_filter),
                )
            ),
            sigma_fix_filter=_num(filt, "filter", "sigma_fix_m", fd.sigma_fix_filter),
        ),
        accel_sigma=_num(filt, "filter", "accel_sigma_mps2", 1.0),
        nlos_epsilon=_num(filt, "filter", "nlos_epsilon_m", 80.0),
        ut_alpha=_num(filt, "filter", "ut_alpha", 1.0),
        ut_beta=_num(filt, "filter", "ut_beta", 2.0),
        ut_kappa=(
            _num(filt, "filter", "ut_kappa", 0.0) if "ut_kappa" in filt else None
        ),
    )

    scenario = ScenarioConfig(
        dt=_num(traj, "trajectory", "dt_s", 0.1),
        waypoints=waypoints,
        speed=speed,
        bs_spacing=_num(dep, "deployment", "bs_spacing_m", 250.0),
        bs_height=_num(dep, "deployment", "bs_height_m", 10.0),
        ue_height=_num(dep, "deployment", "ue_height_m", 2.0),
        bs_lateral_offset=_num(dep, "deployment", "bs_lateral_offset_m", 15.0),
        noise=noise,
        los=los,
        seed=seed,
    )
    if scenario.dt <= 0:
        raise ConfigError("trajectory.dt_s must be > 0", field="trajectory.dt_s")
    return RunConfig(scenario=scenario, tuning=tuning, raw_text=text)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def default_config_toml(seed: int = ScenarioConfig().seed) -> str:
    """The built-in scenario, rendered as a config file."""
    wp = ",\n    ".join(f"[{x:.1f}, {y:.1f}]" for x, y in DEFAULTS.waypoints)
    stops = ", ".join(f"[{s:.1f}, {d:.1f}]" for s, d in DEFAULTS.speed.stops)
    return f"""schema = 1
seed = {seed}

[trajectory]
dt_s = {DEFAULTS.dt}
waypoints_m = [
    {wp},
]
nominal_speed_mps = {DEFAULTS.speed.nominal}
accel_mps2 = {DEFAULTS.speed.accel}
corner_speed_mps = {DEFAULTS.speed.corner_speed}
stops = [{stops}]

[deployment]
bs_spacing_m = {DEFAULTS.bs_spacing}
bs_height_m = {DEFAULTS.bs_height}
ue_height_m = {DEFAULTS.ue_height}
bs_lateral_offset_m = {DEFAULTS.bs_lateral_offset}

[injected_noise]
sigma_range_m = {DEFAULTS.noise.sigma_range}
sigma_angle_deg = {math.degrees(DEFAULTS.noise.sigma_angle):.6g}
sigma_rss_range_m = {DEFAULTS.noise.sigma_rss_range}
nlos_bias_mean_m = {DEFAULTS.noise.nlos_bias_mean}
nlos_angle_bias_deg = {math.degrees(DEFAULTS.noise.nlos_angle_bias):.6g}

[los]
count_marginals = [{", ".join(str(p) for p in DEFAULTS.los.count_marginals)}]
mean_dwell_s = {DEFAULTS.los.mean_dwell_s}
n_obs = {DEFAULTS.los.n_obs}
nlos_link_prob = {DEFAULTS.los.nlos_link_prob}

[filter]
sigma_range_m = 0.02
sigma_angle_deg = 0.1
sigma_fix_m = 0.03
accel_sigma_mps2 = 1.0
nlos_epsilon_m = 80.0
"""


DEFAULTS = ScenarioConfig()
