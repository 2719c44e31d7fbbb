"""INI-style scenario configuration.

Keys are addressed as ``section.key`` (``ensemble.n_ions``,
``pulse.t_fwhm_us``, ``decoherence.t2_optical_us`` ...). A run starts from a
shipped preset, then applies a user file, then command-line overrides.
Unit suffixes in key names (``_us``, ``_ns``, ``_khz``, ``_mhz``) are part of
the format.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dynamics import EvolutionSettings
from .physical_model import ConfigError, DecoherenceSpec, EnsembleSpec, LevelScheme, calibrate_hf_sigma
from .pulses import SechypShape
from .world import FID_REMAINING, FID_TIME, World

SCENARIOS = ("spectrum", "transfer", "tomography", "fid", "sweep")
PRESET_NAMES = ("paper-2007", "ideal")


@dataclass
class ScenarioConfig:
    scenario: str
    world: World
    params: dict = field(default_factory=dict)
    output_dir: Path = Path("out")
    repetitions: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {self.scenario!r}")
        if self.repetitions < 1:
            raise ConfigError("run.repetitions", "must be >= 1")


def load_parser(preset: str = "paper-2007", path=None, overrides=None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if preset:
        if preset not in PRESET_NAMES:
            raise ConfigError("preset", f"unknown preset {preset!r}")
        cp.read_string(resources.files("ensqubit").joinpath("presets/paper-2007.ini").read_text())
        if preset == "ideal":
            cp.read_string(IDEAL_OVERLAY)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"no such file: {path}")
        cp.read(path)
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(dotted, "override keys must look like section.key")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(value))
    return cp


IDEAL_OVERLAY = """
[ensemble]
optical_width_khz = 0
hf_sigma_khz = 0
rabi_rel_spread = 0
[decoherence]
t1_excited_us = inf
t2_optical_us = inf
"""


def _get(cp, dotted, conv=float, default=None):
    section, _, key = dotted.partition(".")
    raw = cp.get(section, key, fallback=None)
    if raw is None or raw.strip() == "":
        if default is not None:
            return default
        raise ConfigError(dotted, "missing value")
    try:
        return conv(raw.strip())
    except (ValueError, TypeError) as exc:
        raise ConfigError(dotted, f"cannot parse {raw!r}: {exc}") from None


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _hf_sigma(raw: str) -> float:
    if raw == "fid-calibrated":
        return calibrate_hf_sigma(FID_REMAINING, FID_TIME)
    return float(raw) * 1e3


def _wrap_config_error(fn):
    def inner(*a, **kw):
        try:
            return fn(*a, **kw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("world", str(exc)) from None

    return inner


@_wrap_config_error
def world_from_parser(cp: configparser.ConfigParser, seed: int | None = None) -> World:
    ensemble = EnsembleSpec(
        n_ions=_get(cp, "ensemble.n_ions", int),
        optical_width=_get(cp, "ensemble.optical_width_khz") * 1e3,
        optical_shape=_get(cp, "ensemble.optical_shape", str),
        hf_sigma=_get(cp, "ensemble.hf_sigma_khz", _hf_sigma),
        rabi_rel_spread=_get(cp, "ensemble.rabi_rel_spread"),
        rng_seed=seed if seed is not None else _get(cp, "ensemble.seed", int),
    )
    scheme = LevelScheme(
        qubit_splitting=_get(cp, "levels.qubit_splitting_mhz") * 1e6,
        aux_offset=_get(cp, "levels.aux_offset_mhz") * 1e6,
        excited_splittings=tuple(v * 1e6 for v in _get(cp, "levels.excited_splittings_mhz", _floats)),
        relative_strengths=_get(cp, "levels.relative_strengths", _floats),
    )
    decoherence = DecoherenceSpec(
        t1_excited=_get(cp, "decoherence.t1_excited_us") * 1e-6,
        t2_optical=_get(cp, "decoherence.t2_optical_us") * 1e-6,
        branching=_get(cp, "decoherence.branching", _floats),
    )
    shape = SechypShape(
        omega_peak=2 * math.pi * _get(cp, "pulse.rabi_peak_mhz") * 1e6,
        t_fwhm=_get(cp, "pulse.t_fwhm_us") * 1e-6,
        t_total=_get(cp, "pulse.t_total_us") * 1e-6,
        mu=_get(cp, "pulse.mu"),
        carrier_offset=2 * math.pi * _get(cp, "pulse.carrier_offset_mhz", default=0.0) * 1e6,
    )
    settings = EvolutionSettings(
        dt_max=_get(cp, "evolution.dt_max_ns") * 1e-9,
        integrator=_get(cp, "evolution.integrator", str),
        include_cross_coupling=_get(cp, "evolution.include_cross_coupling", _bool),
        rel_tol=_get(cp, "evolution.rel_tol"),
        workers=_get(cp, "evolution.workers", int, default=1),
    )
    gap = _get(cp, "pulse.gap_us", default=0.0) * 1e-6
    if gap < 0:
        raise ConfigError("pulse.gap_us", "must be >= 0")
    return World(ensemble, scheme, decoherence, settings, shape, gap)


def _sweep_axis(raw: str):
    name, _, values = raw.partition(":")
    return name.strip(), _floats(values)


@_wrap_config_error
def scenario_params(cp: configparser.ConfigParser, scenario: str) -> dict:
    if scenario == "spectrum":
        hw = _get(cp, "spectrum.homogeneous_width_khz", default=-1.0)
        return {
            "n_ions": _get(cp, "spectrum.n_ions", int, default=0),
            "scan_start": _get(cp, "spectrum.scan_start_mhz") * 1e6,
            "scan_stop": _get(cp, "spectrum.scan_stop_mhz") * 1e6,
            "points": _get(cp, "spectrum.points", int),
            "homogeneous_width": None if hw < 0 else hw * 1e3,
            "alpha_max": _get(cp, "spectrum.alpha_max"),
        }
    if scenario == "tomography":
        targets = tuple(t.strip() for t in _get(cp, "tomography.targets", str).split(",") if t.strip())
        return {"targets": targets, "decompose": _get(cp, "tomography.decompose", _bool, default=False)}
    if scenario == "fid":
        return {
            "n_ions": _get(cp, "fid.n_ions", int, default=0),
            "delay_max": _get(cp, "fid.delay_max_us") * 1e-6,
            "delay_step": _get(cp, "fid.delay_step_ns") * 1e-9,
            "report_delays": tuple(v * 1e-6 for v in _get(cp, "fid.report_delays_us", _floats)),
        }
    if scenario == "sweep":
        grid = {}
        for key in ("sweep.axis1", "sweep.axis2"):
            raw = _get(cp, key, str, default="")
            if raw:
                name, values = _sweep_axis(raw)
                if not values:
                    raise ConfigError(key, "no values")
                grid[name] = values
        if not grid:
            raise ConfigError("sweep.axis1", "missing value")
        metrics = tuple(m.strip() for m in _get(cp, "sweep.metrics", str).split(",") if m.strip())
        return {
            "grid": grid,
            "metrics": metrics,
            "tomography_target": _get(cp, "sweep.tomography_target", str, default="+"),
            "n_ions": _get(cp, "sweep.n_ions", int, default=0),
        }
    return {}


def load_config(
    scenario: str,
    preset: str = "paper-2007",
    path=None,
    overrides=None,
    seed: int | None = None,
    output_dir=None,
) -> ScenarioConfig:
    cp = load_parser(preset, path, overrides)
    world = world_from_parser(cp, seed)
    out = Path(output_dir) if output_dir is not None else Path(_get(cp, "run.output_dir", str, default="out"))
    return ScenarioConfig(
        scenario=scenario,
        world=world,
        params=scenario_params(cp, scenario),
        output_dir=out,
        repetitions=_get(cp, "run.repetitions", int, default=1),
    )


def dump_parser(cp: configparser.ConfigParser) -> str:
    import io

    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
