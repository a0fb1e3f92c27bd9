"""Scenario configuration files.

The format is line based::

    # comment
    [plant]
    family = Heat1DNeumann
    nu = 1.0

    [plant.actuator]
    location = right

    [plant.sensor]
    weight = indicator 0.3 0.7

Section names may repeat only for ``plant.actuator``, ``plant.sensor`` and
``reference.term``; every other section appears at most once. Values are
kept as strings until :func:`load_scenario` interprets them.

Recognized sections and keys
----------------------------
``[plant]``
    ``family``, ``bc_variant``, scalar or field coefficients (``nu``,
    ``alpha``, ``beta1``, ``beta2``, ``beta``, ``gamma``, ``length``) and 2D
    geometry (``x_range``, ``y_range``, ``ny_ratio``, ``mesh_file``,
    ``side_tags`` as ``left:1, right:2``).
``[plant.actuator]``
    ``location`` (``right`` in 1D, a boundary tag in 2D), ``profile`` (field).
``[plant.sensor]``
    ``weight`` and optional ``velocity_weight`` (fields).
``[extension]``
    ``eta``, ``variant`` (``v1`` or ``v2`` for the beam).
``[reference]``
    Either repeated ``[reference.term]`` sections with ``omega``, ``a`` and
    ``b`` (polynomial coefficients in increasing powers of ``t``; outputs
    separated by ``;``) or a wave given by ``period``, ``times``, ``values``
    (one entry per breakpoint separated by ``;``, outputs by ``,``) and the
    truncation order ``q``.
``[synthesis]``
    ``N``, ``r`` (integer or ``full``), ``alpha1``, ``alpha2``, ``R1``, ``R2``.
``[simulation]``
    ``M``, ``T``, ``dt``, ``initial``, ``amplitude``, ``velocity``,
    ``controller_init``, ``t_settle``, ``fit_start``, ``fit_end``,
    ``controller`` (path, default ``<out>/controller.txt``).
``[perturbation]``
    ``nu``, ``alpha``, ``beta``, ``gamma`` (factors), ``alpha_shift``.
"""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import fields
from .errors import ConfigError, ParseError
from .models import BEAM, HEAT1D, PARABOLIC2D, ActuatorSpec, PlantSpec, SensorSpec
from .signals import PiecewiseLinearWave, ReferenceSignal, fourier_truncate
from .synthesis import SynthesisParams

REPEATABLE = ("plant.actuator", "plant.sensor", "reference.term")
KNOWN = ("plant", "extension", "reference", "synthesis", "simulation", "perturbation") + REPEATABLE


def parse_config_text(text):
    """Split a config into ``{section: dict}``; repeatable sections map to lists of dicts."""
    out = {name: [] for name in REPEATABLE}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"unterminated section header {raw.strip()!r}", line=lineno)
            name = line[1:-1].strip()
            if name not in KNOWN:
                raise ParseError(f"unknown section [{name}]", line=lineno)
            if name in REPEATABLE:
                current = {}
                out[name].append(current)
            else:
                if name in out:
                    raise ParseError(f"section [{name}] appears twice", line=lineno)
                current = out[name] = {}
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if current is None:
            raise ParseError("key outside of any section", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in current:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        current[key] = value
    return out


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _scalar_or_field(text):
    try:
        return float(text)
    except ValueError:
        return fields.parse_field(text)


@dataclass(frozen=True)
class SimulationSettings:
    M: int
    T: float
    dt: float
    initial: str = "zero"
    amplitude: float = 0.0
    velocity: str = None
    controller_init: float = 0.0
    t_settle: float = None
    fit_window: tuple = None
    controller_path: str = None


@dataclass(frozen=True)
class Scenario:
    plant: PlantSpec
    eta: float
    variant: str
    reference: ReferenceSignal
    N: int
    params: SynthesisParams
    simulation: SimulationSettings
    perturbation: dict = field(default_factory=dict)
    source: str = ""

    def plant_hash(self):
        return spec_hash(self.plant)


def spec_hash(spec):
    return hashlib.sha256(spec.describe().encode("utf-8")).hexdigest()[:16]


def _plant(sec, actuators, sensors, base_dir):
    if "family" not in sec:
        raise ConfigError("[plant] needs a family")
    fam = sec["family"]
    params, geometry = {}, {}
    for key, value in sec.items():
        if key in ("family", "bc_variant"):
            continue
        if key in ("x_range", "y_range"):
            geometry[key] = tuple(_floats(value))
        elif key == "ny_ratio":
            geometry[key] = float(value)
        elif key == "mesh_file":
            geometry[key] = os.path.join(base_dir, value)
        elif key == "side_tags":
            pairs = [p.split(":") for p in value.split(",") if p.strip()]
            geometry[key] = {s.strip(): int(t) for s, t in pairs}
        elif fam == PARABOLIC2D and key in ("alpha", "beta1", "beta2"):
            params[key] = fields.parse_field(value)
        else:
            params[key] = _scalar_or_field(value)
    acts = []
    for a in actuators:
        loc = a.get("location", "right")
        if fam == PARABOLIC2D:
            loc = int(loc)
        prof = fields.parse_field(a["profile"]) if "profile" in a else None
        acts.append(ActuatorSpec(loc, prof))
    sens = []
    for s in sensors:
        if "weight" not in s:
            raise ConfigError("[plant.sensor] needs a weight")
        vel = fields.parse_field(s["velocity_weight"]) if "velocity_weight" in s else None
        sens.append(SensorSpec(fields.parse_field(s["weight"]), vel))
    kwargs = {"bc_variant": sec["bc_variant"]} if "bc_variant" in sec else {}
    return PlantSpec(fam, params, acts, sens, geometry=geometry, **kwargs)


def _coeff_block(text, p):
    rows = [_floats(r) for r in text.split(";")]
    if len(rows) != p:
        raise ConfigError(f"expected {p} output rows separated by ';', got {len(rows)}")
    width = max(len(r) for r in rows)
    return np.array([r + [0.0] * (width - len(r)) for r in rows])


def _reference(sec, terms, p):
    if terms:
        spec = {}
        for t in terms:
            w = float(t.get("omega", 0.0))
            if w in spec:
                raise ConfigError(f"frequency {w} listed twice")
            a = _coeff_block(t.get("a", "0"), p)
            b = _coeff_block(t["b"], p) if "b" in t else None
            spec[w] = (a, b)
        return ReferenceSignal.from_terms(p, spec)
    if "period" in sec:
        values = np.array([_floats(v) for v in sec["values"].split(";")])
        wave = PiecewiseLinearWave(float(sec["period"]), tuple(_floats(sec["times"])), values)
        return fourier_truncate(wave, int(sec.get("q", 3)))
    raise ConfigError("the reference needs [reference.term] sections or a wave")


def _synthesis(sec):
    r = sec.get("r", "full")
    r = None if r == "full" else int(r)
    if r is not None and r < 1:
        raise ConfigError("r must be positive or 'full'")
    return SynthesisParams(
        alpha1=float(sec.get("alpha1", 0.5)),
        alpha2=float(sec.get("alpha2", 0.5)),
        r1=float(sec.get("R1", 1.0)),
        r2=float(sec.get("R2", 1.0)),
        r=r,
    )


def scenario_from_sections(sec, base_dir=".", source=""):
    if "plant" not in sec:
        raise ConfigError("missing [plant] section")
    plant = _plant(sec["plant"], sec["plant.actuator"] or [{}], sec["plant.sensor"], base_dir)
    ext = sec.get("extension", {})
    eta = float(ext.get("eta", 1.0))
    variant = ext.get("variant")
    if plant.family == BEAM and variant not in ("v1", "v2"):
        raise ConfigError("beam plants need [extension] variant = v1 or v2")
    ref = _reference(sec.get("reference", {}), sec["reference.term"], plant.p)
    syn = sec.get("synthesis", {})
    N = int(syn.get("N", 0))
    sim = sec.get("simulation", {})
    M = int(sim.get("M", N))
    if N < 1 or M < 1:
        raise ConfigError("N and M must be positive")
    fit = None
    if "fit_start" in sim or "fit_end" in sim:
        fit = (float(sim.get("fit_start", 0.0)), float(sim.get("fit_end", sim.get("T", 10.0))))
    velocity = sim.get("velocity")
    settings = SimulationSettings(
        M=M,
        T=float(sim.get("T", 10.0)),
        dt=float(sim.get("dt", 0.01)),
        initial=sim.get("initial", "zero"),
        amplitude=float(sim.get("amplitude", 0.0)),
        velocity=velocity,
        controller_init=float(sim.get("controller_init", 0.0)),
        t_settle=float(sim["t_settle"]) if "t_settle" in sim else None,
        fit_window=fit,
        controller_path=os.path.join(base_dir, sim["controller"]) if "controller" in sim else None,
    )
    pert = {k: float(v) for k, v in sec.get("perturbation", {}).items()}
    unknown = set(pert) - {"nu", "alpha", "beta", "gamma", "alpha_shift"}
    if unknown:
        raise ConfigError(f"unknown perturbation keys {sorted(unknown)}")
    if plant.family == HEAT1D and variant is not None:
        raise ConfigError("the Neumann heat extension has no variants")
    return Scenario(plant, eta, variant, ref, N, _synthesis(syn), settings, pert, source)


def load_scenario(path):
    """Read and validate a scenario file.

    Raises
    ------
    ParseError, ConfigError
        With the offending line or key in the message.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        return scenario_from_sections(parse_config_text(text), os.path.dirname(os.path.abspath(path)), text)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
