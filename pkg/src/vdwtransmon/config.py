"""Experiment configuration: YAML text with unit-suffixed scalars.

Every scalar carries its unit (``area: 109 um2``, ``g: 40.3 MHz``).  Parsing
walks the YAML node tree so that every diagnostic can point at a line, and all
problems are collected before :class:`ConfigError` is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import yaml

from . import design
from .design import CapacitanceBudget, FluxLineCalibration, PpcGeometry, TransmonParams
from .dynamics import PI_PULSE_DURATION, QubitModel, pure_dephasing_time
from .errors import ConfigError, ConvergenceError, DomainError
from .readout import CavityParams
from .units import UnitError, parse_quantity

REQUIRED = object()
OPTIONAL = object()


@dataclass(frozen=True)
class Field:
    dimension: str
    default: Any = OPTIONAL
    check: Callable[[float], bool] | None = None
    invariant: str = ""


def _pos(name):
    return dict(check=lambda v: v > 0, invariant=f"{name} > 0")


def _nonneg(name):
    return dict(check=lambda v: v >= 0, invariant=f"{name} >= 0")


def _count(name, lo):
    return dict(check=lambda v: v >= lo, invariant=f"{name} >= {lo}")


_GRID = {
    "t_max": Field("time", REQUIRED, **_pos("t_max")),
    "n_points": Field("int", REQUIRED, **_count("n_points", 5)),
}

SCHEMA: dict = {
    "device": {
        "geometry": {
            "area": Field("area", REQUIRED, **_pos("area")),
            "thickness": Field("length", REQUIRED, **_pos("thickness")),
            "epsilon_r": Field("dimensionless", REQUIRED, check=lambda v: v >= 1, invariant="epsilon_r >= 1"),
        },
        "capacitance": {
            "c_stray": Field("capacitance", design.DEFAULT_C_STRAY, **_nonneg("c_stray")),
            "participation_internal": Field(
                "dimensionless", 1.0, check=lambda v: 0 < v <= 1, invariant="0 < participation_internal <= 1"
            ),
        },
        "junction": {
            "e_j_max": Field("frequency", OPTIONAL, **_pos("e_j_max")),
            "f01": Field("frequency", OPTIONAL, **_pos("f01")),
        },
        "transmon": {
            "e_c": Field("frequency", REQUIRED, **_pos("e_c")),
            "e_j_max": Field("frequency", REQUIRED, **_pos("e_j_max")),
        },
        "flux": {
            "current_offset": Field("current", 0.0),
            "current_period": Field("current", REQUIRED, **_pos("current_period")),
            "asymmetry_d": Field("dimensionless", 0.0, check=lambda v: 0 <= v < 1, invariant="0 <= asymmetry_d < 1"),
            "bias_current": Field("current", OPTIONAL),
        },
        "n_g": Field("dimensionless", 0.0),
        "flux_bias": Field("dimensionless", 0.0),
        "truncation": Field("int", design.DEFAULT_TRUNCATION, **_count("truncation", 10)),
    },
    "readout": {
        "f_bare": Field("frequency", REQUIRED, **_pos("f_bare")),
        "kappa": Field("frequency", REQUIRED, **_pos("kappa")),
        "g": Field("frequency", REQUIRED, **_nonneg("g")),
    },
    "dynamics": {
        "t1": Field("time", math.inf, **_pos("t1")),
        "t_phi": Field("time", OPTIONAL, **_pos("t_phi")),
        "t2_star": Field("time", OPTIONAL, **_pos("t2_star")),
        "levels": Field("int", 2, check=lambda v: v in (2, 3), invariant="levels in {2, 3}"),
        "pi_duration": Field("time", PI_PULSE_DURATION, **_nonneg("pi_duration")),
        "ideal_pulses": Field("bool", True),
        "rabi_frequency": Field("frequency", 6.25e6, **_pos("rabi_frequency")),
        "dt": Field("time", OPTIONAL, **_pos("dt")),
    },
    "experiments": {
        "rabi": dict(_GRID, detuning=Field("frequency", 0.0)),
        "t1": dict(_GRID),
        "ramsey": dict(_GRID, detuning=Field("frequency", 1e6)),
        "echo": dict(_GRID, detuning=Field("frequency", 1e6)),
        "chevron": dict(
            _GRID,
            detuning_span=Field("frequency", REQUIRED, **_pos("detuning_span")),
            n_detunings=Field("int", REQUIRED, **_count("n_detunings", 1)),
        ),
        "flux_sweep": {
            "current_start": Field("current", REQUIRED),
            "current_stop": Field("current", REQUIRED),
            "n_points": Field("int", REQUIRED, **_count("n_points", 3)),
        },
    },
    "run": {
        "seed": Field("int", 0),
        "repeat": Field("int", 1, **_count("repeat", 1)),
        "noise_sigma": Field("dimensionless", 0.02, **_nonneg("noise_sigma")),
        "t1_jitter": Field("dimensionless", 0.085, **_nonneg("t1_jitter")),
        "degeneracy_ratio": Field("dimensionless", 3.0, **_pos("degeneracy_ratio")),
    },
}

UNIT_OF = {
    "length": "m", "area": "m2", "capacitance": "F", "frequency": "Hz", "time": "s",
    "current": "A", "angle": "rad", "dimensionless": "", "int": "", "bool": "",
}


@dataclass
class ExperimentConfig:
    """Validated, unit-converted configuration with derived device parameters."""

    raw: dict
    transmon: TransmonParams
    flux: float
    asymmetry_d: float
    truncation: int
    geometry: PpcGeometry | None = None
    budget: CapacitanceBudget | None = None
    flux_cal: FluxLineCalibration | None = None
    cavity: CavityParams | None = None
    g: float | None = None
    resolved: dict = field(default_factory=dict)

    def section(self, *path) -> dict:
        node = self.raw
        for key in path:
            node = node.get(key, {})
        return node

    def dynamics(self) -> dict:
        return self.section("dynamics")

    def experiment(self, name: str) -> dict | None:
        return self.raw.get("experiments", {}).get(name)

    def run(self) -> dict:
        return self.section("run")


def _convert(value: str, fld: Field):
    if fld.dimension == "int":
        text = str(value).strip()
        try:
            return int(text)
        except ValueError:
            raise UnitError(f"expected an integer, got {text!r}") from None
    if fld.dimension == "bool":
        text = str(value).strip().lower()
        if text in ("true", "yes", "on"):
            return True
        if text in ("false", "no", "off"):
            return False
        raise UnitError(f"expected true or false, got {value!r}")
    return parse_quantity(value, fld.dimension)


def _walk(node, schema: dict, path: str, errors: list, lines: dict) -> dict:
    out: dict = {}
    if not isinstance(node, yaml.MappingNode):
        errors.append(f"line {node.start_mark.line + 1}: {path or 'document'} must be a mapping")
        return out
    for key_node, val_node in node.value:
        key = key_node.value
        line = key_node.start_mark.line + 1
        full = f"{path}.{key}" if path else key
        lines[full] = line
        if key not in schema:
            errors.append(f"line {line}: unknown key {full!r}")
            continue
        if key in out:
            errors.append(f"line {line}: duplicate key {full!r}")
            continue
        fld = schema[key]
        if isinstance(fld, dict):
            out[key] = _walk(val_node, fld, full, errors, lines)
            continue
        if not isinstance(val_node, yaml.ScalarNode):
            errors.append(f"line {line}: {full} must be a scalar value")
            continue
        try:
            value = _convert(val_node.value, fld)
        except UnitError as exc:
            errors.append(f"line {line}: {full}: {exc}")
            continue
        if fld.check is not None and not fld.check(value):
            errors.append(f"line {line}: {full} = {val_node.value} violates invariant {fld.invariant}")
            continue
        out[key] = value
    return out


def _fill_defaults(values: dict, schema: dict, path: str, errors: list, lines: dict):
    for key, fld in schema.items():
        full = f"{path}.{key}" if path else key
        if isinstance(fld, dict):
            if key in values:
                _fill_defaults(values[key], fld, full, errors, lines)
            continue
        if key in values:
            continue
        if fld.default is REQUIRED:
            if full in lines:
                # present but rejected; already reported
                continue
            where = lines.get(path)
            prefix = f"line {where}: " if where else ""
            errors.append(f"{prefix}missing required key {full!r}")
        elif fld.default is not OPTIONAL:
            values[key] = fld.default


def _resolve(values: dict, lines: dict, errors: list) -> ExperimentConfig | None:
    dev = values.get("device")
    if dev is None:
        errors.append("missing required section 'device'")
        return None
    has_explicit = "transmon" in dev
    chain = [k for k in ("geometry", "capacitance", "junction") if k in dev]
    if has_explicit and chain:
        errors.append(
            f"line {lines.get('device.transmon')}: device.transmon and the geometry chain "
            f"({', '.join('device.' + c for c in chain)}) are both given; keep exactly one"
        )
        return None
    if not has_explicit and not ("geometry" in dev and "junction" in dev):
        errors.append("device needs either a 'transmon' section or 'geometry' + 'junction' sections")
        return None

    n_g = dev["n_g"]
    truncation = dev["truncation"]
    resolved: dict = {}
    geometry = budget = None
    try:
        if has_explicit:
            e_c = dev["transmon"]["e_c"]
            e_j = dev["transmon"]["e_j_max"]
        else:
            geometry = PpcGeometry(**dev["geometry"])
            cap = dev.get("capacitance", {"c_stray": design.DEFAULT_C_STRAY, "participation_internal": 1.0})
            budget = CapacitanceBudget(design.ppc_capacitance(geometry), **cap)
            c_total = design.total_capacitance(budget)
            e_c = design.charging_energy(c_total)
            resolved["device.c_ppc"] = (budget.c_ppc, "F")
            resolved["device.c_total"] = (c_total, "F")
            junction = dev["junction"]
            if ("e_j_max" in junction) == ("f01" in junction):
                errors.append(
                    f"line {lines.get('device.junction')}: device.junction needs exactly one of e_j_max or f01"
                )
                return None
            if "f01" in junction:
                e_j = design.ej_from_frequency(junction["f01"], e_c, n_g, truncation)
            else:
                e_j = junction["e_j_max"]
        transmon = TransmonParams(e_c, e_j, n_g)
    except (DomainError, ConvergenceError) as exc:
        errors.append(f"device: {exc}")
        return None
    resolved["device.e_c"] = (e_c, "Hz")
    resolved["device.e_j_max"] = (e_j, "Hz")
    resolved["device.ej_over_ec"] = (transmon.ratio, "")

    flux_cal = None
    flux = dev["flux_bias"]
    asym = 0.0
    if "flux" in dev:
        fx = dict(dev["flux"])
        bias = fx.pop("bias_current", None)
        flux_cal = FluxLineCalibration(**fx)
        asym = flux_cal.asymmetry_d
        if bias is not None:
            if "device.flux_bias" in lines:
                errors.append(f"line {lines['device.flux_bias']}: give flux_bias or flux.bias_current, not both")
                return None
            flux = design.flux_from_current(flux_cal, bias)
    resolved["device.flux"] = (flux, "")

    cavity = None
    g = None
    if "readout" in values:
        ro = values["readout"]
        cavity = CavityParams(ro["f_bare"], ro["kappa"])
        g = ro["g"]

    dyn = values.setdefault("dynamics", {})
    _fill_defaults(dyn, SCHEMA["dynamics"], "dynamics", errors, lines)
    if "t_phi" in dyn and "t2_star" in dyn:
        errors.append(f"line {lines.get('dynamics.t2_star')}: give t_phi or t2_star, not both")
        return None
    if "t2_star" in dyn:
        try:
            dyn["t_phi"] = pure_dephasing_time(dyn["t1"], dyn["t2_star"])
        except DomainError as exc:
            errors.append(f"line {lines.get('dynamics.t2_star')}: {exc}")
            return None
    dyn.setdefault("t_phi", math.inf)
    values.setdefault("run", {})
    _fill_defaults(values["run"], SCHEMA["run"], "run", errors, lines)

    return ExperimentConfig(
        raw=values,
        transmon=transmon,
        flux=flux,
        asymmetry_d=asym,
        truncation=truncation,
        geometry=geometry,
        budget=budget,
        flux_cal=flux_cal,
        cavity=cavity,
        g=g,
        resolved=resolved,
    )


def parse_config(text: str) -> ExperimentConfig:
    """Validate configuration text; raise :class:`ConfigError` listing every problem."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"malformed configuration: {exc}"]) from None
    if root is None:
        raise ConfigError(["empty configuration"])
    errors: list[str] = []
    lines: dict = {}
    values = _walk(root, SCHEMA, "", errors, lines)
    _fill_defaults(values, {k: v for k, v in SCHEMA.items() if k != "dynamics" and k != "run"}, "", errors, lines)
    if errors:
        raise ConfigError(errors)
    cfg = _resolve(values, lines, errors)
    if errors or cfg is None:
        raise ConfigError(errors or ["invalid configuration"])
    cfg.resolved.update(_flatten(values))
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _flatten(values: dict, schema: dict = SCHEMA, path: str = "") -> dict:
    out = {}
    for key, val in values.items():
        full = f"{path}.{key}" if path else key
        fld = schema.get(key)
        if isinstance(val, dict):
            out.update(_flatten(val, fld if isinstance(fld, dict) else {}, full))
        else:
            unit = UNIT_OF.get(fld.dimension, "") if isinstance(fld, Field) else ""
            out[full] = (val, unit)
    return out


def qubit_model(cfg: ExperimentConfig, f01: float, anharmonicity: float) -> QubitModel:
    dyn = cfg.dynamics()
    return QubitModel(
        f01=f01,
        t1=dyn["t1"],
        t_phi=dyn["t_phi"],
        anharmonicity=anharmonicity,
        levels=dyn["levels"],
    )
