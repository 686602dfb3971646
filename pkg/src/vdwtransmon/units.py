"""Parsing of quantities written with a unit suffix, e.g. ``"40.3 MHz"``.

Everything is converted to SI on the way in.  Each unit belongs to exactly one
dimension so that ``"40.3 us"`` supplied for a frequency can be rejected.
"""

from __future__ import annotations

import math
import re

# unit -> (dimension, factor to SI)
UNITS: dict[str, tuple[str, float]] = {
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "µm": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "m2": ("area", 1.0),
    "mm2": ("area", 1e-6),
    "um2": ("area", 1e-12),
    "µm2": ("area", 1e-12),
    "nm2": ("area", 1e-18),
    "F": ("capacitance", 1.0),
    "pF": ("capacitance", 1e-12),
    "fF": ("capacitance", 1e-15),
    "aF": ("capacitance", 1e-18),
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "µs": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "ps": ("time", 1e-12),
    "A": ("current", 1.0),
    "mA": ("current", 1e-3),
    "uA": ("current", 1e-6),
    "µA": ("current", 1e-6),
    "rad": ("angle", 1.0),
    "deg": ("angle", math.pi / 180.0),
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:inf|nan|[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))\s*([^\s]*)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text, dimension: str) -> float:
    """Convert ``text`` to an SI float of the requested ``dimension``.

    ``dimension="dimensionless"`` accepts bare numbers only.  Bare numbers are
    rejected for dimensional quantities; a missing unit is an error, never a
    silent SI assumption.
    """
    if isinstance(text, bool):
        raise UnitError(f"expected a number, got {text!r}")
    if isinstance(text, (int, float)):
        if dimension == "dimensionless":
            return float(text)
        raise UnitError(f"missing unit: expected a {dimension} such as {example_for(dimension)!r}")
    m = _QUANTITY.match(str(text))
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if not unit:
        if dimension == "dimensionless":
            return value
        raise UnitError(f"missing unit: expected a {dimension} such as {example_for(dimension)!r}")
    if unit not in UNITS:
        raise UnitError(f"unknown unit {unit!r}")
    dim, factor = UNITS[unit]
    if dim != dimension:
        raise UnitError(f"unit-dimension mismatch: {unit!r} is a {dim}, expected a {dimension}")
    return value * factor


def example_for(dimension: str) -> str:
    return {
        "length": "35 nm",
        "area": "109 um2",
        "capacitance": "26.51 fF",
        "frequency": "40.3 MHz",
        "time": "1.06 us",
        "current": "0.2 mA",
        "angle": "0 rad",
    }.get(dimension, "1.0")
