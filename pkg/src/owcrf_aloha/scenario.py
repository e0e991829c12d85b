"""Scenario definition and the TOML scenario file format.

Scenario files are flat TOML with the unit in every key name, e.g.::

    num_cells = 5
    activation_prob = 0.2
    multirate_factor = 3
    sf = 7
    tx_power_dbm = 10          # OWC optical transmit power
    rf_tx_power_dbm = 14
    capture_threshold_db = 0

Omitted keys take the defaults in ``SCENARIO_KEYS``. An optional
``[[sf_table]]`` array of tables replaces the built-in LoRa SF table.
"""

import dataclasses
import re
import sys
from dataclasses import dataclass, field

from ._validation import (ConfigError, check_int, check_probability, raise_if)
from .lora import LoraLinkConfig, SF_TABLE, SfRow, check_sf_table, sf_row
from .owc import OwcCellConfig, OwcRadioConfig
from .units import db_to_linear, dbm_to_watt

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ScenarioParseError(ValueError):
    """The scenario file is not valid TOML or has unknown / mistyped keys."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Scenario:
    num_cells: int = 5
    users_per_cell: int = 5
    activation_prob: float = 0.1
    multirate_factor: int = 1
    num_owc_slots: int = 100_000
    replications: int = 20
    master_seed: int = 0
    owc_cell: OwcCellConfig = field(default_factory=OwcCellConfig)
    owc_radio: OwcRadioConfig = field(default_factory=OwcRadioConfig)
    lora: LoraLinkConfig = field(default_factory=LoraLinkConfig)
    sf_table: tuple = SF_TABLE

    def __post_init__(self):
        errors = []
        check_int("num_cells", self.num_cells, errors, minimum=1)
        check_int("users_per_cell", self.users_per_cell, errors, minimum=1)
        check_probability("activation_prob", self.activation_prob, errors)
        check_int("multirate_factor", self.multirate_factor, errors, minimum=1)
        check_int("num_owc_slots", self.num_owc_slots, errors, minimum=1)
        check_int("replications", self.replications, errors, minimum=1)
        check_int("master_seed", self.master_seed, errors, minimum=0)
        raise_if(errors)

    @property
    def t_owc_s(self):
        return self.multirate_factor * self.lora.sf_row.t_rf_s

    @property
    def num_rf_slots(self):
        return self.num_owc_slots * self.multirate_factor * self.replications


# key -> (default, kind); kinds drive type checking and the unit conversion
SCENARIO_KEYS = {
    "num_cells": (5, int),
    "users_per_cell": (5, int),
    "activation_prob": (0.1, float),
    "multirate_factor": (1, int),
    "num_owc_slots": (100_000, int),
    "replications": (20, int),
    "master_seed": (0, int),
    # OWC cell
    "cell_radius_m": (3.0, float),
    "height_m": (2.15, float),
    "semi_angle_deg": (60.0, float),
    "fov_deg": (90.0, float),
    "detector_area_cm2": (1.0, float),
    "responsivity_a_per_w": (0.4, float),
    "filter_gain": (1.0, float),
    "lens_index": (1.5, float),
    # OWC radio
    "tx_power_dbm": (10.0, float),
    "oe_efficiency": (0.8, float),
    "noise_density_w_per_hz": (1e-21, float),
    "bandwidth_hz": (200e3, float),
    "capture_threshold_db": (0.0, float),
    # LoRa
    "sf": (7, int),
    "rf_bandwidth_hz": (125e3, float),
    "noise_figure_db": (6.0, float),
    "rf_tx_power_dbm": (14.0, float),
    "carrier_hz": (868.1e6, float),
    "path_loss_exp": (2.7, float),
    "sir_margin_linear": (4.0, float),
    "ring_width_km": (1.0, float),
    "distance_mode": ("fixed", str),
    "distance_km": (None, float),
}

SF_TABLE_KEYS = ("sf", "bit_rate_bps", "t_rf_ms", "q_sf_db", "d_sf_km")


def _coerce(key, value, kind):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ScenarioParseError(
            f"field {key!r}: expected {kind.__name__}, got {type(value).__name__} ({value!r})",
            field=key)
    return value


def _parse_sf_table(entries):
    if not isinstance(entries, list):
        raise ScenarioParseError("sf_table must be an array of tables ([[sf_table]])")
    rows = []
    for i, entry in enumerate(entries):
        missing = [k for k in SF_TABLE_KEYS if k not in entry]
        extra = [k for k in entry if k not in SF_TABLE_KEYS]
        if missing or extra:
            raise ScenarioParseError(
                f"sf_table[{i}]: missing {missing}, unknown {extra}")
        rows.append(SfRow(
            sf=_coerce(f"sf_table[{i}].sf", entry["sf"], int),
            bit_rate_bps=_coerce(f"sf_table[{i}].bit_rate_bps", entry["bit_rate_bps"], float),
            t_rf_s=_coerce(f"sf_table[{i}].t_rf_ms", entry["t_rf_ms"], float) / 1e3,
            q_sf_dB=_coerce(f"sf_table[{i}].q_sf_db", entry["q_sf_db"], float),
            d_sf_km=_coerce(f"sf_table[{i}].d_sf_km", entry["d_sf_km"], float),
        ))
    errors = check_sf_table(rows)
    if errors:
        raise ConfigError(errors)
    return tuple(rows)


def scenario_from_mapping(data, table=None):
    """Build a validated Scenario from flat scenario-file keys.

    Unknown keys raise ``ScenarioParseError``; invariant violations raise
    ``ConfigError`` listing every broken rule.
    """
    data = dict(data)
    if "sf_table" in data:
        table = _parse_sf_table(data.pop("sf_table"))
    table = SF_TABLE if table is None else table
    unknown = sorted(set(data) - set(SCENARIO_KEYS))
    if unknown:
        raise ScenarioParseError(f"unknown field(s): {', '.join(unknown)}", field=unknown[0])
    v = {}
    for key, (default, kind) in SCENARIO_KEYS.items():
        if key in data:
            v[key] = _coerce(key, data[key], kind)
        else:
            v[key] = default

    errors = []
    parts = {}
    try:
        row = sf_row(v["sf"], table)
    except ValueError as exc:
        errors.append(str(exc))
        row = None
    for name, build in (
        ("owc_cell", lambda: OwcCellConfig(
            cell_radius_m=v["cell_radius_m"], height_m=v["height_m"],
            semi_angle_deg=v["semi_angle_deg"], fov_deg=v["fov_deg"],
            detector_area_m2=v["detector_area_cm2"] * 1e-4,
            responsivity_A_per_W=v["responsivity_a_per_w"],
            filter_gain=v["filter_gain"], lens_index=v["lens_index"])),
        ("owc_radio", lambda: OwcRadioConfig(
            tx_power_W=float(dbm_to_watt(v["tx_power_dbm"])),
            oe_efficiency=v["oe_efficiency"],
            noise_density_W_per_Hz=v["noise_density_w_per_hz"],
            bandwidth_Hz=v["bandwidth_hz"],
            capture_threshold_linear=float(db_to_linear(v["capture_threshold_db"])))),
        ("lora", lambda: LoraLinkConfig(
            sf_row=row, rf_bandwidth_Hz=v["rf_bandwidth_hz"],
            noise_figure_dB=v["noise_figure_db"], tx_power_dBm=v["rf_tx_power_dbm"],
            carrier_Hz=v["carrier_hz"], path_loss_exp=v["path_loss_exp"],
            sir_margin_linear=v["sir_margin_linear"], ring_width_km=v["ring_width_km"],
            distance_mode=v["distance_mode"], distance_km=v["distance_km"])),
    ):
        if name == "lora" and row is None:
            continue
        try:
            parts[name] = build()
        except ConfigError as exc:
            errors.extend(exc.violations)
    try:
        scenario = Scenario(
            num_cells=v["num_cells"], users_per_cell=v["users_per_cell"],
            activation_prob=v["activation_prob"], multirate_factor=v["multirate_factor"],
            num_owc_slots=v["num_owc_slots"], replications=v["replications"],
            master_seed=v["master_seed"], sf_table=tuple(table),
            **parts)
    except ConfigError as exc:
        errors.extend(exc.violations)
    raise_if(errors)
    return scenario


def _line_of(text, key):
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for num, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return num
    return None


def parse_scenario_text(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(f"invalid TOML: {exc}") from exc
    try:
        return scenario_from_mapping(data)
    except ScenarioParseError as exc:
        if exc.field is None or exc.line is not None:
            raise
        raise ScenarioParseError(str(exc), exc.field, _line_of(text, exc.field)) from None


def parse_scenario(path):
    """Read and validate a scenario file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return parse_scenario_text(raw.decode("utf-8"))
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc


AXIS_ALIASES = {
    "p_a": "p_a", "activation_prob": "p_a",
    "M": "M", "multirate_factor": "M",
    "SF": "SF", "sf": "SF",
    "semi_angle_deg": "semi_angle_deg",
    "cell_radius_m": "cell_radius_m",
}


def canonical_axis(name):
    try:
        return AXIS_ALIASES[name]
    except KeyError:
        raise ScenarioParseError(
            f"cannot sweep {name!r}; sweepable: p_a, M, SF, semi_angle_deg, cell_radius_m"
        ) from None


def with_axis_value(scenario, axis, value):
    """Copy of ``scenario`` with one sweepable parameter replaced."""
    axis = canonical_axis(axis)
    if axis == "p_a":
        return dataclasses.replace(scenario, activation_prob=value)
    if axis == "M":
        return dataclasses.replace(scenario, multirate_factor=value)
    if axis == "SF":
        lora = dataclasses.replace(scenario.lora, sf_row=sf_row(value, scenario.sf_table))
        return dataclasses.replace(scenario, lora=lora)
    cell = dataclasses.replace(scenario.owc_cell, **{axis: value})
    return dataclasses.replace(scenario, owc_cell=cell)
