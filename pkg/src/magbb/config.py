"""Experiment configuration with units spelled out in the key names.

Defaults reproduce the simulation setup: 13.56 MHz in air, 0.1 m / 0.01 m
transmitter / receiver coils, 50 W power budget, 0.2 V rectifier threshold,
receivers at 0.6 m and 1.2 m, design location straight below the transmitter.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .beamform import DesignParams
from .fieldcore import CoilSpec, Medium, SphericalLocation


class ConfigError(ValueError):
    pass


@dataclass
class MediumConfig:
    permittivity_vacuum_f_per_m: float = 8.85e-12
    relative_permittivity: float = 1.0006
    permeability_vacuum_h_per_m: float = 1.2566e-6
    relative_permeability: float = 1.0
    frequency_hz: float = 13.56e6

    def build(self) -> Medium:
        return Medium(self.permittivity_vacuum_f_per_m, self.relative_permittivity,
                      self.permeability_vacuum_h_per_m, self.relative_permeability, self.frequency_hz)


@dataclass
class CoilConfig:
    radius_m: float
    turns: int
    resistance_ohm: float

    def build(self) -> CoilSpec:
        return CoilSpec(self.radius_m, self.turns, self.resistance_ohm)


@dataclass
class LocationConfig:
    name: str
    theta_deg: float
    phi_deg: float


def _default_locations():
    return [
        LocationConfig("optimized", 180.0, 0.0),
        LocationConfig("random1", 0.021, 108.84),
        LocationConfig("random2", 33.53, 124.4),
    ]


@dataclass
class ExperimentConfig:
    medium: MediumConfig = field(default_factory=MediumConfig)
    tx_coil: CoilConfig = field(default_factory=lambda: CoilConfig(0.1, 25, 1.0))
    rx_coil: CoilConfig = field(default_factory=lambda: CoilConfig(0.01, 20, 0.2))
    p_max_w: float = 50.0
    v_th_v: float = 0.2
    distances_m: list = field(default_factory=lambda: [0.6, 1.2])
    design_location: LocationConfig = field(default_factory=lambda: LocationConfig("optimized", 180.0, 0.0))
    locations: list = field(default_factory=_default_locations)
    schemes: list = field(default_factory=lambda: ["constant", "orthonormal3", "grid4", "grid8", "grid36", "grid100"])
    cycle_seconds: float = 60.0
    mc_samples: int = 10000
    mc_mode: str = "fixed_location"
    seed: int = 42
    load_factor: float = 8.0
    voltage_margin: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be at least 1")
        if not self.distances_m or any(not d > 0 for d in self.distances_m):
            raise ConfigError("distances_m must be a non-empty list of positive values")
        if self.mc_mode not in ("fixed_location", "random_location"):
            raise ConfigError(f"mc_mode must be fixed_location or random_location, got {self.mc_mode!r}")
        if not self.cycle_seconds > 0:
            raise ConfigError("cycle_seconds must be positive")
        for s in self.schemes:
            parse_scheme(s)
        try:
            self.medium.build(), self.tx_coil.build(), self.rx_coil.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def medium_obj(self) -> Medium:
        return self.medium.build()

    @property
    def tx(self) -> CoilSpec:
        return self.tx_coil.build()

    @property
    def rx(self) -> CoilSpec:
        return self.rx_coil.build()

    def design_params(self) -> DesignParams:
        return DesignParams(p_max=self.p_max_w, v_th=self.v_th_v, tx=self.tx, rx=self.rx,
                            medium=self.medium_obj, voltage_margin=self.voltage_margin)

    def design_location_at(self, range_m: float) -> SphericalLocation:
        return SphericalLocation.from_degrees(range_m, self.design_location.theta_deg, self.design_location.phi_deg)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "medium" in data:
                data["medium"] = MediumConfig(**data["medium"])
            for key in ("tx_coil", "rx_coil"):
                if key in data:
                    data[key] = CoilConfig(**data[key])
            if "design_location" in data:
                data["design_location"] = LocationConfig(**{"name": "design", **data["design_location"]})
            if "locations" in data:
                data["locations"] = [LocationConfig(**loc) for loc in data["locations"]]
        except TypeError as exc:
            raise ConfigError(f"malformed config section: {exc}") from exc
        return cls(**data)


def parse_scheme(text: str) -> tuple[str, int]:
    """``constant`` / ``orthonormal3`` / ``grid<N>`` -> (scheme, n_cv)."""
    if text == "constant":
        return "constant", 1
    if text == "orthonormal3":
        return "orthonormal3", 3
    if text.startswith("grid") and text[4:].isdigit() and int(text[4:]) >= 1:
        return "grid", int(text[4:])
    raise ConfigError(f"unknown scheme {text!r}; expected constant, orthonormal3 or grid<N>")


def load_config(path) -> ExperimentConfig:
    """Read a config document, or the config snapshot embedded in a run manifest."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if isinstance(data, dict) and "config" in data and "command" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return ExperimentConfig.from_dict(data)
