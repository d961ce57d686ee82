"""Near-field magnetic channel of a tri-axis transmitter coil.

All angles are radians. The transmitter sits at the origin with its three
identical coils aligned to the Cartesian axes; a receiver is described by its
spherical location relative to the transmitter and the orientation of its coil
axis in the Cartesian frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Defaults for the simulated air medium.
EPS0 = 8.85e-12
MU0 = 1.2566e-6


@dataclass(frozen=True)
class Medium:
    permittivity_vacuum: float = EPS0
    relative_permittivity: float = 1.0006
    permeability_vacuum: float = MU0
    relative_permeability: float = 1.0
    frequency: float = 13.56e6

    def __post_init__(self):
        for name in ("permittivity_vacuum", "relative_permittivity", "permeability_vacuum",
                     "relative_permeability", "frequency"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * self.frequency

    @property
    def permeability(self) -> float:
        return self.relative_permeability * self.permeability_vacuum


@dataclass(frozen=True)
class CoilSpec:
    radius: float
    turns: int
    resistance: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"coil radius must be positive, got {self.radius!r}")
        if self.turns < 1:
            raise ValueError(f"coil needs at least one turn, got {self.turns!r}")
        if not self.resistance > 0:
            raise ValueError(f"coil resistance must be positive, got {self.resistance!r}")


# Turn counts are calibration inputs, see README.
DEFAULT_TX = CoilSpec(radius=0.1, turns=25, resistance=1.0)
DEFAULT_RX = CoilSpec(radius=0.01, turns=20, resistance=0.2)


@dataclass(frozen=True)
class SphericalLocation:
    range: float
    polar: float
    azimuth: float

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"range must be positive, got {self.range!r}")
        if not 0.0 <= self.polar <= math.pi:
            raise ValueError(f"polar angle must lie in [0, pi], got {self.polar!r}")
        if not 0.0 <= self.azimuth < 2.0 * math.pi:
            raise ValueError(f"azimuth must lie in [0, 2pi), got {self.azimuth!r}")

    @classmethod
    def from_degrees(cls, range_m: float, theta_deg: float, phi_deg: float) -> "SphericalLocation":
        return cls(range_m, math.radians(theta_deg), math.radians(phi_deg % 360.0))

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.polar)

    @property
    def phi_deg(self) -> float:
        return math.degrees(self.azimuth)


@dataclass(frozen=True)
class Orientation:
    """Receiver coil axis given by polar and azimuth angles."""

    polar: float
    azimuth: float
    u: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        st = math.sin(self.polar)
        u = np.array([st * math.cos(self.azimuth), st * math.sin(self.azimuth), math.cos(self.polar)])
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def from_vector(cls, vec) -> "Orientation":
        v = np.asarray(vec, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("orientation vector must be non-zero")
        v = v / n
        polar = math.acos(min(1.0, max(-1.0, v[2])))
        azimuth = math.atan2(v[1], v[0]) % (2.0 * math.pi)
        return cls(polar, azimuth)

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "Orientation":
        return cls(math.radians(theta_deg), math.radians(phi_deg))

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.polar)

    @property
    def phi_deg(self) -> float:
        return math.degrees(self.azimuth)


@dataclass(frozen=True)
class ScalarCoefficients:
    c_r: complex
    c_theta: complex
    c_phi: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.c_r, self.c_theta, self.c_phi], dtype=complex)


@dataclass(frozen=True)
class ChannelMatrix:
    h_matrix: np.ndarray
    location: SphericalLocation
    gamma: np.ndarray
    t_mat: np.ndarray
    coefficients: ScalarCoefficients

    def field(self, current) -> np.ndarray:
        """Cartesian field phasor produced by the given coil currents."""
        return self.h_matrix @ np.asarray(current, dtype=complex)


def wavenumber(medium: Medium) -> float:
    return medium.angular_frequency * math.sqrt(
        medium.permeability_vacuum * medium.relative_permeability
        * medium.permittivity_vacuum * medium.relative_permittivity
    )


def _coefficients(k, radius, turns, r):
    # k may be complex for lossy media; everything below stays valid.
    jkr = 1j * k * r
    phase = np.exp(-jkr)
    c_r = (1j * k * radius**2 * turns / (2.0 * r**2)) * (1.0 + 1.0 / jkr) * phase
    c_t = (k**2 * radius**2 * turns / (4.0 * r)) * (1.0 + 1.0 / jkr - 1.0 / (k * r) ** 2) * phase
    return c_r, c_t


def scalar_coefficients(tx: CoilSpec, medium: Medium, range_m: float) -> ScalarCoefficients:
    """Radial and transverse field coefficients of a single transmitter coil at distance ``range_m``."""
    if not range_m > 0:
        raise ValueError(f"range must be positive, got {range_m!r}")
    c_r, c_t = _coefficients(wavenumber(medium), tx.radius, tx.turns, range_m)
    c_r, c_t = complex(c_r), complex(c_t)
    return ScalarCoefficients(c_r=c_r, c_theta=c_t, c_phi=c_t)


def _angles(loc):
    if isinstance(loc, SphericalLocation):
        return loc.polar, loc.azimuth
    return loc


def gamma_matrix(loc: SphericalLocation) -> np.ndarray:
    """Projection of Cartesian dipole moments onto the local (r, theta, phi) basis."""
    th, ph = _angles(loc)
    st, ct = math.sin(th), math.cos(th)
    sp, cp = math.sin(ph), math.cos(ph)
    return np.array([
        [st * cp, st * sp, ct],
        [ct * cp, ct * sp, -st],
        [-sp, cp, 0.0],
    ])


def t_matrix(loc: SphericalLocation) -> np.ndarray:
    """Spherical-to-Cartesian transform of a field vector at ``loc``."""
    th, ph = _angles(loc)
    st, ct = math.sin(th), math.cos(th)
    sp, cp = math.sin(ph), math.cos(ph)
    return np.array([
        [st * cp, ct * cp, -sp],
        [st * sp, ct * sp, cp],
        [ct, -st, 0.0],
    ])


def gamma_batch(polar: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Vectorised ``gamma_matrix`` over arrays of angles, shape (..., 3, 3)."""
    st, ct = np.sin(polar), np.cos(polar)
    sp, cp = np.sin(azimuth), np.cos(azimuth)
    zero = np.zeros_like(st)
    rows = [
        np.stack([st * cp, st * sp, ct], axis=-1),
        np.stack([ct * cp, ct * sp, -st], axis=-1),
        np.stack([-sp, cp, zero], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def channel_matrix(tx: CoilSpec, medium: Medium, loc: SphericalLocation) -> ChannelMatrix:
    coeffs = scalar_coefficients(tx, medium, loc.range)
    gamma = gamma_matrix(loc)
    t_mat = t_matrix(loc)
    h = t_mat @ (coeffs.as_array()[:, None] * gamma)
    return ChannelMatrix(h_matrix=h, location=loc, gamma=gamma, t_mat=t_mat, coefficients=coeffs)


def channel_batch(tx: CoilSpec, medium: Medium, range_m: float, polar, azimuth) -> np.ndarray:
    """Channel matrices for many locations on one sphere, shape (n, 3, 3)."""
    c = scalar_coefficients(tx, medium, range_m).as_array()
    g = gamma_batch(np.asarray(polar, dtype=float), np.asarray(azimuth, dtype=float))
    # H[a, b] = sum_k Gamma[k, a] C_k Gamma[k, b], spelled out so results do not depend on batch size
    return (g[..., 0, :, None] * c[0] * g[..., 0, None, :]
            + g[..., 1, :, None] * c[1] * g[..., 1, None, :]
            + g[..., 2, :, None] * c[2] * g[..., 2, None, :])


def voltage_gain(rx: CoilSpec, medium: Medium) -> float:
    """Magnitude of the field-to-voltage factor of a receiver coil, V per (A/m)."""
    return medium.angular_frequency * medium.permeability * rx.turns * math.pi * rx.radius**2


def induced_voltage(h, orient: Orientation, rx: CoilSpec, medium: Medium) -> complex:
    u = orient.u if isinstance(orient, Orientation) else np.asarray(orient, dtype=float)
    return complex(-voltage_gain(rx, medium) * np.dot(np.asarray(h, dtype=complex), u))


@dataclass(frozen=True)
class RegimeReport:
    kr: float
    near_field: bool
    radial_ratio: float


def field_regime(medium: Medium, range_m: float) -> RegimeReport:
    """Electrical distance and the |C_r| / (2 |C_theta|) ratio at ``range_m``."""
    if not range_m > 0:
        raise ValueError(f"range must be positive, got {range_m!r}")
    k = wavenumber(medium)
    kr = k * range_m
    c_r, c_t = _coefficients(k, 1.0, 1, range_m)
    return RegimeReport(kr=kr, near_field=kr < 1.0, radial_ratio=abs(c_r) / (2.0 * abs(c_t)))
