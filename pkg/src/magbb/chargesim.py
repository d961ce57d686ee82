"""Charging-cycle simulation and Monte Carlo reliability statistics.

A cycle applies every current vector of a set for ``cycle_seconds / n_cv``.
A receiver harvests only while its induced peak voltage exceeds the rectifier
threshold, at the matched-load average power ``|v|^2 / (8 r_r)``.

Monte Carlo receivers draw from counter-based Philox streams keyed by the run
seed, with the sample index in the counter. Each sample is therefore fixed by
``(seed, index)`` alone, and chunked or threaded evaluation gives the same
bits as a serial run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beamform import CurrentSet
from .fieldcore import (
    CoilSpec,
    Medium,
    Orientation,
    SphericalLocation,
    channel_batch,
    channel_matrix,
    voltage_gain,
)

LOAD_FACTOR = 8.0
QUANTILE_LEVELS = (0.01, 0.1, 0.5, 0.9)

# Philox counter word 2 separates the orientation and location streams.
_ORIENTATION_STREAM = 0
_LOCATION_STREAM = 1


@dataclass(frozen=True)
class ChargingPolicy:
    current_set: CurrentSet
    cycle_seconds: float = 60.0

    def __post_init__(self):
        if not self.cycle_seconds > 0:
            raise ValueError("cycle_seconds must be positive")

    @property
    def dwell_seconds(self) -> float:
        return self.cycle_seconds / self.current_set.n_cv

    @property
    def n_cv(self) -> int:
        return self.current_set.n_cv


@dataclass(frozen=True)
class ReceiverSample:
    location: SphericalLocation
    orientation: Orientation
    rx_coil: CoilSpec


@dataclass(frozen=True)
class ChargingOutcome:
    step_voltages: np.ndarray
    harvested_energy: float
    charged_steps: int


@dataclass(frozen=True)
class EnergyCdf:
    samples: np.ndarray
    zero_probability: float
    quantiles: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def median(self) -> float:
        return self.quantiles[0.5]

    def cdf(self) -> np.ndarray:
        """Empirical CDF value at each sorted sample."""
        return np.arange(1, self.n + 1) / self.n


@dataclass(frozen=True)
class FixedLocation:
    location: SphericalLocation


@dataclass(frozen=True)
class RandomLocation:
    range: float

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("range must be positive")


@dataclass(frozen=True)
class VoltageTrace:
    times: np.ndarray  # segment start times, s
    voltages: np.ndarray  # |v| per segment, V
    dwell_seconds: float

    def above(self, v_th: float) -> np.ndarray:
        return self.voltages > v_th


def _gated_energy(volts, v_th, r_r, dwell, load_factor):
    power = np.where(volts > v_th, volts * volts / (load_factor * r_r), 0.0)
    # fixed left-to-right accumulation keeps the result independent of batch shape
    total = np.zeros(power.shape[:-1])
    for k in range(power.shape[-1]):
        total = total + power[..., k]
    return total * dwell


def _project(u, fields):
    """|u . f| for receiver axes u (n, 3) and fields (..., 3, m), elementwise only."""
    return np.abs(u[:, 0, None] * fields[..., 0, :]
                  + u[:, 1, None] * fields[..., 1, :]
                  + u[:, 2, None] * fields[..., 2, :])


def step_voltages(policy: ChargingPolicy, rx: ReceiverSample, tx: CoilSpec, medium: Medium) -> np.ndarray:
    ch = channel_matrix(tx, medium, rx.location)
    fields = ch.h_matrix @ policy.current_set.currents()
    return voltage_gain(rx.rx_coil, medium) * np.abs(rx.orientation.u @ fields)


def simulate_cycle(
    policy: ChargingPolicy,
    rx: ReceiverSample,
    tx: CoilSpec,
    medium: Medium,
    v_th: float,
    load_factor: float = LOAD_FACTOR,
) -> ChargingOutcome:
    volts = step_voltages(policy, rx, tx, medium)
    on = volts > v_th
    energy = float(np.sum(volts[on] ** 2) / (load_factor * rx.rx_coil.resistance) * policy.dwell_seconds)
    return ChargingOutcome(step_voltages=volts, harvested_energy=energy, charged_steps=int(on.sum()))


def voltage_trace(policy: ChargingPolicy, rx: ReceiverSample, tx: CoilSpec, medium: Medium) -> VoltageTrace:
    """Piecewise-constant |v| over one cycle, one segment per current vector."""
    volts = step_voltages(policy, rx, tx, medium)
    dwell = policy.dwell_seconds
    return VoltageTrace(times=np.arange(policy.n_cv) * dwell, voltages=volts, dwell_seconds=dwell)


def _stream(key, index, stream):
    counter = np.array([0, 0, stream, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _key(seed):
    return np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)


def sample_orientation(rng: np.random.Generator) -> Orientation:
    """Uniform direction on the unit sphere from normalised Gaussian draws."""
    v = rng.standard_normal(3)
    return Orientation.from_vector(v)


def sample_location(rng: np.random.Generator, range_m: float) -> SphericalLocation:
    """Uniform point on the sphere of radius ``range_m``."""
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return SphericalLocation(range_m, math.acos(cos_t), phi % (2.0 * math.pi))


def _orientation_vector(rng):
    v = rng.standard_normal(3)
    return v / math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def _location_angles(rng):
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return math.acos(cos_t), phi


def receiver_samples(seed: int, indices, mode, rx: CoilSpec) -> list[ReceiverSample]:
    """Materialise the receivers behind the given Monte Carlo sample indices."""
    key = _key(seed)
    out = []
    for idx in indices:
        orient = sample_orientation(_stream(key, int(idx), _ORIENTATION_STREAM))
        if isinstance(mode, FixedLocation):
            loc = mode.location
        else:
            loc = sample_location(_stream(key, int(idx), _LOCATION_STREAM), mode.range)
        out.append(ReceiverSample(loc, orient, rx))
    return out


def _chunk_energy(policy, indices, mode, key, tx, rx, medium, v_th, load_factor):
    n = len(indices)
    u = np.empty((n, 3))
    for row, idx in enumerate(indices):
        u[row] = _orientation_vector(_stream(key, int(idx), _ORIENTATION_STREAM))
    currents = policy.current_set.currents()
    if isinstance(mode, FixedLocation):
        h = channel_matrix(tx, medium, mode.location).h_matrix
        fields = (h @ currents)[None]  # (1, 3, m), shared by all receivers
    else:
        ang = np.array([_location_angles(_stream(key, int(idx), _LOCATION_STREAM)) for idx in indices]).reshape(n, 2)
        hs = channel_batch(tx, medium, mode.range, ang[:, 0], ang[:, 1])
        # (n, 3, m) without BLAS so every row is computed the same way
        fields = (hs[:, :, 0, None] * currents[None, 0, None, :]
                  + hs[:, :, 1, None] * currents[None, 1, None, :]
                  + hs[:, :, 2, None] * currents[None, 2, None, :])
    volts = voltage_gain(rx, medium) * _project(u, fields)
    return _gated_energy(volts, v_th, rx.resistance, policy.dwell_seconds, load_factor)


def monte_carlo(
    policy: ChargingPolicy,
    n: int,
    mode,
    seed: int,
    tx: CoilSpec,
    rx: CoilSpec,
    medium: Medium,
    v_th: float,
    workers: int = 1,
    chunk_size: int = 2048,
    load_factor: float = LOAD_FACTOR,
) -> EnergyCdf:
    """Harvested energy over one cycle for ``n`` random receivers, summarised as a CDF.

    ``mode`` is ``FixedLocation(loc)`` (random orientation only) or
    ``RandomLocation(range)`` (random direction on the sphere as well).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    key = _key(seed)
    chunks = [np.arange(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]

    def run(idx):
        return _chunk_energy(policy, idx, mode, key, tx, rx, medium, v_th, load_factor)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return cdf_stats(np.concatenate(parts))


def cdf_stats(samples) -> EnergyCdf:
    """Sorted samples, fraction of exact zeros and linear-interpolation quantiles."""
    arr = np.sort(np.asarray(samples, dtype=float))
    if arr.size == 0:
        raise ValueError("cannot build a CDF from an empty sample")
    q = np.quantile(arr, QUANTILE_LEVELS)
    return EnergyCdf(
        samples=arr,
        zero_probability=float(np.count_nonzero(arr == 0.0)) / arr.size,
        quantiles={lvl: float(v) for lvl, v in zip(QUANTILE_LEVELS, q)},
    )
