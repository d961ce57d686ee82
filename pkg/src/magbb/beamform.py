"""Current-vector design for magnetic blind beamforming.

A current vector steers the Cartesian field at a design location towards a
target direction. The design problem is lifted to a 7x7 semidefinite program
over the real-decomposed currents plus the slack ``t = ||h||``; the dominant
eigenpair of the solution gives the current.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import sdpsolve
from .fieldcore import (
    DEFAULT_RX,
    DEFAULT_TX,
    ChannelMatrix,
    CoilSpec,
    Medium,
    Orientation,
    SphericalLocation,
    channel_matrix,
    voltage_gain,
)

SCHEMES = ("grid", "orthonormal3", "constant")


class DesignError(RuntimeError):
    """The SDP behind a current vector could not be solved."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class DesignParams:
    p_max: float = 50.0
    v_th: float = 0.2
    tx: CoilSpec = DEFAULT_TX
    rx: CoilSpec = DEFAULT_RX
    medium: Medium = field(default_factory=Medium)
    voltage_margin: float = 0.0  # added to the lifted voltage bound, stands in for the strict ">"
    use_voltage_constraint: bool = True
    scale_to_power: bool = True
    tolerance: float = 1e-8
    max_iterations: int = 100


@dataclass(frozen=True)
class RealDecomposition:
    u_real: np.ndarray
    h_chan_real: np.ndarray
    r_real: np.ndarray


@dataclass(frozen=True)
class HomogenizedProblem:
    a_matrix: np.ndarray
    power_bound: float
    voltage_bound: float
    decomposition: RealDecomposition

    def sdp(self, include_voltage: bool = True, margin: float = 0.0) -> sdpsolve.SdpProblem:
        """Lifted program over beta = [i; t][i; t]^T."""
        dec = self.decomposition
        hh = dec.h_chan_real
        power = np.zeros((7, 7))
        power[:6, :6] = dec.r_real
        norm_eq = np.zeros((7, 7))
        norm_eq[:6, :6] = hh.T @ hh
        norm_eq[6, 6] = -1.0
        cons = [
            sdpsolve.Constraint(power, "le", self.power_bound),
            sdpsolve.Constraint(_sym(norm_eq), "eq", 0.0),
        ]
        if include_voltage:
            proj = hh.T @ dec.u_real
            volt = np.zeros((7, 7))
            volt[:6, :6] = np.outer(proj, proj)
            cons.append(sdpsolve.Constraint(volt, "ge", self.voltage_bound + margin))
        return sdpsolve.SdpProblem(self.a_matrix, tuple(cons))


@dataclass(frozen=True)
class Diagnostics:
    alignment_error: float = float("nan")
    rank1_ratio: float = float("nan")
    feasible_voltage: bool = True
    imag_norm: float = 0.0
    target_voltage: float = float("nan")
    sdp_status: str = ""
    sdp_objective: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "alignment_error": self.alignment_error,
            "rank1_ratio": self.rank1_ratio,
            "feasible_voltage": self.feasible_voltage,
            "imag_norm": self.imag_norm,
            "target_voltage_V": self.target_voltage,
            "sdp_status": self.sdp_status,
            "sdp_objective": self.sdp_objective,
        }


@dataclass(frozen=True)
class CurrentVector:
    i: np.ndarray
    target_direction: Orientation | None = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def power(self, r_t: float) -> float:
        """Quadratic power form i^H R i with R = r_t I."""
        return float(r_t * np.vdot(self.i, self.i).real)


@dataclass(frozen=True)
class CurrentSet:
    vectors: tuple
    design_location: SphericalLocation
    scheme: str
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("a current set needs at least one vector")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "orthonormal3" and len(self.vectors) != 3:
            raise ValueError("orthonormal3 sets hold exactly three vectors")

    @property
    def n_cv(self) -> int:
        return len(self.vectors)

    def currents(self) -> np.ndarray:
        """Currents stacked column-wise, shape (3, n_cv)."""
        return np.stack([v.i for v in self.vectors], axis=1)

    def scaled(self, alpha: float) -> "CurrentSet":
        vecs = tuple(replace(v, i=v.i * alpha) for v in self.vectors)
        return replace(self, vectors=vecs)


def _sym(m):
    return 0.5 * (m + m.T)


def real_embedding(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def decompose(h, u, r_t: float) -> RealDecomposition:
    h = h.h_matrix if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=complex)
    u = u.u if isinstance(u, Orientation) else np.asarray(u)
    u = np.asarray(u, dtype=complex)
    return RealDecomposition(
        u_real=np.concatenate([u.real, u.imag]),
        h_chan_real=real_embedding(h),
        r_real=real_embedding(r_t * np.eye(3)),
    )


def lifted_voltage_bound(v_th: float, rx: CoilSpec, medium: Medium) -> float:
    return v_th**2 / voltage_gain(rx, medium) ** 2


def build_problem(dec: RealDecomposition, p_max: float, v_th: float, rx: CoilSpec, medium: Medium) -> HomogenizedProblem:
    if not p_max > 0:
        raise ValueError("p_max must be positive")
    if v_th < 0:
        raise ValueError("v_th must be nonnegative")
    hh = dec.h_chan_real
    uu = dec.u_real
    hu = hh.T @ uu
    a = np.zeros((7, 7))
    a[:6, :6] = hh.T @ hh
    a[:6, 6] = -hu
    a[6, :6] = -hu
    a[6, 6] = uu @ uu
    return HomogenizedProblem(
        a_matrix=_sym(a),
        power_bound=2.0 * p_max,
        voltage_bound=lifted_voltage_bound(v_th, rx, medium),
        decomposition=dec,
    )


def alignment_error(h, u) -> float:
    """Distance between the unit target direction and the normalised field phasor."""
    h = np.asarray(h, dtype=complex)
    nh = np.linalg.norm(h)
    if nh == 0:
        return float(np.linalg.norm(u))
    return float(np.linalg.norm(np.asarray(u) - h / nh))


def vector_diagnostics(i, channel: ChannelMatrix, target: Orientation, params: DesignParams, **extra) -> Diagnostics:
    """Diagnostics that depend only on the current and the design channel."""
    h = channel.field(i)
    return Diagnostics(
        alignment_error=alignment_error(h, target.u),
        imag_norm=float(np.linalg.norm(np.imag(i))),
        target_voltage=float(voltage_gain(params.rx, params.medium) * abs(np.dot(h, target.u))),
        **extra,
    )


def design_current(channel: ChannelMatrix, target: Orientation, params: DesignParams = DesignParams()) -> CurrentVector:
    """Solve the lifted design program for one target direction and extract the current.

    When the voltage constraint makes the program infeasible, it is dropped and
    the vector is flagged with ``feasible_voltage=False``. With
    ``params.scale_to_power`` the extracted current is scaled onto the power
    bound; the alignment objective is invariant under positive scaling.
    """
    r_t = params.tx.resistance
    dec = decompose(channel, target, r_t)
    prob = build_problem(dec, params.p_max, params.v_th, params.rx, params.medium)

    feasible_voltage = params.use_voltage_constraint
    sol = sdpsolve.solve(prob.sdp(feasible_voltage, params.voltage_margin),
                         tolerance=params.tolerance, max_iterations=params.max_iterations)
    if feasible_voltage and sol.status == "infeasible":
        feasible_voltage = False
        sol = sdpsolve.solve(prob.sdp(False), tolerance=params.tolerance, max_iterations=params.max_iterations)
    if sol.status != "optimal":
        raise DesignError(f"SDP for target {target} ended with status {sol.status} {sol.detail}".strip(), sol.status)

    lam, vecs = np.linalg.eigh(sol.x_matrix)
    x = math.sqrt(max(lam[-1], 0.0)) * vecs[:, -1]
    if x[6] < 0:
        x = -x
    i = x[:3] + 1j * x[3:6]

    limit = prob.power_bound
    p = r_t * float(np.vdot(i, i).real)
    if p > 0 and (params.scale_to_power or p > limit * (1.0 + 1e-6)):
        i = i * math.sqrt(limit / p)

    return CurrentVector(
        i=i,
        target_direction=target,
        diagnostics=vector_diagnostics(
            i, channel, target, params,
            rank1_ratio=sol.rank1_ratio,
            feasible_voltage=feasible_voltage,
            sdp_status=sol.status,
            sdp_objective=sol.objective_value,
        ),
    )


def direction_grid(n_cv: int, scheme: str = "auto") -> list[Orientation]:
    """Target directions covering the upper hemisphere.

    ``grid`` places m x m points (n_cv = m^2) on cell-centred polar rings with
    every other ring rotated by half an azimuth step; ``spiral`` uses a
    sunflower layout. ``auto`` picks ``grid`` for perfect squares. Antipodal
    directions are redundant because charging depends on |v| only.
    """
    if n_cv < 1:
        raise ValueError("n_cv must be at least 1")
    m = math.isqrt(n_cv)
    if scheme == "auto":
        scheme = "grid" if m * m == n_cv else "spiral"
    if n_cv == 1:
        return [Orientation(0.0, 0.0)]
    if scheme == "grid":
        if m * m != n_cv:
            raise ValueError(f"grid layout needs a perfect square, got {n_cv}")
        out = []
        for j in range(m):
            theta = (j + 0.5) * (math.pi / 2) / m
            for q in range(m):
                out.append(Orientation(theta, (q + 0.5 * (j % 2)) * 2.0 * math.pi / m))
        return out
    if scheme == "spiral":
        golden = math.pi * (3.0 - math.sqrt(5.0))
        out = []
        for k in range(n_cv):
            z = 1.0 - (k + 0.5) / n_cv
            out.append(Orientation(math.acos(z), (k * golden) % (2.0 * math.pi)))
        return out
    raise ValueError(f"unknown direction scheme {scheme!r}")


def orthonormal_triple(v1, v2, v3):
    """Classical Gram-Schmidt on three vectors in R^3."""
    vs = [np.asarray(v, dtype=float) for v in (v1, v2, v3)]
    us = []
    for n, v in enumerate(vs):
        u = v.copy()
        for prev in us:
            u = u - (v @ prev) / (prev @ prev) * prev
        if np.linalg.norm(u) < 1e-9 * np.linalg.norm(v) or np.linalg.norm(v) == 0:
            raise DegenerateInputError(f"input vector {n + 1} is linearly dependent on the previous ones")
        us.append(u)
    return tuple(u / np.linalg.norm(u) for u in us)


def constant_current(p_max: float, r_t: float) -> CurrentVector:
    """Balanced real current meeting the power bound with equality."""
    if not (p_max > 0 and r_t > 0):
        raise ValueError("p_max and r_t must be positive")
    amp = math.sqrt(2.0 * p_max / (3.0 * r_t))
    return CurrentVector(
        i=np.full(3, amp, dtype=complex),
        target_direction=Orientation.from_vector([1.0, 1.0, 1.0]),
        diagnostics=Diagnostics(sdp_status="none"),
    )


def seeded_targets(seed: int | None) -> list[Orientation]:
    """Three mutually orthogonal directions from seeded standard-normal draws."""
    rng = np.random.default_rng(seed)
    e = orthonormal_triple(*rng.standard_normal((3, 3)))
    return [Orientation.from_vector(v) for v in e]


def design_set(
    location: SphericalLocation,
    n_cv: int,
    scheme: str,
    params: DesignParams = DesignParams(),
    seed: int | None = None,
    workers: int = 1,
) -> CurrentSet:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    meta = {
        "p_max_w": params.p_max,
        "v_th_v": params.v_th,
        "voltage_margin": params.voltage_margin,
        "use_voltage_constraint": params.use_voltage_constraint,
        "scale_to_power": params.scale_to_power,
        "tx_turns": params.tx.turns,
        "rx_turns": params.rx.turns,
    }
    if scheme == "constant":
        vec = constant_current(params.p_max, params.tx.resistance)
        return CurrentSet((vec,), location, scheme, seed, meta)

    channel = channel_matrix(params.tx, params.medium, location)
    if scheme == "orthonormal3":
        targets = seeded_targets(seed)
    else:
        targets = direction_grid(n_cv)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vecs = list(pool.map(lambda t: design_current(channel, t, params), targets))
    else:
        vecs = [design_current(channel, t, params) for t in targets]
    return CurrentSet(tuple(vecs), location, scheme, seed, meta)
