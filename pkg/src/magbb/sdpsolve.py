"""Dense primal-dual interior-point solver for small semidefinite programs.

Problems have the form::

    minimize    trace(C X)
    subject to  trace(A_m X)  {==, <=, >=}  b_m,   X positive semidefinite

Inequalities are turned into equalities with nonnegative slacks, giving a
mixed SDP/LP cone. Iterates follow Mehrotra's predictor-corrector scheme with
Nesterov-Todd scaling. Everything is dense; the intended size is n <= 16.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

RELATIONS = ("eq", "le", "ge")


@dataclass(frozen=True)
class Constraint:
    matrix: np.ndarray
    relation: str
    rhs: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {self.relation!r}")


@dataclass(frozen=True)
class SdpProblem:
    objective: np.ndarray
    constraints: tuple

    def __post_init__(self):
        obj = np.asarray(self.objective, dtype=float)
        if obj.ndim != 2 or obj.shape[0] != obj.shape[1] or obj.shape[0] < 1:
            raise ValueError(f"objective must be a square matrix, got shape {obj.shape}")
        cons = tuple(self.constraints)
        if not cons:
            raise ValueError("at least one constraint is required")
        for k, mat in enumerate([obj] + [np.asarray(c.matrix, dtype=float) for c in cons]):
            if mat.shape != obj.shape:
                raise ValueError(f"matrix {k} has shape {mat.shape}, expected {obj.shape}")
            if np.max(np.abs(mat - mat.T)) > 1e-12 * max(1.0, np.max(np.abs(mat))):
                raise ValueError(f"matrix {k} is not symmetric")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraints", cons)

    @property
    def dimension(self) -> int:
        return self.objective.shape[0]


@dataclass
class SdpSolution:
    x_matrix: np.ndarray
    status: str  # "optimal", "infeasible" or "max_iterations"
    objective_value: float
    feasibility_residual: float
    eigenvalues: np.ndarray  # descending
    iterations: int = 0
    dual: np.ndarray = field(default=None, repr=False)
    certificate_residual: float = float("nan")
    detail: str = ""

    @property
    def rank1_ratio(self) -> float:
        """Share of the trace carried by the dominant eigenvalue."""
        pos = np.clip(self.eigenvalues, 0.0, None)
        total = pos.sum()
        return float(pos[0] / total) if total > 0 else 0.0


@dataclass
class ResidualReport:
    lhs: np.ndarray
    signed: np.ndarray
    violations: np.ndarray
    min_eigenvalue: float
    psd_violation: float
    objective_value: float

    @property
    def max_violation(self) -> float:
        return float(max(self.violations.max(initial=0.0), self.psd_violation))


def validate(problem: SdpProblem, solution: SdpSolution) -> ResidualReport:
    """Recompute constraint residuals and objective directly from ``solution.x_matrix``.

    Violations are scaled by ``max(1, |rhs|)``; the sign convention of ``signed`` is lhs - rhs.
    """
    x = np.asarray(solution.x_matrix, dtype=float)
    if x.shape != problem.objective.shape:
        raise ValueError(f"solution has shape {x.shape}, problem expects {problem.objective.shape}")
    lhs = np.array([np.sum(np.asarray(c.matrix) * x) for c in problem.constraints])
    rhs = np.array([c.rhs for c in problem.constraints], dtype=float)
    signed = lhs - rhs
    viol = np.empty_like(signed)
    for k, c in enumerate(problem.constraints):
        if c.relation == "eq":
            viol[k] = abs(signed[k])
        elif c.relation == "le":
            viol[k] = max(0.0, signed[k])
        else:
            viol[k] = max(0.0, -signed[k])
    viol /= np.maximum(1.0, np.abs(rhs))
    lam_min = float(np.linalg.eigvalsh(0.5 * (x + x.T))[0])
    return ResidualReport(
        lhs=lhs,
        signed=signed,
        violations=viol,
        min_eigenvalue=lam_min,
        psd_violation=max(0.0, -lam_min),
        objective_value=float(np.sum(problem.objective * x)),
    )


def _nt_scaling(x, z):
    """Return G and the diagonal lambda with G^-1 X G^-T = G^T Z G = diag(lambda)."""
    lx = np.linalg.cholesky(x)
    lz = np.linalg.cholesky(z)
    _, sv, vt = np.linalg.svd(lz.T @ lx)
    g = lx @ vt.T / np.sqrt(sv)
    return g, sv


def _max_step(lam, dlam_scaled):
    # largest alpha with diag(lam) + alpha * D >= 0
    isq = 1.0 / np.sqrt(lam)
    e = np.linalg.eigvalsh(isq[:, None] * dlam_scaled * isq[None, :])[0]
    return np.inf if e >= 0 else -1.0 / e


def _max_step_lp(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def solve(
    problem: SdpProblem,
    tolerance: float = 1e-8,
    max_iterations: int = 100,
    divergence_bound: float = 1e10,
) -> SdpSolution:
    """Solve ``problem`` and report status, objective and the primal matrix.

    ``optimal`` means the relative primal infeasibility, dual infeasibility and
    duality gap are all below ``tolerance``. A dual objective growing past
    ``divergence_bound`` (in internally normalised units) flags the primal as
    infeasible; the normalised dual ray is kept as the certificate.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")

    n = problem.dimension
    cons = problem.constraints
    m = len(cons)
    ineq = [k for k, c in enumerate(cons) if c.relation != "eq"]
    p = len(ineq)

    a_mats = np.array([np.asarray(c.matrix, dtype=float) for c in cons])
    a_lp = np.zeros((m, p))
    for j, k in enumerate(ineq):
        a_lp[k, j] = 1.0 if cons[k].relation == "le" else -1.0
    b = np.array([c.rhs for c in cons], dtype=float)

    # Row and objective normalisation; X is unaffected, y is rescaled at the end.
    row_scale = np.sqrt(np.einsum("kij,kij->k", a_mats, a_mats) + np.sum(a_lp**2, axis=1))
    row_scale[row_scale == 0] = 1.0
    a_mats = a_mats / row_scale[:, None, None]
    a_lp = a_lp / row_scale[:, None]
    b = b / row_scale
    c_orig = problem.objective
    c_scale = float(np.linalg.norm(c_orig)) or 1.0
    c_mat = c_orig / c_scale

    norm_b = float(np.linalg.norm(b))
    norm_c = float(np.linalg.norm(c_mat))
    a_norms = np.sqrt(np.einsum("kij,kij->k", a_mats, a_mats))
    xi = max(10.0, np.sqrt(n), float(np.max(np.sqrt(n) * (1.0 + np.abs(b)) / (1.0 + a_norms))))
    eta = max(10.0, np.sqrt(n), float(np.max(a_norms)), norm_c)
    x = xi * np.eye(n)
    z = eta * np.eye(n)
    s = np.full(p, xi)
    w = np.full(p, eta)
    y = np.zeros(m)
    total_dim = n + p
    gamma = 0.98

    def a_op(mat, vec):
        return np.einsum("kij,ij->k", a_mats, mat) + a_lp @ vec

    def at_op(yv):
        return np.einsum("k,kij->ij", yv, a_mats), a_lp.T @ yv

    status = "max_iterations"
    detail = ""
    it = 0
    best = (np.inf, x, y)
    for it in range(1, max_iterations + 1):
        rp = b - a_op(x, s)
        aty, aty_lp = at_op(y)
        rd = c_mat - aty - z
        rd = 0.5 * (rd + rd.T)
        rd_lp = -aty_lp - w
        pobj = float(np.sum(c_mat * x))
        dobj = float(b @ y)
        mu = (float(np.sum(x * z)) + float(s @ w)) / total_dim
        pinf = float(np.linalg.norm(rp)) / (1.0 + norm_b)
        dinf = float(np.sqrt(np.sum(rd**2) + np.sum(rd_lp**2))) / (1.0 + norm_c)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        log.debug("it %d pobj %.3e dobj %.3e pinf %.2e dinf %.2e gap %.2e mu %.2e", it, pobj, dobj, pinf, dinf, gap, mu)
        merit = max(pinf, dinf, gap)
        if merit < best[0]:
            best = (merit, x, y)
        if merit <= tolerance:
            status = "optimal"
            break
        if dobj > divergence_bound:
            status = "infeasible"
            detail = "dual objective diverged: primal infeasible"
            break
        if pobj < -divergence_bound:
            status = "infeasible"
            detail = "primal objective diverged: dual infeasible"
            break

        try:
            g, lam = _nt_scaling(x, z)
        except np.linalg.LinAlgError:
            detail = "lost positive definiteness"
            break
        g_inv = np.linalg.inv(g)
        wmat = g @ g.T
        d2 = s / w
        d = np.sqrt(d2)
        lam_lp = np.sqrt(s * w)

        waw = wmat[None] @ a_mats @ wmat[None]
        schur = np.einsum("kij,lij->kl", a_mats, waw) + (a_lp * d2) @ a_lp.T
        schur = 0.5 * (schur + schur.T)
        reg = 1e-14 * max(1.0, float(np.max(np.diag(schur))))
        try:
            factor = sla.cho_factor(schur + reg * np.eye(m))
        except np.linalg.LinAlgError:
            detail = "singular Schur complement"
            break
        wrdw = wmat @ rd @ wmat
        base_rhs = rp + np.einsum("kij,ij->k", a_mats, wrdw) + a_lp @ (d2 * rd_lp)

        def direction(rc_scaled, rc_lp_scaled):
            rc = g @ rc_scaled @ g.T
            rhs = base_rhs - np.einsum("kij,ij->k", a_mats, rc) - a_lp @ (d * rc_lp_scaled)
            dy = sla.cho_solve(factor, rhs)
            for _ in range(2):
                dy = dy + sla.cho_solve(factor, rhs - schur @ dy)
            dz = rd - np.einsum("k,kij->ij", dy, a_mats)
            dz = 0.5 * (dz + dz.T)
            dw = rd_lp - a_lp.T @ dy
            dx = rc - wmat @ dz @ wmat
            dx = 0.5 * (dx + dx.T)
            ds = d * rc_lp_scaled - d2 * dw
            dx_s = g_inv @ dx @ g_inv.T
            dz_s = g.T @ dz @ g
            return dx, dy, dz, ds, dw, 0.5 * (dx_s + dx_s.T), 0.5 * (dz_s + dz_s.T)

        def steps(dx_s, dz_s, ds, dw):
            ap = min(_max_step(lam, dx_s), _max_step_lp(s, ds))
            ad = min(_max_step(lam, dz_s), _max_step_lp(w, dw))
            return min(1.0, ap), min(1.0, ad)

        # predictor
        dx, dy, dz, ds, dw, dx_s, dz_s = direction(np.diag(-lam), -lam_lp)
        ap, ad = steps(dx_s, dz_s, ds, dw)
        mu_aff = (float(np.sum((x + ap * dx) * (z + ad * dz))) + float((s + ap * ds) @ (w + ad * dw))) / total_dim
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0

        # corrector
        sym = 0.5 * (dx_s @ dz_s + dz_s @ dx_s)
        rhs_c = sigma * mu * np.eye(n) - np.diag(lam**2) - sym
        rc_scaled = 2.0 * rhs_c / (lam[:, None] + lam[None, :])
        ds_s = ds / d if p else ds
        dw_s = dw * d if p else dw
        rc_lp = (sigma * mu - lam_lp**2 - ds_s * dw_s) / lam_lp if p else lam_lp
        dx, dy, dz, ds, dw, dx_s, dz_s = direction(rc_scaled, rc_lp)
        ap, ad = steps(dx_s, dz_s, ds, dw)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)

        x = x + ap * dx
        s = s + ap * ds
        y = y + ad * dy
        z = z + ad * dz
        w = w + ad * dw
        x = 0.5 * (x + x.T)
        z = 0.5 * (z + z.T)

    if status == "max_iterations":
        # breakdown or budget exhausted: report the best iterate seen
        x, y = best[1], best[2]
    y_orig = y * c_scale / row_scale
    cert = float("nan")
    if status == "infeasible" and detail.startswith("dual objective"):
        cert = _farkas_residual(problem, y_orig)

    sol = SdpSolution(
        x_matrix=x,
        status=status,
        objective_value=float(np.sum(c_orig * x)),
        feasibility_residual=0.0,
        eigenvalues=np.linalg.eigvalsh(x)[::-1].copy(),
        iterations=it,
        dual=y_orig,
        certificate_residual=cert,
        detail=detail,
    )
    sol.feasibility_residual = validate(problem, sol).max_violation
    return sol


def _farkas_residual(problem: SdpProblem, y: np.ndarray) -> float:
    """Residual of the infeasibility ray ``y`` normalised so that b.y = 1.

    A valid certificate has sum_m y_m A_m negative semidefinite and the slack
    signs respected; the returned value is the largest violation of those.
    """
    b = np.array([c.rhs for c in problem.constraints], dtype=float)
    by = float(b @ y)
    if by <= 0:
        return float("inf")
    yh = y / by
    agg = sum(v * np.asarray(c.matrix) for v, c in zip(yh, problem.constraints))
    worst = max(0.0, float(np.linalg.eigvalsh(agg)[-1]))
    for v, c in zip(yh, problem.constraints):
        if c.relation == "le":
            worst = max(worst, v)
        elif c.relation == "ge":
            worst = max(worst, -v)
    return worst
