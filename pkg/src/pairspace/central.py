"""Centrality tests: A/Q terms, per-pair residuals, lambda fits, classification."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from .core import (
    COLLISION_RTOL,
    CollisionError,
    MassVector,
    PairConfiguration,
    SystemState,
    pairs_from_particles,
)
from .dynamics import pair_accelerations


class Classification(str, Enum):
    CENTRAL = "CENTRAL"
    COLLINEAR_FIXED_LINE = "COLLINEAR_FIXED_LINE"
    COLLINEAR_CENTRAL = "COLLINEAR_CENTRAL"
    GENERIC = "GENERIC"


DEFAULT_TOL = 1e-10


def a_term(pc: PairConfiguration, i: int, k: int, j: int) -> float:
    """``1/q_ik^3 - 1/q_kj^3``."""
    if len({i, j, k}) != 3:
        raise ValueError("indices must be distinct")
    r_ik = np.linalg.norm(pc[i, k])
    r_kj = np.linalg.norm(pc[k, j])
    if min(r_ik, r_kj) <= COLLISION_RTOL * pc.diameter():
        raise CollisionError("collision in A term")
    return float(1.0 / r_ik**3 - 1.0 / r_kj**3)


def q_cross(pc: PairConfiguration, i: int, j: int, k: int) -> np.ndarray:
    """``q_ij x q_jk``."""
    if len({i, j, k}) != 3:
        raise ValueError("indices must be distinct")
    return np.cross(pc[i, j], pc[j, k])


def _a_q_arrays(pc: PairConfiguration):
    """Full tables ``A[i, k, j]``, its magnitude bound, and ``Q[i, k, j]``.

    Entries with repeated indices are zero.
    """
    q = pc.full()
    r = np.linalg.norm(q, axis=-1)
    n = pc.n
    off = ~np.eye(n, dtype=bool)
    if r[off].min() <= COLLISION_RTOL * r.max():
        raise CollisionError("configuration has a collision")
    inv3 = np.zeros_like(r)
    inv3[off] = 1.0 / r[off] ** 3
    # A[i, k, j] = inv3[i, k] - inv3[k, j]
    A = inv3[:, :, None] - inv3[None, :, :]
    B = inv3[:, :, None] + inv3[None, :, :]
    # Q[i, k, j] = q_ik x q_kj
    Q = np.cross(q[:, :, None, :], q[None, :, :, :])
    i, k, j = np.indices((n, n, n))
    bad = (i == k) | (k == j) | (i == j)
    A[bad] = 0.0
    B[bad] = 0.0
    Q[bad] = 0.0
    return A, B, Q


def collinearity(pc: PairConfiguration) -> float:
    """max |Q_ijk| / (max q_ij)^2 over triplets."""
    if pc.n < 3:
        return 0.0
    q = pc.full()
    worst = 0.0
    for i, j, k in combinations(range(pc.n), 3):
        worst = max(worst, float(np.linalg.norm(np.cross(q[i, j], q[j, k]))))
    return worst / pc.diameter() ** 2


def is_collinear(pc: PairConfiguration, tol: float = DEFAULT_TOL) -> bool:
    return pc.n < 3 or collinearity(pc) <= tol


@dataclass(frozen=True)
class CentralityReport:
    residuals: dict[tuple[int, int], np.ndarray]
    max_residual: float
    collinear: bool
    lam: float | None = None
    lambda_residual: float | None = None
    fixed_line: bool | None = None
    classification: Classification | None = None

    def to_dict(self) -> dict:
        out = {
            "residual_norms": {f"{i},{j}": float(np.linalg.norm(v))
                               for (i, j), v in sorted(self.residuals.items())},
            "max_residual": self.max_residual,
            "collinear": self.collinear,
            "fixed_line": self.fixed_line,
            "lambda": self.lam,
            "lambda_residual": self.lambda_residual,
        }
        if self.classification is not None:
            out["classification"] = self.classification.value
        return out


def centrality_residual(mv: MassVector, pc: PairConfiguration,
                        realizable_tol: float = 1e-10) -> CentralityReport:
    """Per-pair residual ``sum_k m_k A_ikj Q_ikj`` of the centrality equations.

    ``max_residual`` divides the largest residual norm by the largest per-pair
    scale ``sum_k m_k (q_ik^-3 + q_kj^-3) |Q_ikj|``. The bound on |A| is used
    rather than |A| itself so that rounding noise in an A term that should be
    zero does not register as an order-one residual.
    """
    if pc.n < 3:
        raise ValueError("centrality residuals need N >= 3")
    pc.check_realizable(realizable_tol)
    A, B, Q = _a_q_arrays(pc)
    m = mv.masses
    res = np.einsum("k,ikj,ikjc->ijc", m, A, Q)
    scale = np.einsum("k,ikj,ikj->ij", m, B, np.linalg.norm(Q, axis=-1))
    pairs = list(pc.pairs())
    residuals = {(i, j): res[i, j] for i, j in pairs}
    top = max(float(scale[i, j]) for i, j in pairs)
    worst = max(float(np.linalg.norm(res[i, j])) for i, j in pairs)
    max_residual = worst / top if top > 0 else 0.0
    return CentralityReport(residuals, max_residual, is_collinear(pc))


def fit_lambda(mv: MassVector, pc: PairConfiguration, G: float = 1.0) -> tuple[float, float]:
    """Least-squares lambda in ``q''_ij = -lambda q_ij`` and the scaled RMS misfit."""
    q = pc.vectors
    qq = float(np.sum(q * q))
    if qq == 0.0:
        raise ValueError("all pair vectors vanish")
    acc = pair_accelerations(mv, pc, G)
    lam = -float(np.sum(acc * q)) / qq
    misfit = np.sqrt(np.sum((acc + lam * q) ** 2))
    norm = np.sqrt(np.sum(acc**2))
    return lam, float(misfit / norm) if norm > 0 else 0.0


def pair_torques(mv: MassVector, pc: PairConfiguration, G: float = 1.0) -> np.ndarray:
    """dL_ij/dt = mu_ij q_ij x q''_ij for every pair, shape (P, 3)."""
    i, j = np.triu_indices(pc.n, k=1)
    mu = mv.masses[i] * mv.masses[j] / mv.total
    return mu[:, None] * np.cross(pc.vectors, pair_accelerations(mv, pc, G))


def fixed_line(state: SystemState, tol: float = DEFAULT_TOL) -> bool:
    """Whether every pair velocity is parallel to its pair vector."""
    ps = pairs_from_particles(state)
    q, qd = ps.configuration.vectors, ps.pair_velocities
    cross = np.linalg.norm(np.cross(q, qd), axis=1)
    scale = np.linalg.norm(q, axis=1) * np.linalg.norm(qd, axis=1)
    return bool(np.all(cross <= tol * np.maximum(scale, 1e-300)))


def classify(mv: MassVector, state: SystemState, tol: float = DEFAULT_TOL) -> CentralityReport:
    """Classify a state; the verdict is in ``report.classification``.

    Collinear states moving along their own line are COLLINEAR_FIXED_LINE.
    Other collinear states are COLLINEAR_CENTRAL when one lambda fits every
    pair acceleration, non-collinear states are CENTRAL when the centrality
    residual vanishes, and everything else is GENERIC.
    """
    pc = PairConfiguration.from_positions(state.positions)
    pc.check_collisions()
    lam, lam_res = fit_lambda(mv, pc, state.G)
    if pc.n < 3:
        collinear = True
        report = CentralityReport({}, 0.0, True)
    else:
        report = centrality_residual(mv, pc)
        collinear = report.collinear
    if collinear:
        line = fixed_line(state, tol)
        if line:
            verdict = Classification.COLLINEAR_FIXED_LINE
        elif lam_res <= tol:
            verdict = Classification.COLLINEAR_CENTRAL
        else:
            verdict = Classification.GENERIC
    else:
        line = False
        verdict = Classification.CENTRAL if report.max_residual <= tol else Classification.GENERIC
    central = verdict in (Classification.CENTRAL, Classification.COLLINEAR_CENTRAL)
    return CentralityReport(
        report.residuals,
        report.max_residual,
        collinear,
        lam if central else None,
        lam_res,
        line,
        verdict,
    )
