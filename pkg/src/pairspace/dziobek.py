"""Mass-independent determinant relations for non-collinear central configurations.

For each excluded body ``j`` the matrix ``G^j[a, b] = A_abj (Q_abj . h)``
(zero diagonal, indices a, b != j) must be singular if some positive masses
make the configuration central. Determinants are reported dimensionless:
divided by the Hadamard bound of the matrix whose entries replace ``A_abj``
by ``q_ab^-3 + q_bj^-3`` and ``Q_abj . h`` by its magnitude, floored at
``PROBE_FLOOR * |Q_abj|``. For planar shapes every projection carries the same
factor ``n . h``, which then cancels, so the scaled values do not depend on
the probe; the floor only matters for probes lying in the plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .central import _a_q_arrays, collinearity
from .core import PairConfiguration

DEFAULT_SEED = 20240607
DEFAULT_TOL = 1e-10
PROBE_FLOOR = 1e-8

# Four-body relations, 0-based (a, k, j) triples for A_akj; each line is
# first product minus second product.
_DZIOBEK_TERMS = (
    (((2, 1, 0), (3, 2, 0), (1, 3, 0)), ((3, 1, 0), (1, 2, 0), (2, 3, 0))),
    (((0, 2, 1), (3, 0, 1), (2, 3, 1)), ((0, 3, 1), (2, 0, 1), (3, 2, 1))),
    (((3, 0, 2), (0, 1, 2), (1, 3, 2)), ((1, 0, 2), (3, 1, 2), (0, 3, 2))),
    (((2, 0, 3), (0, 1, 3), (1, 2, 3)), ((1, 0, 3), (2, 1, 3), (0, 2, 3))),
)


@dataclass(frozen=True)
class GammaMatrix:
    j: int
    indices: tuple[int, ...]
    entries: np.ndarray
    bound: np.ndarray
    probe: np.ndarray

    def scaled_determinant(self) -> float:
        rows = np.linalg.norm(self.bound, axis=1)
        denom = float(np.prod(rows))
        if denom == 0.0:
            return 0.0
        return float(abs(np.linalg.det(self.entries)) / denom)


def _unit(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    n = np.linalg.norm(h)
    if n == 0:
        raise ValueError("probe vector must be nonzero")
    return h / n


def gamma_matrix(pc: PairConfiguration, j: int, h, _tables=None) -> GammaMatrix:
    if not 0 <= j < pc.n:
        raise IndexError(j)
    A, B, Q = _a_q_arrays(pc) if _tables is None else _tables
    h = _unit(h)
    keep = [a for a in range(pc.n) if a != j]
    idx = np.ix_(keep, keep)
    proj = Q[:, :, j] @ h
    mag = np.maximum(np.abs(proj), PROBE_FLOOR * np.linalg.norm(Q[:, :, j], axis=-1))
    entries = A[:, :, j][idx] * proj[idx]
    bound = B[:, :, j][idx] * mag[idx]
    np.fill_diagonal(entries, 0.0)
    np.fill_diagonal(bound, 0.0)
    return GammaMatrix(j, tuple(keep), entries, bound, h)


def determinant_relations(pc: PairConfiguration, h, _tables=None) -> np.ndarray:
    """Scaled |det G^j| for every j."""
    if pc.n < 3:
        raise ValueError("determinant relations need N >= 3")
    tables = _a_q_arrays(pc) if _tables is None else _tables
    return np.array([gamma_matrix(pc, j, h, tables).scaled_determinant() for j in range(pc.n)])


def dziobek_products(pc: PairConfiguration) -> np.ndarray:
    """The four alternating A-products for N = 4, each scaled by its magnitude bound."""
    if pc.n != 4:
        raise ValueError("Dziobek products are defined for N = 4")
    A, B, _ = _a_q_arrays(pc)
    out = np.empty(4)
    for r, (first, second) in enumerate(_DZIOBEK_TERMS):
        p1 = np.prod([A[t] for t in first])
        p2 = np.prod([A[t] for t in second])
        s = np.prod([B[t] for t in first]) + np.prod([B[t] for t in second])
        out[r] = abs(p1 - p2) / s
    return out


def dziobek_q_product(pc: PairConfiguration, relation: int, h) -> float:
    """Product of projected cross products paired with the first A-product of a relation."""
    _, _, Q = _a_q_arrays(pc)
    h = _unit(h)
    return float(np.prod([Q[t] @ h for t in _DZIOBEK_TERMS[relation][0]]))


def plane_normal(pc: PairConfiguration) -> np.ndarray | None:
    """Unit normal of the best-fit plane through the bodies, if the fit is planar."""
    pos = pc.positions()
    centred = pos - pos.mean(axis=0)
    _, s, vt = np.linalg.svd(centred)
    if s[0] == 0 or s[1] <= 1e-12 * s[0]:
        return None
    if s[2] > 1e-10 * s[0]:
        return None
    return vt[2]


def probe_vectors(pc: PairConfiguration, trials: int = 8, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Plane normal (planar shapes), the coordinate axes, then seeded unit vectors."""
    probes = []
    normal = plane_normal(pc)
    if normal is not None:
        probes.append(normal)
    probes.extend(np.eye(3))
    rng = np.random.default_rng(seed)
    extra = rng.normal(size=(max(trials, 0), 3))
    probes.extend(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    return np.array(probes)


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    per_j_max: np.ndarray
    per_probe: np.ndarray  # (probes, N)
    probes: np.ndarray
    tol: float
    dziobek: np.ndarray | None = None
    notes: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.admissible

    def to_dict(self) -> dict:
        out = {
            "admissible": self.admissible,
            "tol": self.tol,
            "per_j_max": self.per_j_max.tolist(),
            "probes": self.probes.tolist(),
            "scaled_determinants": self.per_probe.tolist(),
            "notes": list(self.notes),
        }
        if self.dziobek is not None:
            out["dziobek_products"] = self.dziobek.tolist()
        return out


def shape_admissible(pc: PairConfiguration, trials: int = 8, tol: float = DEFAULT_TOL,
                     seed: int = DEFAULT_SEED) -> AdmissibilityReport:
    """Whether every determinant relation holds for every probe.

    Admissible shapes are only candidates: the relations are necessary for
    centrality and say nothing about the masses.
    """
    notes = []
    if collinearity(pc) <= 1e-10:
        notes.append("configuration is collinear; relations are vacuous")
    tables = _a_q_arrays(pc)
    probes = probe_vectors(pc, trials, seed)
    per_probe = np.array([determinant_relations(pc, h, tables) for h in probes])
    per_j = per_probe.max(axis=0)
    dz = dziobek_products(pc) if pc.n == 4 else None
    return AdmissibilityReport(bool(np.all(per_j < tol)), per_j, per_probe, probes, tol, dz, notes)
