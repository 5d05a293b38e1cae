"""Pair-space data model.

Bodies are indexed from 0. A pair vector ``q[i, j]`` is ``r_i - r_j``; only
``i < j`` is stored and the reversed pair is served negated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

COLLISION_RTOL = 1e-10


class CollisionError(ValueError):
    """Two bodies are closer than the collision tolerance."""


class RealizabilityError(ValueError):
    """A pair configuration violates the triangle conditions."""


def _as_points(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MassVector:
    masses: np.ndarray
    total: float = field(init=False)

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).ravel()
        if m.size < 2:
            raise ValueError("need at least two masses")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("masses must be finite and positive")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "total", float(sum(m.tolist())))

    @property
    def n(self) -> int:
        return self.masses.size

    def __len__(self) -> int:
        return self.masses.size

    def __getitem__(self, i):
        return self.masses[i]

    def scaled(self, c: float) -> "MassVector":
        return MassVector(self.masses * c)

    def permuted(self, ordering: Sequence[int]) -> "MassVector":
        return MassVector(self.masses[list(ordering)])


@dataclass(frozen=True)
class SystemState:
    """Particle positions and velocities, shape (N, 3) each."""

    positions: np.ndarray
    velocities: np.ndarray
    gravitational_constant: float = 1.0

    def __post_init__(self):
        pos = _as_points(self.positions, "positions")
        vel = _as_points(self.velocities, "velocities")
        if pos.shape != vel.shape:
            raise ValueError("positions and velocities differ in shape")
        if pos.shape[0] < 2:
            raise ValueError("need at least two bodies")
        if not self.gravitational_constant > 0:
            raise ValueError("gravitational constant must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "gravitational_constant", float(self.gravitational_constant))

    @classmethod
    def create(cls, masses: MassVector, positions, velocities=None, G: float = 1.0,
               barycentric: bool = True) -> "SystemState":
        """Build a state, optionally moving it to the barycentric frame."""
        pos = np.array(positions, dtype=float)
        vel = np.zeros_like(pos) if velocities is None else np.array(velocities, dtype=float)
        if pos.shape[0] != masses.n:
            raise ValueError("mass count does not match body count")
        if barycentric:
            w = masses.masses[:, None] / masses.total
            pos = pos - (w * pos).sum(axis=0)
            vel = vel - (w * vel).sum(axis=0)
        return cls(pos, vel, G)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def G(self) -> float:
        return self.gravitational_constant

    def diameter(self) -> float:
        d = self.positions[:, None, :] - self.positions[None, :, :]
        return float(np.sqrt((d * d).sum(axis=-1)).max())

    def is_barycentric(self, masses: MassVector, tol: float = 1e-12) -> bool:
        com = (masses.masses[:, None] * self.positions).sum(axis=0)
        scale = masses.total * np.abs(self.positions).max()
        return bool(np.linalg.norm(com) <= tol * scale)

    def check_collisions(self, rtol: float = COLLISION_RTOL) -> None:
        pc = PairConfiguration.from_positions(self.positions)
        pc.check_collisions(rtol)


def _pair_index(n: int) -> dict[tuple[int, int], int]:
    return {p: k for k, p in enumerate(combinations(range(n), 2))}


@dataclass(frozen=True)
class PairConfiguration:
    """Pair vectors for ``i < j`` in ``combinations`` order, shape (N(N-1)/2, 3)."""

    vectors: np.ndarray
    n: int

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.shape != (self.n * (self.n - 1) // 2, 3):
            raise ValueError(f"expected {self.n * (self.n - 1) // 2} pair vectors for N={self.n}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_positions(cls, positions) -> "PairConfiguration":
        r = np.asarray(positions, dtype=float)
        i, j = np.triu_indices(r.shape[0], k=1)
        return cls(r[i] - r[j], r.shape[0])

    @classmethod
    def from_mapping(cls, mapping: dict[tuple[int, int], Sequence[float]], n: int) -> "PairConfiguration":
        """Build from ``{(i, j): q_ij}``; either orientation of each pair is accepted."""
        out = np.full((n * (n - 1) // 2, 3), np.nan)
        index = _pair_index(n)
        for (i, j), q in mapping.items():
            if i == j:
                raise ValueError("pair indices must differ")
            if i < j:
                out[index[i, j]] = q
            else:
                out[index[j, i]] = -np.asarray(q, dtype=float)
        if np.isnan(out).any():
            raise ValueError("mapping does not cover every pair")
        return cls(out, n)

    def __getitem__(self, pair: tuple[int, int]) -> np.ndarray:
        i, j = pair
        if i == j:
            raise ValueError("pair indices must differ")
        if i < j:
            return self.vectors[_pair_index(self.n)[i, j]]
        return -self.vectors[_pair_index(self.n)[j, i]]

    def pairs(self) -> Iterator[tuple[int, int]]:
        return combinations(range(self.n), 2)

    def full(self) -> np.ndarray:
        """Antisymmetric (N, N, 3) array with ``full()[i, j] == q_ij``."""
        q = np.zeros((self.n, self.n, 3))
        i, j = np.triu_indices(self.n, k=1)
        q[i, j] = self.vectors
        q[j, i] = -self.vectors
        return q

    def distances(self) -> np.ndarray:
        """(N, N) matrix of |q_ij| with zero diagonal."""
        return np.linalg.norm(self.full(), axis=-1)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.vectors, axis=1).max())

    def check_collisions(self, rtol: float = COLLISION_RTOL) -> None:
        norms = np.linalg.norm(self.vectors, axis=1)
        limit = rtol * norms.max()
        if norms.min() <= limit:
            k = int(norms.argmin())
            i, j = list(self.pairs())[k]
            raise CollisionError(f"bodies {i} and {j} collide (|q| = {norms[k]:.3e})")

    def check_realizable(self, tol: float = 1e-12) -> None:
        if self.n >= 3:
            v = verify_triangle(self)
            if v > tol:
                raise RealizabilityError(f"triangle condition violated by {v:.3e}")

    def positions(self) -> np.ndarray:
        """Positions with body 0 at the origin; realizable input assumed."""
        return np.vstack([np.zeros(3), -self.full()[0, 1:]])


@dataclass(frozen=True)
class PairState:
    configuration: PairConfiguration
    pair_velocities: np.ndarray

    @property
    def n(self) -> int:
        return self.configuration.n

    def velocities(self) -> PairConfiguration:
        return PairConfiguration(self.pair_velocities, self.configuration.n)


def pairs_from_particles(state: SystemState) -> PairState:
    pc = PairConfiguration.from_positions(state.positions)
    pv = PairConfiguration.from_positions(state.velocities)
    return PairState(pc, pv.vectors)


def verify_triangle(pc: PairConfiguration, tol: float | None = None) -> float:
    """Largest relative violation of ``q_ij + q_jk + q_ki = 0`` over all triplets.

    ``tol`` is accepted for call-site symmetry and ignored; compare the
    returned value yourself. A triplet whose three vectors are all zero counts
    as an infinite violation.
    """
    if pc.n < 3:
        raise ValueError("triangle conditions need N >= 3")
    q = pc.full()
    trip = np.array(list(combinations(range(pc.n), 3)))
    i, j, k = trip.T
    a, b, c = q[i, j], q[j, k], q[k, i]
    num = np.linalg.norm(a + b + c, axis=1)
    den = np.linalg.norm(a, axis=1) + np.linalg.norm(b, axis=1) + np.linalg.norm(c, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
    return float(ratio.max())


def _distinct(*idx: int) -> None:
    if len(set(idx)) != len(idx):
        raise ValueError(f"indices must be distinct, got {idx}")


def reduced_pair_mass(mv: MassVector, i: int, j: int) -> float:
    _distinct(i, j)
    return float(mv.masses[i] * mv.masses[j] / mv.total)


def reduced_triplet_mass(mv: MassVector, i: int, j: int, k: int) -> float:
    _distinct(i, j, k)
    return float(mv.masses[i] * mv.masses[j] * mv.masses[k] / mv.total**2)


def _pair_mu(mv: MassVector) -> np.ndarray:
    i, j = np.triu_indices(mv.n, k=1)
    return mv.masses[i] * mv.masses[j] / mv.total


def pair_kinetic_energy(mv: MassVector, ps: PairState) -> float:
    """Internal kinetic energy in pair form, including the triplet correction."""
    qd = ps.pair_velocities
    pair_term = 0.5 * float(np.sum(_pair_mu(mv) * np.einsum("ij,ij->i", qd, qd)))
    triplet_term = 0.0
    if mv.n >= 3:
        full = ps.velocities().full()
        for i, j, k in combinations(range(mv.n), 3):
            s = full[i, j] + full[j, k] + full[k, i]
            triplet_term += 0.5 * reduced_triplet_mass(mv, i, j, k) * float(s @ s)
    return pair_term - triplet_term


def pair_energy(mv: MassVector, ps: PairState, i: int, j: int, G: float = 1.0,
                collision_rtol: float = COLLISION_RTOL) -> float:
    _distinct(i, j)
    q = ps.configuration[i, j]
    qd = ps.velocities()[i, j]
    r = float(np.linalg.norm(q))
    if r <= collision_rtol * ps.configuration.diameter():
        raise CollisionError(f"bodies {i} and {j} collide")
    mu = reduced_pair_mass(mv, i, j)
    return 0.5 * mu * float(qd @ qd) - G * mv.total * mu / r


def total_pair_energy(mv: MassVector, ps: PairState, G: float = 1.0,
                      collision_rtol: float = COLLISION_RTOL) -> float:
    ps.configuration.check_collisions(collision_rtol)
    mu = _pair_mu(mv)
    r = np.linalg.norm(ps.configuration.vectors, axis=1)
    qd = ps.pair_velocities
    return float(np.sum(0.5 * mu * np.einsum("ij,ij->i", qd, qd) - G * mv.total * mu / r))


def pair_angular_momentum(mv: MassVector, ps: PairState, i: int, j: int) -> np.ndarray:
    _distinct(i, j)
    return reduced_pair_mass(mv, i, j) * np.cross(ps.configuration[i, j], ps.velocities()[i, j])


def pair_angular_momenta(mv: MassVector, ps: PairState) -> np.ndarray:
    """All L_ij for i < j, shape (N(N-1)/2, 3)."""
    return _pair_mu(mv)[:, None] * np.cross(ps.configuration.vectors, ps.pair_velocities)


def total_pair_angular_momentum(mv: MassVector, ps: PairState) -> np.ndarray:
    return pair_angular_momenta(mv, ps).sum(axis=0)


# particle-space counterparts, used as cross-checks

def particle_kinetic_energy(mv: MassVector, state: SystemState) -> float:
    v = state.velocities
    return 0.5 * float(np.sum(mv.masses * np.einsum("ij,ij->i", v, v)))


def particle_energy(mv: MassVector, state: SystemState) -> float:
    """Kinetic plus potential energy of the particles, as given (no COM removal)."""
    pc = PairConfiguration.from_positions(state.positions)
    i, j = np.triu_indices(mv.n, k=1)
    r = np.linalg.norm(pc.vectors, axis=1)
    pot = -state.G * float(np.sum(mv.masses[i] * mv.masses[j] / r))
    return particle_kinetic_energy(mv, state) + pot


def particle_angular_momentum(mv: MassVector, state: SystemState) -> np.ndarray:
    return (mv.masses[:, None] * np.cross(state.positions, state.velocities)).sum(axis=0)


# JSON state files

def load_state(path: str | Path) -> tuple[MassVector, SystemState]:
    with open(path) as fh:
        data = json.load(fh)
    return state_from_dict(data)


def state_from_dict(data: dict, barycentric: bool = False) -> tuple[MassVector, SystemState]:
    for key in ("masses", "positions"):
        if key not in data:
            raise ValueError(f"missing field '{key}'")
    mv = MassVector(data["masses"])
    pos = data["positions"]
    vel = data.get("velocities")
    if len(pos) != mv.n:
        raise ValueError(f"field 'positions' has {len(pos)} rows, expected {mv.n}")
    if vel is not None and len(vel) != mv.n:
        raise ValueError(f"field 'velocities' has {len(vel)} rows, expected {mv.n}")
    state = SystemState.create(mv, pos, vel, data.get("G", 1.0), barycentric=barycentric)
    return mv, state


def state_to_dict(mv: MassVector, state: SystemState) -> dict:
    return {
        "G": state.G,
        "masses": mv.masses.tolist(),
        "positions": state.positions.tolist(),
        "velocities": state.velocities.tolist(),
    }
