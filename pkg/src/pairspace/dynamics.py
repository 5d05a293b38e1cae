"""Pair-space equations of motion, a particle-space oracle, and RK integration."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .core import (
    COLLISION_RTOL,
    CollisionError,
    MassVector,
    PairConfiguration,
    SystemState,
)


class Method(str, Enum):
    RK4 = "rk4"
    ADAPTIVE = "adaptive"


def _check_three(pc: PairConfiguration, i: int, j: int, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len({i, j, k}) != 3:
        raise ValueError(f"indices must be distinct, got {(i, j, k)}")
    a, b, c = pc[i, j], pc[j, k], pc[k, i]
    limit = COLLISION_RTOL * pc.diameter()
    for (x, y), v in (((i, j), a), ((j, k), b), ((k, i), c)):
        if np.linalg.norm(v) <= limit:
            raise CollisionError(f"bodies {x} and {y} collide")
    return a, b, c


def _inv_cube(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v) ** 3


def f_ijk(pc: PairConfiguration, i: int, j: int, k: int, G: float, M: float) -> np.ndarray:
    """Triplet force term ``G M (q_ij/q_ij^3 + q_jk/q_jk^3 + q_ki/q_ki^3)``."""
    a, b, c = _check_three(pc, i, j, k)
    return G * M * (_inv_cube(a) + _inv_cube(b) + _inv_cube(c))


def j_over_mu(mv: MassVector, pc: PairConfiguration, i: int, j: int, G: float = 1.0) -> np.ndarray:
    """Constraint-force sum J_ij / mu_ij = sum_k (m_k / M) F_ijk."""
    out = np.zeros(3)
    for k in range(pc.n):
        if k != i and k != j:
            out += mv.masses[k] / mv.total * f_ijk(pc, i, j, k, G, mv.total)
    return out


def pair_acceleration(mv: MassVector, pc: PairConfiguration, i: int, j: int, G: float = 1.0) -> np.ndarray:
    q = pc[i, j]
    r = np.linalg.norm(q)
    if r <= COLLISION_RTOL * pc.diameter():
        raise CollisionError(f"bodies {i} and {j} collide")
    return -G * mv.total * q / r**3 + j_over_mu(mv, pc, i, j, G)


def pair_accelerations(mv: MassVector, pc: PairConfiguration, G: float = 1.0) -> np.ndarray:
    """q''_ij for every i < j, same row order as ``pc.vectors``.

    Vectorised form of :func:`pair_acceleration`; the triplet sums are
    evaluated over the full antisymmetric array.
    """
    pc.check_collisions()
    q = pc.full()
    r = np.linalg.norm(q, axis=-1)
    np.fill_diagonal(r, np.inf)
    u = q / r[..., None] ** 3  # u[a, b] = q_ab / q_ab^3, zero on the diagonal
    M = mv.total
    i, j = np.triu_indices(pc.n, k=1)
    # sum_k m_k (u_ij + u_jk + u_ki) over k != i, j
    m = mv.masses
    w = np.sum(m) - m[i] - m[j]
    coupled = (w[:, None] * u[i, j]
               + np.einsum("k,pkc->pc", m, u[j]) - m[i][:, None] * u[j, i]
               + np.einsum("k,pkc->pc", m, -u[i]) + m[j][:, None] * u[i, j])
    return -G * M * u[i, j] + G * coupled


def particle_accelerations(mv: MassVector, positions, G: float = 1.0) -> np.ndarray:
    r = np.asarray(positions, dtype=float)
    d = r[None, :, :] - r[:, None, :]  # d[i, j] = r_j - r_i
    dist = np.linalg.norm(d, axis=-1)
    np.fill_diagonal(dist, np.inf)
    if dist.min() <= COLLISION_RTOL * dist[np.isfinite(dist)].max():
        raise CollisionError("bodies collide")
    return G * np.einsum("j,ijc->ic", mv.masses, d / dist[..., None] ** 3)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # (T, N, 3)
    velocities: np.ndarray  # (T, N, 3)
    method: Method
    step: float
    G: float = 1.0
    collided: bool = False
    message: str = ""

    def __len__(self) -> int:
        return self.times.size

    @property
    def states(self) -> list[SystemState]:
        return [SystemState(p, v, self.G) for p, v in zip(self.positions, self.velocities)]

    def state(self, k: int) -> SystemState:
        return SystemState(self.positions[k], self.velocities[k], self.G)

    def write_csv(self, path) -> None:
        n = self.positions.shape[1]
        header = ["t"]
        for b in range(n):
            header += [f"{c}{b}" for c in ("x", "y", "z", "vx", "vy", "vz")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, p, v in zip(self.times, self.positions, self.velocities):
                row = [repr(float(t))]
                for b in range(n):
                    row += [repr(float(x)) for x in (*p[b], *v[b])]
                w.writerow(row)


def _rk4_step(mv: MassVector, G: float, r: np.ndarray, v: np.ndarray, dt: float):
    def acc(x):
        return particle_accelerations(mv, x, G)

    k1r, k1v = v, acc(r)
    k2r, k2v = v + 0.5 * dt * k1v, acc(r + 0.5 * dt * k1r)
    k3r, k3v = v + 0.5 * dt * k2v, acc(r + 0.5 * dt * k2r)
    k4r, k4v = v + dt * k3v, acc(r + dt * k3r)
    r_new = r + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return r_new, v_new


def _min_separation(r: np.ndarray) -> float:
    i, j = np.triu_indices(r.shape[0], k=1)
    return float(np.linalg.norm(r[i] - r[j], axis=1).min())


def integrate(mv: MassVector, state: SystemState, dt: float, steps: int,
              method: Method | str = Method.RK4, rtol: float = 1e-10,
              collision_radius: float | None = None) -> Trajectory:
    """Integrate the particle equations for ``steps * dt`` time units.

    RK4 returns every step. The adaptive method compares one step against two
    half steps, halves on failure, and records every accepted step.

    A collision is flagged, and the trajectory truncated, when the smallest
    separation drops below ``collision_radius`` (default ``1e-10`` times the
    initial diameter) or when the free-fall time at that separation is
    shorter than the current step, i.e. the encounter is no longer resolved.
    """
    method = Method(method)
    G = state.G
    state.check_collisions()
    if dt <= 0 or steps < 1:
        raise ValueError("dt must be positive and steps >= 1")
    if collision_radius is None:
        collision_radius = COLLISION_RTOL * state.diameter()

    r, v = state.positions.copy(), state.velocities.copy()
    times, rs, vs = [0.0], [r], [v]
    t_end = dt * steps
    t, h = 0.0, dt
    collided, message = False, ""

    def unresolved(x, step):
        s = _min_separation(x)
        return s <= collision_radius or math.sqrt(s**3 / (G * mv.total)) < step

    k = 0
    while k < steps if method is Method.RK4 else t < t_end * (1 - 1e-15):
        try:
            if method is Method.RK4:
                r_new, v_new = _rk4_step(mv, G, r, v, dt)
                t_new = (k + 1) * dt
                step_used = dt
            else:
                h = min(h, t_end - t)
                while True:
                    r1, v1 = _rk4_step(mv, G, r, v, h)
                    rh, vh = _rk4_step(mv, G, r, v, 0.5 * h)
                    r2, v2 = _rk4_step(mv, G, rh, vh, 0.5 * h)
                    scale = max(np.abs(r2).max(), 1e-300)
                    vscale = max(np.abs(v2).max(), 1e-300)
                    err = max(np.abs(r2 - r1).max() / scale, np.abs(v2 - v1).max() / vscale)
                    if err <= rtol or h < 1e-12 * dt:
                        break
                    h *= 0.5
                r_new, v_new, t_new, step_used = r2, v2, t + h, h
                if err < rtol / 32:
                    h *= 2.0
        except CollisionError as exc:
            collided, message = True, str(exc)
            break
        if not (np.all(np.isfinite(r_new)) and np.all(np.isfinite(v_new))):
            collided, message = True, "non-finite state"
            break
        if unresolved(r_new, step_used):
            collided, message = True, f"close encounter at t={t_new:.6g}"
            break
        r, v, t = r_new, v_new, t_new
        times.append(t)
        rs.append(r)
        vs.append(v)
        k += 1

    return Trajectory(np.array(times), np.array(rs), np.array(vs), method, dt, G, collided, message)


@dataclass(frozen=True)
class ConservationReport:
    pair_L_drift: dict[tuple[int, int], float]
    total_L_drift: float
    energy_drift: float
    samples: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def max_pair_L_drift(self) -> float:
        return max(self.pair_L_drift.values())

    def to_dict(self) -> dict:
        return {
            "pair_L_drift": {f"{i},{j}": d for (i, j), d in sorted(self.pair_L_drift.items())},
            "max_pair_L_drift": self.max_pair_L_drift,
            "total_L_drift": self.total_L_drift,
            "energy_drift": self.energy_drift,
            "samples": self.samples,
        }


def conservation_report(mv: MassVector, traj: Trajectory, G: float | None = None,
                        floor: float = 1e-3) -> ConservationReport:
    """Maximum relative drifts of each pair L, total L, and total pair energy.

    Each drift is ``max_t |X(t) - X(0)| / max(|X(0)|, floor * scale)`` where
    ``scale`` is the sum of ``mu_ij |q_ij| |q'_ij|`` at t=0 for angular
    momenta, and the summed magnitudes of kinetic and potential pair energy
    for the energy.
    """
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two samples")
    G = traj.G if G is None else G
    i, j = np.triu_indices(mv.n, k=1)
    q = traj.positions[:, i] - traj.positions[:, j]  # (T, P, 3)
    qd = traj.velocities[:, i] - traj.velocities[:, j]
    mu = mv.masses[i] * mv.masses[j] / mv.total
    L = mu[None, :, None] * np.cross(q, qd)
    qn = np.linalg.norm(q, axis=-1)
    vn = np.linalg.norm(qd, axis=-1)
    kin = 0.5 * mu * vn**2
    pot = G * mv.total * mu / qn
    E = np.sum(kin - pot, axis=1)

    l_scale = max(float(np.sum(mu * qn[0] * vn[0])), 1e-300)
    e_scale = float(np.sum(kin[0]) + np.sum(pot[0]))

    pair_drift = {}
    for p, (a, b) in enumerate(combinations(range(mv.n), 2)):
        ref = max(np.linalg.norm(L[0, p]), floor * l_scale)
        pair_drift[(a, b)] = float(np.linalg.norm(L[:, p] - L[0, p], axis=1).max() / ref)
    Ltot = L.sum(axis=1)
    total_drift = float(np.linalg.norm(Ltot - Ltot[0], axis=1).max()
                        / max(np.linalg.norm(Ltot[0]), floor * l_scale))
    energy_drift = float(np.abs(E - E[0]).max() / max(abs(E[0]), floor * e_scale))
    return ConservationReport(pair_drift, total_drift, energy_drift, len(traj))


def rotating_velocities(positions, omega: float, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Rigid-rotation velocities ``omega * axis x r`` about the origin."""
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    return omega * np.cross(ax, np.asarray(positions, dtype=float))
