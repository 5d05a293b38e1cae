"""Standard configurations and states used by the tests and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .central import centrality_residual, fit_lambda
from .collinear import line_positions, solve_moulton
from .core import MassVector, PairConfiguration, SystemState
from .dynamics import rotating_velocities


def equilateral(side: float = 1.0) -> np.ndarray:
    h = side * math.sqrt(3.0) / 2.0
    return np.array([[0.0, 0.0, 0.0], [side, 0.0, 0.0], [side / 2.0, h, 0.0]])


def tetrahedron(edge: float = 1.0) -> np.ndarray:
    s = edge / (2.0 * math.sqrt(2.0))
    return s * np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])


def square(side: float = 1.0) -> np.ndarray:
    """Vertices in cyclic order around the square."""
    return side * np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]])


def centred_triangle() -> np.ndarray:
    """Unit equilateral triangle plus a body at its centroid (index 3)."""
    tri = equilateral()
    return np.vstack([tri, tri.mean(axis=0)])


def rhombus(y: float) -> np.ndarray:
    """Rhombus with vertices (+-1, 0) and (0, +-y), cyclic order."""
    return np.array([[1.0, 0.0, 0.0], [0.0, y, 0.0], [-1.0, 0.0, 0.0], [0.0, -y, 0.0]])


def rhombus_masses(y: float) -> MassVector:
    """Masses (1, m, 1, m) making ``rhombus(y)`` central.

    The residual is affine in m, so two evaluations fix it; a ValueError is
    raised if the fitted m is not positive or leaves a residual.
    """
    pc = PairConfiguration.from_positions(rhombus(y))

    def stacked(m):
        rep = centrality_residual(MassVector([1.0, m, 1.0, m]), pc)
        return np.concatenate([v for _, v in sorted(rep.residuals.items())])

    r0 = stacked(1.0)
    r1 = stacked(2.0) - r0
    m = 1.0 - float(r0 @ r1) / float(r1 @ r1)
    if not m > 0:
        raise ValueError(f"no positive mass makes rhombus(y={y}) central")
    mv = MassVector([1.0, m, 1.0, m])
    if centrality_residual(mv, pc).max_residual > 1e-10:
        raise ValueError(f"rhombus(y={y}) is not central for any (1, m, 1, m)")
    return mv


def rotate(points, seed: int) -> np.ndarray:
    """Apply a seeded random proper rotation."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return np.asarray(points, dtype=float) @ q.T


def rigid_rotation_state(mv: MassVector, positions, G: float = 1.0,
                         axis=(0.0, 0.0, 1.0)) -> tuple[SystemState, float]:
    """Circular relative-equilibrium state for a central configuration.

    Returns the barycentric state and its angular speed ``sqrt(lambda)``.
    """
    rest = SystemState.create(mv, positions, None, G)
    lam, _ = fit_lambda(mv, PairConfiguration.from_positions(rest.positions), G)
    omega = math.sqrt(lam)
    state = SystemState(rest.positions, rotating_velocities(rest.positions, omega, axis), G)
    return state, omega


def lagrange_state(masses=(1.0, 1.0, 1.0), side: float = 1.0, G: float = 1.0):
    mv = MassVector(masses)
    state, omega = rigid_rotation_state(mv, equilateral(side), G)
    return mv, state, omega


def euler_state(masses=(1.0, 2.0, 3.0), q12: float = 1.0, G: float = 1.0):
    mv = MassVector(masses)
    sol = solve_moulton(mv)
    state, omega = rigid_rotation_state(mv, line_positions(sol, q12), G)
    return mv, state, omega


def hierarchical_triple(rng: np.random.Generator, G: float = 1.0):
    """Randomised generic triple: eccentric inner binary plus an inclined outer body.

    Masses in [0.5, 2], inner separation 1 at apocentre with eccentricity in
    [0, 0.3], outer distance in [3, 5] at roughly circular speed.
    """
    m = rng.uniform(0.5, 2.0, 3)
    e = rng.uniform(0.0, 0.3)
    D = rng.uniform(3.0, 5.0)
    m12 = m[0] + m[1]
    v_apo = math.sqrt(G * m12 * (1.0 - e))
    pos = np.zeros((3, 3))
    vel = np.zeros((3, 3))
    pos[0, 0], pos[1, 0] = m[1] / m12, -m[0] / m12
    vel[0, 1], vel[1, 1] = m[1] / m12 * v_apo, -m[0] / m12 * v_apo
    inc = rng.uniform(0.0, math.pi / 2)
    phi = rng.uniform(0.0, 2 * math.pi)
    radial = np.array([math.cos(phi), math.sin(phi), 0.0])
    tangent = np.cross([0.0, -math.sin(inc), math.cos(inc)], radial)
    tangent /= np.linalg.norm(tangent)
    pos[2] = D * radial
    vel[2] = math.sqrt(G * m.sum() / D) * rng.uniform(0.9, 1.1) * tangent
    mv = MassVector(m)
    return mv, SystemState.create(mv, pos, vel, G)


def rotation_period(mv: MassVector, state: SystemState) -> float:
    """2 pi / sqrt(lambda) from the instantaneous lambda fit."""
    lam, _ = fit_lambda(mv, PairConfiguration.from_positions(state.positions), state.G)
    if not lam > 0:
        raise ValueError("fitted lambda is not positive")
    return 2.0 * math.pi / math.sqrt(lam)


def encounter_period(mv: MassVector, state: SystemState) -> float:
    """2 pi sqrt(r_min^3 / (G M)); equals the rotation period of an equilateral triangle."""
    pc = PairConfiguration.from_positions(state.positions)
    rmin = float(np.linalg.norm(pc.vectors, axis=1).min())
    return 2.0 * math.pi * math.sqrt(rmin**3 / (state.G * mv.total))
