"""Collinear (Moulton) configurations in normalized line coordinates.

Bodies are numbered by line slot: slot 0 sits at x=0, slot 1 at x=1, and
slots 2..N-1 at increasing x. With ``q_ij = r_i - r_j`` the ratio of a pair
vector to the reference pair (0, 1) is

    a[i, j] = q_ij / q_01 = x[j] - x[i],

so ``a[0, 1] = 1``, ``a[1, 2] = alpha`` and ``a[1, N-1] = beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Callable, Sequence

import numpy as np

from .core import CollisionError, MassVector


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


class BoundQuantity(str, Enum):
    ALPHA_3BODY = "ALPHA_3BODY"
    LENGTH_RATIO = "LENGTH_RATIO"
    ALPHA_NBODY = "ALPHA_NBODY"


class EMode(str, Enum):
    BETA = "BETA"
    ALPHA = "ALPHA"


@dataclass(frozen=True)
class BoundBracket:
    case_id: int
    quantity: BoundQuantity
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError(f"empty bracket [{self.lower}, {self.upper}]")

    def slack(self, value: float) -> float:
        """Smallest signed distance from ``value`` to the bracket ends (negative outside)."""
        s = math.inf
        if self.lower is not None:
            s = min(s, value - self.lower)
        if self.upper is not None:
            s = min(s, self.upper - value)
        return s

    def to_dict(self) -> dict:
        return {"case": self.case_id, "quantity": self.quantity.value,
                "lower": self.lower, "upper": self.upper}


def _coords(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two line coordinates")
    if np.any(np.diff(x) <= 0):
        raise CollisionError("line coordinates must be strictly increasing")
    return x


def a_coefficients(x) -> np.ndarray:
    """Antisymmetric matrix ``a[i, j] = x[j] - x[i]`` of ratios to q_01."""
    x = _coords(x)
    return x[None, :] - x[:, None]


def h_coefficient(a: np.ndarray, i: int, j: int, k: int) -> float:
    """Signed inverse-square combination over the cycle (i, j, k)."""
    if len({i, j, k}) != 3:
        raise ValueError("indices must be distinct")
    terms = (a[i, j], a[j, k], a[k, i])
    if any(t == 0 for t in terms):
        raise CollisionError("zero ratio coefficient")
    return float(sum(t / abs(t) ** 3 for t in terms))


def _h_table(a: np.ndarray) -> np.ndarray:
    """h[i, j, k] for all index triples; zero where indices repeat."""
    n = a.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(a != 0, a / np.abs(a) ** 3, 0.0)
    h = g[:, :, None] + g[None, :, :] + g.T[:, None, :]
    i, j, k = np.indices((n, n, n))
    h[(i == j) | (j == k) | (i == k)] = 0.0
    return h


def _residual_parts(masses: np.ndarray, x: np.ndarray):
    a = a_coefficients(x)
    h = _h_table(a)
    M = float(np.sum(masses))
    n = masses.size
    # bracket [M - sum_k m_k h_01k] is the q_01 equation-of-motion factor
    ref = M - float(np.dot(masses[2:], h[0, 1, 2:]))
    return a, h, M, ref, n


def collinear_residuals(mv: MassVector | Sequence[float], x) -> np.ndarray:
    """Ratio-equation residuals for every pair i < j except (0, 1).

    Each entry is ``a_ij [M - sum_k m_k h_01k] - M / a_ij^2 + sum_s m_s h_ijs``
    with masses listed in line order. All vanish on a Moulton configuration.
    """
    masses = np.asarray(mv.masses if isinstance(mv, MassVector) else mv, dtype=float)
    x = _coords(x)
    if x.size != masses.size:
        raise ValueError("one coordinate per mass required")
    a, h, M, ref, n = _residual_parts(masses, x)
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) == (0, 1):
                continue
            s = float(np.dot(masses, h[i, j, :]))
            out.append(a[i, j] * ref - M / a[i, j] ** 2 + s)
    return np.array(out)


def _square_residuals(masses: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Equations for pairs (0, k), k >= 2; together with (0, 1) they fix every pair."""
    a, h, M, ref, n = _residual_parts(masses, x)
    out = np.empty(n - 2)
    for k in range(2, n):
        out[k - 2] = a[0, k] * ref - M / a[0, k] ** 2 + float(np.dot(masses, h[0, k, :]))
    return out


def _jacobian(masses: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = x.size
    J = np.empty((n - 2, n - 2))
    for c in range(2, n):
        step = 1e-6 * (x[c] - x[c - 1])
        xp, xm = x.copy(), x.copy()
        xp[c] += step
        xm[c] -= step
        J[:, c - 2] = (_square_residuals(masses, xp) - _square_residuals(masses, xm)) / (2 * step)
    return J


@dataclass(frozen=True)
class CollinearSolution:
    ordering: tuple[int, ...]
    masses: np.ndarray  # in line order
    x: np.ndarray
    residual_norm: float
    iterations: int = 0
    brackets: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return self.x[2:]

    @property
    def alpha(self) -> float:
        return float(self.x[2] - 1.0)

    @property
    def beta(self) -> float:
        return float(self.x[-1] - 1.0)

    @property
    def length_ratio(self) -> float:
        return float(self.x[-1])

    def a(self) -> np.ndarray:
        return a_coefficients(self.x)

    def to_dict(self) -> dict:
        return {
            "ordering": list(self.ordering),
            "masses": self.masses.tolist(),
            "x": self.x.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "length_ratio": self.length_ratio,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
        }


def _newton(masses: np.ndarray, x0: np.ndarray, tol: float, max_iter: int):
    x = x0.copy()
    f = _square_residuals(masses, x)
    fn = float(np.max(np.abs(f)))
    for it in range(1, max_iter + 1):
        if fn < tol:
            return x, fn, it - 1
        J = _jacobian(masses, x)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        full = np.zeros_like(x)
        full[2:] = dx
        # keep every gap at least half its current size
        gaps, dgaps = np.diff(x), np.diff(full)
        shrink = dgaps < 0
        t = 1.0
        if np.any(shrink):
            t = min(1.0, float(np.min(0.5 * gaps[shrink] / -dgaps[shrink])))
        while True:
            xn = x + t * full
            fnew = _square_residuals(masses, xn)
            fnn = float(np.max(np.abs(fnew)))
            if fnn < fn or t < 1e-6:
                break
            t *= 0.5
        x, f, fn = xn, fnew, fnn
    if fn < tol:
        return x, fn, max_iter
    raise ConvergenceError(f"Newton stalled at residual {fn:.3e}", last=x)


def solve_line(masses: Sequence[float], x0=None, tol: float = 1e-12, max_iter: int = 100):
    """Moulton coordinates for masses already listed in line order.

    Newton from ``x0`` (equal spacing by default); if that stalls, continue
    from equal masses toward the target masses, warm-starting each stage.
    Returns ``(x, residual_max, iterations)``.
    """
    m = np.asarray(masses, dtype=float)
    n = m.size
    if n < 3:
        raise ValueError("need at least three bodies")
    x0 = np.arange(n, dtype=float) if x0 is None else _coords(x0).copy()
    try:
        return _newton(m, x0, tol, max_iter)
    except ConvergenceError:
        pass
    base = np.full(n, m.mean())
    x = np.arange(n, dtype=float)
    total = 0
    stages = 64
    for s in range(1, stages + 1):
        w = s / stages
        mid = np.exp((1 - w) * np.log(base) + w * np.log(m))
        x, fn, it = _newton(mid, x, tol if s == stages else 1e-10, max_iter)
        total += it
    return x, fn, total


def solve_moulton(mv: MassVector, ordering: Sequence[int] | None = None, tol: float = 1e-12,
                  max_iter: int = 100, x0=None) -> CollinearSolution:
    """Unique collinear central configuration for ``ordering`` of the bodies.

    ``ordering[s]`` is the body placed in line slot ``s``.
    """
    if ordering is None:
        ordering = tuple(range(mv.n))
    ordering = tuple(int(o) for o in ordering)
    if sorted(ordering) != list(range(mv.n)):
        raise ValueError(f"ordering must be a permutation of 0..{mv.n - 1}")
    masses = mv.masses[list(ordering)]
    x, _, iters = solve_line(masses, x0, tol, max_iter)
    x = x.copy()
    x.setflags(write=False)
    res = collinear_residuals(masses, x)
    return CollinearSolution(ordering, masses, x, float(np.max(np.abs(res))), iters)


def solve_all_orderings(mv: MassVector, max_n: int = 7) -> list[CollinearSolution]:
    """One solution per ordering up to reversal (N!/2 of them)."""
    if mv.n > max_n:
        raise ValueError(f"refusing to enumerate orderings for N={mv.n} > {max_n}")
    out = []
    for p in permutations(range(mv.n)):
        if p[0] < p[-1]:
            out.append(solve_moulton(mv, p))
    return out


def line_positions(sol: CollinearSolution, q01: float = 1.0, direction=(1.0, 0.0, 0.0)) -> np.ndarray:
    """3-D positions of the line slots, barycentric, body order as in ``sol.ordering``.

    Row ``b`` is the position of body ``b`` (not slot ``b``).
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    slots = sol.x * q01
    com = float(np.dot(sol.masses, slots) / np.sum(sol.masses))
    pos = np.empty((len(sol.ordering), 3))
    for s, body in enumerate(sol.ordering):
        pos[body] = (slots[s] - com) * d
    return pos


# three-body function and its effective-mass variants

def _h_line(x: float) -> float:
    return 1.0 + 1.0 / x**2 - 1.0 / (1.0 + x) ** 2


def euler_E(x: float, m1: float, m2: float, m3: float) -> float:
    """``M (x - 1/x^2) + (m1 - m3 x)(1 + 1/x^2 - 1/(1+x)^2)``; root is q23/q12."""
    if not x > 0:
        raise ValueError("E is defined for x > 0 only")
    M = m1 + m2 + m3
    return M * (x - 1.0 / x**2) + (m1 - m3 * x) * _h_line(x)


def effective_E(x: float, mv: MassVector | Sequence[float], mode: EMode | str = EMode.BETA) -> float:
    """Three-body E with the outer masses merged: m3* = M - m1 - m2.

    The formula is the same for both modes. BETA is read as ``E*(beta) >= 0``
    and ALPHA as ``E*(alpha) <= 0`` on a solved line.
    """
    EMode(mode)
    m = np.asarray(mv.masses if isinstance(mv, MassVector) else mv, dtype=float)
    return euler_E(x, float(m[0]), float(m[1]), float(np.sum(m) - m[0] - m[1]))


def euler_quintic(m1: float, m2: float, m3: float) -> np.ndarray:
    """Coefficients (highest first) of ``E(x) x^2 (1+x)^2``."""
    P = np.polynomial.polynomial
    M = m1 + m2 + m3
    x = [0.0, 1.0]
    one_px_sq = [1.0, 2.0, 1.0]
    x_sq = [0.0, 0.0, 1.0]
    part1 = M * P.polymul(P.polysub([0, 0, 0, 1.0], [1.0]), one_px_sq)
    bracket = P.polysub(P.polyadd(P.polymul(x_sq, one_px_sq), one_px_sq), x_sq)
    part2 = P.polymul(P.polysub([m1], P.polymul([m3], x)), bracket)
    return P.polyadd(part1, part2)[::-1]


def find_root_monotone(f: Callable[[float], float], lo: float = 1e-6, hi: float = 1.0,
                       tol: float = 1e-14, max_expand: int = 200, max_iter: int = 400) -> float:
    """Bisection root of an increasing function on (0, inf).

    The bracket grows geometrically (``hi`` doubles, ``lo`` halves) until the
    sign changes, then bisects to relative width ``tol``.
    """
    flo, fhi = f(lo), f(hi)
    for _ in range(max_expand):
        if flo <= 0 <= fhi:
            break
        if fhi < 0:
            lo, flo = hi, fhi
            hi *= 2.0
            fhi = f(hi)
        else:
            hi, fhi = lo, flo
            lo *= 0.5
            flo = f(lo)
    else:
        raise ConvergenceError("no sign change found while expanding the bracket")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol * mid:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def euler_root(m1: float, m2: float, m3: float) -> float:
    return find_root_monotone(lambda x: euler_E(x, m1, m2, m3))


def effective_root(mv: MassVector | Sequence[float]) -> float:
    """Root of the effective-mass E: both beta* and alpha*."""
    return find_root_monotone(lambda x: effective_E(x, mv))


def sigma_root(c: float) -> float:
    """Positive root of ``c s^2 (1+s)^2 - 1 - 2 s = 0``."""
    if not c > 0:
        raise ValueError("mass ratio must be positive")
    return find_root_monotone(lambda s: c * s**2 * (1 + s) ** 2 / (1 + 2 * s) - 1.0)


def tau_root(c: float) -> float:
    """Positive root of ``t^4 + 2 t^3 - c (1+t)^2 = 0``."""
    if not c > 0:
        raise ValueError("mass ratio must be positive")
    return find_root_monotone(lambda t: t**3 * (t + 2) / (1 + t) ** 2 - c)


def quartic_bound_roots(masses: Sequence[float], k: int) -> tuple[float, float]:
    """(sigma_k, tau_k) for ratio ``(m_i + m_j) / m_k``, i and j the other two slots."""
    m = [float(v) for v in (masses.masses if isinstance(masses, MassVector) else masses)]
    if len(m) != 3 or min(m) <= 0:
        raise ValueError("need three positive masses")
    c = (sum(m) - m[k]) / m[k]
    return sigma_root(c), tau_root(c)


def three_body_bracket(masses: Sequence[float]) -> BoundBracket:
    """Bracket on alpha = q23/q12 for masses in line order (first matching case)."""
    m1, m2, m3 = (float(v) for v in (masses.masses if isinstance(masses, MassVector) else masses))
    root = math.sqrt(m3 / m1)
    q = BoundQuantity.ALPHA_3BODY
    if m1 > 4.0 / 3.0 * (m3 + m2):
        return BoundBracket(1, q, root, quartic_bound_roots((m1, m2, m3), 0)[1])
    if m1 >= m3:
        return BoundBracket(2, q, root, 1.0)
    if 4.0 / 3.0 * (m1 + m2) >= m3:
        return BoundBracket(3, q, 1.0, root)
    return BoundBracket(4, q, quartic_bound_roots((m1, m2, m3), 2)[0], root)


def length_bound(mv: MassVector | Sequence[float]) -> BoundBracket:
    """Lower bound on L/q12 = 1 + beta for masses in line order."""
    m = np.asarray(mv.masses if isinstance(mv, MassVector) else mv, dtype=float)
    m1, m2 = float(m[0]), float(m[1])
    M = float(np.sum(m))
    m3s = M - m1 - m2
    q = BoundQuantity.LENGTH_RATIO
    if 2 * m1 + m2 >= M:
        return BoundBracket(1, q, lower=1.0 + math.sqrt(m3s / m1))
    if 7.0 / 3.0 * (m1 + m2) >= M:
        return BoundBracket(2, q, lower=2.0)
    return BoundBracket(3, q, lower=1.0 + sigma_root((m1 + m2) / m3s))


def alpha_bound(mv: MassVector | Sequence[float]) -> BoundBracket:
    """Upper bound on alpha = q23/q12 for masses in line order."""
    m = np.asarray(mv.masses if isinstance(mv, MassVector) else mv, dtype=float)
    m1, m2 = float(m[0]), float(m[1])
    M = float(np.sum(m))
    m3s = M - m1 - m2
    q = BoundQuantity.ALPHA_NBODY
    if 7.0 / 4.0 * m1 > M:
        return BoundBracket(1, q, upper=tau_root((m2 + m3s) / m1))
    if 2 * m1 + m2 >= M:
        return BoundBracket(2, q, upper=1.0)
    return BoundBracket(3, q, upper=math.sqrt(m3s / m1))


def solution_brackets(sol: CollinearSolution) -> dict[str, BoundBracket]:
    out = {"length": length_bound(sol.masses), "alpha": alpha_bound(sol.masses)}
    if sol.masses.size == 3:
        out["three_body"] = three_body_bracket(sol.masses)
    return out
