"""Independent Strang-split solver and the mild-formulation residual.

Both work on the same frequency lattice as the Picard pipeline, so
trajectories can be compared node by node without resampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .picard import PicardTerm
from .spectral import Convolver, FrequencyGrid, SpectralField

BLOWUP_FACTOR = 1e6


class SolverBlowUp(RuntimeError):
    pass


@dataclass
class Trajectory:
    grid: FrequencyGrid
    times: np.ndarray
    u: np.ndarray  # (nodes, *grid.shape)
    n: np.ndarray

    def at(self, k: int) -> tuple[SpectralField, SpectralField]:
        t = float(self.times[k])
        return SpectralField(self.grid, self.u[k], t), SpectralField(self.grid, self.n[k], t)

    def final(self) -> tuple[SpectralField, SpectralField]:
        return self.at(len(self.times) - 1)

    @classmethod
    def from_terms(cls, terms: Sequence[PicardTerm]) -> "Trajectory":
        """Partial sums of a Picard run at every stored node."""
        grid, times = terms[0].grid, terms[0].times
        return cls(grid, times, sum(t.schrodinger for t in terms), sum(t.wave for t in terms))


def _l2(grid: FrequencyGrid, a: np.ndarray) -> float:
    return math.sqrt(grid.cell * float(np.sum(np.abs(a) ** 2)))


def _rev_conj(a: np.ndarray) -> np.ndarray:
    return np.conj(a[(slice(None, None, -1),) * a.ndim])


class _Nonlinearity:
    """Right-hand sides ``-i (u * Re n)`` and ``-i |xi| (u * conj-mirror u)`` on the lattice."""

    def __init__(self, grid: FrequencyGrid):
        self.grid = grid
        self.conv = Convolver(grid)
        self.absxi = grid.abs_xi()

    def __call__(self, u: np.ndarray, n: np.ndarray):
        c = self.conv
        if not np.any(u):
            return np.zeros_like(u), np.zeros_like(n)
        su = c.spectrum(u)
        re_n = 0.5 * (n + _rev_conj(n))
        du = -1j * c.invert(su * c.spectrum(re_n))[0] if np.any(re_n) else np.zeros_like(u)
        dn = -1j * self.absxi * c.invert(su * c.spectrum(_rev_conj(u)))[0]
        return du, dn


def step_solver(u0: SpectralField, n0: SpectralField, T: float, dt: float,
                nonlinear: bool = True, store_every: int = 1) -> Trajectory:
    """Strang splitting: half free step, explicit-midpoint nonlinear step, half free step."""
    if u0.grid != n0.grid:
        raise ValueError("data on different grids")
    if T <= 0:
        raise ValueError("T must be positive")
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * T:
        raise ValueError("dt must divide T")
    if steps < 16:
        raise ValueError("dt must be at most T/16")
    if steps % store_every:
        raise ValueError("store_every must divide the number of steps")
    grid = u0.grid
    absxi = grid.abs_xi()
    half1 = np.exp(-0.5j * dt * absxi**2)
    half2 = np.exp(-0.5j * dt * absxi)
    rhs = _Nonlinearity(grid) if nonlinear else None
    u, n = u0.values.astype(complex).copy(), n0.values.astype(complex).copy()
    ref = max(_l2(grid, u) + _l2(grid, n), 1e-300)
    times, us, ns = [0.0], [u.copy()], [n.copy()]
    for k in range(1, steps + 1):
        u *= half1
        n *= half2
        if rhs is not None:
            du, dn = rhs(u, n)
            du, dn = rhs(u + 0.5 * dt * du, n + 0.5 * dt * dn)
            u = u + dt * du
            n = n + dt * dn
        u *= half1
        n *= half2
        size = _l2(grid, u) + _l2(grid, n)
        if not math.isfinite(size) or size > BLOWUP_FACTOR * ref:
            raise SolverBlowUp(f"norm grew from {ref:.3e} to {size:.3e} by t={k * dt:.3e}")
        if k % store_every == 0:
            times.append(k * dt)
            us.append(u.copy())
            ns.append(n.copy())
    return Trajectory(grid, np.asarray(times), np.asarray(us), np.asarray(ns))


def phi_residual(u0: SpectralField, n0: SpectralField, traj: Trajectory,
                 nonlinear: bool = True) -> float:
    """``max_k ||Phi(traj)(t_k) - traj(t_k)|| / ||traj(t_k)||`` with trapezoid Duhamel sums."""
    grid, times = traj.grid, traj.times
    absxi = grid.abs_xi()
    w1, w2 = absxi**2, absxi
    rhs = _Nonlinearity(grid) if nonlinear else None
    P1, P2 = grid.zeros(), grid.zeros()
    prev = None
    worst = 0.0
    for k, t in enumerate(times):
        if rhs is not None:
            du, dn = rhs(traj.u[k], traj.n[k])
            cur = (np.exp(1j * t * w1) * du, np.exp(1j * t * w2) * dn)
            if prev is not None:
                h = t - times[k - 1]
                P1 = P1 + 0.5 * h * (prev[0] + cur[0])
                P2 = P2 + 0.5 * h * (prev[1] + cur[1])
            prev = cur
        phi_u = np.exp(-1j * t * w1) * (u0.values + P1)
        phi_n = np.exp(-1j * t * w2) * (n0.values + P2)
        num = math.hypot(_l2(grid, phi_u - traj.u[k]), _l2(grid, phi_n - traj.n[k]))
        den = math.hypot(_l2(grid, traj.u[k]), _l2(grid, traj.n[k]))
        if den > 0:
            worst = max(worst, num / den)
    return worst


def relative_distance(a: Trajectory, b: Trajectory, k_a: int = -1, k_b: int = -1) -> float:
    """Combined ``L^2`` distance of ``(u, n)`` at one node, relative to ``b``."""
    grid = a.grid
    du = _l2(grid, a.u[k_a] - b.u[k_b])
    dn = _l2(grid, a.n[k_a] - b.n[k_b])
    den = math.hypot(_l2(grid, b.u[k_b]), _l2(grid, b.n[k_b]))
    return math.hypot(du, dn) / den


def convergence_order(u0: SpectralField, n0: SpectralField, T: float,
                      divisions: Sequence[int] = (64, 128, 256)) -> dict:
    """Self-convergence order from successive differences on a dt ladder."""
    if len(divisions) != 3:
        raise ValueError("need three step counts")
    ends = [step_solver(u0, n0, T, T / m, store_every=m) for m in divisions]
    e1 = relative_distance(ends[0], ends[1])
    e2 = relative_distance(ends[1], ends[2])
    order = math.log2(e1 / e2) if e1 > 0 and e2 > 0 else math.nan
    return {"order": order, "differences": (e1, e2), "finest": ends[-1]}
