"""Picard iteration of the reduced first-order Zakharov system.

The terms obey ``A_1 = L(u0, n0)`` and ``A_n = sum_{n1+n2=n} N(A_n1, A_n2)``
with the bilinear Duhamel operator

    N^(1) = -i int_0^t e^{-i(t-s)|xi|^2} (A^(1)_n1 * Re A^(2)_n2)(s) ds
    N^(2) = -i int_0^t e^{-i(t-s)|xi|}  |xi| (A^(1)_n1 * conj-mirror A^(1)_n2)(s) ds.

Terms are marched in time together: at each node the lower orders are
available, so only the current twisted profiles ``e^{it w(xi)} A_n(t, xi)``
need to be kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
from scipy import integrate

from .initdata import InitialDataSpec, build_initial_data
from .spectral import (
    Convolver,
    Cuboid,
    FrequencyGrid,
    Region,
    SpectralField,
)

TAYLOR_CUTOFF = 1e-8


# ---------------------------------------------------------------------------
# phases and the elementary time integral
# ---------------------------------------------------------------------------

def _vec(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., None] if x.ndim == 0 else x


def _norm(x) -> np.ndarray:
    return np.sqrt(np.sum(_vec(x) ** 2, axis=-1))


def schrodinger_phase(xi, eta, sign: int):
    """``|xi|^2 - |eta|^2 + sign * |xi - eta|``."""
    xi, eta = _vec(xi), _vec(eta)
    return _norm(xi) ** 2 - _norm(eta) ** 2 + np.sign(sign) * _norm(xi - eta)


def wave_phase(xi, eta):
    """``|xi| - |eta|^2 + |eta - xi|^2``."""
    xi, eta = _vec(xi), _vec(eta)
    return _norm(xi) - _norm(eta) ** 2 + _norm(eta - xi) ** 2


def oscillatory_time_integral(phi, T: float):
    """``int_0^T e^{i s phi} ds`` with the removable singularity at ``phi = 0`` patched."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    phi = np.asarray(phi, dtype=float)
    x = T * phi
    small = np.abs(x) < TAYLOR_CUTOFF
    safe = np.where(small, 1.0, phi)
    # (e^{ix} - 1) / i without cancellation: sin x + 2i sin^2(x/2)
    exact = (np.sin(x) + 2j * np.sin(0.5 * x) ** 2) / safe
    out = np.where(small, T * (1.0 + 0.5j * x), exact)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# supports
# ---------------------------------------------------------------------------

Vec = tuple[int, ...]


def _add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def _neg(a: Vec) -> Vec:
    return tuple(-x for x in a)


def _sumset(A: frozenset, B: frozenset) -> frozenset:
    return frozenset(_add(a, b) for a in A for b in B)


def _nfold(S: frozenset, k: int, d: int) -> frozenset:
    out = frozenset({(0,) * d})
    for _ in range(k):
        out = _sumset(out, S)
    return out


@lru_cache(maxsize=None)
def _sumset_sets(sig_u: tuple, sig_n: tuple, n: int, d: int):
    su = frozenset(sig_u)
    sn = frozenset(sig_n)
    pm = su | frozenset(_neg(e) for e in su)
    first, second = set(), set()
    for n1 in range(0, n + 1):
        n2 = n - n1
        waves = _nfold(sn, n2, d)
        k = _sumset(su, waves) if n1 == 1 else _sumset(_nfold(pm, n1, d), waves)
        (first if n1 % 2 else second).update(k)
    return frozenset(first), frozenset(second)


@lru_cache(maxsize=None)
def _tight_sets(sig_u: tuple, sig_n: tuple, n: int, d: int):
    if n == 1:
        return frozenset(sig_u), frozenset(sig_n)
    first, second = set(), set()
    for n1 in range(1, n):
        a1, a2 = _tight_sets(sig_u, sig_n, n1, d)
        b1, b2 = _tight_sets(sig_u, sig_n, n - n1, d)
        re_b2 = b2 | frozenset(_neg(e) for e in b2)
        first.update(_sumset(a1, re_b2))
        second.update(_sumset(a1, frozenset(_neg(e) for e in b1)))
    return frozenset(first), frozenset(second)


@dataclass(frozen=True)
class SupportFamily:
    """Translation sets of the order-``n`` supports and the dilated cuboid ``nQ``."""

    order: int
    sigma1: tuple[Vec, ...]
    sigma2: tuple[Vec, ...]
    cuboid: Cuboid

    def region(self, component: int) -> Region:
        sig = self.sigma1 if component == 1 else self.sigma2
        return Region(tuple(self.cuboid.shifted(eta) for eta in sig))

    def measure_bound(self) -> float:
        """Sum of box volumes, an upper bound for ``|Omega_n|``."""
        return max(len(self.sigma1), len(self.sigma2)) * self.cuboid.volume


def support_family(n: int, spec: InitialDataSpec, tight: bool = False) -> SupportFamily:
    """Support supersets of the order-``n`` terms.

    The default follows the sum-set construction with the parity split of the
    Schrodinger index; ``tight=True`` propagates the supports through the actual
    recursion (``Re`` symmetrizes the wave support, the wave product takes
    differences), which gives subsets of the default sets.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    fn = _tight_sets if tight else _sumset_sets
    s1, s2 = fn(tuple(spec.sigma1), tuple(spec.sigma2), n, spec.d)
    return SupportFamily(n, tuple(sorted(s1)), tuple(sorted(s2)), spec.cuboid.box(dilation=n))


# ---------------------------------------------------------------------------
# Picard terms
# ---------------------------------------------------------------------------

@dataclass
class PicardTerm:
    """Order-``n`` term; ``schrodinger``/``wave`` stack one lattice field per stored node."""

    order: int
    grid: FrequencyGrid
    times: np.ndarray
    schrodinger: np.ndarray
    wave: np.ndarray
    spill: float = 0.0
    quadrature_change: tuple[float, float] = (0.0, 0.0)

    def node(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        tol = 1e-9 * max(abs(self.times[-1]), 1e-300)
        if abs(self.times[k] - t) > tol:
            raise ValueError(f"t={t} is not a stored node")
        return k

    def field(self, component: int, t: float | None = None) -> SpectralField:
        k = len(self.times) - 1 if t is None else self.node(t)
        arr = self.schrodinger if component == 1 else self.wave
        return SpectralField(self.grid, arr[k], float(self.times[k]))

    def final(self, component: int) -> SpectralField:
        return self.field(component)


def _store_plan(store, m_time: int) -> list[int]:
    if store == "all":
        return list(range(m_time + 1))
    if store == "final":
        return [0, m_time]
    stride = int(store)
    if stride < 1 or m_time % stride:
        raise ValueError("store stride must divide M_time")
    return list(range(0, m_time + 1, stride))


def picard_terms(spec: InitialDataSpec, grid: FrequencyGrid, T: float, M_terms: int,
                 M_time: int = 128, store="all", data=None) -> list[PicardTerm]:
    """Terms ``A_1 .. A_{M_terms}`` on ``M_time`` uniform steps of ``[0, T]``.

    ``A_1`` is exact.  Higher orders are cumulative trapezoid sums of the
    twisted integrands.  A second trapezoid sum on every other node gives the
    ``quadrature_change`` diagnostic: relative change of ``A_n(T)`` when the
    step is doubled (Schrodinger, wave).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if M_time < 16 or M_time % 2:
        raise ValueError("M_time must be an even integer >= 16")
    if M_terms < 1:
        raise ValueError("M_terms must be >= 1")
    if data is None:
        data = build_initial_data(spec, grid)
    u0, n0 = data
    times = np.linspace(0.0, T, M_time + 1)
    dt = T / M_time
    keep = _store_plan(store, M_time)
    slot = {k: i for i, k in enumerate(keep)}

    absxi = grid.abs_xi()
    w1, w2 = absxi**2, absxi
    conv = Convolver(grid) if M_terms > 1 else None

    shape = (len(keep),) + grid.shape
    stacks = [(np.zeros(shape, complex), np.zeros(shape, complex)) for _ in range(M_terms)]
    # largest spilled and kept masses over the time nodes, per order
    spill = [0.0] * M_terms
    kept_max = [0.0] * M_terms

    orders = range(2, M_terms + 1)
    P = {n: [grid.zeros(), grid.zeros()] for n in orders}
    Pc = {n: [grid.zeros(), grid.zeros()] for n in orders}
    prev = {n: None for n in orders}
    prev_c = {n: None for n in orders}

    for k, t in enumerate(times):
        cur1 = [None, np.exp(-1j * t * w1) * u0.values]
        cur2 = [None, np.exp(-1j * t * w2) * n0.values]
        spec1, specR, specM = {}, {}, {}

        def spectra(m):
            if m not in spec1:
                a1, a2 = cur1[m], cur2[m]
                spec1[m] = conv.spectrum(a1) if np.any(a1) else None
                re2 = 0.5 * (a2 + np.conj(a2[(slice(None, None, -1),) * a2.ndim]))
                specR[m] = conv.spectrum(re2) if np.any(re2) else None
                mc = np.conj(a1[(slice(None, None, -1),) * a1.ndim])
                specM[m] = conv.spectrum(mc) if np.any(mc) else None
            return spec1[m], specR[m], specM[m]

        for n in orders:
            acc1 = acc2 = None
            for n1 in range(1, n):
                n2 = n - n1
                f1 = spectra(n1)[0]
                if f1 is None:
                    continue
                gR = spectra(n2)[1]
                gM = spectra(n2)[2]
                if gR is not None:
                    acc1 = f1 * gR if acc1 is None else acc1 + f1 * gR
                if gM is not None:
                    acc2 = f1 * gM if acc2 is None else acc2 + f1 * gM
            integ = []
            for acc, w, extra, c in ((acc1, w1, None, 0), (acc2, w2, absxi, 1)):
                if acc is None:
                    integ.append(None)
                    continue
                vals, sp = conv.invert(acc)
                kept = math.sqrt(grid.cell * float(np.sum(np.abs(vals) ** 2)))
                spill[n - 1] = max(spill[n - 1], sp)
                kept_max[n - 1] = max(kept_max[n - 1], kept)
                if extra is not None:
                    vals = vals * extra
                integ.append(-1j * np.exp(1j * t * w) * vals)
            if k > 0:
                for c in range(2):
                    a, b = prev[n][c], integ[c]
                    if a is not None or b is not None:
                        P[n][c] = P[n][c] + 0.5 * dt * _sum(a, b)
                if k % 2 == 0:
                    for c in range(2):
                        a, b = prev_c[n][c], integ[c]
                        if a is not None or b is not None:
                            Pc[n][c] = Pc[n][c] + dt * _sum(a, b)
            prev[n] = integ
            if k % 2 == 0:
                prev_c[n] = integ
            cur1.append(np.exp(-1j * t * w1) * P[n][0] if np.any(P[n][0]) else grid.zeros())
            cur2.append(np.exp(-1j * t * w2) * P[n][1] if np.any(P[n][1]) else grid.zeros())

        if k in slot:
            i = slot[k]
            for n in range(1, M_terms + 1):
                stacks[n - 1][0][i] = cur1[n]
                stacks[n - 1][1][i] = cur2[n]

    terms = []
    for n in range(1, M_terms + 1):
        qc = (0.0, 0.0)
        if n >= 2:
            qc = tuple(_rel_change(P[n][c], Pc[n][c]) for c in range(2))
        rel = spill[n - 1] / kept_max[n - 1] if kept_max[n - 1] > 0 else 0.0
        terms.append(PicardTerm(n, grid, times[keep], stacks[n - 1][0], stacks[n - 1][1], rel, qc))
    return terms


def _sum(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _rel_change(fine: np.ndarray, coarse: np.ndarray) -> float:
    nf = float(np.linalg.norm(fine))
    if nf == 0.0:
        return 0.0 if not np.any(coarse) else math.inf
    return float(np.linalg.norm(fine - coarse)) / nf


def truncated_solution(terms: Sequence[PicardTerm], t: float | None = None):
    """Partial sum ``sum_n A_n`` at a stored node (final node by default)."""
    u = sum(term.field(1, t).values for term in terms)
    n = sum(term.field(2, t).values for term in terms)
    ref = terms[0].field(1, t)
    return SpectralField(ref.grid, u, ref.time), SpectralField(ref.grid, n, ref.time)


# ---------------------------------------------------------------------------
# direct quadrature of the quadratic term
# ---------------------------------------------------------------------------

def _intersect(b1: Cuboid, b2: Cuboid):
    lo, hi = [], []
    for c1, w1, c2, w2 in zip(b1.center, b1.half, b2.center, b2.half):
        a = max(c1 - w1, c2 - w2)
        b = min(c1 + w1, c2 + w2)
        if a >= b:
            return None
        lo.append(a)
        hi.append(b)
    return lo, hi


def _box_integral(fn, lo, hi, rtol: float, atol: float) -> complex:
    d = len(lo)
    mid = np.array([(a + b) / 2 for a, b in zip(lo, hi)])
    vol = float(np.prod([b - a for a, b in zip(lo, hi)]))
    # absolute floor relative to the integrand size: the imaginary part can be
    # far below the real part when T*phi is small
    atol = max(atol, 1e-13 * abs(fn(mid)) * vol)
    if d == 1:
        val, _ = integrate.quad(lambda x: fn(np.array([x])), lo[0], hi[0], epsabs=atol,
                                epsrel=rtol, limit=400, complex_func=True)
        return complex(val)
    opts = {"epsabs": atol, "epsrel": rtol, "limit": 200}
    re, _ = integrate.nquad(lambda *x: fn(np.array(x)).real, list(zip(lo, hi)), opts=opts)
    im, _ = integrate.nquad(lambda *x: fn(np.array(x)).imag, list(zip(lo, hi)), opts=opts)
    return complex(re, im)


def a2_direct(spec: InitialDataSpec, xi, T: float, component: int, rtol: float = 1e-10) -> complex:
    """Quadratic term ``F A_2^(component)(T, xi)`` by adaptive quadrature over the boxes.

    Independent of the lattice: the inner time integral is closed form and the
    frequency integral runs over the exact (continuous) box intersections.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    r, vol = spec.r, spec.cuboid.volume
    atol = 1e-10 * r**2 * T
    total = 0.0j
    if component == 2:
        for e1, e2 in product(spec.sigma1, spec.sigma1):
            box = _intersect(spec.cuboid.box(e1), spec.cuboid.box(e2).shifted(xi))
            if box is None:
                continue

            def f(eta):
                w = (1 + eta @ eta) ** (-spec.s / 2) * (1 + (eta - xi) @ (eta - xi)) ** (-spec.s / 2)
                return w * oscillatory_time_integral(float(wave_phase(xi, eta)), T)

            total += _box_integral(f, *box, rtol, atol)
        ax = float(np.linalg.norm(xi))
        return complex(-1j * r**2 / vol * ax * np.exp(-1j * T * ax) * total)
    if component == 1:
        for eu, en in product(spec.sigma1, spec.sigma2):
            # xi - eta in en + Q  <=>  eta in xi - en + Q
            target = spec.cuboid.box(tuple(x - e for x, e in zip(xi, en)))
            box = _intersect(spec.cuboid.box(eu), target)
            if box is None:
                continue

            def f(eta):
                w = (1 + eta @ eta) ** (-spec.s / 2) * (1 + (xi - eta) @ (xi - eta)) ** (-spec.l / 2)
                p = oscillatory_time_integral(float(schrodinger_phase(xi, eta, +1)), T)
                m = oscillatory_time_integral(float(schrodinger_phase(xi, eta, -1)), T)
                return w * 0.5 * (p + m)

            total += _box_integral(f, *box, rtol, atol)
        return complex(-1j * r**2 / vol * np.exp(-1j * T * float(xi @ xi)) * total)
    raise ValueError("component must be 1 or 2")
