"""Quantitative ledger: growth sequences, convergence radius, time choices, bound checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .initdata import InitialDataSpec, normalize_case
from .picard import PicardTerm, support_family
from .regions import case_region
from .spectral import Cuboid, Region, l2_norm_region, weight_on_grid

# ---------------------------------------------------------------------------
# b-sequences
# ---------------------------------------------------------------------------

_IV_DPS = 60


def _is_integral(x) -> bool:
    return float(x) == int(float(x))


def b_sequence(n_max: int, alpha, C1=1, C2=1):
    """``(b^1, b^2)`` as lists indexed from ``n = 1``.

    Integer ``alpha`` with rational constants gives exact ``Fraction`` values;
    otherwise entries are ``mpmath.iv`` intervals enclosing the exact values.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    exact = _is_integral(alpha) and all(_is_integral(c) or isinstance(c, Fraction) for c in (C1, C2))
    if exact:
        a = int(alpha)
        c1, c2 = Fraction(C1), Fraction(C2)
        one = Fraction(1)
        power = lambda m: Fraction(m) ** a  # noqa: E731
    else:
        iv = mpmath.iv
        iv.dps = _IV_DPS
        a = _iv(alpha)
        c1, c2 = _iv(C1), _iv(C2)
        one = iv.mpf(1)
        power = lambda m: iv.mpf(m) ** a  # noqa: E731
    b1, b2 = [one], [one]
    for n in range(2, n_max + 1):
        s1 = s2 = 0 * one
        for n1 in range(1, n):
            n2 = n - n1
            w = power(min(n1, n2))
            s1 = s1 + w * b1[n1 - 1] * b2[n2 - 1]
            s2 = s2 + w * b1[n1 - 1] * b1[n2 - 1]
        b1.append(c1 * s1 / (n - 1))
        b2.append(c2 * n * s2 / (n - 1))
    return b1, b2


def _iv(x):
    iv = mpmath.iv
    iv.dps = _IV_DPS
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    f = float(x)
    q = Fraction(f)
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


def _upper(x):
    """Rigorous upper end of a Fraction or interval."""
    return _iv(x).b if isinstance(x, Fraction) else x.b


def certified_le(x, bound) -> bool:
    """``x <= bound`` decided on interval enclosures (no rounding ambiguity)."""
    return bool(_upper(x) <= (_iv(bound).a if isinstance(bound, (Fraction, int, float)) else bound.a))


def check_b_bounds(n_max: int = 60, dims=(1, 2, 3)) -> dict:
    """Geometric cap ``(2^{(d+1)/2+7})^{n-1}`` for ``C1 = C2 = 1``, ``alpha = (d+5)/2``."""
    iv = mpmath.iv
    iv.dps = _IV_DPS
    failures = []
    for d in dims:
        alpha = Fraction(d + 5, 2)
        b1, b2 = b_sequence(n_max, alpha)
        base = iv.mpf(2) ** (_iv(Fraction(d + 1, 2)) + 7)
        for n in range(1, n_max + 1):
            cap = base ** (n - 1)
            for name, seq in (("b1", b1), ("b2", b2)):
                if not certified_le(seq[n - 1], cap):
                    failures.append((d, name, n))
    return {"ok": not failures, "failures": failures, "n_max": n_max}


def check_gamma_bound(n_max: int = 60, dims=(1, 2, 3), constants=(1, 2, 5)) -> dict:
    """``b_n <= n^{-alpha-2} gamma^{n-1}`` with ``gamma = 2^{alpha+5} max(C1, C2)``."""
    iv = mpmath.iv
    iv.dps = _IV_DPS
    failures = []
    for d in dims:
        alpha = Fraction(d + 5, 2)
        for C1 in constants:
            for C2 in constants:
                b1, b2 = b_sequence(n_max, alpha, C1, C2)
                gamma = iv.mpf(2) ** (_iv(alpha) + 5) * max(C1, C2)
                for n in range(1, n_max + 1):
                    cap = iv.mpf(n) ** (-_iv(alpha) - 2) * gamma ** (n - 1)
                    for name, seq in (("b1", b1), ("b2", b2)):
                        if not certified_le(seq[n - 1], cap):
                            failures.append((d, C1, C2, name, n))
    return {"ok": not failures, "failures": failures, "n_max": n_max}


# ---------------------------------------------------------------------------
# a-sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataNorms:
    """``L^2`` norms of the data on the whole space and off ``Q``."""

    u: float
    u_c: float
    n: float
    n_c: float

    def ratio(self, N: float) -> float:
        den = max(math.sqrt(N) * self.u, self.n)
        return 0.0 if den == 0 else max(math.sqrt(N) * self.u_c, self.n_c) / den


@dataclass
class ASequences:
    """Entries indexed from ``n = 1``."""

    a1: list[float]
    a2: list[float]
    a1c: list[float]
    a2c: list[float]


def _max_terms(N, u, m, n, parity_odd: bool) -> float:
    best = 0.0
    ks = range(1, n + 1, 2) if parity_odd else range(2, n + 1, 2)
    for k in ks:
        p = (k - 1) / 2 if parity_odd else k / 2
        best = max(best, N**p * u**k * m ** (n - k))
    return best


def a_sequences(n_max: int, norms: DataNorms, N: float) -> ASequences:
    """The max-formulas for ``a_n``, ``a_{n,c}`` with the direct values at ``n = 1``."""
    if min(norms.u, norms.u_c, norms.n, norms.n_c) < 0 or N < 1:
        raise ValueError("norms must be nonnegative and N >= 1")
    R = norms.ratio(N)
    out = ASequences([norms.u], [norms.n], [norms.u_c], [norms.n_c])
    for n in range(2, n_max + 1):
        x1 = _max_terms(N, norms.u, norms.n, n, True)
        x2 = _max_terms(N, norms.u, norms.n, n, False)
        out.a1.append(x1)
        out.a2.append(x2)
        out.a1c.append(R * x1)
        out.a2c.append(R * x2)
    return out


# ---------------------------------------------------------------------------
# weight norms over regions
# ---------------------------------------------------------------------------

def weight_norm_region(exponent: float, with_abs_factor: bool, R: Region,
                       exclude: Region | None = None, h: Sequence[float] | None = None,
                       cells_per_side: int = 64) -> float:
    """``|| <xi>^exponent (|xi|) ||_{L^2(R \\ exclude)}`` by the midpoint rule.

    Cells are anchored at the lower corner of the bounding box of ``R``; with
    box edges on multiples of ``h`` the region is tiled exactly.
    """
    if R.complement or not R.boxes:
        raise ValueError("region must be a bounded union of boxes")
    d = len(R.boxes[0].center)
    lo = np.min([[c - w for c, w in zip(b.center, b.half)] for b in R.boxes], axis=0)
    hi = np.max([[c + w for c, w in zip(b.center, b.half)] for b in R.boxes], axis=0)
    if h is None:
        small = np.min([b.half for b in R.boxes], axis=0) * 2
        h = small / cells_per_side
    h = np.asarray(h, dtype=float)
    counts = np.maximum(np.rint((hi - lo) / h).astype(int), 1)
    axes = [lo[i] + (np.arange(counts[i]) + 0.5) * h[i] for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    mask = np.zeros(mesh[0].shape, dtype=bool)
    for b in R.boxes:
        mask |= _inside(b, mesh)
    if exclude is not None:
        ex = np.zeros_like(mask)
        for b in exclude.boxes:
            ex |= _inside(b, mesh)
        mask &= ex if exclude.complement else ~ex
    sq = sum(m**2 for m in mesh)
    w2 = (1.0 + sq) ** exponent
    if with_abs_factor:
        w2 = w2 * sq
    return float(math.sqrt(float(np.prod(h)) * float(np.sum(w2[mask]))))


def _inside(b: Cuboid, mesh) -> np.ndarray:
    m = np.ones(mesh[0].shape, dtype=bool)
    for x, c, w in zip(mesh, b.center, b.half):
        m &= np.abs(x - c) < w
    return m


def data_norms(spec: InitialDataSpec, cells_per_side: int = 64) -> DataNorms:
    """Continuum ``L^2`` norms of the data (midpoint rule on each box)."""
    amp = spec.r / math.sqrt(spec.cuboid.volume)
    Q = Region((spec.Q,))
    vals = []
    for which, reg in ((1, spec.s), (2, spec.l)):
        omega = spec.omega1(which)
        if not omega.boxes:
            vals += [0.0, 0.0]
            continue
        full = weight_norm_region(-reg, False, omega, cells_per_side=cells_per_side)
        off = weight_norm_region(-reg, False, omega, exclude=Q, cells_per_side=cells_per_side)
        vals += [amp * full, amp * off]
    return DataNorms(*vals)


def bessel_potential_check(spec: InitialDataSpec, n_max: int = 6, tight: bool = False) -> list[dict]:
    """Left and right sides of the Bessel-potential estimates on the order-``n`` supports."""
    d, N = spec.d, spec.N
    base_boxes = Region((spec.Q, spec.cuboid.box((N,) + (0,) * (d - 1))))
    h = spec.h
    rhs1 = weight_norm_region(spec.s, False, base_boxes, h=h)
    rhs2 = weight_norm_region(spec.l, True, base_boxes, h=h)
    rows = []
    for n in range(1, n_max + 1):
        fam = support_family(n, spec, tight=tight)
        row = {"n": n}
        for comp, rhs, expo, absf, extra in ((1, rhs1, spec.s, False, 0), (2, rhs2, spec.l, True, 1)):
            reg = fam.region(comp)
            lhs = weight_norm_region(expo, absf, reg, h=h) if reg.boxes else 0.0
            cap = 9 * (2 ** ((d + 5) / 2 + abs(expo) + extra)) ** n * rhs
            row[f"lhs{comp}"], row[f"rhs{comp}"] = lhs, cap
            row[f"ok{comp}"] = lhs <= cap
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# s_star, rho, time choices and predictions
# ---------------------------------------------------------------------------

def s_star(s: float, l: float, d: int) -> float:
    return max((d + 1) / 2, abs(l) / 2 + d / 4 + 1, abs(s))


def c_small(d: int) -> float:
    return 27.0 * (d + 1)


def rho_factor(spec: InitialDataSpec, T: float, C_surrogate: float | None = None,
               norms: DataNorms | None = None) -> tuple[float, float]:
    """``(rho, scaling)``: the convergence radius and its ``N``-dependent part."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    C = c_small(spec.d) if C_surrogate is None else C_surrogate
    norms = norms or data_norms(spec)
    scaling = math.sqrt(spec.cuboid.volume) * max(math.sqrt(spec.N) * norms.u, norms.n) * T
    power = 2 ** ((spec.d + 7) / 2 + abs(spec.l) + s_star(spec.s, spec.l, spec.d))
    return C * power * scaling, scaling


def _default_A(case: str, N: float) -> float:
    if case in ("a", "e", "f"):
        return N / math.log(N)
    if case == "b":
        return 1.0 / N
    return 1.0


@dataclass(frozen=True)
class TChoice:
    T: float
    ceiling: float
    ratio: float
    ceiling_ok: bool
    log_exponent: float
    N_exponent: float

    @property
    def asymptotically_ok(self) -> bool:
        """``T / ceiling -> 0`` as ``N`` grows (power of ``N`` wins over logs)."""
        return self.N_exponent < 0 or (self.N_exponent == 0 and self.log_exponent < 0)


def _ceiling(case: str, N: float) -> float:
    if case == "a":
        return math.log(N) / N**2
    if case == "b":
        return 1.0
    if case == "c'":
        return 1.0 / N
    return N**-2.0


def choose_T(case: str, N: float, s: float, l: float, d: int = 1, A: float | None = None,
             safety: float = 0.01, check_region: bool = True) -> TChoice:
    """Time from the case's proof recipe together with its smallness ceiling.

    ``ceiling_ok`` reports ``T <= safety * ceiling`` at this ``N``; the exponents
    describe ``T / ceiling = (log N)^p N^q`` (``A`` replaced by ``N / log N``).
    """
    case = normalize_case(case)
    if check_region and not case_region(case, s, l, d):
        raise ValueError(f"(s, l) = ({s}, {l}) is outside the range of case {case}")
    A = _default_A(case, N) if A is None else A
    L = math.log(N)
    r3 = L**6
    hd = d / 2
    if case == "a":
        T, p, q = r3 * L**hd * N ** (2 * s - l - 1 - hd), 6 + hd - 1, 2 * s - l + 1 - hd
    elif case == "b":
        T, p, q = r3 * N ** (2 * s - l - 0.5), 6, 2 * s - l - 0.5
    elif case == "c":
        T, p, q = r3 * N ** (s - l - 1), 6, s - l + 1
    elif case == "c'":
        T, p, q = r3 * N ** (2 * s), 6, 2 * s + 1
    elif case == "d":
        T, p, q = r3 * N ** (l - s), 6, l - s + 2
    elif case == "e":
        if hd + s > 0:
            T, p, q = r3 * N ** (l - hd) * L ** (hd + s), 6 + hd + s, l - hd + 2
        elif hd + s == 0:
            T, p, q = r3 * N ** (s + l) / math.log(A), 5, s + l + 2
        else:
            T, p, q = r3 * N ** (s + l), 6, s + l + 2
    else:  # f
        T, p, q = r3 * L ** (-s + hd) * N ** (l - hd), 6 - s + hd, l - hd + 2
    ceil = _ceiling(case, N)
    return TChoice(T, ceil, T / ceil, T <= safety * ceil, p, q)


def target_component(case: str) -> int:
    """Coordinate carrying the lower bound: 2 (wave) for a, b, c, c'; 1 otherwise."""
    return 2 if normalize_case(case) in ("a", "b", "c", "c'") else 1


def predicted_lower_bound(case: str, N: float, T: float, s: float, l: float, d: int = 1,
                          A: float | None = None) -> float:
    """Constant-free lower bound for the target coordinate of the quadratic term."""
    case = normalize_case(case)
    A = _default_A(case, N) if A is None else A
    r2 = math.log(N) ** -4
    hd = d / 2
    if case == "a":
        return r2 * T * N ** (l - 2 * s + 1) * A**hd
    if case == "b":
        return r2 * T * N ** (l - 2 * s + 0.5)
    if case == "c":
        return r2 * T * N ** (l - s + 1)
    if case == "c'":
        return r2 * T * N ** (-2 * s)
    if case == "d":
        return r2 * T * N ** (s - l)
    if case == "e":
        k = hd + s
        f = A**k if k > 0 else (math.log(A) if k == 0 else 1.0)
        return r2 * T * N ** (-l - s) * f
    k = d - s
    f = A ** (hd - s) if k > 0 else (A**-hd * math.log(A) if k == 0 else A**-hd)
    return r2 * T * N ** (s - l) * f


# ---------------------------------------------------------------------------
# ledger and upper-bound verification
# ---------------------------------------------------------------------------

@dataclass
class BoundLedger:
    d: int
    N: int
    Q_volume: float
    norms: DataNorms
    C_surrogate: float
    s: float
    l: float
    n_max: int
    b1: list = field(default_factory=list)
    b2: list = field(default_factory=list)
    a: ASequences | None = None

    @property
    def c_small(self) -> float:
        return c_small(self.d)

    @property
    def s_star(self) -> float:
        return s_star(self.s, self.l, self.d)

    @classmethod
    def for_spec(cls, spec: InitialDataSpec, n_max: int = 6, C_surrogate: float | None = None,
                 norms: DataNorms | None = None) -> "BoundLedger":
        norms = norms or data_norms(spec)
        C = c_small(spec.d) if C_surrogate is None else C_surrogate
        b1, b2 = b_sequence(n_max, Fraction(spec.d + 5, 2))
        return cls(spec.d, spec.N, spec.cuboid.volume, norms, C, spec.s, spec.l, n_max,
                   b1, b2, a_sequences(n_max, norms, spec.N))


@dataclass
class UpperBoundReport:
    rows: list[dict]
    max_ratio: float

    @property
    def ok(self) -> bool:
        return self.max_ratio <= 1.0 + 1e-12


def verify_upper_bounds(terms: Sequence[PicardTerm], ledger: BoundLedger, T: float,
                        spec: InitialDataSpec) -> UpperBoundReport:
    """Measured norms of each term over their analytic upper bounds (max over stored nodes).

    ``L^2`` bounds are checked on ``nQ`` and its complement for both coordinates,
    Sobolev bounds for ``n >= 2``.  At ``n = 1`` the right-hand sides are the data
    norms themselves.
    """
    C, N, vol = ledger.C_surrogate, spec.N, ledger.Q_volume
    a = ledger.a
    nm = ledger.norms
    rows = []
    for term in terms:
        n = term.order
        nQ = Region((spec.cuboid.box(dilation=n),))
        fam = support_family(n, spec)
        if n == 1:
            pre = 1.0
        else:
            pre = C**n * vol ** ((n - 1) / 2) * T ** (n - 1)
        rhs = {"L2_1_in": pre * a.a1[n - 1], "L2_1_out": pre * a.a1c[n - 1],
               "L2_2_in": pre * a.a2[n - 1], "L2_2_out": pre * a.a2c[n - 1]}
        if n >= 2:
            rprime = _r_prime(spec, n, nm)
            sob = C**n * vol ** (n / 2 - 1) * T ** (n - 1)
            reg1 = fam.region(1)
            reg2 = fam.region(2)
            w1 = weight_norm_region(spec.s, False, nQ, h=spec.h) + (
                weight_norm_region(spec.s, False, reg1, exclude=nQ, h=spec.h) if reg1.boxes else 0.0) * rprime
            w2 = weight_norm_region(spec.l, True, nQ, h=spec.h) + (
                weight_norm_region(spec.l, True, reg2, exclude=nQ, h=spec.h) if reg2.boxes else 0.0) * rprime
            rhs["Hs_1"] = sob * a.a1[n - 1] * w1
            rhs["Hl_2"] = sob * a.a2[n - 1] / N * w2
        meas = {k: 0.0 for k in rhs}
        ws = weight_on_grid(term.grid, spec.s)
        wl = weight_on_grid(term.grid, spec.l)
        cell = term.grid.cell
        for k in range(len(term.times)):
            f1 = term.field(1, term.times[k])
            f2 = term.field(2, term.times[k])
            vals = {"L2_1_in": l2_norm_region(f1, nQ), "L2_1_out": l2_norm_region(f1, ~nQ),
                    "L2_2_in": l2_norm_region(f2, nQ), "L2_2_out": l2_norm_region(f2, ~nQ)}
            if n >= 2:
                vals["Hs_1"] = math.sqrt(cell * float(np.sum((ws * np.abs(f1.values)) ** 2)))
                vals["Hl_2"] = math.sqrt(cell * float(np.sum((wl * np.abs(f2.values)) ** 2)))
            for key, v in vals.items():
                meas[key] = max(meas[key], v)
        for key in rhs:
            m, b = meas[key], rhs[key]
            ratio = 0.0 if m == 0 else (math.inf if b == 0 else m / b)
            rows.append({"n": n, "bound": key, "measured": m, "rhs": b, "ratio": ratio})
    return UpperBoundReport(rows, max((r["ratio"] for r in rows), default=0.0))


def _r_prime(spec: InitialDataSpec, n: int, nm: DataNorms) -> float:
    """Ratio of the data mass off ``nQ`` to the total, as in the Sobolev bounds."""
    amp = spec.r / math.sqrt(spec.cuboid.volume)
    nQ = Region((spec.cuboid.box(dilation=n),))
    outs = []
    for which, reg in ((1, spec.s), (2, spec.l)):
        om = spec.omega1(which)
        outs.append(amp * weight_norm_region(-reg, False, om, exclude=nQ, h=spec.h) if om.boxes else 0.0)
    den = max(math.sqrt(spec.N) * nm.u, nm.n)
    return 0.0 if den == 0 else max(math.sqrt(spec.N) * outs[0], outs[1]) / den
