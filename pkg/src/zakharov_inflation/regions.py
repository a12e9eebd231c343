"""Regularity atlas: inflation clauses, the local well-posedness overlay, case coverage.

All comparisons run on ``fractions.Fraction`` so that lattice points lying
exactly on a boundary line are classified by the printed (strict or
non-strict) inequality rather than by floating-point noise.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .initdata import CASES, normalize_case

F = Fraction


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass
class RegionVerdict:
    s: Fraction
    l: Fraction
    d: int
    wave_inflation: bool
    schrodinger_inflation: bool
    lwp: bool = False
    covering_case: Optional[str] = None
    clauses: list[str] = field(default_factory=list)

    @property
    def inflation(self) -> bool:
        return self.wave_inflation or self.schrodinger_inflation


def wave_clauses(s, l, d: int) -> list[str]:
    s, l = _q(s), _q(l)
    out = []
    if 2 * s < l + F(d - 2, 2) and s < l + F(1, 2):
        out.append("W1")
    if 2 * s < l + F(1, 2) and s < l + F(1, 2):
        out.append("W2")
    if s + 1 < l:
        out.append("W3")
    if l <= -1 and s < -1:
        out.append("W4")
    return out


def schrodinger_clauses(s, l, d: int) -> list[str]:
    s, l = _q(s), _q(l)
    out = []
    if l < s - 2 and s > 0:
        out.append("S1")
    if l < F(d, 2) - 2 and l + F(1, 2) <= s and -F(d, 2) <= s < F(d, 2) and s != 0:
        out.append("S2")
    if l + s < -2 and l + F(1, 2) <= s and s < -F(d, 2):
        out.append("S3")
    return out


def classify_inflation(s, l, d: int) -> RegionVerdict:
    """Evaluate the wave and Schrodinger inflation clauses at ``(s, l)``."""
    w = wave_clauses(s, l, d)
    sc = schrodinger_clauses(s, l, d)
    return RegionVerdict(_q(s), _q(l), d, bool(w), bool(sc), clauses=w + sc)


def classify_lwp(s, l, d: int) -> bool:
    """Known local well-posedness, transcribed condition by condition."""
    s, l = _q(s), _q(l)
    if d <= 3:
        if l > -F(1, 2) and max(l - 1, l / 2 + F(1, 4)) < s < l + 2:
            return True
        if d == 1:
            if l == -F(1, 2) and 0 <= s <= F(1, 2):
                return True
            if 2 * s == l + F(1, 2) and 0 <= s < 1:
                return True
        if d == 2 and (s, l) == (0, -F(1, 2)):
            return True
        if d in (2, 3) and l == s + 1 and s >= 2:
            return True
        return False
    if (s, l) in ((F(d, 2), F(d, 2) - 2), (F(d, 2), F(d, 2) + 1)):
        return False
    return l >= F(d, 2) - 2 and max(l - 1, l / 2 + F(d - 2, 4)) <= s <= l + 2


def case_region(case: str, s, l, d: int) -> bool:
    """Whether ``(s, l)`` lies in the regularity range handled by ``case``."""
    case = normalize_case(case)
    s, l = _q(s), _q(l)
    half = F(1, 2)
    if case == "a":
        return 2 * s < l + F(d - 2, 2) and s < l + half and l >= -F(d + 2, 2)
    if case == "b":
        return 2 * s < l + half and s < l + half and l >= -1
    if case == "c":
        return s - l < -1 and s >= 0 and l >= -1
    if case == "c'":
        return l <= -1 and s < -1
    if case == "d":
        return l - s < -2 and s > 0
    if case == "e":
        lo = s >= -F(d, 2) and l < F(d, 2) - 2
        hi = s < -F(d, 2) and l + s < -2
        return s < 0 and l - s <= -half and (lo or hi)
    return l < F(d, 2) - 2 and 0 < s < F(d, 2) and l - s <= -half


def pick_case_for(s, l, d: int) -> Optional[str]:
    """First case (in the order a, b, c, c', d, e, f) whose range contains ``(s, l)``."""
    for case in CASES:
        if case_region(case, s, l, d):
            return case
    return None


def verdict(s, l, d: int) -> RegionVerdict:
    v = classify_inflation(s, l, d)
    v.lwp = classify_lwp(s, l, d)
    if v.inflation:
        v.covering_case = pick_case_for(s, l, d)
    return v


def _lattice(lo, hi, step) -> list[Fraction]:
    lo, hi, step = _q(lo), _q(hi), _q(step)
    if step <= 0:
        raise ValueError("step must be positive")
    n = int((hi - lo) / step)
    return [lo + k * step for k in range(n + 1)]


def region_grid(d: int, s_range=(-4, 4), l_range=(-4, 4), step=F(1, 10)) -> list[RegionVerdict]:
    """Verdicts on the lattice ``s_range x l_range`` (endpoints included)."""
    return [verdict(s, l, d) for s in _lattice(*s_range, step) for l in _lattice(*l_range, step)]


CSV_COLUMNS = ("s", "l", "d", "wave", "schrodinger", "lwp", "case", "clauses")


def verdicts_to_csv(rows: Iterable[RegionVerdict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for v in rows:
        w.writerow([repr(float(v.s)), repr(float(v.l)), v.d, int(v.wave_inflation),
                    int(v.schrodinger_inflation), int(v.lwp), v.covering_case or "",
                    ";".join(v.clauses)])
    return buf.getvalue()
