"""Frequency-localized initial data for the norm-inflation constructions.

Each case places ``r |Q|^{-1/2} <xi>^{-s} 1_{eta+Q}`` bumps at a handful of
translations ``eta`` along ``e_1``; the Schrodinger datum uses the set
``sigma1`` and the wave datum the symmetric set ``sigma2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Cuboid, FrequencyGrid, Region, SpectralField, weight_on_grid

CASES = ("a", "b", "c", "c'", "d", "e", "f")

_ALIASES = {"c1": "c'", "cp": "c'", "c_prime": "c'", "c′": "c'"}

Vec = tuple[int, ...]


def normalize_case(case: str) -> str:
    c = _ALIASES.get(case.strip().lower(), case.strip().lower())
    if c not in CASES:
        raise ValueError(f"unknown case tag {case!r}; expected one of {CASES}")
    return c


@dataclass(frozen=True)
class CuboidSpec:
    typ: str  # "I" or "II"
    A: float
    d: int

    def __post_init__(self):
        if self.typ not in ("I", "II"):
            raise ValueError("cuboid type must be 'I' or 'II'")
        if self.A <= 0:
            raise ValueError("A must be positive")

    @property
    def half(self) -> tuple[float, ...]:
        rest = self.A / 2 if self.typ == "I" else 1.0
        return (self.A / 2,) + (rest,) * (self.d - 1)

    @property
    def volume(self) -> float:
        return float(np.prod([2 * w for w in self.half]))

    def box(self, eta=None, dilation: float = 1.0) -> Cuboid:
        center = tuple(float(e) for e in eta) if eta is not None else (0.0,) * self.d
        return Cuboid(center, tuple(dilation * w for w in self.half))


def _e1(x: int, d: int) -> Vec:
    return (int(x),) + (0,) * (d - 1)


def case_parameters(case: str, N: int, d: int = 1):
    """Cuboid and translation sets of a case, with the unsnapped side ``A``."""
    case = normalize_case(case)
    if N < 16:
        raise ValueError("N must be at least 16")
    N = int(N)
    big = N / math.log(N)
    if case == "a":
        cub, s1, s2 = CuboidSpec("I", big, d), (_e1(N, d), _e1(-N, d)), ()
    elif case == "b":
        cub, s1, s2 = CuboidSpec("II", 1.0 / N, d), (_e1(N + 1, d), _e1(-N, d)), ()
    elif case in ("c", "c'"):
        cub, s1, s2 = CuboidSpec("I", 1.0, d), (_e1(0, d), _e1(N, d)), ()
    elif case == "d":
        cub, s1, s2 = CuboidSpec("I", 1.0, d), (_e1(0, d),), (_e1(N, d), _e1(-N, d))
    elif case == "e":
        cub, s1, s2 = CuboidSpec("I", big, d), (_e1(N, d), _e1(-N, d)), (_e1(N, d), _e1(-N, d))
    else:  # f
        cub, s1, s2 = CuboidSpec("I", big, d), (_e1(0, d),), (_e1(N, d), _e1(-N, d))
    return cub, s1, s2


@dataclass(frozen=True)
class InitialDataSpec:
    """One member of a case family at frequency scale ``N``.

    ``cuboid.A`` is snapped so that ``N`` is an integer number of lattice
    steps ``A / divisor``; ``A_raw`` keeps the unsnapped value.
    """

    case: str
    N: int
    s: float
    l: float
    d: int
    cuboid: CuboidSpec
    sigma1: tuple[Vec, ...]
    sigma2: tuple[Vec, ...]
    A_raw: float
    divisor: int = 16

    @classmethod
    def create(cls, case: str, N: int, s: float, l: float, d: int = 1, divisor: int = 16):
        if divisor < 2 or divisor % 2:
            raise ValueError("grid divisor must be an even integer >= 2")
        case = normalize_case(case)
        cub, s1, s2 = case_parameters(case, N, d)
        m = max(1, round(N * divisor / cub.A))
        A = divisor * N / m
        snapped = CuboidSpec(cub.typ, A, d)
        return cls(case, int(N), float(s), float(l), d, snapped, s1, s2, cub.A, divisor)

    @property
    def r(self) -> float:
        return 1.0 / math.log(self.N) ** 2

    @property
    def A(self) -> float:
        return self.cuboid.A

    @property
    def Q(self) -> Cuboid:
        return self.cuboid.box()

    @property
    def h(self) -> tuple[float, ...]:
        """Default lattice spacing per axis: ``divisor`` cells per cuboid side."""
        return tuple(2 * w / self.divisor for w in self.cuboid.half)

    def omega1(self, which: int) -> Region:
        sig = self.sigma1 if which == 1 else self.sigma2
        return Region(tuple(self.cuboid.box(eta) for eta in sig))

    def with_divisor(self, divisor: int) -> "InitialDataSpec":
        """Same data (same ``A``) on a finer lattice; ``divisor`` must be a multiple."""
        if divisor % self.divisor:
            raise ValueError("refined divisor must be a multiple of the current one")
        return InitialDataSpec(self.case, self.N, self.s, self.l, self.d, self.cuboid,
                               self.sigma1, self.sigma2, self.A_raw, divisor)

    def describe(self) -> dict:
        return {
            "case": self.case, "N": self.N, "s": self.s, "l": self.l, "d": self.d,
            "typ": self.cuboid.typ, "A": self.A, "A_raw": self.A_raw, "r": self.r,
            "sigma1": [list(e) for e in self.sigma1], "sigma2": [list(e) for e in self.sigma2],
            "divisor": self.divisor, "log": "natural",
        }


def make_grid(spec: InitialDataSpec, n_terms: int = 1, margin_cells: int = 2) -> FrequencyGrid:
    """Lattice that holds the supports of all terms up to order ``n_terms``."""
    from .picard import support_family  # local: picard imports this module

    h = spec.h
    reach = [0.0] * spec.d
    for n in range(1, n_terms + 1):
        fam = support_family(n, spec)
        for eta in fam.sigma1 + fam.sigma2:
            for i in range(spec.d):
                reach[i] = max(reach[i], abs(eta[i]) + n * spec.cuboid.half[i])
    n_nodes = tuple(int(math.ceil(reach[i] / h[i] - 1e-9)) + margin_cells for i in range(spec.d))
    return FrequencyGrid(h, n_nodes)


def build_initial_data(spec: InitialDataSpec, grid: FrequencyGrid):
    """Sampled ``(u0_hat, n0_hat)``; raises if a cuboid is off-lattice or off-grid."""
    if grid.d != spec.d:
        raise ValueError("grid dimension does not match the data")
    amp = spec.r / math.sqrt(spec.cuboid.volume)
    out = []
    for sig, reg in ((spec.sigma1, spec.s), (spec.sigma2, spec.l)):
        vals = grid.zeros()
        if sig:
            w = weight_on_grid(grid, -reg)
            for eta in sig:
                box = spec.cuboid.box(eta)
                _check_box(box, grid)
                vals[box.mask(grid)] += amp * w[box.mask(grid)]
        out.append(SpectralField(grid, vals, 0.0))
    return out[0], out[1]


def _check_box(box: Cuboid, grid: FrequencyGrid) -> None:
    if not box.is_aligned(grid):
        raise ValueError(f"cuboid {box} is not aligned with the lattice")
    for i in range(grid.d):
        if abs(box.center[i]) + box.half[i] > grid.K[i] + 1e-9 * grid.h[i]:
            raise ValueError("grid too small for the initial data")
