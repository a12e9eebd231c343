"""Frequency-lattice fields, Bessel weights, norms and discrete convolution.

Every field lives on a symmetric node lattice ``{-K, -K+h, ..., K}`` per axis.
Cuboids are open and their edges sit on lattice nodes, so an indicator
``1_{eta+Q}`` is sampled on the nodes strictly inside the box.  Integrals are
Riemann sums ``h^d * sum(...)``; for discontinuous integrands this is first
order in ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

# Relative slack when snapping cuboid bounds to lattice indices.
_SNAP = 1e-9


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric lattice with spacing ``h[i]`` and ``n[i]`` nodes on each side of 0."""

    h: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        if len(self.h) != len(self.n) or not 1 <= len(self.h) <= 3:
            raise ValueError("grid must have matching h and n with 1 <= d <= 3")
        if any(hi <= 0 for hi in self.h) or any(ni <= 0 for ni in self.n):
            raise ValueError("h and n must be positive")

    @classmethod
    def uniform(cls, d: int, h: float, n: int) -> "FrequencyGrid":
        return cls(tuple([float(h)] * d), tuple([int(n)] * d))

    @property
    def d(self) -> int:
        return len(self.h)

    @property
    def K(self) -> tuple[float, ...]:
        return tuple(hi * ni for hi, ni in zip(self.h, self.n))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2 * ni + 1 for ni in self.n)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell(self) -> float:
        """Volume element ``h_1 * ... * h_d``."""
        return float(np.prod(self.h))

    def axis(self, i: int) -> np.ndarray:
        return np.arange(-self.n[i], self.n[i] + 1) * self.h[i]

    def coords(self) -> list[np.ndarray]:
        """Open-mesh coordinate arrays, broadcastable to ``shape``."""
        out = []
        for i in range(self.d):
            shp = [1] * self.d
            shp[i] = self.shape[i]
            out.append(self.axis(i).reshape(shp))
        return out

    def abs_xi(self) -> np.ndarray:
        sq = sum(c**2 for c in self.coords())
        return np.sqrt(np.broadcast_to(sq, self.shape))

    def index_of(self, xi: Sequence[float]) -> tuple[int, ...]:
        """Lattice index of a node; raises if ``xi`` is not a node of the grid."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        idx = []
        for i in range(self.d):
            j = xi[i] / self.h[i]
            jr = int(round(j))
            if abs(j - jr) > 1e-6 or abs(jr) > self.n[i]:
                raise ValueError(f"{tuple(xi)} is not a lattice node")
            idx.append(jr + self.n[i])
        return tuple(idx)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex)


@dataclass(frozen=True)
class Cuboid:
    """Open axis-aligned box ``center + (-half, half)``."""

    center: tuple[float, ...]
    half: tuple[float, ...]

    def __post_init__(self):
        if len(self.center) != len(self.half):
            raise ValueError("center and half-widths differ in dimension")
        if any(w <= 0 for w in self.half):
            raise ValueError("half-widths must be strictly positive")

    @property
    def volume(self) -> float:
        return float(np.prod([2 * w for w in self.half]))

    def shifted(self, eta: Sequence[float]) -> "Cuboid":
        return Cuboid(tuple(c + e for c, e in zip(self.center, eta)), self.half)

    def scaled(self, k: float) -> "Cuboid":
        """Dilate about the center."""
        return Cuboid(self.center, tuple(k * w for w in self.half))

    def contains(self, xi: Sequence[float]) -> bool:
        return all(abs(x - c) < w for x, c, w in zip(xi, self.center, self.half))

    def index_bounds(self, grid: FrequencyGrid) -> list[tuple[float, float]]:
        """Box bounds in lattice-index units, snapped to integers when aligned."""
        out = []
        for i in range(grid.d):
            lo = (self.center[i] - self.half[i]) / grid.h[i]
            hi = (self.center[i] + self.half[i]) / grid.h[i]
            lo = _snap(lo)
            hi = _snap(hi)
            out.append((lo, hi))
        return out

    def is_aligned(self, grid: FrequencyGrid) -> bool:
        for lo, hi in self.index_bounds(grid):
            if lo != round(lo) or hi != round(hi):
                return False
        return True

    def mask(self, grid: FrequencyGrid) -> np.ndarray:
        m = np.ones(grid.shape, dtype=bool)
        for i, (lo, hi) in enumerate(self.index_bounds(grid)):
            j = np.arange(-grid.n[i], grid.n[i] + 1)
            inside = (j > lo) & (j < hi)
            shp = [1] * grid.d
            shp[i] = grid.shape[i]
            m = m & inside.reshape(shp)
        return m


def _snap(x: float) -> float:
    r = round(x)
    return float(r) if abs(x - r) <= _SNAP * max(1.0, abs(x)) else x


@dataclass(frozen=True)
class Region:
    """Finite union of open cuboids, or its complement when ``complement`` is set."""

    boxes: tuple[Cuboid, ...]
    complement: bool = False

    def __invert__(self) -> "Region":
        return Region(self.boxes, not self.complement)

    def contains(self, xi: Sequence[float]) -> bool:
        inside = any(b.contains(xi) for b in self.boxes)
        return inside != self.complement

    def mask(self, grid: FrequencyGrid) -> np.ndarray:
        m = np.zeros(grid.shape, dtype=bool)
        for b in self.boxes:
            m |= b.mask(grid)
        return ~m if self.complement else m


FULL = Region((), complement=True)


@dataclass(frozen=True)
class SpectralField:
    """Complex samples of a Fourier transform on a lattice, at time ``time``."""

    grid: FrequencyGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.shape}")

    def with_values(self, values: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, values, self.time)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def at(self, xi: Sequence[float]) -> complex:
        return complex(self.values[self.grid.index_of(xi)])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return self.with_values(self.values - other.values)


def _check_same_grid(f: SpectralField, g: SpectralField) -> None:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def bessel_weight(xi, s: float):
    """``(1 + |xi|^2)^(s/2)``; ``xi`` is a vector or an array of |xi| values with ``axis=None``."""
    xi = np.asarray(xi, dtype=float)
    sq = xi**2 if xi.ndim == 0 else np.sum(xi**2, axis=-1)
    return (1.0 + sq) ** (s / 2.0)


def weight_on_grid(grid: FrequencyGrid, s: float, abs_factor: bool = False) -> np.ndarray:
    """``<xi>^s`` (times ``|xi|`` if requested) sampled on the lattice."""
    r = grid.abs_xi()
    w = (1.0 + r**2) ** (s / 2.0)
    return w * r if abs_factor else w


def sobolev_norm(f: SpectralField, s: float) -> float:
    """``||<xi>^s f||_{L^2}`` as a lattice sum."""
    w2 = (1.0 + f.grid.abs_xi() ** 2) ** s
    return float(np.sqrt(f.grid.cell * np.sum(w2 * np.abs(f.values) ** 2)))


def l2_norm_region(f: SpectralField, region: Region = FULL) -> float:
    m = region.mask(f.grid)
    return float(np.sqrt(f.grid.cell * np.sum(np.abs(f.values[m]) ** 2)))


def mirror_conj(f: SpectralField) -> SpectralField:
    """``xi -> conj(f(-xi))``, the transform of the complex conjugate."""
    return f.with_values(np.conj(_reverse(f.values)))


def real_part_fourier(f: SpectralField) -> SpectralField:
    """Transform of the real part: ``(f + mirror_conj(f)) / 2``."""
    return f.with_values(0.5 * (f.values + np.conj(_reverse(f.values))))


def is_mirror_hermitian(f: SpectralField, rtol: float = 1e-12) -> bool:
    scale = np.max(np.abs(f.values), initial=0.0)
    diff = np.max(np.abs(f.values - np.conj(_reverse(f.values))), initial=0.0)
    return bool(diff <= rtol * scale)


def _reverse(a: np.ndarray) -> np.ndarray:
    return a[(slice(None, None, -1),) * a.ndim]


class Convolver:
    """FFT-based lattice convolution for a fixed grid.

    ``spectrum`` pads a field once so repeated products can be summed in
    transform space before a single inverse transform.
    """

    def __init__(self, grid: FrequencyGrid):
        self.grid = grid
        full = tuple(2 * s - 1 for s in grid.shape)
        self.fshape = tuple(scipy.fft.next_fast_len(m) for m in full)
        self._axes = tuple(range(grid.d))
        # central window of the full linear convolution
        self._keep = tuple(slice(ni, ni + s) for ni, s in zip(grid.n, grid.shape))
        self._full = tuple(slice(0, m) for m in full)

    def spectrum(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.fftn(values, s=self.fshape, axes=self._axes)

    def invert(self, spec: np.ndarray) -> tuple[np.ndarray, float]:
        """Central window times ``h^d`` plus the L^2 mass that fell outside it."""
        full = scipy.fft.ifftn(spec, axes=self._axes)[self._full] * self.grid.cell
        inner = np.array(full[self._keep])
        full[self._keep] = 0
        spill = float(np.sqrt(np.sum(np.abs(full) ** 2) * self.grid.cell))
        return inner, spill


def convolve(f: SpectralField, g: SpectralField, *, with_spill: bool = False):
    """Riemann-sum approximation of ``(f * g)(xi) = int f(eta) g(xi - eta) d eta``.

    The result is truncated to the common grid; ``with_spill`` also returns the
    L^2 mass of the discarded part.
    """
    _check_same_grid(f, g)
    if f.is_zero() or g.is_zero():
        out, spill = f.grid.zeros(), 0.0
    else:
        conv = Convolver(f.grid)
        out, spill = conv.invert(conv.spectrum(f.values) * conv.spectrum(g.values))
    res = SpectralField(f.grid, out, f.time)
    return (res, spill) if with_spill else res


@dataclass
class SpillLog:
    """Running maximum of convolution spill, relative to the kept mass."""

    worst: float = 0.0
    events: list = field(default_factory=list)

    def record(self, spill: float, kept: np.ndarray, cell: float, label: str = "") -> None:
        norm = float(np.sqrt(cell * np.sum(np.abs(kept) ** 2)))
        rel = spill / norm if norm > 0 else (0.0 if spill == 0 else np.inf)
        if rel > self.worst:
            self.worst = rel
        if rel > 1e-12:
            self.events.append((label, rel))
