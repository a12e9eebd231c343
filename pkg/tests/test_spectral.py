import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zakharov_inflation.spectral import (
    FULL,
    Convolver,
    Cuboid,
    FrequencyGrid,
    Region,
    SpectralField,
    SpillLog,
    bessel_weight,
    convolve,
    is_mirror_hermitian,
    l2_norm_region,
    mirror_conj,
    real_part_fourier,
    sobolev_norm,
    weight_on_grid,
)


def _grid(n=40, h=0.25):
    return FrequencyGrid.uniform(1, h, n)


def _random_field(grid, seed, support=None):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    if support is not None:
        v = np.where(np.abs(grid.coords()[0]) <= support, v, 0)
    return SpectralField(grid, v)


class TestGrid:
    def test_shape_and_axis(self):
        g = FrequencyGrid((0.5, 1.0), (3, 2))
        assert g.shape == (7, 5)
        assert g.cell == 0.5
        assert np.allclose(g.axis(0), [-1.5, -1, -0.5, 0, 0.5, 1, 1.5])

    def test_index_of_node_and_non_node(self):
        g = _grid()
        assert g.index_of([0.0]) == (40,)
        assert g.index_of([1.25]) == (45,)
        with pytest.raises(ValueError):
            g.index_of([0.1])
        with pytest.raises(ValueError):
            g.index_of([100.0])

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            FrequencyGrid((1.0,) * 4, (2,) * 4)
        with pytest.raises(ValueError):
            FrequencyGrid((0.0,), (3,))


class TestCuboid:
    def test_open_box_keeps_interior_nodes(self):
        g = _grid()
        box = Cuboid((0.0,), (1.0,))
        assert box.is_aligned(g)
        # edges at +-1 are excluded: nodes -0.75..0.75
        assert int(box.mask(g).sum()) == 7

    def test_misaligned_box(self):
        assert not Cuboid((0.1,), (1.0,)).is_aligned(_grid())

    def test_region_complement(self):
        g = _grid()
        reg = Region((Cuboid((0.0,), (1.0,)),))
        assert np.array_equal((~reg).mask(g), ~reg.mask(g))
        assert reg.contains((0.5,)) and not reg.contains((1.0,))
        assert FULL.mask(g).all()


class TestWeights:
    def test_bessel_weight_values(self):
        assert bessel_weight(0.0, 3.0) == 1.0
        assert math.isclose(bessel_weight(np.array([3.0, 4.0]), 1.0), math.sqrt(26))
        assert math.isclose(bessel_weight(2.0, -2.0), 1 / 5)

    def test_weight_on_grid_abs_factor(self):
        g = _grid()
        w = weight_on_grid(g, 0.0, abs_factor=True)
        assert np.allclose(w, np.abs(g.axis(0)))

    def test_sobolev_norm_of_indicator(self):
        g = _grid()
        v = np.where(np.abs(g.axis(0)) < 1.0, 1.0 + 0j, 0)
        f = SpectralField(g, v)
        assert math.isclose(sobolev_norm(f, 0.0), math.sqrt(7 * 0.25))
        assert math.isclose(l2_norm_region(f, Region((Cuboid((0.0,), (0.5,)),))), math.sqrt(3 * 0.25))


class TestSymmetries:
    @given(st.integers(0, 10**6))
    def test_mirror_conj_is_involution(self, seed):
        f = _random_field(_grid(), seed)
        assert np.array_equal(mirror_conj(mirror_conj(f)).values, f.values)

    @given(st.integers(0, 10**6))
    def test_real_part_is_mirror_hermitian(self, seed):
        f = _random_field(_grid(), seed)
        assert is_mirror_hermitian(real_part_fourier(f))

    def test_real_part_fixes_hermitian_input(self):
        f = real_part_fourier(_random_field(_grid(), 3))
        assert np.allclose(real_part_fourier(f).values, f.values)


class TestConvolution:
    def test_indicator_convolution_is_a_tent(self):
        g = _grid(60, 0.125)
        ind = SpectralField(g, np.where(np.abs(g.axis(0)) < 1.0, 1.0 + 0j, 0))
        out = convolve(ind, ind)
        # lattice sum of 15 nodes per indicator: tent of height 15*h at 0
        assert math.isclose(out.at([0.0]).real, 15 * 0.125)
        assert math.isclose(out.at([1.0]).real, 7 * 0.125)
        assert abs(out.at([2.0])) < 1e-14

    @given(st.integers(0, 10**6), st.integers(0, 10**6))
    def test_commutative(self, s1, s2):
        g = _grid()
        f, h = _random_field(g, s1, 3.0), _random_field(g, s2, 3.0)
        assert np.allclose(convolve(f, h).values, convolve(h, f).values, atol=1e-12)

    @given(st.integers(0, 10**6), st.integers(0, 10**6))
    def test_young_inequality(self, s1, s2):
        g = _grid()
        f, h = _random_field(g, s1, 4.0), _random_field(g, s2, 4.0)
        lhs = sobolev_norm(convolve(f, h), 0.0)
        l1 = g.cell * float(np.sum(np.abs(f.values)))
        assert lhs <= l1 * sobolev_norm(h, 0.0) * (1 + 1e-12)

    def test_zero_operand_is_exactly_zero(self):
        g = _grid()
        z = SpectralField(g, g.zeros())
        out, spill = convolve(z, _random_field(g, 1), with_spill=True)
        assert not np.any(out.values) and spill == 0.0

    def test_spill_reports_truncated_mass(self):
        g = _grid(8, 1.0)
        wide = SpectralField(g, np.ones(g.shape, complex))
        _, spill = convolve(wide, wide, with_spill=True)
        assert spill > 0
        conv = Convolver(g)
        vals, sp = conv.invert(conv.spectrum(wide.values) ** 2)
        assert math.isclose(sp, spill)
        assert vals.shape == g.shape

    def test_different_grids_rejected(self):
        with pytest.raises(ValueError):
            convolve(_random_field(_grid(), 1), _random_field(_grid(10), 1))

    def test_spill_log(self):
        log = SpillLog()
        log.record(1e-3, np.ones(4), 1.0, "x")
        log.record(0.0, np.ones(4), 1.0, "y")
        assert math.isclose(log.worst, 5e-4)
        assert log.events == [("x", 5e-4)]
