import math
from fractions import Fraction
from functools import lru_cache

import pytest
from scipy.integrate import quad
from hypothesis import given
from hypothesis import strategies as st

from zakharov_inflation.bounds import (
    BoundLedger,
    DataNorms,
    a_sequences,
    b_sequence,
    bessel_potential_check,
    c_small,
    check_b_bounds,
    check_gamma_bound,
    choose_T,
    data_norms,
    predicted_lower_bound,
    rho_factor,
    s_star,
    verify_upper_bounds,
    weight_norm_region,
)
from zakharov_inflation.initdata import InitialDataSpec, make_grid
from zakharov_inflation.picard import picard_terms
from zakharov_inflation.spectral import Cuboid, Region

POINTS = {"a": (-1, -1), "b": (0, 1), "c": (0, 2), "c'": (-2, -1), "d": (1, -3),
          "e": (-0.2, -2), "f": (0.2, -2)}


def _memo_b(alpha: int):
    @lru_cache(None)
    def b(which: int, n: int) -> Fraction:
        if n == 1:
            return Fraction(1)
        acc = Fraction(0)
        for k in range(1, n):
            other = b(2, n - k) if which == 1 else b(1, n - k)
            acc += Fraction(min(k, n - k)) ** alpha * b(1, k) * other
        return acc / (n - 1) if which == 1 else n * acc / (n - 1)
    return b


class TestBSequence:
    @pytest.mark.parametrize("alpha", [1, 3, 4])
    def test_small_values(self, alpha):
        b1, b2 = b_sequence(3, alpha)
        assert (b1[0], b2[0], b2[1]) == (1, 1, 2)
        assert b1[2] == Fraction(3, 2) and b2[2] == 3

    @pytest.mark.parametrize("alpha", [2, 3, 4])
    def test_matches_memoized_recursion(self, alpha):
        b1, b2 = b_sequence(10, alpha)
        ref = _memo_b(alpha)
        assert all(isinstance(x, Fraction) for x in b1 + b2)
        assert b1 == [ref(1, n) for n in range(1, 11)]
        assert b2 == [ref(2, n) for n in range(1, 11)]

    def test_half_integer_alpha_encloses_exact_value(self):
        b1, b2 = b_sequence(6, Fraction(7, 2))
        # n=4 is the first term with min(n1, n2) = 2
        approx = _float_b(3.5, 6)
        for seq, ref in zip((b1, b2), approx):
            for x, y in zip(seq, ref):
                assert x.a <= y * (1 + 1e-12) and y * (1 - 1e-12) <= x.b

    def test_constants_scale(self):
        b1, b2 = b_sequence(5, 2, C1=2, C2=3)
        r1, r2 = _float_b(2.0, 5, 2.0, 3.0)
        assert [float(x) for x in b1] == pytest.approx(r1)
        assert [float(x) for x in b2] == pytest.approx(r2)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            b_sequence(0, 3)
        with pytest.raises(ValueError):
            b_sequence(3, 0)

    def test_geometric_caps(self):
        assert check_b_bounds(60)["ok"]

    def test_gamma_caps(self):
        assert check_gamma_bound(60)["ok"]


def _float_b(alpha, n_max, C1=1.0, C2=1.0):
    b1, b2 = [1.0], [1.0]
    for n in range(2, n_max + 1):
        s1 = sum(min(k, n - k) ** alpha * b1[k - 1] * b2[n - k - 1] for k in range(1, n))
        s2 = sum(min(k, n - k) ** alpha * b1[k - 1] * b1[n - k - 1] for k in range(1, n))
        b1.append(C1 * s1 / (n - 1))
        b2.append(C2 * n * s2 / (n - 1))
    return b1, b2


# magnitudes kept away from the subnormal range so products of 20 factors stay representable
_mag = st.one_of(st.just(0.0), st.floats(1e-3, 10))
norms_strategy = st.builds(
    lambda u, fu, m, fm: DataNorms(u, u * fu, m, m * fm), _mag, st.floats(0, 1), _mag, st.floats(0, 1))


class TestASequences:
    def test_first_entries(self):
        nm = DataNorms(2.0, 0.5, 3.0, 0.25)
        a = a_sequences(4, nm, 64)
        assert (a.a1[0], a.a2[0], a.a1c[0], a.a2c[0]) == (2.0, 3.0, 0.5, 0.25)

    def test_no_wave_datum(self):
        N, u = 64.0, 0.3
        a = a_sequences(8, DataNorms(u, 0.0, 0.0, 0.0), N)
        for n in range(2, 9, 2):
            assert a.a2[n - 1] == pytest.approx(N ** (n / 2) * u**n)
            assert a.a1[n - 1] == 0.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            a_sequences(3, DataNorms(-1, 0, 0, 0), 10)
        with pytest.raises(ValueError):
            a_sequences(3, DataNorms(1, 0, 0, 0), 0.5)

    @given(norms_strategy, st.floats(1, 1e4))
    def test_orderings(self, nm, N):
        a = a_sequences(20, nm, N)
        tol = 1 + 1e-9
        for n in range(2, 21):
            for n1 in range(1, n):
                n2 = n - n1
                assert a.a1[n1 - 1] * a.a2[n2 - 1] <= a.a1[n - 1] * tol
                assert N * a.a1[n1 - 1] * a.a1[n2 - 1] <= a.a2[n - 1] * tol
                if n1 >= 2 and n2 >= 2:
                    assert a.a1c[n1 - 1] * a.a2[n2 - 1] <= a.a1c[n - 1] * tol
                    assert a.a1[n1 - 1] * a.a2c[n2 - 1] <= a.a1c[n - 1] * tol
                    assert N * a.a1c[n1 - 1] * a.a1[n2 - 1] <= a.a2c[n - 1] * tol
        for big, small in ((a.a1, a.a1c), (a.a2, a.a2c)):
            assert all(y <= x * tol for x, y in zip(big, small))
            assert min(small) >= 0

    def test_first_order_c_factor_counterexample(self):
        # a_{1,c} is the datum itself, not the ratio formula, so this ordering can break
        a = a_sequences(2, DataNorms(1.0, 0.0, 1.0, 1.0), 100.0)
        assert a.a1[0] * a.a2c[0] > a.a1c[1]


class TestConstants:
    @pytest.mark.parametrize("args, expected", [((0, -1, 1), 1.75), ((2, 0, 3), 2.0), ((0, 0, 1), 1.25)])
    def test_s_star(self, args, expected):
        assert s_star(*args) == expected

    def test_c_small(self):
        assert c_small(1) == 54 and c_small(3) == 108

    def test_rho_zero_time(self):
        spec = InitialDataSpec.create("a", 64, -1, -1)
        assert rho_factor(spec, 0.0) == (0.0, 0.0)
        with pytest.raises(ValueError):
            rho_factor(spec, -1.0)

    def test_rho_linear_in_C(self):
        spec = InitialDataSpec.create("d", 64, 1, -3)
        r1, _ = rho_factor(spec, 1e-6, 10)
        r2, _ = rho_factor(spec, 1e-6, 20)
        assert r2 == pytest.approx(2 * r1)

    @pytest.mark.parametrize("case, expo", [("a", lambda s, l: s - l - 0.5), ("d", lambda s, l: -s)])
    def test_rho_scaling(self, case, expo):
        s, l = POINTS[case]
        vals = []
        for N in (64, 128, 256, 512, 1024):
            spec = InitialDataSpec.create(case, N, s, l)
            T = choose_T(case, N, s, l, A=spec.A).T
            _, scaling = rho_factor(spec, T)
            vals.append(scaling / (spec.r**-2 * N ** expo(s, l)))
        assert max(vals) / min(vals) <= 3


class TestTimeChoice:
    def test_case_a_formula(self):
        for N in (64, 256):
            L = math.log(N)
            assert choose_T("a", N, -1, -1).T == pytest.approx(L**6 * L**0.5 * N**-2.5, rel=1e-12)

    def test_case_d_formula(self):
        N = 128
        assert choose_T("d", N, 1, -3).T == pytest.approx(math.log(N) ** 6 * N**-4.0, rel=1e-12)

    def test_case_c_prime_ceiling(self):
        ch = choose_T("c'", 128, -2, -1)
        assert ch.T == pytest.approx(math.log(128) ** 6 * 128**-4.0)
        assert ch.ceiling == pytest.approx(1 / 128) and ch.ceiling_ok

    def test_outside_region(self):
        with pytest.raises(ValueError):
            choose_T("d", 64, -1, -1)

    @pytest.mark.parametrize("case", list(POINTS))
    def test_asymptotically_small(self, case):
        assert choose_T(case, 256, *POINTS[case]).asymptotically_ok

    @pytest.mark.parametrize("case, s, l, d", [
        ("a", -1, -1, 1), ("a", -2, -1, 3), ("b", 0, 1, 1), ("c", 0, 2, 1), ("c'", -2, -1, 1),
        ("d", 1, -3, 1), ("d", 2, -1, 2), ("f", 0.2, -2, 1), ("f", 0.5, -1.8, 4),
        ("e", -0.2, -2, 1), ("e", -1, -2, 2), ("e", -2, -3, 1)])
    def test_prediction_composition(self, case, s, l, d):
        for N in (64, 1000, 10**6):
            T = choose_T(case, N, s, l, d).T
            got = predicted_lower_bound(case, N, T, s, l, d)
            assert got == pytest.approx(math.log(N) ** 2, rel=1e-9)

    def test_e_log_branch(self):
        N, A = 256, 40.0
        got = predicted_lower_bound("e", N, 1.0, -0.5, -2, 1, A=A)
        assert got == pytest.approx(math.log(N) ** -4 * N**2.5 * math.log(A))


class TestWeightNorms:
    def test_unit_interval(self):
        R = Region((Cuboid((0.0,), (0.5,)),))
        assert weight_norm_region(0, False, R) == pytest.approx(1.0, rel=1e-12)

    def test_abs_factor_closed_form(self):
        R = Region((Cuboid((0.0,), (1.0,)),))
        # int_{-1}^{1} xi^2 dxi = 2/3, midpoint error O(h^2)
        assert weight_norm_region(0, True, R, cells_per_side=512) == pytest.approx(math.sqrt(2 / 3), rel=1e-5)

    def test_exclusion(self):
        R = Region((Cuboid((0.0,), (2.0,)),))
        inner = Region((Cuboid((0.0,), (1.0,)),))
        assert weight_norm_region(0, False, R, exclude=inner) == pytest.approx(math.sqrt(2.0))

    def test_unbounded_rejected(self):
        with pytest.raises(ValueError):
            weight_norm_region(0, False, ~Region((Cuboid((0.0,), (1.0,)),)))

    @pytest.mark.parametrize("s, d", [(0.5, 1), (1.0, 2)])
    def test_growth_rate(self, s, d):
        vals = []
        for A in (50.0, 100.0, 200.0):
            R = Region((Cuboid((0.0,) * d, (A / 2,) * d),))
            vals.append(weight_norm_region(s, False, R, cells_per_side=64) / A ** (d / 2 + s))
        assert max(vals) / min(vals) < 1.2

    @pytest.mark.parametrize("case", ["a", "c", "d", "f"])
    def test_bessel_potential_estimates(self, case):
        spec = InitialDataSpec.create(case, 64, *POINTS[case])
        rows = bessel_potential_check(spec, 6)
        assert all(r["ok1"] and r["ok2"] for r in rows)

    def test_data_norms_case_d(self):
        spec = InitialDataSpec.create("d", 64, 1, -3)
        nm = data_norms(spec)
        # u0 lives on Q only, n0 on N e1 + Q only
        assert nm.u_c == 0.0 and nm.n_c == pytest.approx(nm.n)
        amp = spec.r / math.sqrt(spec.cuboid.volume)
        half = spec.cuboid.half[0]
        ref = amp * math.sqrt(quad(lambda x: (1 + x * x) ** -1.0, -half, half)[0])
        assert nm.u == pytest.approx(ref, rel=1e-3)


class TestUpperBounds:
    def _setup(self, N=128):
        s, l = POINTS["a"]
        spec = InitialDataSpec.create("a", N, s, l)
        grid = make_grid(spec, 2)
        T = 1e-4 * choose_T("a", N, s, l, A=spec.A).T
        return spec, T, picard_terms(spec, grid, T, 2, 32)

    def test_second_order_l2_ratios(self):
        spec, T, terms = self._setup()
        rep = verify_upper_bounds(terms, BoundLedger.for_spec(spec, 2), T, spec)
        assert all(r["ratio"] <= 1 for r in rep.rows if r["n"] == 2 and r["bound"].startswith("L2"))

    def test_first_order_is_data(self):
        spec, T, terms = self._setup()
        rep = verify_upper_bounds(terms[:1], BoundLedger.for_spec(spec, 1), T, spec)
        assert rep.ok and rep.max_ratio > 0.9

    def test_monotone_in_constant(self):
        spec, T, terms = self._setup(64)
        ratios = [verify_upper_bounds(terms, BoundLedger.for_spec(spec, 2, C), T, spec).max_ratio
                  for C in (1, 10, 100)]
        assert ratios[0] >= ratios[1] >= ratios[2]
