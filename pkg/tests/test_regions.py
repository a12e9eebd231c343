import csv
import io
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zakharov_inflation.bounds import choose_T
from zakharov_inflation.regions import (
    CSV_COLUMNS,
    case_region,
    classify_inflation,
    classify_lwp,
    pick_case_for,
    region_grid,
    verdict,
    verdicts_to_csv,
)

F = Fraction


class TestInflationClauses:
    def test_wave_point(self):
        v = classify_inflation(-2, -1, 1)
        assert v.wave_inflation and "W4" in v.clauses

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_schrodinger_point(self, d):
        v = classify_inflation(1, -2, d)
        assert v.schrodinger_inflation and "S1" in v.clauses

    def test_neither(self):
        v = classify_inflation(2, 2, 3)
        assert not v.inflation and v.clauses == []

    def test_boundary_is_strict(self):
        # l = s - 2 exactly: first Schrodinger clause excluded
        assert "S1" not in classify_inflation(1, -1, 1).clauses
        assert "S1" in classify_inflation(1, F(-11, 10), 1).clauses

    @given(st.integers(-40, 40), st.integers(-40, -10), st.integers(1, 4))
    def test_wave_monotone_in_s(self, s10, l10, d):
        s, l = F(s10, 10), F(l10, 10)
        if classify_inflation(s, l, d).wave_inflation:
            assert classify_inflation(s - F(1, 10), l, d).wave_inflation


class TestLWP:
    def test_two_dim_point(self):
        assert classify_lwp(0, F(-1, 2), 2)

    def test_excluded_point(self):
        assert not classify_lwp(2, 0, 4)

    def test_endpoint_line(self):
        assert classify_lwp(F(1, 4), F(-1, 2), 1)

    def test_boundary_line_three_dim(self):
        assert classify_lwp(2, 3, 3)

    def test_d1_endpoint_not_inflation(self):
        v = verdict(0, F(-1, 2), 1)
        assert v.lwp and not v.inflation

    def test_float_input(self):
        assert classify_lwp(0.25, -0.5, 1)


class TestCases:
    @pytest.mark.parametrize("pt, case", [((-1, -1, 1), "a"), ((1, -3, 1), "d"), ((1, -3, 3), "d"),
                                          ((0.4, -1.6, 1), "f")])
    def test_pick(self, pt, case):
        assert pick_case_for(*pt) == case

    def test_first_match_order(self):
        # inside the f range, but l - s < -2 with s > 0 routes to d first
        assert case_region("f", 0.5, -1.8, 4)
        assert case_region("d", 0.5, -1.8, 4)
        assert pick_case_for(0.5, -1.8, 4) == "d"

    def test_outside_everything(self):
        assert pick_case_for(2, 2, 3) is None

    def test_case_c_requires_l_at_least_minus_one(self):
        assert case_region("c", 0, 2, 1)
        assert not case_region("c", 0, F(-11, 10), 1)

    def test_unknown_case(self):
        with pytest.raises(ValueError):
            case_region("z", 0, 0, 1)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_grid_disjointness(d):
    rows = region_grid(d)
    assert len(rows) == 81 * 81
    assert not any(v.lwp and v.inflation for v in rows)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_grid_coverage(d):
    for v in region_grid(d):
        if v.inflation:
            assert v.covering_case is not None
            assert choose_T(v.covering_case, 256, float(v.s), float(v.l), d).asymptotically_ok
        else:
            assert v.covering_case is None


def test_small_atlas_d1():
    rows = region_grid(1, (-1, 3), (-2, 4), F(1, 4))
    assert not any(v.lwp and v.inflation for v in rows)
    assert all(v.covering_case for v in rows if v.inflation)


def test_d1_uncovered_strip():
    missing = {(float(v.s), float(v.l)) for v in region_grid(1) if v.inflation and not v.covering_case}
    assert missing == {(-0.9, -1.3), (-0.8, -1.2), (-0.8, -1.1), (-0.7, -1.1)}


def test_csv_roundtrip():
    rows = region_grid(1, (0, 1), (0, 1), F(1, 2))
    text = verdicts_to_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0].keys()) == CSV_COLUMNS
    assert len(parsed) == 9
    assert verdicts_to_csv(rows) == text


def test_step_must_be_positive():
    with pytest.raises(ValueError):
        region_grid(1, step=0)
