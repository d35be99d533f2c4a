"""Table types, validation errors, and CSV round trips."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellwell import (
    BioAssessment,
    CellTable,
    WellTable,
    join,
    load_assessment,
    load_cell_table,
    load_well_table,
    write_assessment,
    write_cell_table,
    write_well_table,
)
from cellwell.datamodel import format_float
from cellwell.errors import (
    ClassRankInconsistent,
    DimensionMismatch,
    DuplicateWell,
    EmptyInput,
    MissingColumn,
    NonNumericCell,
    RankNotPermutation,
    UnknownClassLabel,
    WellIdMismatch,
    WellWithSingleCell,
)


def small_cells():
    ids = ("A", "A", "B", "B", "B")
    values = np.arange(10.0).reshape(5, 2)
    return CellTable(ids, ("f1", "f2"), values)


def small_assessment():
    return BioAssessment(("A", "B"), (1, 2), ("Low", "High"))


class TestCellTable:
    def test_well_order_is_first_appearance(self):
        t = CellTable(("B", "B", "A", "A"), ("f",), np.ones((4, 1)))
        assert t.well_order == ("B", "A")

    def test_rows_of_returns_row_indices(self):
        t = small_cells()
        assert t.rows_of("B").tolist() == [2, 3, 4]
        np.testing.assert_array_equal(t.values[t.rows_of("A")], [[0, 1], [2, 3]])

    def test_counts(self):
        t = small_cells()
        assert (t.n_cells, t.n_wells, t.dim) == (5, 2, 2)

    def test_single_cell_well_rejected(self):
        with pytest.raises(WellWithSingleCell):
            CellTable(("A", "A", "B"), ("f",), np.ones((3, 1)))

    def test_non_finite_rejected(self):
        vals = np.ones((4, 1))
        vals[2, 0] = np.nan
        with pytest.raises(NonNumericCell):
            CellTable(("A", "A", "B", "B"), ("f",), vals)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            CellTable(("A", "A"), ("f1", "f2"), np.ones((2, 3)))

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            CellTable((), ("f",), np.empty((0, 1)))

    def test_values_are_read_only(self):
        t = small_cells()
        with pytest.raises(ValueError):
            t.values[0, 0] = 99.0

    def test_select_wells_preserves_row_order(self):
        t = small_cells()
        sub = t.select_wells(["B"])
        assert sub.well_ids == ("B", "B", "B")
        np.testing.assert_array_equal(sub.values, t.values[2:])

    def test_select_wells_empty_selection(self):
        with pytest.raises(EmptyInput):
            small_cells().select_wells(["Z"])


class TestWellTable:
    def test_duplicate_well_rejected(self):
        with pytest.raises(DuplicateWell):
            WellTable(("A", "A"), ("f",), np.ones((2, 1)))

    def test_zero_feature_columns_allowed(self):
        t = WellTable(("A", "B"), (), np.empty((2, 0)))
        assert t.n_wells == 2

    def test_reordered_subset(self):
        t = WellTable(("A", "B", "C"), ("f",), np.asarray([[1.0], [2.0], [3.0]]))
        sub = t.reordered(("C", "A"))
        assert sub.well_ids == ("C", "A")
        np.testing.assert_array_equal(sub.values.ravel(), [3.0, 1.0])


class TestBioAssessment:
    def test_rank_and_class_lookup(self):
        a = small_assessment()
        assert a.rank_of("B") == 2
        assert a.class_of("A") == "Low"
        assert a.classes_for(("B", "A")) == ("High", "Low")
        assert a.ranks_for(("B", "A")) == (2, 1)

    def test_rank_must_be_permutation(self):
        with pytest.raises(RankNotPermutation):
            BioAssessment(("A", "B"), (1, 3), ("Low", "High"))

    def test_class_must_be_known(self):
        with pytest.raises(UnknownClassLabel):
            BioAssessment(("A", "B"), (1, 2), ("Low", "huge"))

    def test_classes_must_follow_rank(self):
        with pytest.raises(ClassRankInconsistent):
            BioAssessment(("A", "B"), (1, 2), ("High", "Low"))

    def test_select_wells_reranks(self):
        a = BioAssessment(
            ("A", "B", "C", "D"), (4, 2, 1, 3), ("High", "Medium", "Low", "Medium")
        )
        sub = a.select_wells(("A", "C"))
        # C (old rank 1) and A (old rank 4) become 1 and 2.
        assert sub.rank_of("C") == 1
        assert sub.rank_of("A") == 2
        assert sub.classes == a.classes_for(sub.well_ids)


class TestJoin:
    def test_join_aligns_assessment_to_cell_order(self):
        cells = CellTable(("B", "B", "A", "A"), ("f",), np.ones((4, 1)))
        ds = join(cells, small_assessment())
        assert ds.assessment.well_ids == ("B", "A")

    def test_join_mismatch_is_symmetric(self):
        cells = small_cells()
        bad = BioAssessment(("A", "C"), (1, 2), ("Low", "High"))
        with pytest.raises(WellIdMismatch) as err:
            join(cells, bad)
        assert "B" in str(err.value) and "C" in str(err.value)

    def test_join_checks_well_table(self):
        cells = small_cells()
        wells = WellTable(("A", "Z"), ("g",), np.ones((2, 1)))
        with pytest.raises(WellIdMismatch):
            join(cells, small_assessment(), wells)


class TestCsvRoundTrip:
    def test_cells_round_trip_bit_exact(self, tmp_path):
        t = CellTable(
            ("A", "A", "B", "B"),
            ("f1", "f2"),
            np.asarray([[0.1, -7.25e16], [1e-300, 3.0], [np.pi, 2**-40], [5.5, 6.5]]),
        )
        path = tmp_path / "cells.csv"
        write_cell_table(t, path)
        back = load_cell_table(path)
        assert back.well_ids == t.well_ids
        assert back.feature_names == t.feature_names
        np.testing.assert_array_equal(back.values, t.values)

    def test_wells_round_trip(self, tmp_path):
        t = WellTable(("A", "B"), ("g1",), np.asarray([[1.25], [-2.5]]))
        path = tmp_path / "wells.csv"
        write_well_table(t, path)
        back = load_well_table(path)
        assert back.well_ids == t.well_ids
        np.testing.assert_array_equal(back.values, t.values)

    def test_assessment_round_trip(self, tmp_path):
        a = BioAssessment(("A", "B", "C"), (2, 1, 3), ("Medium", "Low", "High"))
        path = tmp_path / "assess.csv"
        write_assessment(a, path)
        back = load_assessment(path)
        assert back == a

    def test_missing_file_column(self, tmp_path):
        path = tmp_path / "cells.csv"
        path.write_text("well_id,f1\nA,1.0\nA,2.0\nB,3.0\nB\n", encoding="utf-8")
        with pytest.raises(MissingColumn):
            load_cell_table(path)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "cells.csv"
        path.write_text("well_id,f1\nA,1.0\nA,oops\n", encoding="utf-8")
        with pytest.raises(NonNumericCell):
            load_cell_table(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "cells.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(MissingColumn):
            load_cell_table(path)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_round_trips(x):
    assert float(format_float(x)) == x
