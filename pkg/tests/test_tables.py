"""Tests for the embedded reference grids and their runners."""

from fractions import Fraction as F

import pytest
from mpmath import mp, mpf

from aimspike.errors import ConfigurationError
from aimspike.problem import ProblemSpec
from aimspike.tables import (CellResult, TableReport, agree_to_digits,
                             load_table, lookup_reference, matched_digits,
                             run_table, run_table1, run_table3, run_table4,
                             sig_digits_of)


@pytest.fixture(autouse=True)
def _precision():
    with mp.workdps(40):
        yield


class TestSigDigitsOf:
    def test_plain_decimal(self):
        assert sig_digits_of("3.575552") == 7

    def test_leading_zeros_do_not_count(self):
        assert sig_digits_of("0.0001128") == 4

    def test_sign_and_exponent_are_ignored(self):
        assert sig_digits_of("-2.30e-5") == 3

    def test_no_digits_rejected(self):
        with pytest.raises(ConfigurationError):
            sig_digits_of("0.000")


class TestAgreeToDigits:
    def test_exact_match(self):
        assert agree_to_digits("3.575552", "3.575552", 7)

    def test_one_ulp_in_last_place_allowed(self):
        assert agree_to_digits("3.575553", "3.575552", 7)

    def test_two_ulps_rejected(self):
        assert not agree_to_digits("3.575554", "3.575552", 7)

    def test_magnitude_sets_the_place(self):
        # 21.369 at 4 digits: last compared place is 1e-2
        assert agree_to_digits("21.372", "21.369", 4)
        assert not agree_to_digits("21.395", "21.369", 4)

    def test_nan_never_agrees(self):
        assert not agree_to_digits(mp.nan, "3.0", 2)

    def test_nonpositive_digits_rejected(self):
        with pytest.raises(ConfigurationError):
            agree_to_digits("3", "3", 0)


class TestMatchedDigits:
    def test_partial_agreement(self):
        assert matched_digits("3.575552", "3.575556") == 6

    def test_total_disagreement(self):
        assert matched_digits("9.9", "3.5") == 0

    def test_identical_strings_report_reference_length(self):
        assert matched_digits("7.029816", "7.029816") == 7


class TestLoadTable:
    def test_all_four_grids_load(self):
        for which in (1, 2, 3, 4):
            data = load_table(which)
            assert data["title"]

    def test_unknown_grid_rejected(self):
        with pytest.raises(ConfigurationError):
            load_table(5)

    def test_energy_grid_has_nine_decades(self):
        rows = load_table(3)["rows"]
        assert len(rows) == 10
        lams = [F(row["lam"]) for row in rows]
        assert lams == sorted(lams, reverse=True)

    def test_coupling_grid_has_42_cells(self):
        data = load_table(4)
        assert len(data["cells"]) == 42
        # six couplings carry an excitation index; those cells must also
        # explain themselves
        excited = [c for c in data["cells"] if c.get("state_index")]
        assert len(excited) == 5
        assert all(c["lam"] == "100" for c in excited)
        assert all(c.get("note") for c in excited)

    def test_reference_values_carry_enough_figures(self):
        data = load_table(4)
        for cell in data["cells"]:
            block = data["block_config"][cell["lam"]]
            checked = cell.get("check_digits", block["check_digits"])
            assert sig_digits_of(cell["energy"]) >= checked


class TestLookupReference:
    def test_energy_grid_row(self):
        hit = lookup_reference(ProblemSpec(F(1), F(1, 10), F(0)))
        assert hit is not None
        assert hit["table"] == 3
        assert hit["energy"].startswith("3.1120669")

    def test_coupling_grid_cell(self):
        hit = lookup_reference(ProblemSpec(F(4), F(100), F(0)))
        assert hit is not None
        assert hit["table"] == 4
        assert hit["energy"].startswith("11.2650804")

    def test_excited_cell_needs_matching_state(self):
        ground = lookup_reference(ProblemSpec(F(4), F(100), F(1)))
        excited = lookup_reference(ProblemSpec(F(4), F(100), F(1), 1))
        assert ground is None
        assert excited is not None
        assert excited["energy"].startswith("16.2")

    def test_unknown_problem_misses(self):
        assert lookup_reference(ProblemSpec(F(3), F(7), F(0))) is None


class TestTableReport:
    def _cell(self, ok, expected_failure=False, note=""):
        return CellResult(label="lam=1", reference="3.0", computed="3.0",
                          digits_checked=2, ok=ok,
                          expected_failure=expected_failure, iterations=5,
                          termination="converged", note=note, wall_s=0.01)

    def test_all_ok_verdict(self):
        report = TableReport(3, "energies", (self._cell(True),))
        assert report.ok
        assert report.lines()[-1] == "table 3: all cells ok"

    def test_mismatch_verdict_and_mark(self):
        report = TableReport(3, "energies", (self._cell(True),
                                             self._cell(False)))
        assert not report.ok
        assert "MISMATCH" in report.lines()[2]
        assert report.lines()[-1] == "table 3: MISMATCHES PRESENT"

    def test_expected_failure_mark_and_note(self):
        report = TableReport(
            1, "sweep", (self._cell(True, True, note="never settles"),))
        text = "\n".join(report.lines())
        assert "fails as tabulated" in text
        assert "never settles" in text


class TestRunTable3:
    def test_single_row_reproduces_reference(self):
        report = run_table3(rows=["0.0001"])
        assert report.table == 3
        assert len(report.cells) == 1
        cell = report.cells[0]
        assert cell.ok
        assert cell.termination == "converged"
        assert cell.digits_checked >= 20
        assert agree_to_digits(cell.computed, cell.reference, 20)

    def test_unknown_row_rejected(self):
        with pytest.raises(ConfigurationError):
            run_table3(rows=["0.42"])


class TestRunTable4:
    def test_single_cell_reproduces_reference(self):
        report = run_table4(cells=[("1000", 0)])
        cell = report.cells[0]
        assert cell.ok
        assert cell.label.startswith("lam=1000")
        assert agree_to_digits(cell.computed, cell.reference, 20)

    def test_unknown_cell_rejected(self):
        with pytest.raises(ConfigurationError):
            run_table4(cells=[("1000", 9)])

    def test_target_override_reduces_checked_digits(self):
        report = run_table4(cells=[("1000", 0)], target_digits=8)
        assert report.cells[0].digits_checked < 20
        assert report.cells[0].ok


class TestRunTable1:
    def test_reference_column_settles(self):
        report = run_table1(columns=["3"])
        cell = report.cells[0]
        assert cell.ok
        assert not cell.expected_failure
        assert cell.termination == "converged"

    def test_unknown_column_rejected(self):
        with pytest.raises(ConfigurationError):
            run_table1(columns=["7"])


class TestRunTableDispatch:
    def test_dispatches_by_number(self):
        report = run_table(3, rows=["0.0001"])
        assert report.table == 3

    def test_unknown_number_rejected(self):
        with pytest.raises(ConfigurationError):
            run_table(0)
