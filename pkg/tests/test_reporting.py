import math
import unittest
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from varinf.harness import CSV_COLUMNS, ErrorRecord
from varinf.reporting import ERROR_COLUMNS, compile_summary, save_records, summarize


def record(algorithm='bethe', sweep_value=1.0, rep=0, err=0.1, converged=True, err_log_z=0.2):
    return ErrorRecord(1, 'complete', 4, 6, 'mixed', 0.2, 'over_jhat', sweep_value, rep, 123, algorithm,
                       err, err / 2, err_log_z, -1.0, -1.2, converged, 10, 1.0, 1.0, float('nan'))


#SAVE_RECORDS
def test_save_records_keeps_row_order(tmp_path):
    """
    Rows are written in the order given and NaN cells come out empty.
    """
    path = tmp_path / "raw.csv"
    frame = save_records([record('lbp'), record('bethe')], CSV_COLUMNS, str(path))
    assert list(frame['algorithm']) == ['lbp', 'bethe']
    lines = path.read_text().splitlines()
    assert lines[0] == ','.join(CSV_COLUMNS)
    assert lines[1].endswith(',')


def test_save_records_io_error(caplog):
    with patch('pandas.DataFrame.to_csv', side_effect=IOError("Disk full")):
        with pytest.raises(IOError) as exc_info:
            save_records([record()], CSV_COLUMNS, "raw.csv")
    assert "Disk full" in str(exc_info.value)
    assert "Failed to write raw records to raw.csv" in caplog.text


#SUMMARIZE
def test_summarize_means_over_converged_rows():
    frame = pd.DataFrame([r.as_row() for r in [
        record(rep=0, err=0.1), record(rep=1, err=0.3), record(rep=2, err=5.0, converged=False)]])
    summary = summarize(frame)
    assert len(summary) == 1
    row = summary.iloc[0]
    assert (row['n_rows'], row['n_used'], row['n_excluded'], row['n_missing_logZ']) == (3, 2, 1, 0)
    assert row['err_singleton'] == pytest.approx(0.2)
    assert row['err_pairwise'] == pytest.approx(0.1)


def test_summarize_counts_missing_log_z():
    frame = pd.DataFrame([r.as_row() for r in [record(rep=0), record(rep=1, err_log_z=float('nan'))]])
    row = summarize(frame).iloc[0]
    assert row['n_missing_logZ'] == 1
    assert row['err_logZ'] == pytest.approx(0.2)


def test_summarize_keeps_rows_without_sweep_value():
    """Roster rows of c and zeta sweeps carry no sweep value but still get a group of their own."""
    frame = pd.DataFrame([r.as_row() for r in [record('bethe', float('nan')), record('fc', 1.0),
                                               record('fc', 2.0)]])
    summary = summarize(frame)
    assert len(summary) == 3
    bethe = summary[summary['algorithm'] == 'bethe'].iloc[0]
    assert math.isnan(bethe['sweep_value'])
    assert bethe['n_rows'] == 1


def test_summarize_group_without_converged_rows():
    frame = pd.DataFrame([record('lbp', converged=False).as_row(), record('bethe').as_row()])
    summary = summarize(frame).set_index('algorithm')
    assert summary.loc['lbp', 'n_used'] == 0
    assert summary.loc['lbp', 'n_excluded'] == 1
    assert all(np.isnan(summary.loc['lbp', column]) for column in ERROR_COLUMNS)


#COMPILE_SUMMARY
class TestCompileSummary(unittest.TestCase):
    """
    Tests for compile_summary, which turns raw sweep records into the summary CSV and Excel files.
    """

    @patch('logging.warning')
    def test_no_records(self, mock_warning):
        """
        An empty frame produces no files and a warning.
        """
        result = compile_summary(pd.DataFrame(columns=CSV_COLUMNS), 'summary.csv', 'summary.xlsx')
        mock_warning.assert_called_once_with("No records to summarize")
        self.assertEqual(result, (None, None))

    @patch('pandas.DataFrame.to_csv')
    @patch('pandas.DataFrame.to_excel')
    def test_writes_both_formats(self, mock_to_excel, mock_to_csv):
        frame = pd.DataFrame([record().as_row()])
        result = compile_summary(frame, 'summary.csv', 'summary.xlsx')
        mock_to_csv.assert_called_once()
        mock_to_excel.assert_called_once()
        self.assertEqual(result, ('summary.csv', 'summary.xlsx'))

    @patch('pandas.DataFrame.to_csv', side_effect=Exception("Error writing CSV"))
    @patch('logging.error')
    def test_error_handling(self, mock_logging_error, mock_to_csv):
        """
        Failures while writing are logged and raised to the caller.
        """
        frame = pd.DataFrame([record().as_row()])
        with self.assertRaises(Exception) as context:
            compile_summary(frame, 'summary.csv', 'summary.xlsx')
        self.assertTrue('Error writing CSV' in str(context.exception))
        mock_logging_error.assert_called_with('Failed to compile sweep summary: Error writing CSV')
