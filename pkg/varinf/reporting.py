import logging

import numpy as np
import pandas as pd

ERROR_COLUMNS = ['err_singleton', 'err_pairwise', 'err_logZ']
GROUP_KEYS = ['sweep_kind', 'sweep_value', 'theta_halfwidth', 'algorithm']


#1. Raw records and summary tables
def save_records(records, columns, csv_path):
    """
    Write raw sweep records to CSV in the given row order.

    Parameters:
    - records (list of ErrorRecord): Rows to write.
    - columns (list of str): Column order.
    - csv_path (str): Destination.

    Returns:
    - pd.DataFrame: The written table.
    """
    frame = pd.DataFrame([record.as_row() for record in records], columns=columns)
    try:
        frame.to_csv(csv_path, index=False, na_rep='')
    except IOError as e:
        logging.error(f"Failed to write raw records to {csv_path}: {e}")
        raise IOError(f"An error occurred while writing the raw records: {e}")
    logging.info(f"Wrote {len(frame)} records to {csv_path}")
    return frame


def summarize(frame):
    """
    Per-(sweep kind, sweep value, theta half-width, algorithm) means of the error columns.

    Only converged rows enter the means; n_excluded counts the others and n_missing_logZ the converged
    rows whose log Z error is missing. Rows without a sweep value (the roster rows of c and zeta sweeps)
    form their own group.
    """
    converged = frame['converged'].astype(bool)
    usable = frame[converged]
    rows = frame.groupby(GROUP_KEYS, dropna=False, sort=True).size().rename('n_rows')
    used = usable.groupby(GROUP_KEYS, dropna=False, sort=True).size().rename('n_used')
    missing = (usable.assign(missing=~np.isfinite(usable['err_logZ'].astype(float)))
               .groupby(GROUP_KEYS, dropna=False, sort=True)['missing'].sum().rename('n_missing_logZ'))
    means = usable.groupby(GROUP_KEYS, dropna=False, sort=True)[ERROR_COLUMNS].mean()
    summary = pd.concat([rows, used, missing, means], axis=1).reset_index()
    summary[['n_used', 'n_missing_logZ']] = summary[['n_used', 'n_missing_logZ']].fillna(0).astype(int)
    summary['n_excluded'] = summary['n_rows'] - summary['n_used']
    return summary[GROUP_KEYS + ['n_rows', 'n_used', 'n_excluded', 'n_missing_logZ'] + ERROR_COLUMNS]


def compile_summary(frame, csv_path, excel_path):
    """
    Summarize raw records and save the table as CSV and Excel.

    Parameters:
    - frame (pd.DataFrame): Raw records as written by save_records.
    - csv_path (str): Where the summary CSV goes.
    - excel_path (str): Where the summary workbook goes.

    Returns:
    - tuple: The CSV and Excel paths, or (None, None) when there are no records.

    Raises:
    - Exception: If the summary cannot be computed or saved.
    """
    if frame.empty:
        logging.warning("No records to summarize")
        return None, None
    try:
        summary = summarize(frame)
        summary.to_csv(csv_path, index=False, na_rep='')
        summary.to_excel(excel_path, index=False)
        return csv_path, excel_path
    except Exception as e:
        logging.error(f"Failed to compile sweep summary: {e}")
        raise Exception(f"An error occurred while compiling the sweep summary: {e}")
