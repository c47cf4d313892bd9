"""
Result File Writers
result.json, sweep.csv and trajectory.csv with byte-stable formatting
"""

import csv
import json
import math
import os
from contextlib import contextmanager

TRAJECTORY_COLUMNS = ['t', 'n0', 'n1', 'n2', 'n3']


def format_number(value):
    """Fixed %.9g formatting; infinite values as 'inf', missing values as ''"""
    if value is None:
        return ''
    if isinstance(value, float) and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if isinstance(value, int):
        return str(value)
    return f"{value:.9g}"


@contextmanager
def output_session(output_dir):
    """
    Create the output directory and yield it

    Usage:
        with output_session('results') as out:
            write_json(os.path.join(out, 'result.json'), data)
    """
    os.makedirs(output_dir, exist_ok=True)
    yield output_dir


def write_json(path, data):
    with open(path, 'w', newline='\n') as f:
        json.dump(data, f, indent=2, sort_keys=True, allow_nan=False)
        f.write('\n')


def write_csv(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) if not isinstance(v, str) else v for v in row])


def write_trajectory_csv(path, rows):
    """Rows of (t, n0, n1, n2, n3)"""
    write_csv(path, TRAJECTORY_COLUMNS, rows)


def sweep_columns(with_simulation):
    columns = ['param', 'value', 'u_gamma_seconds', 'u_gamma_months']
    if with_simulation:
        columns += ['sim_mean', 'sim_ci95']
    return columns + ['status']


def write_sweep_csv(path, rows, with_simulation):
    """Sweep table; months are 30-day months"""
    body = []
    for row in rows:
        line = [row.param, row.value, row.u_gamma_seconds, row.u_gamma_months]
        if with_simulation:
            line += [row.sim_mean, row.sim_ci95]
        body.append(line + [row.status])
    write_csv(path, sweep_columns(with_simulation), body)
