"""
View Saved Results
Simple script to display result.json and CSV files written by the CLI
"""

import csv
import json
import os
import sys


def _banner(title):
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}\n")


def view_json(path):
    """Summarize a result.json by its kind"""
    with open(path, 'r') as f:
        result = json.load(f)

    kind = result.get('kind', 'unknown')
    _banner(f"{kind} result: {path}")
    print(f"Status: {result.get('status', 'N/A')}")

    if kind == 'solve':
        print(f"U_gamma: {result['u_gamma_seconds']} s ({result['u_gamma_months']} months)")
        print(f"alpha={result['alpha']} beta={result['beta']} q={result['q']}")
        print(f"Iterations: {result['iterations']}")
    elif kind == 'simulate':
        print(f"Seed: {result['seed']}")
        print(f"U_gamma estimate: {result['u_gamma_estimate']}")
        print(f"Final state: {result['final_state']}")
        for key, value in result.get('event_counts', {}).items():
            print(f"  {key}: {value}")
    elif kind == 'validate':
        print(f"Analytic: {result['analytic_u_seconds']} s")
        print(f"Simulated mean: {result['sim_mean']} +/- {result['sim_ci95']}")
        print(f"Relative error: {result['relative_error']} (tolerance {result['tolerance']})")
    elif kind == 'compare-topologies':
        print(f"Complete mean: {result['complete']['mean']}")
        print(f"Scale-Free mean: {result['scale_free']['mean']}")
        print(f"Ratio: {result['ratio']}")
    elif kind == 'sweep':
        for row in result.get('rows', []):
            print(f"  {row['param']}={row['value']}: {row['u_gamma_seconds']} s [{row['status']}]")

    if result.get('note'):
        print(f"\nNote: {result['note']}")


def view_csv(path, limit=20):
    """Print the header and the first `limit` rows of a CSV"""
    with open(path, 'r', newline='') as f:
        rows = list(csv.reader(f))
    if not rows:
        print(f"{path} is empty")
        return

    _banner(f"{path} ({len(rows) - 1} rows)")
    header, body = rows[0], rows[1:]
    widths = [max(len(cell) for cell in column) for column in zip(header, *body[:limit])]
    print('  '.join(name.ljust(w) for name, w in zip(header, widths)))
    print("-" * 60)
    for row in body[:limit]:
        print('  '.join(cell.ljust(w) for cell, w in zip(row, widths)))
    if len(body) > limit:
        print(f"... {len(body) - limit} more rows")


if __name__ == '__main__':
    if len(sys.argv) < 2:
        print("Usage:")
        print("  python view_results.py <result.json>          # Summarize a result")
        print("  python view_results.py <file.csv> [rows]      # Show a sweep or trajectory table")
        sys.exit(1)

    path = sys.argv[1]
    if not os.path.exists(path):
        print(f"File not found: {path}")
        sys.exit(1)

    if path.endswith('.csv'):
        view_csv(path, int(sys.argv[2]) if len(sys.argv) > 2 else 20)
    else:
        view_json(path)
