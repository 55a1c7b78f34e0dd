"""
Benchmark sweeps through the command line
=========================================

Runs the COMPAS grid (five variants, three lambdas, three seeds) with
``fairrep sweep`` and prints the per-lambda means. Pass ``--adult`` to run
the much longer Adult grid as well (tens of minutes on one core).

Needs the raw files from ``python scripts/fetch_data.py``.

Run with ``python demos/03_benchmark_sweeps.py [--adult] [--jobs N]``.
"""

# %%
import argparse
import csv
import json
from pathlib import Path

from fairrep import cli

parser = argparse.ArgumentParser()
parser.add_argument("--adult", action="store_true")
parser.add_argument("--jobs", type=int, default=1)
parser.add_argument("--out", default="runs/demo")
args = parser.parse_args()

# %%
def sweep(dataset):
    out = Path(args.out) / dataset
    code = cli.main(["sweep", "--dataset", dataset, "--jobs", str(args.jobs), "--out-dir", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    print(f"\n{dataset}: exit code {code}, test base-rate gap {summary['delta_br']:.3f}")
    for metric in ("err_gap", "eo_gap", "dp_gap", "joint_err"):
        print(f"\n  mean {metric} over seeds")
        with open(out / f"{metric}.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        header = rows[0][:-1]
        print("  " + " ".join(f"{h:>9}" for h in header))
        for row in rows[1:]:
            print("  " + " ".join(f"{float(v):9.3f}" if v else f"{'-':>9}" for v in row[:-1]))


# %% [markdown]
# COMPAS has nearly balanced groups and a modest base-rate gap.

# %%
sweep("compas")

# %% [markdown]
# Adult has a larger base-rate gap; the grid reaches lambda = 1000.

# %%
if args.adult:
    sweep("adult")
