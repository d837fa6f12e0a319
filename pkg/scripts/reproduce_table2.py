"""Untreated characterisation of the nine built-in patients next to the reference values."""

import argparse

from antiviral_dynamics.workbench.registry import REFERENCE_COLUMNS, reference_row
from antiviral_dynamics.workbench.reports import table2_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=float, default=100.0)
    args = ap.parse_args()
    print(f"{'':3}" + "".join(f"{c:>20}" for c in REFERENCE_COLUMNS))
    for row in table2_rows(horizon=args.horizon):
        ref = reference_row(row["patient"])
        cells = "".join(f"{row[c]:>10.4g}/{ref[c]:<9.4g}" for c in REFERENCE_COLUMNS)
        print(f"{row['patient']:3}{cells}")


if __name__ == "__main__":
    main()
