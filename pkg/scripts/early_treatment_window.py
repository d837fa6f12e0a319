"""Early treatment time t_e relative to the untreated peak, per patient."""

import argparse
import statistics

from antiviral_dynamics.workbench.reports import early_treatment_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--method", choices=("simulation", "closed_form"), default="simulation")
    ap.add_argument("--eta-p", type=float, default=None, help="fixed efficacy; default maximises over efficacy")
    args = ap.parse_args()
    rows = early_treatment_rows(eta_p=args.eta_p, method=args.method)
    print("patient    t_e   t_v_max  ratio")
    for r in rows:
        te = f"{r['t_e']:7.3f}" if r["t_e"] is not None else "   none"
        ratio = f"{r['ratio']:.3f}" if r["ratio"] is not None else "-"
        print(f"{r['patient']:7} {te} {r['t_v_max']:8.3f}  {ratio}")
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    if ratios:
        print(f"median ratio {statistics.median(ratios):.3f}  range [{min(ratios):.3f}, {max(ratios):.3f}]")


if __name__ == "__main__":
    main()
