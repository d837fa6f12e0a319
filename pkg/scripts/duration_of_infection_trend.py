"""Duration of infection and time-to-peak as the treatment start is delayed."""

import argparse

from antiviral_dynamics.workbench import ScenarioConfig, run_scenario

DEFAULT_EFFICACY = {"B": (0.73, 0.9), "E": (0.54, 0.8)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--patients", default="B,E")
    ap.add_argument("--starts", default="4,6,9,17,20,25", help="treatment start times (dpi)")
    args = ap.parse_args()
    starts = tuple(float(s) for s in args.starts.split(","))
    print("patient  eta_p   t_tr    t_peak      v_max      DI")
    for key in args.patients.split(","):
        for eta in DEFAULT_EFFICACY.get(key, (0.5, 0.9)):
            cfg = ScenarioConfig(key, 150.0, t_tr=starts, eta_p=(eta,), outputs=("metrics",), max_horizon=600.0)
            for r in run_scenario(cfg):
                if r.error:
                    print(f"{key:7} {eta:5.2f} {r.t_tr:6.1f}  {r.error}")
                    continue
                m = r.metrics
                print(f"{key:7} {eta:5.2f} {r.t_tr:6.1f} {m.t_peak:9.2f} {m.v_max:10.3g} {m.di:7.1f}")


if __name__ == "__main__":
    main()
