"""Print the Picard iteration ledger for small random SQG data.

    python3 scripts/picard_ledger.py --rms 0.2 --n-max 8
"""

import argparse

from serfati_flows.harness.suites import PICARD_SETTINGS, run_picard


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=PICARD_SETTINGS["N"])
    ap.add_argument("--T", type=float, default=PICARD_SETTINGS["T"])
    ap.add_argument("--dt", type=float, default=PICARD_SETTINGS["dt"])
    ap.add_argument("--rms", type=float, default=PICARD_SETTINGS["rms"])
    ap.add_argument("--seed", type=int, default=PICARD_SETTINGS["seed"])
    ap.add_argument("--n-max", type=int, default=PICARD_SETTINGS["n_max"])
    args = ap.parse_args()

    led = run_picard(N=args.grid, T=args.T, dt=args.dt, rms=args.rms, seed=args.seed, n_max=args.n_max)
    print(f"{'n':>3} {'sup|u_n|':>12} {'C^r(theta_n)':>14} {'D_n':>12}")
    for row in led.rows:
        d = "" if row.D is None else f"{row.D:12.4e}"
        print(f"{row.n:>3} {row.u_sup:12.4e} {row.theta_cr:14.4e} {d}")
    print(f"first iterate error: {led.theta1_error:.3e}")
    print(f"fixed-point change:  {led.fixed_point_change:.3e}")


if __name__ == "__main__":
    main()
