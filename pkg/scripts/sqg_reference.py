"""SQG reference runs: steady profiles and small random data in both velocity modes.

Writes one run directory per case under --out and prints each run's verdicts.

    python3 scripts/sqg_reference.py --out runs/reference
"""

import argparse
from pathlib import Path

import numpy as np

from serfati_flows.harness import runner
from serfati_flows.harness.config import RunConfig

CASES = [
    # steady profiles would trip the short-time halt, which is sized for small data
    dict(init="sine", mode="spectral", halt=False),
    dict(init="sine", mode="serfati", halt=False),
    dict(init="radial", mode="spectral", halt=False),
    dict(init="random", mode="spectral"),
    dict(init="random", mode="serfati"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/reference"))
    ap.add_argument("--grid", type=int, default=128)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--dt", type=float, default=1.0 / 64)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    failed = 0
    for case in CASES:
        cfg = RunConfig(experiment="sqg", N=args.grid, L=8 * np.pi, T=args.T, dt=args.dt, seed=args.seed, output_every=8, **case)
        out = runner.run(cfg, args.out / f"{case['init']}-{case['mode']}")
        print(f"== {out}")
        for v in runner.reemit(out):
            print("  ", v.line())
            failed += not v.passed
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
