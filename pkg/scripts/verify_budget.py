"""Time ``verify all`` suite by suite against the wall-clock budgets.

Suites run one after another, so the total is an upper bound on the
parallel ``verify all`` time.

    python3 scripts/verify_budget.py
"""

import argparse
import time

from serfati_flows.harness import suites

TOTAL_BUDGET = 20 * 60.0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("selectors", nargs="*", default=["all"])
    args = ap.parse_args()
    verdicts = []
    total = 0.0
    print(f"{'suite':<18} {'seconds':>8} {'budget':>8}")
    for name in suites.resolve(args.selectors):
        t0 = time.perf_counter()
        verdicts.extend(suites.run_suite(name))
        secs = time.perf_counter() - t0
        total += secs
        budget = suites.SUITES[name].budget
        print(f"{name:<18} {secs:8.1f} {'' if budget is None else f'{budget:8.0f}'}")
    failed = [v for v in verdicts if not v.passed]
    print(f"verify: {len(verdicts)} verdicts, {len(failed)} failed, {total:.1f}s sequential, budget {TOTAL_BUDGET:.0f}s")
    raise SystemExit(0 if not failed and total <= TOTAL_BUDGET else 1)


if __name__ == "__main__":
    main()
