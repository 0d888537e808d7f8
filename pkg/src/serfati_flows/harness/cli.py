"""Command line entry point: ``serfati-flows <command> [flags]``.

Exit status: 0 when every verdict passes, 1 when any verdict fails, 2 on a
usage error (bad flags, invalid config, unknown suite, unreadable input).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .. import euler3d
from ..fieldio import read_field, write_field
from ..fields import VectorField, curl, make_grid, random_band_limited
from ..kernels import build_kernel_set, dump_tables
from ..littlewood_paley import build_dyadic_family, classical_holder_norm, holder_norm
from ..ul_spaces import hs_ul_norm, lp_ul_norm
from . import runner, suites
from .config import ConfigError, RunConfig, load_config
from .runner import write_monitor_csv
from .verdict import Verdict, write_verdicts

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _report(verdicts) -> int:
    for v in verdicts:
        print(v.line())
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_FAIL


# ---------------------------------------------------------------- run


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = runner.run(cfg, args.out)
    print(f"run directory: {out}")
    return _report(runner.reemit(out))


def cmd_sqg_run(args) -> int:
    cfg = RunConfig(
        experiment="sqg", dim=2, N=args.grid, L=args.box, T=args.T, dt=args.dt, lam=args.lam,
        r=args.r, s=args.s, init=args.init, seed=args.seed, mode=args.mode,
        output_every=args.output_every, out_dir=str(args.out), halt=not args.no_halt,
    )
    # round-trip through the schema so CLI runs obey the same rules as config files
    from .config import emit_config, parse_config

    cfg = parse_config(emit_config(cfg))
    out = runner.run(cfg)
    print(f"run directory: {out}")
    return _report(runner.reemit(out))


# ---------------------------------------------------------------- analyze


def _norm_report(field, args) -> dict:
    if args.norm in ("cr", "crdot"):
        fam = build_dyadic_family(field.grid)
        variant = "inhomogeneous" if args.norm == "cr" else "homogeneous"
        return holder_norm(field, args.r, fam, variant).to_dict()
    if args.norm == "holder":
        d = classical_holder_norm(field, args.r, detail=True)
        return {"norm": "holder", "exponent": args.r, **d}
    if args.norm == "l2ul":
        return lp_ul_norm(field, 2.0).to_dict()
    return hs_ul_norm(field, args.s, args.lam).to_dict()


def cmd_analyze(args) -> int:
    if args.run:
        return _report(runner.reemit(args.run))
    if args.dump_kernels:
        g = make_grid(args.dim, args.box, args.grid)
        paths = dump_tables(build_kernel_set(g, args.lam), args.dump_kernels)
        print(json.dumps([str(p) for p in paths], indent=2))
        return EXIT_OK
    if not args.field:
        raise UsageError("analyze needs a field file, --run DIR or --dump-kernels DIR")
    field = read_field(args.field)
    print(json.dumps(_norm_report(field, args), indent=2, default=float))
    return EXIT_OK


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    if args.list:
        for name, s in suites.SUITES.items():
            tag = f"criterion {s.criterion}" if s.criterion else "invariants"
            print(f"{name:<18} {tag:<13} {s.title}")
        print("groups: " + ", ".join(suites.GROUPS))
        return EXIT_OK
    try:
        suites.resolve(args.suites)
    except KeyError as exc:
        raise UsageError(f"unknown suite {exc.args[0]!r}; try --list") from None
    verdicts = runner.verify(args.suites, args.workers)
    if args.out:
        runner.write_verify_dir(args.out, verdicts)
    return _report(verdicts)


# ---------------------------------------------------------------- euler3d-check


def _bs_suite(u, ks):
    w = curl(u)
    scale = u.sup()
    return [
        Verdict("bs", "biot_savart(curl u) = u", (euler3d.biot_savart(w) - u).sup() / scale, 1e-10),
        Verdict("bs", "kernel-split Biot-Savart", (euler3d.biot_savart_split(w, ks) - u).sup() / scale, 1e-3),
    ]


def _ibp_suite(g, seed, pairs=20):
    a = b = 0.0
    for i in range(pairs):
        u = euler3d.random_solenoidal(g, seed * 1000 + 2 * i)
        rng = np.random.default_rng(seed * 1000 + 2 * i + 1)
        v = VectorField(random_band_limited(g, 2.0, rng) for _ in range(3))
        rep = euler3d.ibp_identity_suite(u, v)
        a, b = max(a, rep.curl_identity), max(b, rep.transport_identity)
    return [
        Verdict("ibp", "u x curl v integration by parts", a, 1e-10),
        Verdict("ibp", "(u.grad u).V integration by parts", b, 1e-10),
    ]


def cmd_euler3d_check(args) -> int:
    L = args.box
    lam = args.lam or L / 16
    g = make_grid(3, L, args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows = []
    if args.suite == "bs":
        verdicts = _bs_suite(euler3d.random_solenoidal(g, args.seed), build_kernel_set(g, lam))
    elif args.suite == "stream":
        verdicts = suites.suite_stream(N=args.grid, L=L, seed=args.seed)
    elif args.suite == "pressure":
        verdicts = suites.suite_pressure(N=args.grid, L=L, lam=lam)
    elif args.suite == "ibp":
        verdicts = _ibp_suite(g, args.seed)
    else:
        traj, ks = suites.run_euler_reference(args.grid, L, args.T, args.dt, args.seed, lam)
        if args.suite == "serfati":
            rows = [(t, "serfati3d_identity", r, 1e-2) for t, r in euler3d.serfati3d_residual(traj, ks)]
        else:
            rows = [r[:4] for r in euler3d.uomega_bound_check(traj).rows]
        write_monitor_csv(out / "monitors.csv", rows)
        verdicts = runner.verdicts_from_csv(out / "monitors.csv", args.suite)
    dt = time.perf_counter() - t0
    verdicts = [Verdict(v.suite, v.anchor, v.measured, v.threshold, dt) for v in verdicts]
    write_verdicts(out / f"{args.suite}_verdicts.json", verdicts)
    return _report(verdicts)


# ---------------------------------------------------------------- prepare-data


def cmd_prepare_data(args) -> int:
    if args.input:
        u0 = read_field(args.input)
        if not isinstance(u0, VectorField) or u0.grid.dim != 3:
            raise UsageError(f"{args.input}: expected a 3D vector field")
    else:
        u0 = euler3d.random_solenoidal(make_grid(3, args.box, args.grid), args.seed, kmax=1.0, rms=0.3)
    fam = build_dyadic_family(u0.grid)
    pd = euler3d.prepare_initial_data(u0, args.n, fam, m_n=args.m, s=args.s)
    write_field(args.out, pd.u, f"prepared n={args.n} m_n={pd.m_n}")
    print(json.dumps({
        "n": pd.n, "m_n": pd.m_n, "forms_gap": pd.forms_gap, "divergence": pd.divergence,
        "hs_ul": pd.hs_ul, "hs_ul_input": pd.hs_ul_input, "ratio": pd.ratio, "out": str(args.out),
    }, indent=2))
    return _report([
        Verdict("prepare", "two product-rule forms agree", pd.forms_gap, 1e-10),
        Verdict("prepare", "prepared data divergence-free", pd.divergence, 1e-10),
    ])


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="serfati-flows", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path, help="override the config's output directory")
    r.set_defaults(fn=cmd_run)

    a = sub.add_parser("analyze", help="norms of a field file, or re-emit a run's verdicts")
    a.add_argument("field", nargs="?", type=Path)
    a.add_argument("--norm", choices=["cr", "crdot", "holder", "l2ul", "hsul"], default="cr")
    a.add_argument("--r", type=float, default=1.5)
    a.add_argument("--s", type=int, default=3)
    a.add_argument("--lambda", dest="lam", type=float, default=1.0)
    a.add_argument("--run", type=Path, help="re-emit verdicts from a run directory")
    a.add_argument("--dump-kernels", type=Path, metavar="DIR", help="write kernel tables as field files")
    a.add_argument("--dim", type=int, choices=[2, 3], default=2)
    a.add_argument("--grid", type=int, default=128)
    a.add_argument("--box", type=float, default=8 * np.pi)
    a.set_defaults(fn=cmd_analyze)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suites", nargs="*", default=["all"])
    v.add_argument("--out", type=Path)
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--list", action="store_true")
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("sqg-run", help="run the SQG solver")
    s.add_argument("--init", default="random")
    s.add_argument("--mode", choices=["spectral", "serfati"], default="spectral")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--T", type=float, default=0.5)
    s.add_argument("--dt", type=float, default=1.0 / 64)
    s.add_argument("--grid", type=int, default=128)
    s.add_argument("--box", type=float, default=8 * np.pi)
    s.add_argument("--r", type=float, default=1.5)
    s.add_argument("--s", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output-every", type=int, default=8)
    s.add_argument("--no-halt", action="store_true", help="disable the short-time blow-up halt")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(fn=cmd_sqg_run)

    e = sub.add_parser("euler3d-check", help="3D Euler checks")
    e.add_argument("--suite", choices=["bs", "stream", "pressure", "serfati", "ibp", "gronwall"], required=True)
    e.add_argument("--grid", type=int, default=32)
    e.add_argument("--box", type=float, default=2 * np.pi)
    e.add_argument("--T", type=float, default=0.25)
    e.add_argument("--dt", type=float, default=1.0 / 64)
    e.add_argument("--lambda", dest="lam", type=float, default=None, help="default: box/16")
    e.add_argument("--seed", type=int, default=19)
    e.add_argument("--out", type=Path, required=True)
    e.set_defaults(fn=cmd_euler3d_check)

    d = sub.add_parser("prepare-data", help="build smooth divergence-free initial data")
    d.add_argument("--input", type=Path, help="3D vector field file; default is seeded random data")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--n", type=int, default=1)
    d.add_argument("--m", type=int, default=None, help="low-pass level; chosen automatically if omitted")
    d.add_argument("--s", type=int, default=3)
    d.add_argument("--grid", type=int, default=32)
    d.add_argument("--box", type=float, default=4 * np.pi)
    d.add_argument("--out", type=Path, required=True)
    d.set_defaults(fn=cmd_prepare_data)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (UsageError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"serfati-flows {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
