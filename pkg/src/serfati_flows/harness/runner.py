"""Run directories: config snapshot, field snapshots, monitor CSV, verdicts.

Layout of a run directory::

    config.json      exact configuration used
    fields/          .sfld snapshots at the output cadence
    monitors.csv     t,name,lhs,rhs,ratio
    verdicts.json    one entry per monitor name

Verdicts are a pure function of ``monitors.csv`` (see :func:`verdicts_from_csv`),
so a run directory can re-emit them without recomputing the trajectory.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .. import euler3d, sqg
from .._env import thread_cap
from ..fieldio import read_field, write_field
from ..fields import ScalarField, VectorField, make_grid
from ..kernels import build_kernel_set
from ..littlewood_paley import build_dyadic_family
from . import suites
from .config import RunConfig, emit_config, load_config
from .verdict import Verdict, read_verdicts, write_verdicts

MONITOR_SLACK = 1.05
SLACK = {
    "shorttime": MONITOR_SLACK,
    "gronwall_hsul": MONITOR_SLACK,
    "velocity_hsul": MONITOR_SLACK,
    "vorticity_gronwall": MONITOR_SLACK,
    "velocity_from_vorticity": MONITOR_SLACK,
}
CSV_HEADER = ("t", "name", "lhs", "rhs", "ratio")


def _fmt(x: float) -> str:
    return repr(float(x))


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    return lhs / rhs if rhs > 0 else float("inf")


def write_monitor_csv(path, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t, name, lhs, rhs in rows:
        w.writerow([_fmt(t), name, _fmt(lhs), _fmt(rhs), _fmt(_ratio(lhs, rhs))])
    Path(path).write_text(buf.getvalue())


def read_monitor_csv(path) -> list:
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        return [
            {"t": float(row["t"]), "name": row["name"], "lhs": float(row["lhs"]), "rhs": float(row["rhs"]), "ratio": float(row["ratio"])}
            for row in r
        ]


def verdicts_from_csv(path, suite: str = "run") -> list:
    worst: dict = {}
    for row in read_monitor_csv(path):
        worst[row["name"]] = max(worst.get(row["name"], 0.0), row["ratio"])
    return [Verdict(suite, name, worst[name], SLACK.get(name, 1.0)) for name in worst]


# ---------------------------------------------------------------- init data


def _parse_init(init: str, seed: int):
    if init.startswith("random"):
        _, _, s = init.partition(":")
        return "random", int(s) if s else seed
    if init.startswith("file:"):
        return "file", init[5:]
    return init, None


def sqg_initial(cfg: RunConfig):
    g = make_grid(2, cfg.L, cfg.N)
    kind, arg = _parse_init(cfg.init, cfg.seed)
    if kind == "sine":
        return sqg.sine_initial(g), kind
    if kind == "radial":
        return sqg.radial_initial(g), kind
    if kind == "random":
        return sqg.random_initial(g, arg), kind
    if kind == "file":
        f = read_field(arg)
        if not isinstance(f, ScalarField) or f.grid.dim != 2:
            raise ValueError(f"{arg}: expected a 2D scalar field")
        return f, kind
    raise ValueError(f"initial data {cfg.init!r} is not available for SQG")


def euler_initial(cfg: RunConfig):
    g = make_grid(3, cfg.L, cfg.N)
    kind, arg = _parse_init(cfg.init, cfg.seed)
    if kind == "shear":
        return euler3d.shear_flow(g), kind
    if kind == "taylor-green":
        return euler3d.taylor_green(g), kind
    if kind == "random":
        return euler3d.random_solenoidal(g, arg), kind
    if kind == "file":
        f = read_field(arg)
        if not isinstance(f, VectorField) or f.grid.dim != 3:
            raise ValueError(f"{arg}: expected a 3D vector field")
        return f, kind
    raise ValueError(f"initial data {cfg.init!r} is not available for 3D Euler")


# ---------------------------------------------------------------- experiments


def _run_sqg(cfg: RunConfig, out: Path) -> list:
    theta0, kind = sqg_initial(cfg)
    g = theta0.grid
    fam = build_dyadic_family(g)
    ks = build_kernel_set(g, cfg.lam)
    traj = sqg.run_sqg(
        theta0, cfg.T, cfg.dt, cfg.mode, cfg.lam, ks=ks, family=fam, output_every=cfg.output_every, r=cfg.r,
        **({} if cfg.halt else {"short_time_C": 0.0}),
    )
    for k, st in enumerate(traj.states):
        write_field(out / "fields" / f"theta_{k:04d}.sfld", st.theta, f"sqg {cfg.mode} t={st.t!r}")
        write_field(out / "fields" / f"u_{k:04d}.sfld", st.u, f"sqg {cfg.mode} t={st.t!r}")
    rows = []
    report = sqg.estimate_monitors(traj, fam, cfg.r, cfg.s, cfg.lam)
    rows += [(r.t, r.name, r.lhs, r.rhs) for r in report.rows]
    rows += [(t, "serfati_identity", res, 1e-3) for t, res in traj.identity_residual]
    if cfg.mode == "spectral":
        rows.append((traj.states[-1].t, "lp_constitutive_residual", report.lp_residual, 1e-8))
    m0 = theta0.mean()
    rows += [(st.t, "mean_drift", abs(st.theta.mean() - m0), 1e-10 * max(st.t, 1e-300)) for st in traj.states[1:]]
    if kind in ("sine", "radial"):
        tol = 1e-5 if kind == "sine" else 1e-4 * theta0.sup()
        rows += [(st.t, "steady_state", (st.theta - theta0).sup(), tol) for st in traj.states]
    return rows


def _run_euler(cfg: RunConfig, out: Path) -> list:
    u0, kind = euler_initial(cfg)
    g = u0.grid
    ks = build_kernel_set(g, cfg.lam)
    traj = euler3d.run_euler3d(u0, cfg.T, cfg.dt, ks, cfg.output_every)
    for k, st in enumerate(traj.states):
        write_field(out / "fields" / f"u_{k:04d}.sfld", st.u, f"euler3d t={st.t!r}")
    rows = [(t, "serfati3d_identity", res, 1e-2) for t, res in euler3d.serfati3d_residual(traj, ks)]
    rep = euler3d.uomega_bound_check(traj, cfg.s)
    rows += [(t, name, lhs, rhs) for t, name, lhs, rhs, _ in rep.rows]
    e0 = euler3d.energy(u0)
    rows += [(st.t, "energy_drift", abs(euler3d.energy(st.u) - e0) / e0 if e0 > 0 else 0.0, 1e-3) for st in traj.states]
    if kind == "shear":
        rows += [(st.t, "steady_state", (st.u - u0).sup(), 1e-6) for st in traj.states]
    return rows


def default_run_dir(cfg: RunConfig) -> Path:
    tag = cfg.init.replace(":", "-").replace("/", "_")
    return Path("runs") / f"{cfg.experiment}-{tag}-seed{cfg.seed}"


def run(cfg: RunConfig, out_dir=None) -> Path:
    out = Path(out_dir or cfg.out_dir or default_run_dir(cfg))
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(emit_config(cfg))
    if cfg.experiment == "verify":
        verdicts = verify(cfg.suites or ["all"])
        write_verdicts(out / "verdicts.json", verdicts)
        return out
    try:
        rows = _run_sqg(cfg, out) if cfg.experiment == "sqg" else _run_euler(cfg, out)
    except (sqg.BlowUpHalt, euler3d.InstabilityError, FloatingPointError) as exc:
        write_monitor_csv(out / "monitors.csv", [])
        write_verdicts(out / "verdicts.json", [Verdict(cfg.experiment, f"halted: {exc}", float("inf"), 0.0)])
        return out
    write_monitor_csv(out / "monitors.csv", rows)
    write_verdicts(out / "verdicts.json", verdicts_from_csv(out / "monitors.csv", cfg.experiment))
    return out


def reemit(run_dir) -> list:
    """Verdicts of a finished run, rebuilt from its stored files only."""
    run_dir = Path(run_dir)
    cfg = load_config(run_dir / "config.json")
    if cfg.experiment == "verify":
        return read_verdicts(run_dir / "verdicts.json")
    csv_path = run_dir / "monitors.csv"
    if not read_monitor_csv(csv_path):
        return read_verdicts(run_dir / "verdicts.json")
    return verdicts_from_csv(csv_path, cfg.experiment)


# ---------------------------------------------------------------- verify


def verify(selectors, workers: int | None = None) -> list:
    names = suites.resolve(selectors)
    workers = workers or thread_cap()
    if workers <= 1 or len(names) == 1:
        out = []
        for n in names:
            out.extend(suites.run_suite(n))
        return out
    with ProcessPoolExecutor(max_workers=min(workers, len(names))) as pool:
        results = list(pool.map(suites.run_suite, names))
    return [v for vs in results for v in vs]


def write_verify_dir(out_dir, verdicts) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_verdicts(out / "verdicts.json", verdicts)
    summary = {"passed": all(v.passed for v in verdicts), "count": len(verdicts)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def snapshot_times(run_dir) -> list:
    from ..fieldio import sidecar_path

    out = []
    for p in sorted((Path(run_dir) / "fields").glob("*.sfld")):
        meta = json.loads(sidecar_path(p).read_text())
        out.append((p.name, meta.get("provenance", "")))
    return out


__all__ = ["run", "reemit", "verify", "verdicts_from_csv", "write_monitor_csv", "read_monitor_csv"]
