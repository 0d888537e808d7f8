import json
from dataclasses import fields

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from serfati_flows import frozen
from serfati_flows.harness import cli, runner, suites
from serfati_flows.harness.config import ConfigError, RunConfig, emit_config, load_config, parse_config
from serfati_flows.harness.verdict import Verdict, read_verdicts, write_verdicts

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)

configs = st.builds(
    RunConfig,
    experiment=st.sampled_from(["sqg", "verify"]),
    N=st.sampled_from([16, 32, 64, 128, 256]),
    L=st.floats(0.5, 100),
    T=st.floats(0, 5),
    dt=st.floats(1e-4, 0.1),
    lam=st.floats(0.1, 4),
    r=st.floats(0.1, 3),
    s=st.integers(0, 6),
    init=st.sampled_from(["sine", "radial", "random", "random:7", "file:/tmp/x.sfld"]),
    seed=st.integers(0, 2**31),
    mode=st.sampled_from(["spectral", "serfati"]),
    output_every=st.integers(1, 100),
    out_dir=st.one_of(st.none(), st.text("abc/_-", min_size=1, max_size=12)),
    halt=st.booleans(),
    suites=st.one_of(st.none(), st.lists(st.sampled_from(list(suites.SUITES)), max_size=3)),
)


# ---------------------------------------------------------------- config


@given(configs)
def test_config_roundtrip(cfg):
    assert parse_config(emit_config(cfg)) == cfg


def test_malformed_json_reports_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config('{\n  "version": 1,\n  "experiment": sqg\n}')


def test_unknown_key_reports_field_and_line():
    text = '{\n  "version": 1,\n  "experiment": "sqg",\n  "grdi": 64\n}'
    with pytest.raises(ConfigError, match=r"grdi \(line 4\)"):
        parse_config(text)


@pytest.mark.parametrize(
    "patch",
    [{"version": 2}, {"N": 100}, {"dt": 0.5}, {"init": "square"}, {"mode": "euler"}, {"s": 9}],
)
def test_invalid_values_rejected(patch):
    data = {"version": 1, "experiment": "sqg", **patch}
    with pytest.raises(ConfigError):
        parse_config(json.dumps(data))


def test_dimension_follows_experiment():
    assert parse_config('{"version": 1, "experiment": "euler3d"}').dim == 3
    with pytest.raises(ConfigError):
        parse_config('{"version": 1, "experiment": "euler3d", "dim": 2}')


def test_config_fields_match_schema():
    from serfati_flows.harness.config import SCHEMA

    assert {f.name for f in fields(RunConfig)} == set(SCHEMA["properties"])


# ---------------------------------------------------------------- verdicts


@given(finite, finite)
def test_verdict_pass_iff_measured_at_most_threshold(m, t):
    assert Verdict("s", "a", m, t).passed == (m <= t)


def test_verdict_with_nan_fails():
    assert not Verdict("s", "a", float("nan"), 1.0).passed


@given(st.lists(st.builds(Verdict, st.text(max_size=5), st.text(max_size=5), finite, finite, st.floats(0, 10)), max_size=5))
def test_verdict_file_roundtrip(tmp_path_factory, vs):
    p = tmp_path_factory.mktemp("v") / "verdicts.json"
    write_verdicts(p, vs)
    assert read_verdicts(p) == vs


# ---------------------------------------------------------------- suites registry


def test_every_criterion_has_one_suite():
    crit = sorted(s.criterion for s in suites.SUITES.values() if s.criterion)
    assert crit == list(range(1, 11))


def test_resolve_groups_and_rejects_unknown():
    assert suites.resolve(["all"]) == suites.ACCEPTANCE + suites.INVARIANTS
    assert suites.resolve(["kernels", "kernels"]) == ["kernels"]
    with pytest.raises(KeyError):
        suites.resolve(["nope"])


def test_suite_errors_become_failed_verdicts(monkeypatch):
    def boom():
        raise RuntimeError("solver halted")

    monkeypatch.setitem(suites.SUITES, "boom", suites.Suite("boom", "boom", boom))
    (v,) = suites.run_suite("boom")
    assert not v.passed and "solver halted" in v.anchor


# ---------------------------------------------------------------- runner


def _small_sqg(tmp_path, name, **kw):
    base = dict(experiment="sqg", N=64, L=8 * np.pi, T=0.25, dt=1 / 32, output_every=4, init="sine", halt=False)
    base.update(kw)
    return runner.run(RunConfig(**base), tmp_path / name)


def test_sine_run_directory(tmp_path):
    out = _small_sqg(tmp_path, "sine")
    assert load_config(out / "config.json").init == "sine"
    assert sorted(p.name for p in (out / "fields").glob("theta_*.sfld")) == ["theta_0000.sfld", "theta_0001.sfld", "theta_0002.sfld"]
    header = (out / "monitors.csv").read_text().splitlines()[0]
    assert header == "t,name,lhs,rhs,ratio"
    vs = {v.anchor: v for v in read_verdicts(out / "verdicts.json")}
    assert vs["steady_state"].passed


def test_same_seed_gives_identical_csv(tmp_path):
    a = _small_sqg(tmp_path, "a", init="random", seed=5, halt=True)
    b = _small_sqg(tmp_path, "b", init="random", seed=5, halt=True)
    assert (a / "monitors.csv").read_bytes() == (b / "monitors.csv").read_bytes()
    assert (a / "fields" / "theta_0002.sfld").read_bytes() == (b / "fields" / "theta_0002.sfld").read_bytes()


def test_verdicts_reemitted_from_directory(tmp_path):
    out = _small_sqg(tmp_path, "re", init="random", seed=2, halt=True)
    stored = read_verdicts(out / "verdicts.json")
    assert runner.reemit(out) == stored


def test_halt_becomes_failed_verdict(tmp_path):
    out = _small_sqg(tmp_path, "halt", T=1.0, halt=True)
    (v,) = runner.reemit(out)
    assert not v.passed and v.anchor.startswith("halted")


def test_euler_run_directory(tmp_path):
    cfg = RunConfig(experiment="euler3d", dim=3, N=16, L=2 * np.pi, T=0.125, dt=1 / 32, lam=2 * np.pi / 16, init="shear", output_every=2)
    out = runner.run(cfg, tmp_path / "e")
    vs = {v.anchor: v for v in runner.reemit(out)}
    assert vs["steady_state"].passed and vs["energy_drift"].passed


def test_monitor_slack_applies_only_to_monitors(tmp_path):
    p = tmp_path / "m.csv"
    runner.write_monitor_csv(p, [(0.0, "shorttime", 1.03, 1.0), (0.0, "serfati_identity", 1.03, 1.0)])
    vs = {v.anchor: v for v in runner.verdicts_from_csv(p)}
    assert vs["shorttime"].passed and not vs["serfati_identity"].passed


# ---------------------------------------------------------------- CLI


def test_cli_unknown_suite_is_usage_error(capsys):
    assert cli.main(["verify", "no-such-suite"]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_cli_bad_flag_is_usage_error():
    assert cli.main(["sqg-run", "--mode", "nope", "--out", "x"]) == 2


def test_cli_invalid_config_is_usage_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"version": 1, "experiment": "sqg", "extra": 1}')
    assert cli.main(["run", "--config", str(p)]) == 2


def test_cli_list(capsys):
    assert cli.main(["verify", "--list"]) == 0
    assert "partition" in capsys.readouterr().out


def test_cli_verify_kernel_invariants(tmp_path, capsys):
    assert cli.main(["verify", "kernel-invariants", "--out", str(tmp_path / "v")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert json.loads((tmp_path / "v" / "summary.json").read_text())["passed"]


def test_cli_sqg_run_and_analyze(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["sqg-run", "--init", "sine", "--T", "0.25", "--dt", "0.03125", "--grid", "64", "--out", str(out), "--no-halt"])
    assert code == 0
    capsys.readouterr()
    assert cli.main(["analyze", str(out / "fields" / "theta_0000.sfld"), "--norm", "cr", "--r", "1.5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["value"] == pytest.approx(1.0, rel=1e-12)
    assert cli.main(["analyze", "--run", str(out)]) == 0


def test_cli_analyze_ul_norm(tmp_path, capsys):
    from serfati_flows.fieldio import write_field
    from serfati_flows.fields import ScalarField, make_grid

    p = write_field(tmp_path / "one.sfld", ScalarField.constant(make_grid(2, 8 * np.pi, 128), 1.0))
    assert cli.main(["analyze", str(p), "--norm", "l2ul"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(np.sqrt(np.pi), rel=0.02)


def test_cli_dump_kernels(tmp_path, capsys):
    assert cli.main(["analyze", "--dump-kernels", str(tmp_path / "k"), "--grid", "64"]) == 0
    assert (tmp_path / "k" / "near.sfld").exists()


def test_cli_euler3d_check(tmp_path):
    assert cli.main(["euler3d-check", "--suite", "ibp", "--grid", "16", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "ibp_verdicts.json").exists()


def test_cli_prepare_data(tmp_path, capsys):
    out = tmp_path / "p.sfld"
    assert cli.main(["prepare-data", "--n", "1", "--grid", "32", "--out", str(out)]) == 0
    rep = json.loads(capsys.readouterr().out.split("\nPASS")[0])
    assert rep["divergence"] <= 1e-10 and out.exists()


def test_thread_cap_from_environment(monkeypatch):
    from serfati_flows._env import thread_cap

    monkeypatch.setenv("SERFATI_FLOWS_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("SERFATI_FLOWS_THREADS", "junk")
    assert thread_cap() >= 1


def test_frozen_constants_present():
    data = frozen.load()
    for key in ("sqg_shorttime", "sqg_gronwall", "pressure_c1", "prepare_hsul", "lp_riesz_block"):
        assert data[key] > 0
    with pytest.raises(KeyError):
        frozen.get("no_such_constant")
