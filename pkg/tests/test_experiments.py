import io

import numpy as np
import pytest

from coinbar.cli import main
from coinbar.config import build_scenarios, parse_config
from coinbar.env import SimConfig, run_simulation
from coinbar.errors import ConfigError, OutputError, UsageError
from coinbar.experiments import (
    ONE_NIGHT, PRESETS, UNIFORM, ExperimentRecord, Scenario, emit_csv, emit_plot_data,
    preset, run_scenario, run_sweep,
)
from coinbar.state import WorldParams
from coinbar.utilities import RewardKind

TINY = SimConfig(world=WorldParams(N=20), weeks=30, seed=5)


def test_presets_encode_figure_parameters():
    for group, alpha, weeks in (("fig1-left", ONE_NIGHT, 8000), ("fig1-right", UNIFORM, 8000),
                                ("fig2", UNIFORM, 2000), ("fig3", ONE_NIGHT, 2000)):
        members = preset(group)
        assert {s.config.reward_kind for s in members} == set(RewardKind)
        for s in members:
            w = s.config.world
            assert (w.N, w.K, w.capacity, w.alpha) == (168, 7, 6.0, alpha)
            assert s.config.weeks == weeks and s.runs == 50
            assert PRESETS[s.name] == [s]
    assert preset("fig3")[0].sweep == (42, 84, 168, 336)
    with pytest.raises(ConfigError):
        preset("fig9")


def test_scenario_validation():
    with pytest.raises(ConfigError):
        Scenario("a b")
    with pytest.raises(ConfigError):
        Scenario("x", runs=0)
    with pytest.raises(ConfigError):
        Scenario("x", sweep=())
    with pytest.raises(ConfigError):
        Scenario("x", TINY.evolve(seed=2**64 - 1), runs=2).seeds


def test_single_run_record_equals_simulation():
    rec = run_scenario(Scenario("one", TINY, runs=1))
    sim = run_simulation(TINY)
    assert rec.seeds == (5,)
    assert np.array_equal(rec.mean_world_reward, sim.weekly_world_reward)
    assert np.array_equal(rec.final_attendance[0], sim.final_attendance)
    assert rec.weeks == 30 and rec.convergence is None


def test_records_independent_of_threads(monkeypatch):
    s = Scenario("t", TINY, runs=5)
    a = run_scenario(s, threads=1)
    b = run_scenario(s, threads=3)
    monkeypatch.setenv("COINBAR_THREADS", "2")
    c = run_scenario(s)
    assert a == b == c
    assert a.seeds == (5, 6, 7, 8, 9)
    monkeypatch.setenv("COINBAR_THREADS", "zero")
    with pytest.raises(ConfigError):
        run_scenario(s)


def test_sweep_single_value_equals_scenario():
    s = Scenario("sw", TINY, runs=2, sweep=(12,))
    (rec,) = run_sweep(s)
    direct = run_scenario(Scenario("sw", TINY.evolve(world=WorldParams(N=12)), runs=2))
    assert np.array_equal(rec.per_run, direct.per_run) and rec.N == 12
    assert rec.optimum == direct.optimum
    assert 0 < rec.normalized_late_mean(10) <= 1
    with pytest.raises(UsageError):
        run_sweep(Scenario("x", TINY))


def _record(name="s", kind=RewardKind.WL, runs=2, weeks=3, seed=0):
    per_run = np.arange(runs * weeks, dtype=float).reshape(runs, weeks) / 3
    return ExperimentRecord(name, kind, tuple(range(seed, seed + runs)), per_run,
                            np.tile(np.arange(7), (runs, 1)), None, 0.0, 168, 13.0)


def test_csv_layout(tmp_path):
    emit_csv([_record()], tmp_path)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "scenario,reward_kind,seed,week,mean_world_reward"
    assert [l.split(",")[2:4] for l in lines[1:]] == [["0", "0"], ["0", "1"], ["0", "2"],
                                                      ["1", "0"], ["1", "1"], ["1", "2"]]
    assert lines[2] == "s,WL,0,1,0.333333333"
    att = (tmp_path / "s_attendance.csv").read_text().splitlines()
    assert att[0] == "scenario,reward_kind,seed,night,count" and len(att) == 15


def test_csv_empty_and_deterministic(tmp_path):
    emit_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "scenario,reward_kind,seed,week,mean_world_reward\n"
    emit_csv([_record()], tmp_path / "a.csv")
    first = (tmp_path / "a.csv").read_bytes()
    emit_csv([_record()], tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_bytes() == first


def test_csv_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError, match="file"):
        emit_csv([_record()], blocker / "sub")


def test_plot_columns(tmp_path):
    emit_plot_data([_record()], tmp_path)
    rows = (tmp_path / "plot.dat").read_text().splitlines()
    assert rows[0].startswith("#") and len(rows[1].split()) == 2
    recs = [_record(kind=k) for k in RewardKind]
    emit_plot_data(recs, tmp_path / "three.dat")
    rows = (tmp_path / "three.dat").read_text().splitlines()
    assert all(len(r.split()) == 4 for r in rows[1:])
    blocks = (tmp_path / "three_attendance.dat").read_text().split("\n\n\n")
    assert len(blocks) == 3
    with pytest.raises(UsageError):
        emit_plot_data([_record(), _record(weeks=4)], tmp_path)


def test_svg_is_written(tmp_path):
    pytest.importorskip("matplotlib")
    out = emit_plot_data([_record()], tmp_path, svg=True)
    svg = tmp_path / "plot.svg"
    assert svg in out and svg.read_text().lstrip().startswith("<?xml")


def test_config_parsing():
    values = parse_config("""
        # comment
        preset = fig1-right
        reward = UD
        agents = 42    # trailing comment
        alpha = 1, 2, 3
        estimate_init = 0, 4
        seed = 0x10
    """)
    (s,) = build_scenarios(values)
    assert s.name == "fig1-right-UD" and s.config.seed == 16
    assert s.config.world.N == 42 and s.config.world.alpha == (1.0, 2.0, 3.0)
    assert s.config.learner.estimate_init == (0.0, 4.0)


@pytest.mark.parametrize("text", ["bogus = 1", "weeks = 3\nweeks = 4", "no equals sign",
                                  "weeks = x", "reward = QQ", "learning_rate = 7", "seed = -1"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        build_scenarios(parse_config(text))


def test_group_rename():
    scs = build_scenarios({"preset": "fig2", "name": "mine", "weeks": 10})
    assert [s.name for s in scs] == ["mine-WL", "mine-G", "mine-UD"]


def _cli(args, capsys):
    out = io.StringIO()
    code = main(args, out)
    return code, out.getvalue(), capsys.readouterr().err


def test_cli_run_writes_files(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("agents = 20\nweeks = 30\nruns = 2\nname = demo\n")
    code, out, err = _cli(["run", "--config", str(cfg), "--reward", "G", "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and err == ""
    assert "demo" in out and (tmp_path / "o" / "demo.csv").exists()
    assert len((tmp_path / "o" / "demo.csv").read_text().splitlines()) == 61


def test_cli_reproducible(tmp_path, capsys):
    for d in ("a", "b"):
        assert _cli(["run", "--agents", "15", "--weeks", "20", "--runs", "2", "--seed", "7",
                     "--out", str(tmp_path / d)], capsys)[0] == 0
    assert (tmp_path / "a" / "custom.csv").read_bytes() == (tmp_path / "b" / "custom.csv").read_bytes()


def test_cli_other_commands(capsys):
    code, out, _ = _cli(["optimum"], capsys)
    assert code == 0 and "6,6,6,6,6,6,132" in out
    code, out, _ = _cli(["factoredness", "--agents", "4", "--alpha", "1,2", "--reward", "UD"], capsys)
    assert code == 0 and "factored=false" in out
    code, out, _ = _cli(["presets"], capsys)
    assert "fig3" in out
    code, out, _ = _cli(["learnability", "--agents", "30", "--weeks", "50", "--samples", "200"], capsys)
    assert code == 0 and "ratio_WL_over_G" in out
    code, out, _ = _cli(["sweep", "--agents", "10", "--sweep", "8,12", "--weeks", "20", "--runs", "1"], capsys)
    assert code == 0 and "custom-N12" in out


@pytest.mark.parametrize("args,category,code", [
    (["run", "--weeks", "0"], "config", 2),
    (["nosuch"], "usage", 2),
    (["run", "--preset", "fig9"], "config", 2),
    (["factoredness", "--agents", "30"], "instance-too-large", 1),
    (["run", "--config", "/nonexistent/file"], "config", 2),
])
def test_cli_errors_are_one_line(args, category, code, capsys):
    got, _, err = _cli(args, capsys)
    assert got == code
    assert err.count("\n") == 1 and err.startswith(f"error: {category}: ")


def test_failed_run_aborts_with_partial_record(monkeypatch):
    import coinbar.experiments as ex
    from coinbar.errors import StateCorruptionError

    real = ex.simulate_batch

    def flaky(config, seeds, record_picks=False):
        if 7 in seeds:
            raise StateCorruptionError("boom")
        return real(config, seeds, record_picks)

    monkeypatch.setattr(ex, "simulate_batch", flaky)
    with pytest.raises(ex.ScenarioAborted) as info:
        run_scenario(Scenario("p", TINY, runs=4), threads=4)
    assert info.value.partial.seeds == (5, 6, 8)
    assert "boom" in str(info.value)
