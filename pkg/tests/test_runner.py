import json
from pathlib import Path

import pytest

from lerw3d import cli
from lerw3d.errors import InvalidParams, IoFailure, SchemaMismatch, UnknownExperiment
from lerw3d.runner import (
    ExperimentConfig,
    available,
    parse_config,
    plot_data,
    read_csv,
    run,
)

# desk-size parameters for every registered experiment
SMALL = {
    "beta-length": {"levels": [3, 4, 5], "trials": 20},
    "beta-escape": {"exponents": [2, 3, 4], "trials": 200},
    "tails": {"n": 4, "trials": 100},
    "l2-approx": {"levels": [5], "trials": 30, "replications": 2},
    "quasi-loops": {"n": 4, "trials": 10},
    "hittability": {"n": 4, "trials": 3, "probes": 10},
    "one-point": {"levels": [3, 4, 5], "trials": 1000},
    "ust-uniformity": {"samples": 200},
    "green-check": {"radius": 3, "walks": 2000, "batches": 4},
    "metric-axioms": {"trials": 4},
    "exit-increments": {"n": 4, "trials": 20},
    "ilerw-trunc": {"n": 2, "trials": 40},
}


def _run(tmp_path, name, params, seed=1, workers=1, tag="a"):
    out = tmp_path / f"{name}-{tag}"
    man = run(ExperimentConfig(name, params, seed, workers, str(out)))
    return out, man


def test_registry_is_complete():
    assert sorted(SMALL) == available()


@pytest.mark.parametrize("name", sorted(SMALL))
def test_every_experiment_runs_and_plots(tmp_path, name):
    out, man = _run(tmp_path, name, SMALL[name])
    assert set(man.outputs) == {"trials.csv", "results.csv", "summary.json", "manifest.json"}
    head, rows = read_csv(out / "results.csv")
    assert head == {"config_hash": man.config_hash, "experiment": name}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config_hash"] == man.config_hash
    target = plot_data(out / "results.csv", name)
    assert target.name == f"results.plot.{name}.csv"
    _, prow = read_csv(target)
    assert len(prow) == len(rows)
    assert len(prow[0]) == 3


def test_trials_zero_rejected(tmp_path):
    with pytest.raises(InvalidParams) as e:
        _run(tmp_path, "tails", {"trials": 0})
    assert "trials must be ≥ 1" in e.value.errors


def test_field_level_messages(tmp_path):
    with pytest.raises(InvalidParams) as e:
        _run(tmp_path, "beta-length", {"levels": [4, 5], "bogus": 1, "trials": "many"})
    msgs = " | ".join(e.value.errors)
    assert "bogus" in msgs and "trials" in msgs


def test_unknown_experiment(tmp_path):
    with pytest.raises(UnknownExperiment):
        _run(tmp_path, "no-such-thing", {})


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoFailure):
        run(ExperimentConfig("beta-length", {"levels": [3, 4, 5], "trials": 2}, 0, 1, str(blocker / "sub")))


def test_synthetic_slope(tmp_path):
    out, man = _run(tmp_path, "beta-length", {"levels": [4, 5, 6], "trials": 3, "synthetic_beta": 1.5})
    assert man.summary["slope"] == pytest.approx(1.5, abs=1e-9)
    _, rows = read_csv(plot_data(out / "results.csv", "beta-length"))
    assert list(rows[0]) == ["n", "log2_mean", "log2_stderr"]
    assert [int(r["n"]) for r in rows] == [4, 5, 6]


def test_byte_identical_across_runs_and_workers(tmp_path):
    params = {"levels": [3, 4, 5], "trials": 30}
    dirs = [_run(tmp_path, "beta-length", params, 7, w, tag)[0]
            for tag, w in (("a", 1), ("b", 1), ("c", 3))]
    for f in ("trials.csv", "results.csv", "summary.json"):
        blobs = {(d / f).read_bytes() for d in dirs}
        assert len(blobs) == 1
    other, _ = _run(tmp_path, "beta-length", params, 8, 1, "d")
    assert (other / "trials.csv").read_bytes() != (dirs[0] / "trials.csv").read_bytes()


def test_manifest_records_streams(tmp_path):
    out, man = _run(tmp_path, "tails", {"n": 3, "trials": 120})
    data = json.loads((out / "manifest.json").read_text())
    assert data["streams"] == [[0, 120]]
    assert data["config_hash"] == man.config_hash
    assert set(data["wall_clock"]) >= {"started", "finished", "seconds", "workers"}


def test_plot_refusals(tmp_path):
    out, _ = _run(tmp_path, "beta-length", {"levels": [3, 4, 5], "trials": 4})
    with pytest.raises(SchemaMismatch):
        plot_data(out / "results.csv", "not-a-kind")
    with pytest.raises(SchemaMismatch):
        plot_data(out / "results.csv", "tails")
    text = (out / "results.csv").read_text().replace("config_hash=", "config_hash=0", 1)
    (out / "results.csv").write_text(text)
    with pytest.raises(SchemaMismatch):
        plot_data(out / "results.csv", "beta-length")


def test_config_parsing():
    cfg = parse_config("""
        # growth exponent, small
        experiment = beta-length
        levels = 4
        levels = 5
        levels = 6
        trials = 10   # per level
        seed = 3
        workers = 2
        out = somewhere
    """)
    assert cfg.experiment == "beta-length"
    assert cfg.params == {"levels": ["4", "5", "6"], "trials": "10"}
    assert (cfg.master_seed, cfg.workers, cfg.out_dir) == (3, 2, "somewhere")
    assert cfg.resolved()["levels"] == [4, 5, 6]
    single = parse_config("experiment = tails\nb = 2.5\n")
    assert single.resolved()["b"] == [2.5]
    js = parse_config('{"experiment": "tails", "params": {"n": 5}, "trials": 200, "seed": 9}')
    assert js.resolved()["n"] == 5 and js.resolved()["trials"] == 200 and js.master_seed == 9
    with pytest.raises(InvalidParams):
        parse_config("levels = 4\n")


def test_hash_depends_on_params_and_seed():
    a = ExperimentConfig("tails", {"n": 5}, 1)
    assert a.config_hash() == ExperimentConfig("tails", {"n": "5"}, 1).config_hash()
    assert a.config_hash() != ExperimentConfig("tails", {"n": 6}, 1).config_hash()
    assert a.config_hash() != ExperimentConfig("tails", {"n": 5}, 2).config_hash()


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("experiment = beta-length\nlevels = 3\nlevels = 4\nlevels = 5\ntrials = 5\n")
    out = tmp_path / "res"
    assert cli.main(["run", str(good), "--out", str(out), "--seed", "2"]) == 0
    assert cli.main(["plot", str(out / "results.csv"), "--kind", "beta-length"]) == 0
    assert cli.main(["plot", str(out / "results.csv"), "--kind", "nope"]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = tails\ntrials = 0\n")
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "x")]) == 2
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("experiment = nothing\n")
    assert cli.main(["run", str(unknown)]) == 2
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 3
    assert cli.main(["list"]) == 0
    assert "beta-length" in capsys.readouterr().out


def test_results_hash_matches_manifest(tmp_path):
    out, man = _run(tmp_path, "metric-axioms", {"trials": 2})
    for f in ("trials.csv", "results.csv"):
        assert Path(out / f).read_text().startswith(f"# config_hash={man.config_hash}\n")
