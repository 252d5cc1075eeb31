import csv
import json
import threading
import time

import numpy as np
import pytest
import yaml

from attnbo import __version__
from attnbo.errors import ConfigurationError, EvaluationError, PreconditionError
from attnbo.harness import ConfigError, load_config, parse_config, run_ablation, run_experiment
from attnbo.harness.cli import main
from attnbo.objectives import TRUE_THETA, TWIN_DOMAIN, ExemplarObjective, make_calibration_objective
from attnbo.parallel import evaluation_seed, parallel_evaluate

TINY = {
    "objective": {"name": "exemplar1d"},
    "bbo": {"n_init": 12, "rounds": 2, "batch_size": 3, "n_targets": 64, "delta": 0.1, "seed": 7},
    "anp": {
        "initial": {"steps": 3, "lr": 1e-3, "milestones": [], "minibatch": 4},
        "round": {"steps": 2, "lr": 1e-3, "milestones": [], "minibatch": 4},
    },
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- configuration ---------------------------------------------------------------


def test_defaults_are_paper_scale():
    cfg = parse_config({})
    assert cfg.bbo.n_init == 1000 and cfg.bbo.rounds == 200 and cfg.bbo.n_targets == 5000
    assert cfg.bbo.initial_schedule.steps == 5000 and cfg.bbo.round_schedule.steps == 750
    assert cfg.objective.name == "exemplar1d" and cfg.workers == 1


def test_config_sections_are_applied(tmp_path):
    cfg = load_config(write_yaml(tmp_path / "c.yaml", TINY | {"output": {"workers": 3, "dir": "x"}}))
    assert cfg.bbo.n_init == 12 and cfg.bbo.seed == 7 and cfg.bbo.delta == 0.1
    assert cfg.bbo.initial_schedule.steps == 3 and cfg.bbo.round_schedule.minibatch == 4
    assert cfg.workers == 3 and cfg.out_dir == "x"


def test_json_configs_are_accepted(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(TINY))
    assert load_config(path).bbo.batch_size == 3


def test_invalid_config_lists_every_field():
    raw = {
        "objective": {"name": "spline"},
        "bbo": {"n_init": 0, "beta": -1, "delta": "wide", "bogus": 1},
        "anp": {"initial": {"steps": -1, "lr": 0}, "set_sizes": [9, 3]},
        "output": {"workers": 0},
        "extra": {},
    }
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    text = "\n".join(info.value.problems)
    for field in (
        "objective.name",
        "bbo.n_init",
        "bbo.beta",
        "bbo.delta",
        "bbo.bogus",
        "anp.initial.steps",
        "anp.initial.lr",
        "anp.set_sizes",
        "output.workers",
        "extra",
    ):
        assert field in text


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("bbo: [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_config_round_trips_through_as_dict():
    cfg = parse_config(TINY)
    assert parse_config(cfg.as_dict()) == cfg


# -- parallel evaluation ------------------------------------------------------------


class SleepyObjective:
    def __init__(self, delay):
        self.delay = delay

    def __call__(self, theta, seed=None):
        time.sleep(self.delay)
        return float(np.sum(theta))


def test_results_keep_candidate_order():
    lock = threading.Lock()
    finished = []

    def objective(theta, seed=None):
        time.sleep(0.05 * (5 - theta[0]))  # later candidates finish first
        with lock:
            finished.append(theta[0])
        return theta[0] * 10

    out = parallel_evaluate([np.array([float(i)]) for i in range(5)], objective, workers=5)
    assert [o.cost for o in out] == [0.0, 10.0, 20.0, 30.0, 40.0]
    assert finished != sorted(finished)


def test_parallel_wall_time():
    delay = 0.3
    candidates = [np.full(2, float(i)) for i in range(5)]
    start = time.perf_counter()
    parallel_evaluate(candidates, SleepyObjective(delay), workers=5)
    elapsed = time.perf_counter() - start
    assert elapsed < 2 * delay


def test_failure_isolation():
    def objective(theta, seed=None):
        if theta[0] == 2:
            raise RuntimeError("boom")
        return theta[0]

    out = parallel_evaluate([np.array([float(i)]) for i in range(5)], objective, workers=3)
    assert [o.ok for o in out] == [True, True, False, True, True]
    assert [o.cost for o in out if o.ok] == [0.0, 1.0, 3.0, 4.0]
    assert "boom" in out[2].error


def test_non_finite_cost_is_a_failure():
    out = parallel_evaluate([np.zeros(1)], lambda t, seed=None: float("nan"))
    assert not out[0].ok


def test_worker_count_does_not_change_twin_costs():
    obj = make_calibration_objective()
    thetas = list(TWIN_DOMAIN.denormalize(np.random.default_rng(0).random((6, 12))))
    seeds = [evaluation_seed(0, i) for i in range(6)]
    serial = [o.cost for o in parallel_evaluate(thetas, obj, 1, seeds)]
    pooled = [o.cost for o in parallel_evaluate(thetas, obj, 4, seeds)]
    assert serial == pooled


def test_workers_precondition():
    with pytest.raises(PreconditionError):
        parallel_evaluate([np.zeros(1)], lambda t, seed=None: 0.0, workers=0)


def test_evaluation_seeds_are_stable():
    assert evaluation_seed(3, 10) == evaluation_seed(3, 10)
    assert evaluation_seed(3, 10) != evaluation_seed(3, 11)


# -- experiments -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    out, history = run_experiment(parse_config(TINY), base)
    return out, history


def test_artifacts_exist(tiny_run):
    out, _ = tiny_run
    for name in ("history.csv", "incumbent.csv", "batches.jsonl", "report.json", "timings.csv", "config.json"):
        assert (out / name).is_file()
    assert out.name.startswith("run-") and out.name.endswith("-s7")


def test_history_rows(tiny_run):
    out, _ = tiny_run
    rows = read_csv(out / "history.csv")
    assert rows[0] == ["index", "round", "batch_index", "theta", "cost", "incumbent"]
    assert len(rows) - 1 == 12 + 2 * 3


def test_incumbent_csv_monotone(tiny_run):
    out, _ = tiny_run
    values = [float(r[1]) for r in read_csv(out / "incumbent.csv")[1:]]
    assert len(values) == 18
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_batches_jsonl(tiny_run):
    out, _ = tiny_run
    lines = [json.loads(line) for line in (out / "batches.jsonl").read_text().splitlines()]
    assert [b["round"] for b in lines] == [1, 2]
    for b in lines:
        assert [c["latent_index"] for c in b["candidates"]] == [0, 1, 2]
        for c in b["candidates"]:
            assert c["acquisition"] == pytest.approx(c["mean"] + 3.0 * c["std"])


def test_report_is_recomputable_from_history(tiny_run):
    out, _ = tiny_run
    report = json.loads((out / "report.json").read_text())
    rows = read_csv(out / "history.csv")[1:]
    costs = [float(r[4]) for r in rows]
    best = int(np.argmin(costs))
    assert report["best_cost"] == costs[best]
    assert report["best_theta"]["theta"] == float(rows[best][3])
    assert report["final_incumbent"] == float(rows[-1][5])
    assert report["evaluations"]["total"] == len(rows)
    assert report["evaluations"]["after_initialization"] == len(rows) - 12
    assert report["distance_to_optimum"] == pytest.approx(abs(float(rows[best][3]) - 0.5445))
    assert report["seed"] == 7 and report["version"] == __version__


def test_identical_runs_give_identical_history(tmp_path, tiny_run):
    out, _ = tiny_run
    again, _ = run_experiment(parse_config(TINY), tmp_path)
    assert (again / "history.csv").read_bytes() == (out / "history.csv").read_bytes()


def test_worker_count_does_not_change_history(tmp_path, tiny_run):
    out, _ = tiny_run
    cfg = parse_config(TINY | {"output": {"workers": 3}})
    pooled, _ = run_experiment(cfg, tmp_path)
    assert (pooled / "history.csv").read_bytes() == (out / "history.csv").read_bytes()


def test_runs_never_share_a_directory(tmp_path):
    cfg = parse_config(TINY)
    a, _ = run_experiment(cfg, tmp_path)
    b, _ = run_experiment(cfg, tmp_path)
    assert a != b
    assert (a / "history.csv").is_file() and (b / "history.csv").is_file()


class BreaksAfter(ExemplarObjective):
    """Every call beyond the first ``limit`` fails."""

    def __init__(self, limit):
        self.limit = limit
        self.calls = 0
        self.lock = threading.Lock()

    def __call__(self, theta, seed=None):
        with self.lock:
            self.calls += 1
            n = self.calls
        if n > self.limit:
            raise RuntimeError("twin crashed")
        return super().__call__(theta, seed)


def test_mid_run_failure_leaves_partial_artifacts(tmp_path):
    cfg = parse_config(TINY)
    with pytest.raises(EvaluationError):
        run_experiment(cfg, tmp_path, objective=BreaksAfter(12 + 3))
    (out,) = list(tmp_path.iterdir())
    error = json.loads((out / "error.json").read_text())
    assert error["type"] == "EvaluationError"
    assert error["completed_rounds"] == 1
    rows = read_csv(out / "history.csv")[1:]
    assert len(rows) == 12 + 3 + 3
    assert all(r[4] == "" for r in rows[-3:])
    assert not (out / "report.json").exists()


def test_twin_report_fields(tmp_path):
    cfg = parse_config(
        {
            "objective": {"name": "twin"},
            "bbo": {"n_init": 16, "rounds": 1, "batch_size": 2, "n_targets": 32},
            "anp": {
                "initial": {"steps": 2, "lr": 1e-3, "milestones": [], "minibatch": 2},
                "round": {"steps": 1, "lr": 1e-3, "milestones": [], "minibatch": 2},
            },
        }
    )
    out, _ = run_experiment(cfg, tmp_path)
    report = json.loads((out / "report.json").read_text())
    assert [p["name"] for p in report["parameters"]] == [f"theta{i}" for i in range(1, 13)]
    assert all(p["inside"] for p in report["parameters"])
    assert [p["true"] for p in report["parameters"]] == TRUE_THETA.tolist()
    assert set(report["holdout_cvrmse"]) == {"T1", "T2", "T3", "w1", "w2", "w3"}
    assert report["holdout_cvrmse_ratio_median"] > 0


# -- ablation ---------------------------------------------------------------------------


def test_ablation_needs_three_repeats(tmp_path):
    with pytest.raises(ConfigurationError, match="repeats"):
        run_ablation(parse_config(TINY), tmp_path, repeats=2)


def test_ablation_arms_share_initial_designs(tmp_path):
    base, results = run_ablation(parse_config(TINY), tmp_path, repeats=3)
    for i in range(3):
        first = [np.array([r.theta for r in results[arm][i].records[:12]]) for arm in results]
        for other in first[1:]:
            assert np.array_equal(first[0], other)
    assert [h.n_trainings for h in results["no-retrain"]] == [1, 1, 1]
    assert [h.n_trainings for h in results["full"]] == [3, 3, 3]
    rows = read_csv(base / "ablation.csv")
    assert rows[0] == ["index", "full", "no-tarpen", "no-retrain"]
    assert len(rows) - 1 == 18
    summary = json.loads((base / "ablation.json").read_text())
    assert summary["seeds"] == [7, 8, 9]


# -- CLI ------------------------------------------------------------------------------------


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_cli_run_with_overrides(tmp_path, capsys):
    path = write_yaml(tmp_path / "c.yaml", TINY)
    assert main(["run", "--config", str(path), "--seed", "3", "--out", str(tmp_path / "o"), "--workers", "2"]) == 0
    (out,) = list((tmp_path / "o").iterdir())
    assert out.name.endswith("-s3")
    assert json.loads((out / "report.json").read_text())["seed"] == 3


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = write_yaml(tmp_path / "c.yaml", {"bbo": {"delta": -1}})
    assert main(["run", "--config", str(path)]) == 2
    assert "bbo.delta" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_cli_runtime_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr("attnbo.objectives.ExemplarObjective", lambda: BreaksAfter(0))
    path = write_yaml(tmp_path / "c.yaml", TINY)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 3


def test_cli_simulate(tmp_path):
    out = tmp_path / "trace.csv"
    theta = ",".join(repr(float(v)) for v in TRUE_THETA)
    assert main(["simulate", "--theta", theta, "--days", "2", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["time_min", "T1", "T2", "T3", "w1", "w2", "w3"]
    assert len(rows) - 1 == 2 * 96


def test_cli_simulate_rejects_bad_theta(tmp_path):
    assert main(["simulate", "--theta", "1,2,3", "--out", str(tmp_path / "t.csv")]) == 2
    bad = ",".join(["100"] * 12)
    assert main(["simulate", "--theta", bad, "--out", str(tmp_path / "t.csv")]) == 2


def test_cli_ablate(tmp_path):
    path = write_yaml(tmp_path / "c.yaml", TINY)
    assert main(["ablate", "--config", str(path), "--repeats", "3", "--out", str(tmp_path / "a")]) == 0
    (base,) = list((tmp_path / "a").iterdir())
    assert (base / "ablation.csv").is_file()
    assert main(["ablate", "--config", str(path), "--repeats", "1", "--out", str(tmp_path / "b")]) == 2
