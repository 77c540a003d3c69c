import csv
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from a2ws.benchcli import ExperimentPlan, gain, main, radius_default, run_experiment
from a2ws.clustersim import builtin_config

import oracles


def read(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("a,b,expected", [(90, 100, 10.0), (100, 100, 0.0), (2.139, 2.1, -1.857142857142857)])
def test_gain_examples(a, b, expected):
    assert gain(a, b) == pytest.approx(expected, rel=1e-12)
    assert gain(a, b) == pytest.approx(float(oracles.gain(a, b)), rel=1e-12)


@pytest.mark.parametrize("b", [0, -1.0])
def test_gain_rejects_nonpositive_baseline(b):
    with pytest.raises(ValueError):
        gain(1.0, b)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_gain_antisymmetry(a, b):
    g_ab, g_ba = gain(a, b), gain(b, a)
    assert (1 - g_ab / 100) * (1 - g_ba / 100) == pytest.approx(1.0, rel=1e-9)


def test_radius_default_examples():
    assert (radius_default(64), radius_default(8), radius_default(2)) == (13, 2, 1)


def test_run_writes_one_row_per_rep(tmp_path):
    rc = main(["run", "--scheduler", "a2ws", "--config", "C1", "--tasks", "480", "--reps", "5", "--out", str(tmp_path)])
    assert rc == 0
    rows = read(tmp_path / "runs.csv")
    assert len(rows) == 5
    assert [int(r["seed"]) for r in rows] == [1, 2, 3, 4, 5]
    assert all(int(r["executed"]) == 480 and r["status"] == "ok" for r in rows)
    assert set(rows[0]) >= {"scheduler", "config", "n_tasks", "radius", "seed", "makespan", "steals", "failed_steals", "info_sends"}
    assert not (tmp_path / "trace.csv").exists()


def test_trace_rows_cover_every_task(tmp_path):
    main(["run", "--scheduler", "ctws", "--config", "C1", "--tasks", "80", "--reps", "2", "--trace", "--out", str(tmp_path)])
    trace = read(tmp_path / "trace.csv")
    assert len(trace) == 160
    assert sorted(int(r["task_id"]) for r in trace if r["seed"] == "1") == list(range(80))


def test_compare_writes_gain_from_medians(tmp_path):
    rc = main(["compare", "--a", "a2ws", "--b", "lw", "--config", "C1", "--tasks", "480", "--reps", "3", "--out", str(tmp_path)])
    assert rc == 0
    gains = read(tmp_path / "gains.csv")
    assert len(gains) == 1
    runs = read(tmp_path / "runs.csv")
    med = {}
    for s in ("a2ws", "lw"):
        spans = sorted(float(r["makespan"]) for r in runs if r["scheduler"] == s)
        med[s] = spans[1]
        # odd repetition count: the median is an observed makespan
        assert float(gains[0][f"{'a' if s == 'a2ws' else 'b'}_median"]) in spans
    assert float(gains[0]["gain_percent"]) == pytest.approx(gain(med["a2ws"], med["lw"]), rel=1e-5)


def test_radius_sweep_rows(tmp_path):
    main(["run", "--scheduler", "a2ws", "--config", "C2", "--tasks", "320", "--radius-sweep", "1,2,4,8,16,32", "--reps", "2", "--out", str(tmp_path)])
    rows = read(tmp_path / "runs.csv")
    assert len(rows) == 12
    # values beyond the usable maximum are clamped to (P-1)//2
    assert [r["radius"] for r in rows[::2]] == ["1", "2", "4", "7", "7", "7"]


def test_config_file_and_workload_knobs(tmp_path):
    cfg = tmp_path / "nodes.txt"
    cfg.write_text("cores=8\ncores=2\ncores=1 alpha=1.0\n")
    rc = main([
        "run", "--scheduler", "lw", "--config", f"@{cfg}", "--tasks", "30", "--reps", "1",
        "--base-cost", "10", "--alpha", "1.0", "--sigma", "0", "--out", str(tmp_path / "o"),
    ])
    assert rc == 0
    row = read(tmp_path / "o" / "runs.csv")[0]
    assert row["config"] == "nodes" and row["executed"] == "30"


def test_parallel_runs_give_same_rows(tmp_path):
    args = ["run", "--scheduler", "a2ws", "--config", "C1", "--tasks", "160", "--reps", "3"]
    main(args + ["--out", str(tmp_path / "seq")])
    main(args + ["--parallel-runs", "3", "--out", str(tmp_path / "par")])
    assert read(tmp_path / "seq" / "runs.csv") == read(tmp_path / "par" / "runs.csv")


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scheduler", "a2ws", "--config", "C1", "--tasks", "4"],
        ["run", "--scheduler", "a2ws", "--config", "C7", "--tasks", "80"],
        ["run", "--scheduler", "a2ws", "--config", "C1", "--tasks", "80", "--reps", "0"],
        ["run", "--scheduler", "a2ws", "--config", "C1", "--tasks", "80", "--radius", "0"],
        ["run", "--scheduler", "a2ws", "--config", "@/no/such/file", "--tasks", "80"],
        ["compare", "--a", "a2ws", "--b", "lw", "--config", "C1", "--tasks", "80", "--radius-sweep", "1,2"],
    ],
)
def test_faults_exit_nonzero(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) != 0


def test_bad_arguments_exit_nonzero(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scheduler", "magic", "--config", "C1", "--tasks", "80", "--out", str(tmp_path)])
    assert exc.value.code != 0


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--scheduler", "lw", "--config", "C1", "--tasks", "80", "--reps", "1", "--out", str(blocker / "sub")]) != 0


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(("a2ws",), builtin_config("C1"), (80,), repetitions=0)
    plan = ExperimentPlan(("a2ws", "lw"), builtin_config("C1"), (80,), repetitions=2, radii=(1, 9))
    assert plan.radii == (1, 3)
    assert len(list(plan.jobs())) == 2 * 2 + 2


def test_run_experiment_returns_results(tmp_path):
    plan = ExperimentPlan(("lw",), builtin_config("C1"), (80, 160), repetitions=1, out=tmp_path)
    results = run_experiment(plan)
    assert [r.n_tasks for r in results] == [80, 160]


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "a2ws", "run", "--scheduler", "lw", "--config", "C1", "--tasks", "80", "--reps", "1", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "runs.csv").exists()
