import json
import subprocess
import sys

import pytest

from wsnsched.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def usage(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code, capsys.readouterr().err


def test_oracle_mnp(capsys):
    assert run(["oracle", "--mnp", "8,7,6,5,4", "--k", "2"], capsys)[:2] == (0, "15\n")
    assert run(["oracle", "--mnp", "4,4,4", "--k", "3", "--verify"], capsys)[:2] == (0, "4\n")


def test_gen_and_simulate_and_audit(tmp_path, capsys):
    topo, work, trace = tmp_path / "t.json", tmp_path / "w.json", tmp_path / "trace.jsonl"
    assert main(["gen-topology", "--seed", "3", "--out", str(topo)]) == 0
    assert main(["gen-workload", "--seed", "3", "--topology", str(topo), "--n-apps", "30", "--out", str(work)]) == 0
    assert len(json.loads(work.read_text())["applications"]) == 30
    code, out, _ = run(["simulate", "--seed", "3", "--topology", str(topo), "--workload", str(work),
                        "--algorithm", "lmsf", "--mode", "unshared", "--trace", str(trace)], capsys)
    assert code == 0
    metrics = json.loads(out)
    assert metrics["admitted"] + metrics["rejected"] == 30 and metrics["algorithm"] == "lmsf"
    code, out, _ = run(["audit", "--topology", str(topo), "--workload", str(work), "--trace", str(trace),
                        "--mode", "unshared"], capsys)
    assert code == 0 and out.strip().endswith("ok")
    # drop the first admission: its later release no longer matches
    lines = trace.read_text().splitlines()
    first = next(i for i, line in enumerate(lines) if '"admit"' in line)
    trace.write_text("\n".join(lines[:first] + lines[first + 1:]) + "\n")
    code, out, _ = run(["audit", "--topology", str(topo), "--workload", str(work), "--trace", str(trace),
                        "--mode", "unshared"], capsys)
    assert code == 1 and "problem" in out


def test_oracle_on_files(tmp_path, capsys):
    topo, work = tmp_path / "t.json", tmp_path / "w.json"
    main(["gen-topology", "--seed", "1", "--n-points", "3", "--n-sensors", "2", "--n-bases", "1",
          "--width", "60", "--height", "60", "--out", str(topo)])
    main(["gen-workload", "--seed", "1", "--topology", str(topo), "--n-apps", "4", "--n-batches", "1",
          "--points-per-app", "1,1", "--duration", "1,9", "--out", str(work)])
    code, out, err = run(["oracle", "--topology", str(topo), "--workload", str(work)], capsys)
    assert code == 0, err
    best = float(out)
    code, out, _ = run(["simulate", "--seed", "1", "--topology", str(topo), "--workload", str(work)], capsys)
    assert best <= json.loads(out)["makespan"]


def test_simulate_is_deterministic(capsys):
    args = ["simulate", "--seed", "4", "--algorithm", "gabas", "--n-apps", "20"]
    assert run(args, capsys)[1] == run(args, capsys)[1]


def test_experiment_bytes_identical(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("WSNSCHED_OUT_DIR", str(tmp_path / "out"))
    args = ["experiment", "--scenario", "1", "--values", "20,30", "--algorithms", "gabas,lmpf",
            "--modes", "shared", "--runs", "2", "--seed", "42"]
    assert main(args + ["--out", "a.csv"]) == 0
    assert main(args + ["--out", "b.csv"]) == 0
    a, b = (tmp_path / "out" / "a.csv").read_bytes(), (tmp_path / "out" / "b.csv").read_bytes()
    assert a == b and len(a.decode().splitlines()) == 1 + 2 * (2 * 2 + 2)


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nseed = 4\nalgorithm = sjf\nn-apps = 15\n")
    code, out, _ = run(["--config", str(cfg), "simulate"], capsys)
    assert code == 0 and json.loads(out)["algorithm"] == "sjf"
    code, out, _ = run(["--config", str(cfg), "simulate", "--algorithm", "fcfs"], capsys)
    assert json.loads(out)["algorithm"] == "fcfs"
    cfg.write_text("bogus = 1\n")
    assert usage(["--config", str(cfg), "simulate", "--seed", "1"], capsys)[0] == 2


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["gen-topology"],
    ["experiment", "--runs", "1"],
    ["simulate", "--seed", "1", "--algorithm", "edf"],
    ["simulate", "--seed", "1", "--workload", "w.json"],
    ["simulate", "--seed", "1", "--preset", "desk", "--topology", "t.json"],
    ["oracle"],
    ["oracle", "--mnp", "1,2"],
    ["oracle", "--mnp", "1,x", "--k", "2"],
    ["experiment", "--seed", "1", "--runs", "0"],
    ["experiment", "--seed", "1", "--scenario", "9"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, err = usage(argv, capsys)
    assert code == 2 and "error" in err


def test_runtime_errors_exit_1(tmp_path, capsys):
    code, _, err = run(["audit", "--topology", str(tmp_path / "nope.json"), "--workload", "w", "--trace", "t"], capsys)
    assert code == 1 and err.startswith("wsnsched: error: ")
    code, _, err = run(["oracle", "--mnp", "1,0", "--k", "2"], capsys)
    assert code == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wsnsched", "oracle", "--mnp", "10", "--k", "1"],
                         capture_output=True, text=True, check=True)
    assert out.stdout == "10\n"
