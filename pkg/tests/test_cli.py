import csv
import io
import json

import pytest

from amcsim.cli import main
from amcsim.experiment import CSV_COLUMNS
from amcsim.traceio import load_trace

from helpers import ROOT

WORKED = str(ROOT / "configs" / "worked_example.json")


def test_run_to_stdout(capsys):
    assert main(["run", "--config", WORKED]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert rows[0]["prefetches_issued"] == "11" and rows[0]["useful"] == "7"


def test_run_json_to_dir(tmp_path):
    assert main(["run", "--config", WORKED, "--out", str(tmp_path), "--format", "json"]) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data[0]["final_iteration_coverage"] == 0.5


def test_assertions_exit_codes(capsys):
    assert main(["run", "--config", WORKED, "--assert", "final_iteration_accuracy>=0.45"]) == 0
    assert main(["run", "--config", WORKED, "--assert", "final_iteration_accuracy>=0.9"]) == 3
    assert main(["run", "--config", WORKED, "--assert", "nonsense"]) == 2
    assert main(["run", "--config", WORKED, "--assert", "speedup>=1"]) == 2


@pytest.mark.parametrize("cfg", [
    "{not json",
    json.dumps({"workload": {"kind": "pgd", "vertices": "many"}}),
    json.dumps({"prefetcher": "vldp"}),
])
def test_config_errors_exit_2(tmp_path, capsys, cfg):
    p = tmp_path / "c.json"
    p.write_text(cfg)
    assert main(["run", "--config", str(p)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exits_2():
    assert main(["run", "--config", "/nonexistent/c.json"]) == 2


def test_prefetcher_override(capsys):
    assert main(["run", "--config", WORKED, "--prefetcher", "markov"]) == 0
    assert "markov" in capsys.readouterr().out


def test_sweep(capsys):
    assert main(["sweep", "--config", WORKED, "--caps", "1,3,6", "--assert", "fraction@6>=1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "cap,fraction_at_or_below"
    fr = [float(x.split(",")[1]) for x in lines[1:]]
    assert fr == sorted(fr) and fr[-1] == 1.0
    assert main(["sweep", "--config", WORKED, "--caps", "0"]) == 2
    assert main(["sweep", "--config", WORKED, "--caps", "a,b"]) == 2


def test_compare(tmp_path, capsys):
    cfg = json.loads((ROOT / "configs" / "worked_example.json").read_text())
    cfg["prefetcher"] = {"name": ["pc_temporal_lite", "amc"]}
    p = tmp_path / "cmp.json"
    p.write_text(json.dumps(cfg))
    assert main(["compare", "--config", str(p)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["prefetcher"] for r in rows] == ["pc_temporal_lite", "amc"]
    assert float(rows[0]["delta_coverage"]) == 0.0
    cfg["prefetcher"] = "amc"
    p.write_text(json.dumps(cfg))
    assert main(["compare", "--config", str(p)]) == 2


@pytest.mark.parametrize("kernel", ["pgd", "bfs", "cc", "bellmanford"])
def test_gen_trace(tmp_path, kernel):
    out = tmp_path / f"{kernel}.amct"
    assert main(["gen-trace", "--kernel", kernel, "--vertices", "60", "--degree", "3",
                 "--iterations", "2", "--seed", "4", "--out", str(out)]) == 0
    ev = load_trace(out)
    assert type(ev[0]).__name__ == "Init" and type(ev[-1]).__name__ == "End"


def test_gen_trace_then_run(tmp_path, capsys):
    out = tmp_path / "g.jsonl"
    assert main(["gen-trace", "--vertices", "200", "--degree", "4", "--iterations", "3", "--out", str(out)]) == 0
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"workload": {"kind": "trace", "path": "g.jsonl"}}))
    assert main(["run", "--config", str(cfg)]) == 0
    assert main(["gen-trace", "--vertices", "1", "--out", str(out)]) == 2


def test_fixture(tmp_path):
    assert main(["fixture", "--name", "worked-example", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "worked_example.jsonl").exists()
    assert main(["fixture", "--name", "other", "--out", str(tmp_path)]) == 2


def test_shipped_fixtures_are_current(tmp_path):
    main(["fixture", "--out", str(tmp_path)])
    for name in ("worked_example.jsonl", "worked_example_misb.jsonl", "iteration1.jsonl"):
        assert (tmp_path / name).read_text() == (ROOT / "fixtures" / name).read_text()
