import csv
import json
import subprocess
import sys

import pytest

from xbkqa.cli import main
from xbkqa.fermion import fixture_path
from xbkqa.pipeline import RunConfig


def run(tmp_path, *args):
    return main(["--out-dir", str(tmp_path), *args])


def shifted_h2(tmp_path, shift):
    """H2 with its recorded FCI energy moved by ``shift`` Hartree."""
    lines = []
    for line in fixture_path("h2").read_text().splitlines():
        if line.startswith("e_fci"):
            line = f"e_fci {float(line.split()[1]) + shift!r}"
        lines.append(line)
    path = tmp_path / f"h2_shift{shift}.ferm"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_encode_and_taper(tmp_path):
    assert run(tmp_path, "encode", "--input", "h2") == 0
    assert (tmp_path / "hamiltonian.pauli").read_text().strip()
    assert run(tmp_path, "taper", "--input", "h2") == 0
    rep = json.loads((tmp_path / "tapering.json").read_text())
    assert rep["n_qubits_before"] == 4 and rep["n_qubits_after"] < 4
    assert (tmp_path / "tapered.pauli").exists()


def test_xbk_and_quadratize(tmp_path):
    assert run(tmp_path, "xbk", "--input", "h2o", "-r", "2") == 0
    sectors = json.loads((tmp_path / "sectors.json").read_text())
    assert [s["p"] for s in sectors] == [0, 1]
    assert run(tmp_path, "quadratize", "--input", "h2o", "-r", "2") == 0
    for p in (0, 1):
        assert (tmp_path / f"sector_p{p}.qubo").exists()
        assert (tmp_path / f"sector_p{p}.ising.json").exists()
        assert (tmp_path / f"sector_p{p}.ancillas.json").exists()


def test_embed(tmp_path):
    assert run(tmp_path, "embed", "--input", "h2", "--hardware", "chimera", "--hardware-size", "4",
               "--embedding-attempts", "3") == 0
    rows = list(csv.DictReader(open(tmp_path / "embedding_stats.csv")))
    assert len(rows) == 3 and {r["family"] for r in rows} == {"chimera"}
    assert json.loads((tmp_path / "embedding.json").read_text())


def test_solve_success(tmp_path, capsys):
    assert run(tmp_path, "solve", "--input", "h2") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["classification"] == "success"
    assert "success" in capsys.readouterr().out
    assert list(csv.DictReader(open(tmp_path / "runs.csv")))[0]["seed"] == "0"


@pytest.mark.parametrize("shift,code", [(1.0, 2), (20.0, 3)])
def test_solve_exit_codes_follow_classification(tmp_path, shift, code):
    assert run(tmp_path, "solve", "--input", shifted_h2(tmp_path, shift), "-r", "16", "--reference", "fci") == code


def test_pipeline_writes_record(tmp_path):
    assert run(tmp_path, "pipeline", "--input", "h2", "--seed", "5") == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [5]
    assert (tmp_path / "run.jsonl").exists()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"input": "h2", "r": 3, "seed": 9}))
    assert run(tmp_path, "--config", str(cfg), "pipeline", "-r", "2") == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["r"] == 2 and manifest["config"]["seed"] == 9
    assert RunConfig.from_dict(manifest["config"]).config_hash() == manifest["config_hash"]


def test_scaling_and_gaps(tmp_path):
    assert run(tmp_path, "scaling", "--input", "h2", "--hardware", "chimera", "--hardware-size", "4",
               "--r-values", "1,2") == 0
    rows = list(csv.DictReader(open(tmp_path / "scaling.csv")))
    assert int(rows[1]["xbk_qubits"]) == 2 * int(rows[0]["xbk_qubits"])
    assert run(tmp_path, "gaps", "--input", "h2", "--r-values", "1 2") == 0
    rows = list(csv.DictReader(open(tmp_path / "gaps.csv")))
    assert {r["r"] for r in rows} == {"1", "2"}


def test_schedules(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"input": "h2", "r": 2, "num_reads": 10}))
    assert run(tmp_path, "--config", str(cfg), "schedules") == 0
    for kind in ("forward", "paused", "reverse"):
        assert (tmp_path / f"schedule_{kind}.json").exists()
    for name in ("schedule_comparison.csv", "schedule_runs.csv", "reverse_improvement.csv"):
        assert len(list(csv.DictReader(open(tmp_path / name)))) > 0
    assert (tmp_path / "samples_forward.jsonl").exists()


def test_stage_and_usage_errors(tmp_path, capsys):
    assert run(tmp_path, "solve", "--input", str(tmp_path / "missing.ferm")) == 4
    assert run(tmp_path, "solve", "--input", "h2o", "-r", "9") == 4
    bad = tmp_path / "bad.ferm"
    bad.write_text("n_modes 2\n5^ 0 1.0\n")
    assert run(tmp_path, "solve", "--input", str(bad)) == 4
    assert "[parse]" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "xbkqa", "--out-dir", str(tmp_path), "solve", "--input", "h2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "success" in proc.stdout
