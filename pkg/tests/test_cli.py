import json
import os
import subprocess
import sys

import pytest

from pmp_pulse.cli import main
from pmp_pulse.io import RunConfig

from conftest import CASE_I_PARAMS

FAST_I = {"schema": 1, "case": "i", "grid": [[1.2, -1.1]]}


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    cfg = write_json(d / "cfg.json", FAST_I)
    assert main(["synthesize", "--config", cfg, "--out", str(d / "a")]) == 0
    return d


def test_synthesize_outputs(synth_dir, capsys):
    out = synth_dir / "a"
    names = sorted(os.listdir(out))
    assert names == ["i_detuning.csv", "i_potential.csv", "i_pulse.csv", "i_record.json", "i_trace.csv"]
    rec = json.loads((out / "i_record.json").read_text())
    assert rec["schema"] == 1 and rec["case"] == "i"
    assert abs(rec["T"] - 4.875) <= 0.01
    for name in names:
        if name.endswith(".csv"):
            first = (out / name).read_text().splitlines()[0]
            assert first == f"# config_hash={rec['config_hash']}"


def test_outputs_are_byte_identical(synth_dir):
    cfg = str(synth_dir / "cfg.json")
    assert main(["synthesize", "--config", cfg, "--out", str(synth_dir / "b")]) == 0
    for name in os.listdir(synth_dir / "a"):
        assert (synth_dir / "a" / name).read_bytes() == (synth_dir / "b" / name).read_bytes(), name


def test_verify_exit_codes(synth_dir, tmp_path, capsys):
    good = synth_dir / "a" / "i_record.json"
    assert main(["verify", str(good)]) == 0
    rec = json.loads(good.read_text())
    rec["delta"] = [1.01 * x for x in rec["delta"]]
    bad = write_json(tmp_path / "bad.json", rec)
    capsys.readouterr()
    assert main(["verify", bad]) == 3
    assert "energy" in capsys.readouterr().out
    rec = json.loads(good.read_text())
    rec["potential"] = None
    missing = write_json(tmp_path / "missing.json", rec)
    assert main(["verify", missing]) == 4
    assert "potential" in capsys.readouterr().err


def test_schema_errors_carry_a_path(synth_dir, tmp_path, capsys):
    rec = json.loads((synth_dir / "a" / "i_record.json").read_text())
    rec["potential"]["c2"] = "x"
    path = write_json(tmp_path / "r.json", rec)
    assert main(["verify", path]) == 4
    assert "potential.c2" in capsys.readouterr().err


def test_record_based_commands(synth_dir, tmp_path, capsys):
    rec = str(synth_dir / "a" / "i_record.json")
    out = str(tmp_path)
    assert main(["compare", "--record", rec, "--out", out]) == 0
    line = capsys.readouterr().out
    linf = float(line.split("linf=")[1].split(",")[0])
    assert linf <= 0.05
    assert main(["blockade", "--record", rec, "--B", "500", "--out", out]) == 0
    line = capsys.readouterr().out
    assert float(line.split("infidelity_k2=")[1].split(",")[0]) <= 1e-2
    assert main(["bloch-export", "--record", rec, "--out", out, "--gnuplot"]) == 0
    assert {"i_bloch_k1.csv", "i_bloch_k2.csv", "i_overlay.csv", "i_blockade.csv"} <= set(os.listdir(out))


def test_abnormal_command(tmp_path, capsys):
    assert main(["abnormal", "--lmax", "20", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split()[:2] == ["3", "4"]
    assert "min_T=16.623746" in lines[-1]


def test_custom_target_scan(tmp_path, capsys):
    target = write_json(tmp_path / "t.json", {"type": "per_tls", "kets": ["1", "0"]})
    cfg = write_json(tmp_path / "c.json", {"schema": 1, "grid": [[0.75, -0.03], [1.0, -0.3]]})
    assert main(["scan", "--target", target, "--config", cfg, "--range", "1-2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "best: crossings=1" in out
    assert main(["synthesize", "--target", target, "--config", cfg, "--crossings", "1", "--out", str(tmp_path)]) == 0
    assert float(capsys.readouterr().out.split("fidelity=")[1].split(",")[0]) >= 0.999


def test_config_errors(tmp_path, capsys):
    assert main(["synthesize"]) == 4
    bad = write_json(tmp_path / "bad.json", {"schema": 2})
    assert main(["synthesize", "--case", "i", "--config", bad]) == 4
    unknown = write_json(tmp_path / "u.json", {"schema": 1, "colour": "red"})
    assert main(["synthesize", "--case", "i", "--config", unknown]) == 4
    with pytest.raises(SystemExit) as err:
        main(["nonsense"])
    assert err.value.code == 4


def test_optimization_failure_exit_code(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"schema": 1, "case": "ii", "crossings": 1, "grid": [[1.0, -1.0, -1.0]]})
    assert main(["synthesize", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_run_config_hash_ignores_output_dir():
    a = RunConfig(case="i", out="x")
    b = RunConfig(case="i", out="y")
    assert a.hash_for("synthesize") == b.hash_for("synthesize")
    assert a.hash_for("synthesize") != a.hash_for("grape")
    assert RunConfig(case="i", dt=5e-4).hash_for("synthesize") != a.hash_for("synthesize")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pmp_pulse", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "synthesize" in res.stdout
