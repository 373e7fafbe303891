import csv
import io
import json
import math

import pytest

from tcldpc.cli import main, parse_ebn0
from tcldpc.estimators import p_md_analytic

from conftest import T_HEX, T_PRIME_HEX


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_ebn0():
    assert parse_ebn0("0:7:1") == [float(i) for i in range(8)]
    assert parse_ebn0("1,2.5, 4") == [1.0, 2.5, 4.0]
    assert parse_ebn0("0:1:0.25,3") == [0.0, 0.25, 0.5, 0.75, 1.0, 3.0]
    assert parse_ebn0("0:0.3:0.1") == [0.0, 0.1, 0.2, 0.3]


def test_randomize_prints_t_prime(capsys):
    code, out, _ = run(capsys, "randomize", *T_HEX.split())
    assert code == 0 and out.strip() == T_PRIME_HEX
    code, out, _ = run(capsys, "derandomize", T_PRIME_HEX.replace(" ", ""), "--group", "0")
    assert out.strip() == T_HEX.replace(" ", "")


def test_pmd_sweep(capsys):
    code, out, _ = run(capsys, "pmd", "--S", "64", "--E", "13", "--ebn0", "0:7:1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 8
    for row in rows:
        assert float(row["p_md"]) == pytest.approx(p_md_analytic(64, 13, float(row["ebn0_db"])), rel=1e-12)
        assert math.isfinite(float(row["p_b"]))
    code, out, _ = run(capsys, "pmd", "--ebn0", "0,1", "--format", "json")
    assert json.loads(out)["rows"][1]["ebn0_db"] == 1.0


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["pmd"],
    ["pmd", "--ebn0", "1:x"],
    ["pmd", "--ebn0", "3:1:1"],
    ["cer", "--ebn0", "1", "--algo", "turbo"],
    ["cer", "--ebn0", "1", "--max-iter", "0"],
    ["cer", "--ebn0", "1", "--workers", "0"],
    ["randomize", "XYZ"],
    ["pmd", "--ebn0", "1", "--E", "70"],
    ["distance", "--target", "ABCD"],
])
def test_argument_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_code_info_and_export(capsys):
    code, out, _ = run(capsys, "code", "info", "--format", "json")
    info = json.loads(out)
    assert (info["n"], info["k"], info["circulant_size"], info["edges"]) == (128, 64, 16, 512)
    code, out, _ = run(capsys, "code", "export", "--code", "toy-hamming-7-4", "--export-format", "dense")
    assert out.splitlines() == ["1101100", "1011010", "0111001"]


def test_tcrej_deterministic(capsys):
    argv = ["tcrej", "--algo", "spa", "--max-iter", "100", "--n-codewords", "1", "--ts-mode", "randomized",
            "--ebn0", "6", "--seed", "42", "--target-events", "3", "--max-trials", "3000"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    rows = list(csv.DictReader(io.StringIO(first)))
    assert len(rows) == 1 and all(math.isfinite(float(v)) for v in rows[0].values())


def test_seed_env_default(capsys, monkeypatch):
    argv = ["cer", "--algo", "msa", "--max-iter", "20", "--ebn0", "2", "--target-events", "10", "--format", "json"]
    monkeypatch.setenv("TCLDPC_SEED", "77")
    _, out, _ = run(capsys, *argv)
    assert json.loads(out)["metadata"]["seed"] == 77
    monkeypatch.setenv("TCLDPC_SEED", "nope")
    assert run(capsys, *argv)[0] == 2


def test_out_manifest_and_replay(capsys, tmp_path):
    target = tmp_path / "cer.csv"
    argv = ["cer", "--algo", "msa", "--max-iter", "20", "--ebn0", "1,2", "--target-events", "20",
            "--seed", "5", "--workers", "2", "--out", str(target)]
    assert run(capsys, *argv)[0] == 0
    data = target.read_text()
    manifest = json.loads((tmp_path / "cer.csv.manifest.json").read_text())
    assert manifest["argv"] == argv and manifest["config"]["seed"] == 5
    assert "wall_clock_seconds" in manifest and manifest["version"]
    target.unlink()
    assert run(capsys, "replay", str(tmp_path / "cer.csv.manifest.json"))[0] == 0
    assert target.read_text() == data


def test_distance_command(capsys):
    code, out, _ = run(capsys, "distance", "--target", "t-prime", "--iterations", "1000", "--max-distance", "15",
                       "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["best_distance"] == 15 and data["census"] == {"15": 3}


def test_pnat_and_histogram_commands(capsys):
    code, out, _ = run(capsys, "pnat", "--algo", "msa", "--max-iter", "20", "--ebn0", "0", "--max-trials", "500",
                       "--ts-mode", "derandomized")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["trials"] == "500"
    code, out, _ = run(capsys, "histogram", "--algo", "msa", "--max-iter", "20", "--ebn0", "0,1",
                       "--trials-per-point", "200", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["total_trials"] == 400


def test_cltu_build_and_parse(capsys):
    code, out, _ = run(capsys, "cltu", "build", "0123456789ABCDEF", "FFFFFFFFFFFFFFFF")
    hexword = out.strip()
    assert code == 0 and len(hexword) * 4 == 64 + 256 + 128
    assert hexword.startswith("034776C7272895B0") and hexword.endswith(T_HEX.replace(" ", ""))
    code, out, _ = run(capsys, "cltu-parse", hexword)
    lines = out.splitlines()
    assert lines[0].endswith("0123456789ABCDEF codeword") and lines[1].endswith("codeword")
    assert lines[2] == "tail: " + T_PRIME_HEX.replace(" ", "")
