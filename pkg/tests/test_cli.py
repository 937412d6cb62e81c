"""End-to-end CLI tests.

Golden files live in ``tests/golden``; regenerate them with
``HCONVEX_UPDATE_GOLDEN=1 pytest tests/test_cli.py`` after an intended change.
"""

import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from hconvex.cli import emit_figure1, parse_domain, run

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("HCONVEX_UPDATE_GOLDEN") == "1"

CASES = {
    "check_sqrt": ["check", "--f", "sqrt(t)", "--class", "convex", "--grid", "21x11", "--refine"],
    "check_sconvex1": ["check", "--f", "t", "--class", "sconvex1:0.5", "--domain", "0.5:1", "--grid", "6x5"],
    "refute_hconvex": ["refute", "--f", "1-t^2", "--class", "hconvex", "--h", "power:1.5",
                       "--grid", "11x6", "--random", "200", "--seed", "3"],
    "theorem1_concave": ["theorem1", "--f", "sqrt(t)", "--concave", "--grid", "11x11"],
    "theorem2_parabola": ["theorem2", "--f", "t^2", "--h", "power:0.5", "--inner", "0.1:0.9",
                          "--eps", "0.05", "--grid", "11x5"],
    "modulus_sqrt": ["modulus", "--f", "sqrt(t)", "--h", "power:0.5", "--pairs", "300"],
    "holder_linear": ["holder", "--f", "3*t", "--pairs", "60"],
    "curve_half": ["curve", "--s", "0.5", "--n", "6"],
    "conjecture_parabola": ["conjecture", "--f", "1-0.1*t^2", "--h", "power:0.5", "--grid", "11x11"],
    "props_reciprocal": ["props", "--h", "reciprocal", "--n", "11"],
    "figure1_small": ["figure1", "--n", "5"],
}


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _compare(path: Path, golden: Path):
    if UPDATE:
        golden.write_bytes(path.read_bytes())
    assert golden.exists(), f"missing golden file {golden.name}; set HCONVEX_UPDATE_GOLDEN=1"
    assert path.read_text() == golden.read_text()


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, tmp_path):
    base = tmp_path / name
    code, _, err = _run(CASES[name] + ["--out", str(base), "--format", "both"])
    assert code == 0, err
    for suffix in (".json", ".csv"):
        _compare(base.with_suffix(suffix), GOLDEN / f"{name}{suffix}")


def test_golden_files_cover_every_subcommand():
    from hconvex.cli import COMMANDS
    assert {argv[0] for argv in CASES.values()} == set(COMMANDS)


class TestExitCodes:
    def test_certified(self):
        code, out, _ = _run(["check", "--f", "t^2", "--class", "convex", "--domain", "0:1"])
        assert code == 0
        assert json.loads(out)["result"]["verdict"]["status"] == "certified_on_grid"

    def test_refuted_is_success(self):
        code, out, _ = _run(["check", "--f", "sqrt(t)", "--class", "convex", "--domain", "0:1"])
        rep = json.loads(out)
        assert code == 0 and rep["exit_code"] == 0
        assert rep["result"]["verdict"]["status"] == "refuted"
        assert rep["result"]["verdict"]["witness"]["residual"] < 0

    @pytest.mark.parametrize("argv", [
        ["check", "--f", "t^2", "--h", "power:0", "--class", "hconvex-geometric"],
        ["check", "--f", "t^2", "--h", "reciprocal", "--class", "hconvex-geometric"],
        ["check", "--f", "t^^2"],
        ["check", "--f", "x+1"],
        ["check", "--f", "t", "--class", "cubic"],
        ["check", "--f", "t", "--class", "sconvex2:1.5"],
        ["check", "--f", "t", "--domain", "1:0"],
        ["check", "--f", "t", "--domain", "zero:one"],
        ["check", "--f", "t", "--grid", "10"],
        ["check", "--f", "t", "--grid", "1x10"],
        ["check", "--f", "t", "--h", "cubic"],
        ["check"],
        ["check", "--f", "t", "--bogus"],
        ["frobnicate"],
        ["theorem2", "--f", "t"],
        ["theorem2", "--f", "t", "--inner", "0:0.5", "--eps", "0.1"],
        ["figure1", "--n", "1"],
        ["curve", "--s", "0"],
        ["check", "--f", "t", "--format", "both"],
    ])
    def test_config_errors(self, argv):
        code, out, err = _run(argv)
        assert code == 1
        assert out == ""
        lines = err.strip().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["error"] == "config"

    def test_indeterminate(self):
        code, out, _ = _run(["check", "--f", "log(t)", "--domain", "0:1", "--grid", "11x5"])
        rep = json.loads(out)
        assert code == 2 and rep["exit_code"] == 2
        assert rep["result"]["verdict"]["status"] == "indeterminate"
        assert rep["hypothesis_warnings"]

    def test_open_domain_fixes_it(self):
        code, _, _ = _run(["check", "--f", "log(t)", "--domain", "(0:1", "--grid", "11x5"])
        assert code == 0

    def test_io_error(self, tmp_path):
        code, _, err = _run(["figure1", "--out", str(tmp_path / "missing" / "x.csv")])
        assert code == 2
        assert json.loads(err)["error"] == "io"


class TestOptions:
    def test_domain_syntax(self):
        d = parse_domain("(0:1]")
        assert (d.lo, d.hi, d.open_lo, d.open_hi) == (0.0, 1.0, True, False)
        d = parse_domain("[-2:3)")
        assert (d.lo, d.hi, d.open_lo, d.open_hi) == (-2.0, 3.0, False, True)
        assert not parse_domain("0:1").open_lo

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"f": "sqrt(t)", "grid": "11x6", "class": "convex"}))
        _, out, _ = _run(["check", "--config", str(cfg)])
        assert json.loads(out)["result"]["verdict"]["status"] == "refuted"
        _, out, _ = _run(["check", "--config", str(cfg), "--f", "t^2"])
        rep = json.loads(out)
        assert rep["config"]["f"] == "t^2" and rep["config"]["grid"] == "11x6"
        assert rep["result"]["verdict"]["status"] == "certified_on_grid"

    def test_config_file_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"function": "t"}))
        assert _run(["check", "--config", str(cfg)])[0] == 1

    def test_format_both(self, tmp_path):
        code, _, _ = _run(["curve", "--s", "0.5", "--n", "3", "--out", str(tmp_path / "c"), "--format", "both"])
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["c.csv", "c.json"]

    def test_timing_sidecar_keeps_report_deterministic(self, tmp_path):
        argv = ["theorem1", "--f", "t^2", "--grid", "11x11", "--timing"]
        run(argv + ["--out", str(tmp_path / "a.json")])
        run(argv + ["--out", str(tmp_path / "b.json")])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        timing = json.loads((tmp_path / "a.timing.json").read_text())
        assert timing["timing_ms"] > 0
        assert "timing" not in (tmp_path / "a.json").read_text()

    def test_schema_and_nonfinite(self):
        _, out, _ = _run(["curve", "--s", "0.5", "--n", "3", "--format", "json"])
        rep = json.loads(out)
        assert rep["schema"] == 1 and rep["tool_version"]
        _, out, _ = _run(["curve", "--s", "0.5", "--n", "3", "--format", "csv"])
        rows = out.strip().splitlines()
        assert rows[0] == "lambda,value,inclination"
        assert rows[1].endswith(",inf") and rows[-1].endswith(",-inf")

    def test_geometric_check_reports_chord_scan(self):
        _, out, _ = _run(["check", "--f", "t^2", "--h", "power:0.5", "--class", "hconvex-geometric",
                          "--grid", "11x11"])
        rep = json.loads(out)
        assert rep["result"]["chord_verdict"]["status"] == "certified_on_grid"

    def test_refute_adds_random_samples_and_refines(self):
        _, out, _ = _run(["refute", "--f", "sqrt(t)", "--grid", "6x4"])
        rep = json.loads(out)
        assert rep["config"]["scan"]["n_random"] == 10000
        assert rep["result"]["refined_witness"]["residual"] <= rep["result"]["verdict"]["worst_residual"]


def test_emit_figure1(tmp_path):
    lines = emit_figure1(tmp_path / "f.csv", 2).read_text().splitlines()
    assert lines == ["t,h_half,h_one,h_threehalf,f", "0.0,0.0,0.0,0.0,0.0", "1.0,1.0,1.0,1.0,1.0"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "hconvex", "figure1", "--n", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[2] == "0.5,0.7071067811865476,0.5,0.3535533905932738,0.25"
