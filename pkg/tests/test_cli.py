import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from conftest import DATA
from tklab import cli
from tklab.kernels import kernel_from_json
from tklab.witness import WitnessReport, verify_witness


def schema(name):
    return json.loads(resources.files("tklab").joinpath("schemas", name).read_text())


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def kernel_file(name):
    return str(DATA / f"{name}.json")


class TestKernelFiles:
    @pytest.mark.parametrize("name", ["example1", "example2", "example3", "identity", "gaussian"])
    def test_valid_kernel_json(self, name):
        data = json.loads((DATA / f"{name}.json").read_text())
        jsonschema.validate(data, schema("kernel.json"))
        kernel_from_json(data)


class TestVerifySuite:
    def test_passes(self):
        code, text = run("verify-paper")
        report = json.loads(text)
        assert code == 0
        assert report["failed"] == 0 and report["first_failure"] is None
        jsonschema.validate(report, schema("report.json"))
        assert all(c["anchor"] for c in report["checks"])

    def test_fault(self, capsys):
        code, text = run("verify-paper", "--inject-fault", "example2-w1")
        assert code == 1
        assert json.loads(text)["first_failure"] == "example2-w1 quad form"
        assert "example2-w1 quad form" in capsys.readouterr().err

    def test_markdown(self):
        code, text = run("verify-paper", "--format", "markdown")
        assert code == 0
        assert text.startswith("| check | anchor | result |")
        assert "0 failed" in text

    def test_unknown_fault(self):
        with pytest.raises(SystemExit) as info:
            run("verify-paper", "--inject-fault", "example7")
        assert info.value.code == 2


class TestCheck:
    def test_two_component(self):
        code, text = run("check", kernel_file("example1"))
        rep = json.loads(text)
        assert code == 0
        jsonschema.validate(rep, schema("property_report.json"))
        assert rep["product"]["tensor-char"]["status"] == "Fails"
        assert rep["product"]["I-char"]["status"] == "Holds"
        assert rep["product"]["I-char"]["citation"] == "Thm2i"
        assert rep["config"]["command"] == "check"

    def test_three_component_undecided(self):
        code, text = run("check", kernel_file("example3"))
        assert code == 0
        assert json.loads(text)["product"]["I-char"]["status"] == "Undecided"

    def test_three_component_with_search(self):
        code, text = run("check", kernel_file("example2"), "--search", "--budget", "100000", "--seed", "7")
        rep = json.loads(text)
        assert code == 0
        assert rep["product"]["I-char"]["status"] == "Fails"
        assert rep["search"]["status"] == "found"

    def test_gaussian_catalog(self):
        code, text = run("check", kernel_file("gaussian"))
        rep = json.loads(text)
        assert code == 0
        assert {v["status"] for v in rep["product"].values()} == {"Holds"}
        assert {v["citation"] for v in rep["product"].values()} == {"Thm3"}

    def test_not_psd(self, capsys):
        code, _ = run("check", kernel_file("not_psd"))
        err = capsys.readouterr().err
        assert code == 2
        assert "certificate v = ['-2', '1']" in err

    def test_malformed(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        assert run("check", str(bad))[0] == 2
        assert "malformed JSON" in capsys.readouterr().err

    def test_missing_file(self):
        assert run("check", "/nonexistent/k.json")[0] == 2


class TestWitnessSearch:
    def test_found(self):
        code, text = run("witness-search", kernel_file("example2"), "--budget", "100000", "--seed", "7")
        rep = json.loads(text)
        assert code == 0 and rep["status"] == "found"
        jsonschema.validate(rep["witness"], schema("witness.json"))
        k = kernel_from_json(json.loads((DATA / "example2.json").read_text()))
        assert verify_witness(k, WitnessReport.from_json(rep["witness"])).ok

    def test_certified_two_component(self):
        code, text = run("witness-search", kernel_file("example1"))
        rep = json.loads(text)
        assert code == 0
        assert rep["message"] == "certified I-characteristic (Thm2i)"
        assert rep["witness"] is None

    def test_certified_identity(self):
        code, text = run("witness-search", kernel_file("identity"))
        assert code == 0 and "Thm4" in json.loads(text)["message"]

    def test_inconclusive(self):
        code, text = run("witness-search", kernel_file("example2"), "--budget", "10")
        assert code == 3
        assert json.loads(text)["message"] == "no witness found within budget; inconclusive"

    def test_continuous_rejected(self):
        assert run("witness-search", kernel_file("gaussian"))[0] == 2

    def test_bad_delta(self):
        assert run("witness-search", kernel_file("example2"), "--delta", "x/y")[0] == 2


class TestHsic:
    def test_dependent(self):
        code, text = run("hsic", "--bundled", "dependent", "--seed", "1", "--perms", "199")
        rep = json.loads(text)
        assert code == 0
        assert rep["p_value"] <= 0.01
        assert rep["config"]["n"] == 200

    def test_independent(self):
        code, text = run("hsic", "--bundled", "independent", "--seed", "1")
        rep = json.loads(text)
        assert code == 0
        assert 0 <= rep["statistic"] <= 0.05
        assert rep["config"]["n"] == 500

    def test_overlapping_groups(self):
        assert run("hsic", "--bundled", "dependent", "--groups", "0,0-1")[0] == 2

    def test_groups_must_cover(self):
        assert run("hsic", "--bundled", "dependent", "--groups", "0")[0] == 2

    def test_ragged(self, tmp_path):
        f = tmp_path / "r.csv"
        f.write_text("a,b\n1,2\n3\n")
        assert run("hsic", str(f))[0] == 2

    def test_csv_file(self, tmp_path):
        f = tmp_path / "d.csv"
        rows = "\n".join(f"{i},{i % 3},{(i * 7) % 5}" for i in range(30))
        f.write_text("a,b,c\n" + rows + "\n")
        code, text = run("hsic", str(f), "--groups", "0-1,2", "--kernel", "laplacian", "--perms", "19")
        rep = json.loads(text)
        assert code == 0
        assert rep["config"]["groups"] == [[0, 1], [2]]
        assert len(rep["bandwidths"]) == 2

    def test_parse_groups(self):
        assert cli.parse_groups("0-1,2", 3) == ((0, 1), (2,))
        assert cli.parse_groups(None, 2) == ((0,), (1,))


class TestProcess:
    def cmd(self, *argv):
        return subprocess.run([sys.executable, "-m", "tklab", *argv], capture_output=True)

    def test_byte_identical_reports(self):
        for argv in (("verify-paper",), ("witness-search", kernel_file("example2"), "--budget", "100000", "--seed", "7")):
            a, b = self.cmd(*argv), self.cmd(*argv)
            assert a.returncode == b.returncode == 0
            assert a.stdout == b.stdout

    def test_usage_error(self):
        assert self.cmd("nonsense").returncode == 2

    def test_thread_env_does_not_change_output(self):
        import os

        base = self.cmd("witness-search", kernel_file("example2"), "--budget", "20000", "--seed", "3")
        env = dict(os.environ, TKLAB_THREADS="4")
        par = subprocess.run([sys.executable, "-m", "tklab", "witness-search", kernel_file("example2"), "--budget", "20000",
                              "--seed", "3"], capture_output=True, env=env)
        assert base.stdout == par.stdout
