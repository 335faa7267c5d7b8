import json
import subprocess
import sys

import pytest

from sipkit import _backend, cli
from sipkit.experiments import REGISTRY

ALL = ["ContourQuadrants", "ContourPdfs", "NonLebesgueRatio", "AnsatzGridAndValidation", "MaxEntFit",
       "MaxEntBayes", "BetaFamilyFit", "BetaFamilyBayes", "DataConsistent", "FieldFirstAttempt",
       "FieldSecondAttempt", "TruncationStudy"]


def _run(*args):
    return subprocess.run([sys.executable, "-m", "sipkit", *args], capture_output=True, text=True)


def _config(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


@pytest.fixture(autouse=True)
def _restore_threads():
    n = _backend.get_threads()
    yield
    _backend.set_threads(n)


class TestList:
    def test_registry_complete(self):
        assert sorted(REGISTRY) == sorted(ALL)
        assert all(e.description for e in REGISTRY.values())

    @pytest.mark.parametrize("argv", [["list"], ["--list"]])
    def test_list(self, argv, capsys):
        assert cli.main(argv) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [ln.split()[0] for ln in lines] == list(REGISTRY)
        assert all(len(ln.split(None, 1)) == 2 for ln in lines)

    def test_subprocess(self):
        r = _run("list")
        assert r.returncode == 0
        assert set(ALL) <= {ln.split()[0] for ln in r.stdout.splitlines()}


class TestUsageErrors:
    def test_no_command(self, capsys):
        assert cli.main([]) == 1

    def test_unknown_experiment(self, capsys, tmp_path):
        assert cli.main(["run", "--experiment", "Nope", "--out", str(tmp_path)]) == 1
        assert "unknown experiment" in capsys.readouterr().err

    def test_missing_experiment(self, capsys, tmp_path):
        assert cli.main(["run", "--out", str(tmp_path)]) == 1

    def test_bad_flag(self):
        r = _run("run", "--bogus")
        assert r.returncode == 1

    def test_bad_seed_type(self):
        assert _run("run", "--experiment", "ContourQuadrants", "--seed", "x").returncode == 1

    def test_json_syntax_reports_line_and_column(self, tmp_path, capsys):
        cfg = _config(tmp_path, '{\n  "experiment": "ContourQuadrants",\n  "seed": 1,,\n}')
        assert cli.main(["run", "--config", cfg]) == 1
        err = capsys.readouterr().err
        assert f"{cfg}:3:" in err

    @pytest.mark.parametrize("cfg,needle", [
        ({"experiment": "ContourQuadrants", "color": "red"}, "unknown field"),
        ({"experiment": "ContourQuadrants", "params": {"nope": 1}}, "params.nope"),
        ({"experiment": "ContourQuadrants", "params": {"tol": "small"}}, "params.tol"),
        ({"experiment": "ContourQuadrants", "params": {"targets": [0.1, "a"]}}, "params.targets"),
        ({"experiment": "ContourQuadrants", "seed": 1.5}, "seed"),
        ({"experiment": "ContourQuadrants", "params": [1]}, "params"),
        ([1, 2], "top level"),
    ])
    def test_config_field_errors(self, tmp_path, capsys, cfg, needle):
        assert cli.main(["run", "--config", _config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1
        assert needle in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli.main(["run", "--config", str(tmp_path / "none.json")]) == 1

    def test_nonpositive_threads(self, tmp_path):
        assert cli.main(["--threads", "0", "run", "-e", "ContourQuadrants", "--out", str(tmp_path)]) == 1


class TestRun:
    def test_pass_exit_zero_and_schema(self, tmp_path):
        r = _run("run", "--experiment", "ContourQuadrants", "--out", str(tmp_path))
        assert r.returncode == 0, r.stderr
        s = json.loads((tmp_path / "summary.json").read_text())
        assert set(s) == {"experiment", "seed", "checks", "wall_time_s"}
        assert s["experiment"] == "ContourQuadrants" and s["seed"] == 0
        for c in s["checks"]:
            assert set(c) == {"name", "value", "target", "tol", "pass"}
        targets = [c["target"] for c in s["checks"][:4]]
        assert targets == [0.2886, 0.2459, 0.1770, 0.2886]
        assert all(c["pass"] for c in s["checks"])
        assert (tmp_path / "quadrants.csv").exists() and (tmp_path / "config.json").exists()

    def test_golden_failure_exit_two(self, tmp_path):
        cfg = _config(tmp_path, {"experiment": "ContourQuadrants",
                                 "params": {"targets": [0.5, 0.2459, 0.1770, 0.2886]}})
        r = _run("run", "--config", cfg, "--out", str(tmp_path / "o"))
        assert r.returncode == 2
        assert "quadrant_NW" in r.stderr
        s = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert [c["name"] for c in s["checks"] if not c["pass"]] == ["quadrant_NW"]

    def test_flags_override_config(self, tmp_path):
        cfg = _config(tmp_path, {"experiment": "Nope", "seed": 3, "out": str(tmp_path / "cfg_out")})
        assert cli.main(["run", "--config", cfg, "--experiment", "NonLebesgueRatio", "--seed", "5",
                         "--out", str(tmp_path / "flag_out")]) == 0
        s = json.loads((tmp_path / "flag_out" / "summary.json").read_text())
        assert s["experiment"] == "NonLebesgueRatio" and s["seed"] == 5
        assert not (tmp_path / "cfg_out").exists()

    def test_config_supplies_everything(self, tmp_path):
        cfg = _config(tmp_path, {"experiment": "NonLebesgueRatio", "seed": 4, "out": str(tmp_path / "o"),
                                 "threads": 1, "params": {"n_segments": 50}})
        assert cli.main(["run", "--config", cfg]) == 0
        used = json.loads((tmp_path / "o" / "config.json").read_text())
        assert used["seed"] == 4 and used["params"]["n_segments"] == 50

    def _strip(self, path):
        s = json.loads(path.read_text())
        s.pop("wall_time_s")
        return s

    def test_byte_identical_summaries(self, tmp_path):
        for k in (1, 2):
            assert cli.main(["run", "-e", "NonLebesgueRatio", "--seed", "7", "--out", str(tmp_path / str(k))]) == 0
        a, b = ((tmp_path / str(k) / "summary.json").read_text().splitlines() for k in (1, 2))
        keep = lambda lines: [ln for ln in lines if "wall_time_s" not in ln]
        assert keep(a) == keep(b)
        assert (tmp_path / "1" / "nonlebesgue.json").read_bytes() == (tmp_path / "2" / "nonlebesgue.json").read_bytes()

    def test_only_timings_differ(self, tmp_path):
        for k in (1, 2):
            cli.main(["run", "-e", "ContourQuadrants", "--out", str(tmp_path / str(k))])
        a, b = (self._strip(tmp_path / str(k) / "summary.json") for k in (1, 2))
        for ca, cb in zip(a["checks"], b["checks"]):
            if not ca["name"].endswith("runtime_s"):
                assert ca == cb

    def test_thread_count_independent(self, tmp_path):
        for t in ("1", "4"):
            assert cli.main(["--threads", t, "run", "-e", "MaxEntFit", "--out", str(tmp_path / t)]) == 0
        assert (tmp_path / "1" / "maxent_l1_surface.csv").read_bytes() == \
            (tmp_path / "4" / "maxent_l1_surface.csv").read_bytes()

    def test_run_level_threads_flag(self, tmp_path):
        assert cli.main(["run", "-e", "NonLebesgueRatio", "--threads", "2", "--out", str(tmp_path)]) == 0
        assert _backend.get_threads() == 2
