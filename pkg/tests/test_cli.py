import json
import math
from pathlib import Path

import numpy as np

from dide.cli import main
from dide.traces import read_solution_csv

SPECS = Path(__file__).resolve().parent.parent / "specs"


class TestSimulate:
    def test_steps_benchmark_trace(self, tmp_path):
        out = tmp_path / "trace.csv"
        rc = main(["simulate", "--spec", str(SPECS / "steps.json"), "--step", "1e-3", "--horizon", "2", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,x0"
        last = lines[-1].split(",")
        assert float(last[0]) == 2.0
        assert abs(float(last[1]) - 3.5) <= 1e-5

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "--spec", str(SPECS / "stress.json"), "--step", "0.01", "--horizon", "1"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip_full_precision(self, tmp_path):
        out = tmp_path / "trace.csv"
        spec_file = tmp_path / "sys.json"
        data = {
            "d": 1,
            "q": 1,
            "A": [[-0.7]],
            "kernel": [{"c": 0.4, "m": 0, "sigma": -2.0}],
            "L": {"r": 1.0, "atoms": [{"theta": -1.0, "M": [[0.3]]}], "density": []},
            "C": {"r": 1.0, "atoms": [{"theta": -0.5, "M": [[1.0]]}], "density": []},
            "r": 1.0,
            "x0": [1.0],
            "phi": {"start": -1.0, "step": 0.5, "samples": [[1.0], [1.0], [1.0]]},
        }
        spec_file.write_text(json.dumps(data))
        assert main(["simulate", "--spec", str(spec_file), "--step", "0.01", "--horizon", "1", "--out", str(out)]) == 0
        from dide import load_spec, solve_mild

        rep = solve_mild(load_spec(spec_file), 0.01, 1.0)
        with open(out) as fh:
            x, y = read_solution_csv(fh)
        assert np.array_equal(x.samples, rep.x.samples)
        assert np.array_equal(y.samples, rep.y.samples)
        assert x.start == rep.x.start

    def test_history_rows_have_empty_outputs(self, tmp_path):
        out = tmp_path / "trace.csv"
        spec_file = tmp_path / "sys.json"
        data = {
            "d": 1,
            "q": 1,
            "A": [[-1.0]],
            "kernel": [],
            "L": {"r": 1.0, "atoms": [], "density": []},
            "C": {"r": 1.0, "atoms": [{"theta": -0.5, "M": [[1.0]]}], "density": []},
            "r": 1.0,
            "x0": [1.0],
            "phi": {"start": -1.0, "step": 0.5, "samples": [[1.0], [1.0], [1.0]]},
        }
        spec_file.write_text(json.dumps(data))
        assert main(["simulate", "--spec", str(spec_file), "--step", "0.25", "--horizon", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1].endswith(",")  # t = -1 row: empty y cell
        assert not lines[-1].endswith(",")


class TestSpectrum:
    def test_critical_root_row(self, tmp_path):
        out = tmp_path / "roots.csv"
        rc = main(["spectrum", "--spec", str(SPECS / "critical.json"), "--region=-1,1,0,2", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "re,im,abs_det,newton_iters"
        assert len(lines) == 2
        re, im, absdet, iters = lines[1].split(",")
        assert abs(float(re)) <= 1e-8
        assert abs(float(im) - math.pi / 2) <= 1e-8
        assert int(iters) >= 1

    def test_bad_region_is_usage_error(self):
        assert main(["spectrum", "--spec", str(SPECS / "critical.json"), "--region", "1,2"]) == 1
        assert main(["spectrum", "--spec", str(SPECS / "critical.json"), "--region=2,1,0,1"]) == 1

    def test_bad_flag_values_are_usage_errors(self):
        assert main(["simulate", "--spec", str(SPECS / "steps.json"), "--step", "-1", "--horizon", "1"]) == 1
        assert main(["spectrum", "--spec", str(SPECS / "critical.json"), "--region=-1,1,0,2", "--grid", "4"]) == 1


class TestResolvent:
    def test_identity_first_row(self, tmp_path):
        out = tmp_path / "fam.csv"
        rc = main(["resolvent", "--spec", str(SPECS / "stress.json"), "--step", "0.01", "--horizon", "0.5", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,R[0][0],R[0][1],R[1][0],R[1][1]"
        first = [float(v) for v in lines[1].split(",")]
        assert first == [0.0, 1.0, 0.0, 0.0, 1.0]

    def test_singular_step_is_numerical_failure(self, tmp_path):
        spec_file = tmp_path / "sys.json"
        data = {
            "d": 1,
            "A": [[2.0]],
            "kernel": [],
            "L": {"r": 1.0, "atoms": [], "density": []},
            "r": 1.0,
            "x0": [1.0],
            "phi": {"start": -1.0, "step": 1.0, "samples": [[1.0], [1.0]]},
        }
        spec_file.write_text(json.dumps(data))
        rc = main(["resolvent", "--spec", str(spec_file), "--step", "1.0", "--horizon", "2.0", "--out", str(tmp_path / "x.csv")])
        assert rc == 3


class TestExitCodes:
    def test_unknown_command_usage(self):
        assert main(["bogus"]) == 1

    def test_missing_spec_file(self):
        assert main(["info", "--spec", "/nonexistent/path.json"]) == 2

    def test_invalid_spec_content(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"d": 1}))
        assert main(["info", "--spec", str(bad)]) == 2

    def test_info_ok(self):
        assert main(["info", "--spec", str(SPECS / "stress.json")]) == 0
        assert main(["info", "--spec", str(SPECS / "minimal.json")]) == 0
