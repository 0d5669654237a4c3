import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from blindtr.cli import ROC_HEADER, main
from blindtr.errors import IllConditionedError
from blindtr.product import ProductModel

from conftest import FIG1

FIG1_FLAGS = ["--mu_x_re", "2", "--mu_x_im", "2.5", "--mu_y_re", "2.1", "--mu_y_im", "1.8",
              "--sigma_x", "1", "--sigma_y", "1", "--rho_re", "0.3", "--rho_im", "0.3"]
ROC_FLAGS = ["--target_re", "0.7071067811865476", "--target_im", "0.7071067811865476",
             "--scr_db", "5", "--snr_db", "5", "--bins", "5", "--rho_c_re", "0.1", "--rho_c_im", "0.7"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestPdfEval:
    def test_header_and_shape(self, capsys):
        code, out, _ = run(["pdf-eval", *FIG1_FLAGS, "--n1", "4", "--n2", "3"], capsys)
        assert code == 0
        r = rows(out)
        assert r[0] == ["p1", "p2", "density"]
        assert len(r) == 13
        # row-major: p2 varies fastest
        assert [float(x) for x in r[1][:2]] == [-2.0, -2.0]
        assert [float(x) for x in r[2][:2]] == [-2.0, 5.0]

    def test_null_exact_cell(self, capsys):
        code, out, _ = run(["pdf-eval", "--source", "null_exact", "--sigma_x", "1", "--sigma_y", "1",
                            "--p1_min", "1", "--p1_max", "1", "--p2_min", "0", "--p2_max", "0",
                            "--n1", "1", "--n2", "1"], capsys)
        assert code == 0
        assert float(rows(out)[1][2]) == pytest.approx(0.0725070913, rel=1e-9)

    def test_order_two_equals_gaussian(self, capsys):
        grid = ["--n1", "20", "--n2", "20"]
        _, a, _ = run(["pdf-eval", *FIG1_FLAGS, *grid, "--edgeworth_order", "2"], capsys)
        _, b, _ = run(["pdf-eval", *FIG1_FLAGS, *grid, "--source", "gaussian"], capsys)
        assert a == b

    def test_cf_numeric_matches_null_exact(self, capsys):
        args = ["pdf-eval", "--sigma_x", "1", "--sigma_y", "1", "--rho_re", "0.3", "--rho_im", "0.3",
                "--p1_min", "0.5", "--p1_max", "1", "--p2_min", "-0.5", "--p2_max", "-0.5",
                "--n1", "2", "--n2", "1"]
        _, a, _ = run(args + ["--source", "cf_numeric"], capsys)
        _, b, _ = run(args + ["--source", "null_exact"], capsys)
        for ra, rb in zip(rows(a)[1:], rows(b)[1:]):
            assert float(ra[2]) == pytest.approx(float(rb[2]), rel=1e-8)

    def test_null_exact_needs_zero_mean(self, capsys):
        code, _, err = run(["pdf-eval", *FIG1_FLAGS, "--source", "null_exact"], capsys)
        assert code == 2 and "zero-mean" in err


class TestMoments:
    def test_schema_and_values(self, capsys):
        code, out, _ = run(["moments", "--sigma_x", "1", "--sigma_y", "1", "--order", "4"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert set(doc) == {"model", "order", "complex_moments", "real_moments", "cumulants",
                            "mean", "covariance"}
        cm = {(e["m"], e["n"]): complex(e["re"], e["im"]) for e in doc["complex_moments"]}
        assert cm[(0, 0)] == 1
        assert cm[(1, 1)] == pytest.approx(1)
        cu = {(e["nu1"], e["nu2"]): e["value"] for e in doc["cumulants"]}
        assert cu[(2, 0)] == pytest.approx(0.5) and cu[(0, 2)] == pytest.approx(0.5)
        assert set(doc["real_moments"][0]) == {"a", "b", "value"}

    def test_model_round_trip(self, capsys):
        _, out, _ = run(["moments", *FIG1_FLAGS], capsys)
        assert ProductModel.from_dict(json.loads(out)["model"]) == ProductModel(**FIG1)

    def test_order_limit(self, capsys):
        assert run(["moments", *FIG1_FLAGS, "--order", "9"], capsys)[0] == 2


class TestRoc:
    def test_header_and_order(self, capsys):
        code, out, _ = run(["roc", *ROC_FLAGS, "--n_trials", "200", "--seed", "1"], capsys)
        assert code == 0
        r = rows(out)
        assert r[0] == ROC_HEADER
        data = np.array(r[1:], dtype=float)
        assert np.all(np.diff(data[:, 0]) < 0)
        assert tuple(data[0, 1:3]) == (0, 0) and tuple(data[-1, 1:3]) == (1, 1)
        assert np.all(data[:, 3] <= data[:, 1]) and np.all(data[:, 1] <= data[:, 4])

    def test_json_format(self, capsys):
        code, out, _ = run(["roc", *ROC_FLAGS, "--n_trials", "100", "--seed", "1", "--format", "json"],
                           capsys)
        assert code == 0
        assert set(json.loads(out)[0]) == set(ROC_HEADER)

    def test_seed_required(self, capsys):
        code, _, err = run(["roc", *ROC_FLAGS, "--n_trials", "200"], capsys)
        assert code == 2 and "seed" in err

    def test_contradictory_scr(self, capsys):
        code, _, err = run(["roc", *ROC_FLAGS, "--clutter_psd", "0.3", "--seed", "1"], capsys)
        assert code == 2 and "scr_db" in err


class TestMse:
    def test_report(self, capsys):
        code, out, _ = run(["mse", *FIG1_FLAGS, "--n_samples", "20000", "--scales", "1,2",
                            "--seed", "0"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert [e["scale"] for e in doc] == [1.0, 2.0]
        assert all(e["n_samples"] == 20000 for e in doc)
        assert set(doc[0]) == {"scale", "mu_x", "mu_y", "mse", "n_samples"}
        assert doc[1]["mu_x"] == {"re": 4.0, "im": 5.0}

    def test_too_few_samples(self, capsys):
        assert run(["mse", *FIG1_FLAGS, "--n_samples", "100", "--seed", "0"], capsys)[0] == 2


class TestConfig:
    def test_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"sigma_x": 1, "sigma_y": 1, "order": 3}))
        out = tmp_path / "m.json"
        code, _, _ = run(["moments", "--config", str(cfg), "--order", "2", "--output", str(out)], capsys)
        assert code == 0
        assert json.loads(out.read_text())["order"] == 2

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"sigma": 1}))
        assert run(["moments", "--config", str(cfg)], capsys)[0] == 2

    @pytest.mark.parametrize("argv", [["nope"], ["moments", "--order", "x"], ["moments"],
                                      ["moments", "--sigma_x", "1", "--sigma_y", "-1"]])
    def test_config_errors(self, argv, capsys):
        assert run(argv, capsys)[0] == 2

    def test_numerical_failure_exit_code(self, capsys, monkeypatch):
        import blindtr.cli

        def boom(*args):
            raise IllConditionedError("singular")

        monkeypatch.setattr(blindtr.cli, "cumulants", boom)
        code, out, err = run(["moments", "--sigma_x", "1", "--sigma_y", "1"], capsys)
        assert (code, out) == (3, "")
        assert "singular" in err

    def test_console_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "blindtr", "moments", "--sigma_x", "1",
                              "--sigma_y", "1", "--order", "2"], capture_output=True, text=True)
        assert res.returncode == 0
        assert json.loads(res.stdout)["order"] == 2
