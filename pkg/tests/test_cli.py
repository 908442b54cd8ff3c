import csv
import io
import json

import numpy as np
import pytest

from bpg.cli import main, parse_assignments, parse_grid, UsageError
from bpg.family import BetaPoissonG, PoissonG
from bpg.baselines import Exponential


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestParsing:
    def test_grid(self):
        np.testing.assert_allclose(parse_grid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(parse_grid("0.1, 0.5,2"), [0.1, 0.5, 2])
        assert parse_grid("0:0.3:0.1").size == 4

    @pytest.mark.parametrize("bad", ["0:1", "a:1:0.1", "0:1:0", "1:0:0.1", "1,x"])
    def test_bad_grid(self, bad):
        with pytest.raises(UsageError):
            parse_grid(bad)

    def test_assignments(self):
        assert parse_assignments("m=2, n=1.8,lambda=1.5") == {"m": 2.0, "n": 1.8, "lambda": 1.5}
        with pytest.raises(UsageError, match="item 2"):
            parse_assignments("m=2,n")


class TestEval:
    def test_reduction_to_poisson_g(self, capsys):
        code, out, _ = run(capsys, "eval", "--family", "bp", "--baseline", "exp", "--m", "1", "--n", "1",
                           "--lambda", "2", "--beta", "2", "--what", "cdf", "--grid", "0:5:0.5")
        assert code == 0
        rows = table(out)
        assert len(rows) == 11
        x = np.array([float(r["x"]) for r in rows])
        np.testing.assert_allclose([float(r["cdf"]) for r in rows], PoissonG(2, Exponential(2)).cdf(x), atol=1e-15)

    def test_quantile_round_trip(self, capsys):
        code, out, _ = run(capsys, "eval", "--m", "2", "--n", "3", "--lambda", "1.5", "--beta", "2",
                           "--what", "quantile", "--grid", "0.1:0.9:0.1")
        assert code == 0
        dist = BetaPoissonG(2, 3, 1.5, Exponential(2))
        for r in table(out):
            assert abs(dist.cdf(float(r["quantile"])) - float(r["u"])) < 1e-9

    def test_weibull_hrf(self, capsys):
        code, out, _ = run(capsys, "eval", "--baseline", "weibull", "--delta", "3", "--what", "hrf",
                           "--grid", "0.2:2:0.2")
        hrf = [float(r["hrf"]) for r in table(out)]
        assert code == 0 and all(b > a for a, b in zip(hrf, hrf[1:]))

    def test_pg_family(self, capsys):
        code, out, _ = run(capsys, "eval", "--family", "pg", "--lambda", "-1.5", "--grid", "0.5")
        assert code == 0 and float(table(out)[0]["pdf"]) > 0

    def test_bad_grid_is_usage_error(self, capsys):
        code, _, err = run(capsys, "eval", "--grid", "0:1")
        assert code == 2 and "usage error" in err

    def test_bad_parameter_is_numeric_error(self, capsys):
        code, _, err = run(capsys, "eval", "--m", "-1", "--grid", "1")
        assert code == 5 and "m" in err


class TestMomentsEntropyShape:
    def test_moments_row(self, capsys):
        code, out, _ = run(capsys, "moments", "--m", "3", "--n", "1", "--lambda", "2", "--beta", "2")
        row = table(out)[0]
        assert code == 0 and float(row["variance"]) > 0 and row["note"] == ""

    def test_moments_methods_agree(self, capsys):
        args = ("moments", "--m", "2", "--n", "3", "--lambda", "1", "--beta", "1.5", "--format", "json")
        a = json.loads(run(capsys, *args)[1])["rows"][0]
        b = json.loads(run(capsys, *args, "--method", "quantile")[1])["rows"][0]
        assert a["mean"] == pytest.approx(b["mean"], rel=1e-9)

    def test_entropy_cells(self, capsys):
        code, out, _ = run(capsys, "entropy", "--m", "2", "--n", "2", "--lambda", "3", "--beta", "2",
                           "--orders", "0.5,1,1.5")
        rows = table(out)
        assert code == 0 and len(rows) == 3
        assert rows[1]["renyi"] == "nan" and "delta" in rows[1]["error"]
        assert rows[0]["error"] == "" and float(rows[2]["renyi"]) < float(rows[0]["renyi"])

    def test_family_restriction(self, capsys):
        for cmd in ("moments", "entropy", "shape"):
            assert run(capsys, cmd, "--family", "pg")[0] == 2

    def test_shape_grid(self, capsys):
        code, out, _ = run(capsys, "shape", "--m", "2", "--n", "3", "--lambda-grid", "0.5:3:0.5",
                           "--beta-grid", "0.5,1,3")
        rows = table(out)
        assert code == 0 and len(rows) == 18
        assert all(-1 < float(r["galton_skewness"]) < 1 for r in rows)


class TestData:
    def test_describe(self, capsys):
        code, out, _ = run(capsys, "describe", "--data", "builtin:data1")
        row = table(out)[0]
        assert code == 0 and row["n"] == "72"
        assert float(row["min"]) == 0.1 and abs(float(row["mean"]) - 1.851) < 0.0005

    def test_ttt_final_row(self, capsys):
        code, out, _ = run(capsys, "ttt", "--data", "builtin:data2")
        last = table(out)[-1]
        assert code == 0 and float(last["u"]) == 1.0 and float(last["ttt"]) == 1.0

    def test_missing_file(self, capsys, tmp_path):
        path = tmp_path / "absent.txt"
        code, _, err = run(capsys, "describe", "--data", str(path))
        assert code == 3 and str(path) in err

    def test_user_file(self, capsys, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("1\n2\n3\n4\n")
        code, out, _ = run(capsys, "describe", "--data", str(path))
        assert code == 0 and float(table(out)[0]["mean"]) == 2.5


class TestFit:
    def test_rows_sorted_by_aic(self, capsys):
        code, out, _ = run(capsys, "fit", "--data", "builtin:data2", "--models", "exp,me,mo_e", "--starts", "3")
        rows = table(out)
        assert code == 0 and [r["model"] for r in rows] == ["mo_e", "me", "exp"]
        exp = rows[-1]
        assert abs(float(exp["aic"]) - 67.67) < 0.01 and abs(float(exp["beta"]) - 0.526) < 0.001
        assert float(exp["beta_ci_low"]) < float(exp["beta"]) < float(exp["beta_ci_high"])

    def test_json(self, capsys):
        code, out, _ = run(capsys, "fit", "--data", "builtin:data2", "--models", "exp,bp_e", "--starts", "3",
                           "--format", "json")
        rows = json.loads(out)["rows"]
        assert code == 0 and [r["model"] for r in rows] == ["bp_e", "exp"]
        assert all(r["converged"] is True for r in rows)

    def test_empty_model_list(self, capsys):
        assert run(capsys, "fit", "--data", "builtin:data2", "--models", ",")[0] == 2

    def test_unknown_model(self, capsys):
        code, _, err = run(capsys, "fit", "--data", "builtin:data2", "--models", "exp,gmo_e")
        assert code == 2 and "gmo_e" in err

    def test_unknown_dataset(self, capsys):
        assert run(capsys, "fit", "--data", "builtin:data9", "--models", "exp")[0] == 3


class TestSimulate:
    def test_single_replication(self, capsys):
        code, out, _ = run(capsys, "simulate", "--truth", "m=2.2,n=2.8,lambda=0.5,beta=2", "--sizes", "50",
                           "--reps", "1", "--seed", "2")
        rows = table(out)
        assert code == 0 and [r["param"] for r in rows] == ["m", "n", "lam", "beta"]
        for r in rows:
            if r["n_failed"] == "0":
                assert float(r["mse"]) == pytest.approx(float(r["bias"]) ** 2)
            else:
                assert r["n_failed"] == "1" and r["mse"] == "nan"

    def test_deterministic_bodies(self, capsys):
        args = ("simulate", "--truth", "m=2,n=1.8,lambda=1.5,beta=2", "--sizes", "30", "--reps", "2",
                "--format", "json", "--deterministic")
        first, second = run(capsys, *args)[1], run(capsys, *args)[1]
        assert first == second
        meta = json.loads(first)["metadata"]
        assert "timestamp" not in meta and meta["command"] == "simulate"

    def test_bad_truth(self, capsys):
        assert run(capsys, "simulate", "--truth", "m=2,n=1.8", "--reps", "1")[0] == 2


class TestEnvelope:
    def test_json_metadata(self, capsys):
        code, out, _ = run(capsys, "describe", "--data", "builtin:data2", "--format", "json", "--seed", "4")
        doc = json.loads(out)
        assert code == 0 and doc["metadata"]["seed"] == 4 and "timestamp" in doc["metadata"]
        assert doc["rows"][0]["n"] == 20

    def test_nan_is_null(self, capsys):
        out = run(capsys, "entropy", "--orders", "1", "--format", "json")[1]
        assert json.loads(out)["rows"][0]["renyi"] is None

    def test_csv_full_precision(self, capsys):
        out = run(capsys, "eval", "--what", "cdf", "--grid", "0.3")[1]
        value = float(table(out)[0]["cdf"])
        assert value == BetaPoissonG(1, 1, 1, Exponential(1)).cdf(0.3)

    def test_output_file(self, capsys, tmp_path):
        dest = tmp_path / "out.csv"
        code, out, _ = run(capsys, "ttt", "--data", "builtin:data2", "--output", str(dest))
        assert code == 0 and out == "" and dest.read_text().startswith("u,ttt")

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# reproduce a row\nm = 2\nn = 3\nlambda = 1.5\nbeta = 2\nwhat = cdf\ngrid = 0.5\n")
        code, out, _ = run(capsys, "eval", "--config", str(cfg))
        assert code == 0
        assert float(table(out)[0]["cdf"]) == BetaPoissonG(2, 3, 1.5, Exponential(2)).cdf(0.5)
        # explicit flags override the file
        out = run(capsys, "eval", "--config", str(cfg), "--beta", "1")[1]
        assert float(table(out)[0]["cdf"]) == BetaPoissonG(2, 3, 1.5, Exponential(1)).cdf(0.5)

    def test_config_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = red\n")
        assert run(capsys, "eval", "--grid", "1", "--config", str(cfg))[0] == 2

    def test_argparse_usage(self, capsys):
        assert run(capsys, "nonsense")[0] == 2
        assert run(capsys)[0] == 2
