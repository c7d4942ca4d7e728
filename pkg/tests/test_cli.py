"""Command-line interface: argument handling, file IO, and exit codes."""

import csv
import json

import numpy as np
import pytest

from divlate import Dataset, gen_dgp1, gen_dgp2, save_csv
from divlate.cli import main


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSimulate:
    def test_writes_expected_schema(self, tmp_path, capsys):
        out = tmp_path / "sim.csv"
        rc = main(["simulate", "--dgp", "2", "--n", "40", "--seed", "3", "--out", str(out)])
        assert rc == 0
        rows = _read_rows(out)
        assert rows[0] == ["y", "w", "z", "x1", "x2", "x3", "x4", "x5"]
        assert len(rows) == 41
        err = capsys.readouterr().err
        assert err.startswith("divlate simulate config: {")
        assert '"n": 40' in err

    def test_matches_direct_generation(self, tmp_path):
        out = tmp_path / "cli.csv"
        direct = tmp_path / "direct.csv"
        assert main(["simulate", "--dgp", "1", "--n", "25", "--seed", "7", "--out", str(out)]) == 0
        data, _ = gen_dgp1(25, seed=7)
        save_csv(data, direct)
        assert out.read_bytes() == direct.read_bytes()

    def test_latents_sidecar(self, tmp_path):
        out = tmp_path / "sim.csv"
        lat = tmp_path / "lat.csv"
        rc = main([
            "simulate", "--dgp", "2", "--n", "30", "--seed", "5",
            "--out", str(out), "--latents", str(lat),
        ])
        assert rc == 0
        rows = _read_rows(lat)
        assert rows[0] == ["complier", "y0", "y1"]
        assert len(rows) == 31
        _, latents = gen_dgp2(30, seed=5)
        got_compliers = np.array([int(r[0]) for r in rows[1:]], dtype=bool)
        got_y1 = np.array([float(r[2]) for r in rows[1:]])
        assert np.array_equal(got_compliers, latents.complier)
        assert np.array_equal(got_y1, latents.y1)

    def test_unknown_dgp_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--dgp", "3", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_missing_out_flag(self):
        assert main(["simulate", "--n", "10"]) == 2


class TestConfigFile:
    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dgp": 1, "n": 60, "seed": 9}))
        out = tmp_path / "merged.csv"
        rc = main(["simulate", "--config", str(cfg), "--seed", "11", "--out", str(out)])
        assert rc == 0
        direct = tmp_path / "direct.csv"
        data, _ = gen_dgp1(60, seed=11)
        save_csv(data, direct)
        assert out.read_bytes() == direct.read_bytes()

    def test_hyphenated_keys_accepted(self, tmp_path, capsys):
        data, _ = gen_dgp2(80, seed=2)
        src = tmp_path / "d.csv"
        save_csv(data, src)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"ygrid-size": 4, "folds": 2}))
        out = tmp_path / "curve.csv"
        rc = main([
            "estimate", "--config", str(cfg), "--data", str(src),
            "--covariates", "x1,x2,x3,x4,x5", "--backend", "rf", "--out", str(out),
        ])
        assert rc == 0
        assert len(_read_rows(out)) == 5

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_invalid_json(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_missing_config_file(self, tmp_path):
        rc = main([
            "simulate", "--config", str(tmp_path / "absent.json"),
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == 2


class TestEstimate:
    def test_full_run_writes_curve(self, tmp_path):
        data, _ = gen_dgp2(400, seed=1)
        src = tmp_path / "d.csv"
        save_csv(data, src)
        out = tmp_path / "curve.csv"
        rc = main([
            "estimate", "--data", str(src), "--covariates", "x1,x2,x3,x4,x5",
            "--backend", "rf", "--folds", "3", "--out", str(out),
        ])
        assert rc == 0
        rows = _read_rows(out)
        assert rows[0] == ["y", "delta", "se", "ci_lo", "ci_hi", "beta_hat"]
        assert len(rows) == 31
        ses = np.array([float(r[2]) for r in rows[1:]])
        deltas = np.array([float(r[1]) for r in rows[1:]])
        assert np.all(np.isfinite(deltas))
        assert np.all(ses >= 0)
        betas = {r[5] for r in rows[1:]}
        assert len(betas) == 1

    def test_sharp_design_recovers_unit_first_stage(self, tmp_path):
        # treatment equal to instrument: the first stage must be about 1
        data, _ = gen_dgp2(400, seed=4)
        sharp = Dataset(y=data.y, w=data.z.copy(), z=data.z, x=data.x)
        src = tmp_path / "sharp.csv"
        save_csv(sharp, src)
        out = tmp_path / "curve.csv"
        rc = main([
            "estimate", "--data", str(src), "--covariates", "x1,x2,x3,x4,x5",
            "--backend", "rf", "--folds", "3", "--out", str(out),
        ])
        assert rc == 0
        beta = float(_read_rows(out)[1][5])
        assert abs(beta - 1.0) <= 0.05

    def test_constant_instrument_is_runtime_error(self, tmp_path):
        rng = np.random.default_rng(0)
        data = Dataset(
            y=rng.normal(size=50),
            w=(rng.random(50) < 0.5).astype(float),
            z=np.ones(50),
            x=rng.normal(size=(50, 5)),
        )
        src = tmp_path / "const.csv"
        save_csv(data, src)
        rc = main([
            "estimate", "--data", str(src), "--covariates", "x1,x2,x3,x4,x5",
            "--backend", "rf", "--out", str(tmp_path / "c.csv"),
        ])
        assert rc == 3

    def test_missing_required_flags(self, tmp_path):
        assert main(["estimate", "--backend", "rf"]) == 2

    def test_bad_covariate_name(self, tmp_path):
        data, _ = gen_dgp2(50, seed=2)
        src = tmp_path / "d.csv"
        save_csv(data, src)
        rc = main([
            "estimate", "--data", str(src), "--covariates", "x1,nope",
            "--backend", "rf", "--out", str(tmp_path / "c.csv"),
        ])
        assert rc == 2

    def test_unknown_backend_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main([
                "estimate", "--data", "x.csv", "--covariates", "x1",
                "--backend", "gbm", "--out", "c.csv",
            ])
        assert exc.value.code == 2


class TestMontecarlo:
    def test_example_run_shape(self, tmp_path):
        out = tmp_path / "mc.csv"
        rc = main([
            "montecarlo", "--n", "500", "--reps", "3", "--backends", "kan,rf",
            "--out", str(out),
        ])
        assert rc == 0
        rows = _read_rows(out)
        assert rows[0] == ["backend", "y", "avg_bias", "rmse", "n_reps_effective"]
        body = rows[1:]
        assert len(body) == 60
        assert {r[0] for r in body} == {"kan", "forest"}
        assert all(r[4] == "3" for r in body)

    def test_deterministic_and_dumps_curves(self, tmp_path):
        args = [
            "montecarlo", "--n", "200", "--reps", "2", "--backends", "rf",
            "--folds", "2", "--ygrid-size", "4",
        ]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        dump = tmp_path / "curves.json"
        assert main(args + ["--out", str(out1), "--dump-curves", str(dump)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        doc = json.loads(dump.read_text())
        assert set(doc) == {"levels", "truth", "curves", "rep_ids", "n_failed"}
        assert len(doc["levels"]) == 4
        assert np.asarray(doc["curves"]["forest"]).shape == (2, 4)
        assert doc["rep_ids"]["forest"] == [0, 1]
        assert doc["n_failed"] == {"forest": 0}

    def test_zero_reps_is_usage_error(self, tmp_path):
        rc = main(["montecarlo", "--reps", "0", "--out", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_bad_backend_list(self, tmp_path):
        rc = main([
            "montecarlo", "--backends", "kan,gbm", "--out", str(tmp_path / "x.csv")
        ])
        assert rc == 2


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("divlate ")

    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
