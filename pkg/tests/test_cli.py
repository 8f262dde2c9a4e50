import csv
import json
import math

import numpy as np
import pytest

from timerelax import config as cfgmod
from timerelax.cli import EXIT_BLOWUP, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from timerelax.filters import FilterParams, d0_hat, g_hat, h_hat
from timerelax.io_utils import atomic_write_text, load_checkpoint

SMALL = ["--set", "n=16", "--set", "dt=0.01", "--set", "t_end=0.05", "--set", "record_every=1"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestTransfer:
    def test_three_tables(self, tmp_path):
        assert main(["transfer", "--out", str(tmp_path)]) == EXIT_OK
        for N in (5, 10, 100):
            rows = read_csv(tmp_path / f"transfer_N{N}.csv")
            assert len(rows) == 1001
            assert float(rows[-1]["k"]) == pytest.approx(100.0)
            k = np.array([float(r["k"]) for r in rows])
            p = FilterParams(1.0, 0.5, N)
            np.testing.assert_array_equal([float(r["h_hat"]) for r in rows], h_hat(k, p))
            np.testing.assert_array_equal([float(r["g_hat"]) for r in rows], g_hat(k, p))
            np.testing.assert_array_equal([float(r["d0_hat"]) for r in rows], d0_hat(k, p))

    def test_single_row(self, tmp_path):
        assert main(["transfer", "--out", str(tmp_path), "--N", "2", "--nk", "1"]) == EXIT_OK
        rows = read_csv(tmp_path / "transfer_N2.csv")
        assert len(rows) == 1
        assert float(rows[0]["k"]) == 0 and float(rows[0]["h_hat"]) == 1 and float(rows[0]["g_hat"]) == 1

    def test_empty_list(self, tmp_path, capsys):
        assert main(["transfer", "--out", str(tmp_path), "--N", ""]) == EXIT_USAGE
        assert "empty N list" in capsys.readouterr().err

    def test_bad_alpha(self, tmp_path):
        assert main(["transfer", "--out", str(tmp_path), "--alpha", "2"]) == EXIT_USAGE

    def test_unknown_flag(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["transfer", "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_creates_directory(self, tmp_path):
        assert main(["transfer", "--out", str(tmp_path / "a" / "b"), "--N", "1"]) == EXIT_OK
        assert (tmp_path / "a" / "b" / "transfer_N1.csv").exists()

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["transfer", "--out", str(blocker / "sub")]) == EXIT_IO


def test_deconv_study_cli(tmp_path, capsys):
    code = main(["deconv-study", "--out", str(tmp_path), "--dim", "2", "--n", "16", "--N", "0,1"])
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "deconv_slopes.csv")
    assert len(rows) == 4
    assert all(r["status"] == "PASS" for r in rows)
    assert "FAIL" not in capsys.readouterr().out
    errs = read_csv(tmp_path / "deconv_errors.csv")
    assert len(errs) == 2 * 4 + 2 * 4


class TestParam:
    def test_unity(self, tmp_path):
        args = ["param", "--out", str(tmp_path), "--U", "1", "--L", "1", "--delta", "1", "--alpha", "1", "--Re", "1"]
        assert main(args) == EXIT_OK
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["chi_selected"] == pytest.approx(2)
        assert data["N_dof"] == pytest.approx(1)

    def test_counts(self, tmp_path):
        args = ["param", "--out", str(tmp_path), "--U", "1", "--L", "1", "--delta", "0.1", "--alpha", "0.5", "--Re", "1e4"]
        assert main(args) == EXIT_OK
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["N_dof"] == pytest.approx(1000)
        assert data["speedup"] == pytest.approx(1e8)

    def test_missing_velocity(self, tmp_path, capsys):
        args = ["param", "--out", str(tmp_path), "--L", "1", "--delta", "1", "--alpha", "1", "--Re", "1"]
        assert main(args) == EXIT_USAGE
        assert "U" in capsys.readouterr().err

    def test_nu_and_re(self, tmp_path):
        args = ["param", "--out", str(tmp_path), "--U", "1", "--L", "1", "--delta", "1", "--alpha", "1"]
        assert main(args) == EXIT_USAGE
        assert main(args + ["--Re", "1", "--nu", "1"]) == EXIT_USAGE

    def test_sweep_and_config(self, tmp_path):
        conf = tmp_path / "p.cfg"
        conf.write_text("# similarity inputs\nU = 1\nL = 1\ndelta = 0.1\nalpha = 1/2\nnu = 1e-3\n")
        assert main(["param", "--out", str(tmp_path), "--config", str(conf), "--Ns", "0,1,2"]) == EXIT_OK
        assert len(read_csv(tmp_path / "sweep.csv")) == 3


class TestSimulate:
    def test_outputs(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path), *SMALL]) == EXIT_OK
        rows = read_csv(tmp_path / "energy.csv")
        assert [float(r["t"]) for r in rows] == pytest.approx([0, 0.01, 0.02, 0.03, 0.04, 0.05])
        assert set(rows[0]) == {"t", "E_model", "eps_model", "viscous_dissipation", "forcing_input", "max_div"}
        assert float(rows[0]["E_model"]) == pytest.approx(0.5)
        assert max(float(r["max_div"]) for r in rows) < 1e-10
        spec = read_csv(tmp_path / "spectrum.csv")
        assert len({r["t"] for r in spec}) == 6
        assert (tmp_path / "spectrum_avg.csv").exists()
        meta = json.loads((tmp_path / "run.json").read_text())
        assert meta["status"] == "ok" and meta["chi_resolved"] == 10
        state = load_checkpoint(tmp_path / "checkpoint.npz")
        assert state.t == pytest.approx(0.05)

    def test_zero_length(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path), *SMALL, "--set", "t_end=0"]) == EXIT_OK
        rows = read_csv(tmp_path / "energy.csv")
        assert len(rows) == 1 and float(rows[0]["t"]) == 0

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir()
        b.mkdir()
        for d in (a, b):
            assert main(["simulate", "--out", str(d), "--seed", "7", *SMALL, "--set", "forcing=steady-low-mode"]) == EXIT_OK
        for name in ("energy.csv", "spectrum.csv", "spectrum_avg.csv", "checkpoint.npz", "run.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir()
        b.mkdir()
        main(["simulate", "--out", str(a), "--seed", "1", *SMALL])
        main(["simulate", "--out", str(b), "--seed", "2", *SMALL])
        assert (a / "energy.csv").read_bytes() != (b / "energy.csv").read_bytes()

    def test_chi_sweep(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path), *SMALL, "--set", "chi_sweep=0,1.5"]) == EXIT_OK
        for chi in ("0.0", "1.5"):
            meta = json.loads((tmp_path / f"chi_{chi}" / "run.json").read_text())
            assert meta["chi_resolved"] == float(chi)

    def test_optimal_chi(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path), *SMALL, "--set", "chi=optimal"]) == EXIT_OK
        meta = json.loads((tmp_path / "run.json").read_text())
        expected = 1.0 / (2 * math.pi) ** (1 / 3) * 0.2 ** (1 / 3) * 3.0**2
        assert meta["chi_resolved"] == pytest.approx(expected)

    def test_blow_up(self, tmp_path):
        args = ["simulate", "--out", str(tmp_path), *SMALL, "--set", "linear_terms_exact=false", "--set", "chi=1e6"]
        with pytest.warns(RuntimeWarning):
            assert main(args) == EXIT_BLOWUP
        rows = read_csv(tmp_path / "energy.csv")
        assert rows and json.loads((tmp_path / "run.json").read_text())["status"] == "blow-up"

    def test_unknown_key(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path), "--set", "colour=blue"]) == EXIT_USAGE

    def test_bad_grid(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path), "--set", "n=15"]) == EXIT_USAGE


def test_decay_study_cli(tmp_path, capsys):
    args = ["decay-study", "--out", str(tmp_path), "--chis", "0,10,100", *SMALL, "--set", "nonlinear=false"]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    assert "monotone in chi: PASS" in out
    summary = read_csv(tmp_path / "decay_summary.csv")
    assert [float(r["chi"]) for r in summary] == [0, 10, 100]
    series = read_csv(tmp_path / "decay_series.csv")
    devs = [abs(float(r["fluctuation"]) - float(r["oracle"])) for r in series]
    assert max(devs) < 1e-10


class TestConfig:
    def test_key_value(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("n = 32  # grid\n\ndt=1/200\ndealias = no\n")
        cfg = cfgmod.resolve(cfgmod.SIM_DEFAULTS, cfgmod.read_config_file(p))
        assert cfg["n"] == 32 and cfg["dt"] == 0.005 and cfg["dealias"] is False

    def test_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"n": 8, "nu": 0.5}))
        cfg = cfgmod.resolve(cfgmod.SIM_DEFAULTS, cfgmod.read_config_file(p))
        assert cfg["n"] == 8 and cfg["nu"] == 0.5

    def test_layer_precedence(self):
        cfg = cfgmod.resolve(cfgmod.SIM_DEFAULTS, {"n": "8"}, {"n": "12"})
        assert cfg["n"] == 12

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("just words\n")
        with pytest.raises(Exception):
            cfgmod.read_config_file(p)

    def test_bad_bool(self):
        with pytest.raises(Exception):
            cfgmod.resolve(cfgmod.SIM_DEFAULTS, {"dealias": "perhaps"})


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "x.txt"
    atomic_write_text(path, "one")
    atomic_write_text(path, "two")
    assert path.read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
