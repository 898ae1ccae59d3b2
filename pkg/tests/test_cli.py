"""Front-end contracts: artifacts, manifests, exit codes, reproducibility."""

import hashlib
import json

import pytest

from hetq.cli import dispatch, main, rerun_manifest


def read(path):
    return path.read_bytes()


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


BASE_CFG = """
r = 50.0
lambda_r = 45.0
seed = 7
rates = uniform(0.8,1.2)
staffing = hw(1.0)
horizon = 40.0
grid_points = 500
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "base.cfg"
    p.write_text(BASE_CFG, encoding="utf-8")
    return p


class TestExitCodes:
    def test_success(self, cfg_file, tmp_path):
        rc = main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path / "o")])
        assert rc == 0
        assert (tmp_path / "o" / "path.csv").exists()
        assert (tmp_path / "o" / "summary.json").exists()
        assert (tmp_path / "o" / "manifest.json").exists()

    def test_unknown_override_key_exits_2(self, cfg_file, tmp_path, capsys):
        rc = main([
            "simulate", "--config", str(cfg_file), "--out", str(tmp_path / "o"),
            "--set", "not_a_key=3",
        ])
        assert rc == 2
        assert "not_a_key" in capsys.readouterr().err

    def test_domain_error_exits_3(self, tmp_path):
        rc = main([
            "analyze", "--out", str(tmp_path / "o"),
            "--set", "beta=1.0", "--set", "sigma=2.0", "--set", "gamma=1.0",
        ])
        assert rc == 3


class TestSimulateArtifacts:
    def test_zero_arrivals_a_column(self, tmp_path):
        rc = main([
            "simulate", "--out", str(tmp_path / "o"),
            "--set", "lambda_r=0.0", "--set", "r=10.0", "--set", "staffing=10",
            "--set", "horizon=10.0", "--set", "grid_points=100",
        ])
        assert rc == 0
        lines = (tmp_path / "o" / "path.csv").read_text().splitlines()
        assert lines[0] == "t,X,Q,Z_1,R,A"
        assert all(line.rsplit(",", 1)[1] == "0" for line in lines[1:])

    def test_reps_table(self, cfg_file, tmp_path):
        rc = main([
            "simulate", "--config", str(cfg_file), "--out", str(tmp_path / "o"),
            "--reps", "3",
        ])
        assert rc == 0
        lines = (tmp_path / "o" / "reps.csv").read_text().splitlines()
        assert lines[0].startswith("rep,zeta_hat,p_wait,mean_Q")
        assert len(lines) == 4

    def test_json_format_tables(self, cfg_file, tmp_path):
        rc = main([
            "simulate", "--config", str(cfg_file), "--out", str(tmp_path / "o"),
            "--format", "json",
        ])
        assert rc == 0
        table = json.loads((tmp_path / "o" / "path.json").read_text())
        assert table["header"][:3] == ["t", "X", "Q"]
        assert not (tmp_path / "o" / "path.csv").exists()


class TestManifest:
    def test_checksums_match_files(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        main(["simulate", "--config", str(cfg_file), "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        for name, check in manifest["artifacts"].items():
            assert sha(out / name) == check

    def test_rerun_byte_identical(self, cfg_file, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        main(["simulate", "--config", str(cfg_file), "--out", str(out1)])
        rc = main(["rerun", str(out1 / "manifest.json"), "--out", str(out2)])
        assert rc == 0
        for name in ("path.csv", "summary.json", "manifest.json"):
            assert read(out1 / name) == read(out2 / name)

    def test_overrides_recorded(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        main([
            "simulate", "--config", str(cfg_file), "--out", str(out),
            "--set", "policy=FSF", "--seed", "99",
        ])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["policy"] == "FSF"
        assert manifest["seed"] == 99


class TestOtherCommands:
    def test_ql_sweep_trend_columns(self, tmp_path):
        rc = main([
            "ql-sweep", "--out", str(tmp_path / "o"), "--set", "eps_steps=5",
        ])
        assert rc == 0
        lines = (tmp_path / "o" / "ql.csv").read_text().splitlines()
        assert lines[0] == "eps,QL_lisf,QL_fsf"
        lisf = [float(line.split(",")[1]) for line in lines[1:]]
        fsf = [float(line.split(",")[2]) for line in lines[1:]]
        assert all(b > a for a, b in zip(lisf, lisf[1:]))
        assert all(b < a for a, b in zip(fsf, fsf[1:]))

    def test_staff_outputs(self, tmp_path):
        rc = main([
            "staff", "--out", str(tmp_path / "o"),
            "--set", "lambda_r=100.0", "--set", "r=100.0",
            "--set", "rates=point(1.0)", "--set", "nu=1.0", "--set", "d=2.0",
            "--set", "cost_model=abandon",
            "--set", "bracket_lo=0.2", "--set", "bracket_hi=3.0",
        ])
        assert rc == 0
        info = json.loads((tmp_path / "o" / "staffing.json").read_text())
        assert 0.2 <= info["x_star"] <= 3.0
        assert info["N_star"] >= 101
        curve = (tmp_path / "o" / "curve.csv").read_text().splitlines()
        assert curve[0] == "x,cost"
        assert len(curve) == 65

    def test_couple_ordering_artifact(self, tmp_path):
        rc = main([
            "couple", "--out", str(tmp_path / "o"),
            "--set", "lambda_r=48.0", "--set", "r=50.0", "--set", "staffing=50",
            "--set", "rates=uniform(0.8,1.2)", "--set", "p_rate=0.8",
            "--set", "skeleton_events=1500", "--seed", "3",
        ])
        assert rc == 0
        info = json.loads((tmp_path / "o" / "couple.json").read_text())
        assert info["ordered_everywhere"] is True
        header = (tmp_path / "o" / "couple.csv").read_text().splitlines()[0]
        assert header == "t,D_hom,D_het"

    def test_fairness_outputs(self, tmp_path):
        rc = main([
            "fairness", "--out", str(tmp_path / "o"),
            "--set", "lambda_r=45.0", "--set", "r=50.0", "--set", "staffing=50",
            "--set", "rates=uniform(0.5,1.5)", "--set", "horizon=60.0",
            "--set", "grid_points=500",
        ])
        assert rc == 0
        header = (tmp_path / "o" / "fairness.csv").read_text().splitlines()[0]
        assert header == "bin_lo,bin_hi,eta_hat,eta_theory"

    def test_ssc_outputs(self, tmp_path):
        rc = main([
            "ssc", "--out", str(tmp_path / "o"),
            "--set", "pools=0.5:1.0,0.5:2.0", "--set", "r_values=25,100",
            "--set", "reps=2", "--set", "ssc_horizon=5.0",
        ])
        assert rc == 0
        lines = (tmp_path / "o" / "ssc.csv").read_text().splitlines()
        assert lines[0] == "r,rep,g_supnorm,z_supnorm,ratio"
        assert len(lines) == 5

    def test_rerun_every_command(self, tmp_path):
        jobs = {
            "analyze": ["--set", "beta=-1.0", "--set", "sigma=4.0", "--set", "gamma=2.0",
                        "--set", "nu=2.0"],
            "ql-sweep": ["--set", "eps_steps=3"],
            "couple": ["--set", "lambda_r=20.0", "--set", "r=20.0", "--set", "staffing=20",
                       "--set", "rates=uniform(0.8,1.2)", "--set", "p_rate=0.8",
                       "--set", "skeleton_events=400"],
        }
        for cmd, extra in jobs.items():
            out1 = tmp_path / f"{cmd}-1"
            out2 = tmp_path / f"{cmd}-2"
            assert main([cmd, "--out", str(out1), *extra]) == 0
            assert main(["rerun", str(out1 / "manifest.json"), "--out", str(out2)]) == 0
            m1 = json.loads((out1 / "manifest.json").read_text())
            m2 = json.loads((out2 / "manifest.json").read_text())
            assert m1["artifacts"] == m2["artifacts"]
