"""Config validation, deterministic output files, and the four subcommands."""

import json
import os

import pytest

from mfelab.cli import main
from mfelab.errors import ConfigError
from mfelab.serialize import RunConfig, atomic_write, fmt

ALPHA = 0.5


def base_config(out, **overrides):
    cfg = {
        "schema": "mfelab/1",
        "alpha": ALPHA,
        "hstar": {"kind": "gaussian", "coef": 0.25},
        "out": str(out),
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1])


class TestRunConfig:
    def test_hash_ignores_key_order(self):
        a = RunConfig.from_dict({"schema": "mfelab/1", "alpha": 0.5, "hstar": {"kind": "constant"}})
        b = RunConfig.from_dict({"hstar": {"coef": 1.0, "kind": "constant"}, "alpha": 0.5})
        assert a.config_hash() == b.config_hash()

    def test_roundtrip_is_stable(self):
        a = RunConfig.from_dict(base_config("x"))
        b = RunConfig.from_dict(a.to_dict())
        assert a == b
        assert a.canonical_json() == b.canonical_json()

    def test_defaults_fill_in(self):
        cfg = RunConfig.from_dict({"alpha": 0.5, "hstar": {"kind": "constant"}})
        assert cfg.mesh["nodes"] == 512
        assert cfg.window == {"start": 6.0, "end": 15.0, "steps": 19}
        assert cfg.fit_window == (8.0, 14.0)
        assert cfg.r0 == 0.25
        assert cfg.thresholds["pohozaev_tol"] == 1e-6

    def test_integer_alpha_message(self):
        with pytest.raises(ConfigError, match="alpha must be non-integer"):
            RunConfig.from_dict({"alpha": 1, "hstar": {"kind": "constant"}})

    def test_unknown_fields_listed(self):
        with pytest.raises(ConfigError) as err:
            RunConfig.from_dict(
                {"alpha": 0.5, "hstar": {"kind": "constant"}, "typo": 1, "oops": 2}
            )
        assert err.value.fields == ["oops", "typo"]

    def test_bad_section_values_listed(self):
        with pytest.raises(ConfigError) as err:
            RunConfig.from_dict(base_config("x", mesh={"nodes": 31}, r0=1.5))
        assert "mesh.nodes" in err.value.fields
        assert "r0" in err.value.fields

    def test_unknown_diagnostic_rejected(self):
        with pytest.raises(ConfigError, match="diagnostics"):
            RunConfig.from_dict(base_config("x", diagnostics=["rate", "bogus"]))

    def test_weight_and_mesh_factories(self):
        cfg = RunConfig.from_dict(base_config("x"))
        assert cfg.weight_spec().kind == "gaussian"
        assert cfg.mesh_policy().n == 512
        assert cfg.mesh_policy(nodes=128).n == 128

    def test_seed_derived_from_hash(self):
        cfg = RunConfig.from_dict(base_config("x"))
        assert cfg.seed() == int(cfg.config_hash()[:8], 16)


class TestSerializeHelpers:
    def test_fmt_roundtrips_doubles(self):
        import math
        for x in (math.pi, 1.0 / 3.0, 1e-300, -37.69911184307752, 0.0):
            assert float(fmt(x)) == x

    def test_atomic_write_replaces(self, tmp_path):
        path = tmp_path / "a" / "f.txt"
        atomic_write(str(path), "one\n")
        atomic_write(str(path), "two\n")
        assert path.read_text() == "two\n"
        assert [p for p in os.listdir(tmp_path / "a") if p.startswith(".tmp")] == []


class TestBranchCommand:
    def test_minimal_config_row_count(self, tmp_path, capsys):
        cfg = {
            "schema": "mfelab/1",
            "alpha": 0.5,
            "hstar": {"kind": "constant", "coef": 1.0},
            "mesh": {"nodes": 64},
            "window": {"start": 0.0, "end": 2.0, "steps": 4},
            "out": str(tmp_path / "out"),
        }
        path = write_config(tmp_path, "min.json", cfg)
        code, msg = run(["branch", "--config", path], capsys)
        assert code == 0
        lines = (tmp_path / "out" / "branch.csv").read_text().splitlines()
        assert lines[0].startswith("# config ")
        assert lines[1] == "lambda,rho,sigma,gamma,mass_total,local_mass_r0,res_norm,fold_flag"
        assert len(lines) == 2 + 4
        for i in range(4):
            snap = (tmp_path / "out" / f"u_{i:04d}.csv").read_text().splitlines()
            assert snap[1] == "radius,u"
            assert len(snap) == 2 + 64
        assert msg["config_hash"] in lines[0]

    def test_rerun_byte_identical(self, tmp_path, capsys):
        cfg = {
            "schema": "mfelab/1",
            "alpha": 0.5,
            "hstar": {"kind": "constant", "coef": 1.0},
            "mesh": {"nodes": 64},
            "window": {"start": 0.0, "end": 2.0, "steps": 4},
            "out": str(tmp_path / "out"),
        }
        path = write_config(tmp_path, "min.json", cfg)
        assert main(["branch", "--config", path]) == 0
        first = (tmp_path / "out" / "branch.csv").read_bytes()
        assert main(["branch", "--config", path]) == 0
        assert (tmp_path / "out" / "branch.csv").read_bytes() == first

    def test_integer_alpha_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, "bad.json", {"alpha": 2, "hstar": {"kind": "constant"}})
        code, msg = run(["branch", "--config", path], capsys)
        assert code == 2
        assert msg["error"]["message"] == "alpha must be non-integer"

    def test_missing_config_file(self, tmp_path, capsys):
        code, msg = run(["branch", "--config", str(tmp_path / "nope.json")], capsys)
        assert code == 2
        assert "cannot read config" in msg["error"]["message"]

    def test_window_and_out_flags(self, tmp_path, capsys):
        cfg = {
            "schema": "mfelab/1",
            "alpha": 0.5,
            "hstar": {"kind": "constant", "coef": 1.0},
            "mesh": {"nodes": 64},
            "window": {"start": 0.0, "end": 2.0, "steps": 4},
            "out": str(tmp_path / "out"),
        }
        path = write_config(tmp_path, "min.json", cfg)
        other = tmp_path / "other"
        code, msg = run(
            ["branch", "--config", path, "--out", str(other), "--window", "0.5,1.5"], capsys
        )
        assert code == 0
        assert (other / "branch.csv").exists()
        lines = (other / "branch.csv").read_text().splitlines()
        assert len(lines) == 2 + 4  # steps kept, endpoints overridden
        first_lam = float(lines[2].split(",")[0])
        assert abs(first_lam - 0.5) < 1e-9

    def test_malformed_window_flag(self, tmp_path, capsys):
        path = write_config(tmp_path, "c.json", base_config(tmp_path / "o"))
        code, msg = run(["branch", "--config", path, "--window", "6;10"], capsys)
        assert code == 2

    def test_bad_thread_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MFELAB_THREADS", "lots")
        path = write_config(tmp_path, "c.json", base_config(tmp_path / "o"))
        code, msg = run(["branch", "--config", path], capsys)
        assert code == 2
        assert "MFELAB_THREADS" in msg["error"]["message"]


@pytest.fixture(scope="module")
def verify_run(tmp_path_factory):
    """One full default verify run shared by the assertions below."""
    tmp = tmp_path_factory.mktemp("verify")
    cfg = base_config(tmp / "out")
    path = tmp / "cfg.json"
    path.write_text(json.dumps(cfg))
    code = main(["verify", "--config", str(path)])
    report = json.loads((tmp / "out" / "report.json").read_text())
    return code, str(path), tmp, report


class TestVerifyCommand:
    def test_acceptance_config_passes(self, verify_run):
        code, _, tmp, report = verify_run
        assert code == 0
        assert set(report) == {
            "branch", "rate_fit", "local_rate_fit", "matching", "outer",
            "pohozaev", "b0", "window", "config_hash",
        }
        slope = report["rate_fit"]["slope"]
        assert abs(slope + 2.0 / 3.0) <= 0.10 * (2.0 / 3.0)
        assert max(abs(v) for v in report["pohozaev"]["values"]) <= 1e-6
        assert (tmp / "out" / "fits.csv").exists()

    def test_rerun_byte_identical(self, verify_run, capsys):
        code, cfg_path, tmp, _ = verify_run
        report = (tmp / "out" / "report.json").read_bytes()
        fits = (tmp / "out" / "fits.csv").read_bytes()
        assert main(["verify", "--config", cfg_path]) == 0
        assert (tmp / "out" / "report.json").read_bytes() == report
        assert (tmp / "out" / "fits.csv").read_bytes() == fits

    def test_coarse_mesh_failure_named(self, tmp_path, capsys):
        cfg = base_config(
            tmp_path / "out",
            mesh={"nodes": 64},
            window={"start": 6.0, "end": 14.0, "steps": 9},
        )
        path = write_config(tmp_path, "coarse.json", cfg)
        code, msg = run(["verify", "--config", path], capsys)
        assert code == 4
        checks = {f["check"] for f in msg["error"]["failures"]}
        assert "mesh-convergence" in checks

    def test_empty_toggles_metadata_only(self, tmp_path, capsys):
        cfg = base_config(tmp_path / "out", diagnostics=[])
        path = write_config(tmp_path, "meta.json", cfg)
        code, msg = run(["verify", "--config", path], capsys)
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["rate_fit"] is None
        assert report["pohozaev"] is None
        assert len(report["branch"]["lambda"]) == 19
        assert msg["outputs"] == [str(tmp_path / "out" / "report.json")]

    def test_fold_window_reports_pair(self, tmp_path, capsys):
        cfg = base_config(
            tmp_path / "out",
            window={"start": 2.0, "end": 8.0, "steps": 25},
            diagnostics=["pohozaev"],
        )
        path = write_config(tmp_path, "fold.json", cfg)
        code, msg = run(["verify", "--config", path], capsys)
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["pohozaev"]["kind"] == "pair"
        assert abs(report["pohozaev"]["values"][0]) <= 1e-8
        assert abs(report["b0"][0] - 1.01358) <= 1e-4


class TestSpectrumCommand:
    def test_rows_and_determinism(self, tmp_path, capsys):
        cfg = base_config(
            tmp_path / "out",
            window={"start": 8.0, "end": 10.0, "steps": 3},
            k_max=2,
        )
        path = write_config(tmp_path, "s.json", cfg)
        code, msg = run(["spectrum", "--config", path], capsys)
        assert code == 0
        lines = (tmp_path / "out" / "spectrum.csv").read_text().splitlines()
        assert lines[1] == "lambda,k,eig_min,eig_min_next,kernel_flag"
        assert len(lines) == 2 + 3 * 3  # points x modes
        assert all(row.split(",")[4] in ("0", "1") for row in lines[2:])
        first = (tmp_path / "out" / "spectrum.csv").read_bytes()
        assert main(["spectrum", "--config", path]) == 0
        assert (tmp_path / "out" / "spectrum.csv").read_bytes() == first


class TestPohozaevCommand:
    def test_eigenfield_rows(self, tmp_path, capsys):
        cfg = base_config(
            tmp_path / "out",
            window={"start": 8.0, "end": 10.0, "steps": 3},
        )
        path = write_config(tmp_path, "p.json", cfg)
        code, msg = run(["pohozaev", "--config", path], capsys)
        assert code == 0
        lines = (tmp_path / "out" / "pohozaev.csv").read_text().splitlines()
        assert lines[1] == "lambda,kind,radius,residual"
        rows = [line.split(",") for line in lines[2:]]
        assert len(rows) == 3
        assert all(r[1] == "eigenfield" for r in rows)
        assert all(abs(float(r[3])) <= 1e-6 for r in rows)
