import json
from pathlib import Path

import numpy as np
import pytest

from swsg import numerics
from swsg.cli import main


def run_dir(tmp_path) -> Path:
    out = tmp_path / "run"
    code = main(["simulate", "--n1", "6", "--n2", "6", "--eps", "0.1",
                 "--tol", "1e-9", "--dt", "0.1", "--horizon", "0.3",
                 "--snapshot-every", "0.1", "--outdir", str(out)])
    assert code == 0
    return out


class TestSimulate:
    def test_tiny_run_succeeds(self, tmp_path, capsys):
        out = run_dir(tmp_path)
        assert (out / "manifest.json").exists()
        assert "run directory" in capsys.readouterr().out

    def test_validation_exit_code_and_message(self, tmp_path, capsys):
        code = main(["simulate", "--dt", "-0.5", "--outdir", str(tmp_path)])
        assert code == 1
        assert "dt" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "c.ini"
        cfgfile.write_text("[grid]\nn1 = 6\nn2 = 6\n[solver]\neps = 0.1\n"
                           "tol = 1e-9\n[run]\nhorizon = 0.1\n")
        out = tmp_path / "r"
        code = main(["simulate", "--config", str(cfgfile),
                     "--outdir", str(out)])
        assert code == 0
        text = (out / "config.ini").read_text()
        assert "n1 = 6" in text


class TestStudy:
    def test_energy_study_from_run_dir(self, tmp_path):
        out = run_dir(tmp_path)
        code = main(["study", "energy", "--run-dir", str(out)])
        assert code == 0
        table = (out / "energy.txt").read_text()
        assert "normalized_error" in table

    def test_ageostrophic_study_from_run_dir(self, tmp_path):
        out = run_dir(tmp_path)
        code = main(["study", "ageostrophic", "--run-dir", str(out)])
        assert code == 0
        assert (out / "ageostrophic.txt").exists()

    def test_missing_run_dir_is_validation_error(self, capsys):
        code = main(["study", "energy"])
        assert code == 1
        assert "--run-dir" in capsys.readouterr().err

    def test_unknown_kind_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            main(["study", "vorticity"])

    def test_eps_convergence_tiny(self, tmp_path):
        out = tmp_path / "conv.txt"
        code = main(["study", "eps_convergence", "--eps-list", "0.2,0.15",
                     "--fine-n", "12", "--tol", "1e-9", "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert "slopes" in text and "e_h" in text


class TestVerify:
    def test_all_checks_pass(self, capsys):
        assert main(["verify"]) == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert lines and all(c["passed"] for c in lines)
        names = {c["name"] for c in lines}
        assert "one_point_closed_form" in names

    def test_fault_injection_detected(self, monkeypatch, capsys):
        # corrupt the Lambert W evaluation; the oracle suite must notice
        monkeypatch.setattr(numerics, "lambert_w0",
                            lambda z: np.asarray(z) * 0.9)
        assert main(["verify"]) == 2
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert any(not c["passed"] for c in lines)


class TestRenderData:
    def test_bundle_contents(self, tmp_path, capsys):
        out = run_dir(tmp_path)
        main(["study", "energy", "--run-dir", str(out)])
        code = main(["render-data", "--run-dir", str(out)])
        assert code == 0
        bundle = json.loads((out / "viz_bundle.json").read_text())
        assert bundle["completed"] is True
        assert bundle["config"]["n1"] == 6
        snaps = bundle["snapshots"]
        assert len(snaps) == 4  # t = 0, 0.1, 0.2, 0.3
        first = snaps[0]
        assert len(first["x1"]) == 36
        assert first["h"] is not None and len(first["h"]) == 36
        assert first["residuals"][0][1] == 1
        assert "study_energy" in bundle

    def test_missing_manifest(self, tmp_path, capsys):
        code = main(["render-data", "--run-dir", str(tmp_path)])
        assert code == 1
