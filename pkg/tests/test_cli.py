import threading
import time
import urllib.request

import pytest

from jmscatter.cli import main

ENFORCED = """\
hbar_omega_mev = 500
rank = 2
enforce_is = true
e_i_mev = 189.525
v_1_1_hw = -0.81512
emin_mev = 1
emax_mev = 300
points = 12
"""

RESONANT = """\
hbar_omega_mev = 500
rank = 2
enforce_is = true
e_i_mev = 189.525
v_1_1_hw = 0.2
emin_mev = 1
emax_mev = 840
points = 40
"""

GENERIC = """\
hbar_omega_mev = 500
rank = 2
v_0_0 = -120
v_0_1 = 35
v_1_1 = -407.56
"""

ASYMMETRIC = """\
hbar_omega_mev = 500
rank = 2
v_0_1 = 5
v_1_0 = 6
v_1_1 = -400
"""


@pytest.fixture
def cfg(tmp_path):
    def write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


class TestPhaseShifts:
    def test_stdout_table(self, cfg, capsys):
        assert main(["phase-shifts", "--config", cfg(ENFORCED)]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0] == "E_lab_MeV,E_cm_MeV,delta_deg,Re_S,Im_S"
        assert len(lines) == 13
        first = lines[1].split(",")
        assert first[0] == "1" and first[1] == "0.5"
        assert abs(float(first[3]) ** 2 + float(first[4]) ** 2 - 1.0) < 1e-9

    def test_deterministic_output_file(self, cfg, tmp_path, capsys):
        conf = cfg(ENFORCED)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(["phase-shifts", "--config", conf, "--out", str(a)]) == 0
        assert main(["phase-shifts", "--config", conf, "--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_output_key_in_config(self, cfg, tmp_path, capsys):
        dest = tmp_path / "from_config.csv"
        conf = cfg(ENFORCED + "output = %s\n" % dest)
        assert main(["phase-shifts", "--config", conf]) == 0
        capsys.readouterr()
        assert dest.exists()


class TestErrorPaths:
    def test_missing_config(self, capsys):
        assert main(["phase-shifts", "--config", "/nope/run.cfg"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_key(self, cfg, capsys):
        assert main(["phase-shifts", "--config", cfg("hbar_omega_mev = 500\nrank = 2\nzzz = 1")]) == 2
        err = capsys.readouterr().err
        assert "unknown key 'zzz'" in err

    def test_asymmetric_strict(self, cfg, capsys):
        assert main(["phase-shifts", "--config", cfg(ASYMMETRIC)]) == 2
        assert "symmetric" in capsys.readouterr().err

    def test_numerical_failure_exit(self, cfg, capsys):
        # resonance falls outside a too-small grid
        conf = cfg(RESONANT.replace("emax_mev = 840", "emax_mev = 50"))
        code = main(["beta-scan", "--config", conf, "--betas-hw2", "1e-4",
                     "--out", "/tmp/unused-scan"])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_beta_scan_needs_out(self, cfg, capsys):
        assert main(["beta-scan", "--config", cfg(RESONANT), "--betas-hw2", "1e-2"]) == 2
        assert "directory" in capsys.readouterr().err

    def test_beta_scan_rejects_both_unit_flags(self, cfg, tmp_path, capsys):
        code = main(["beta-scan", "--config", cfg(RESONANT), "--betas", "100",
                     "--betas-hw2", "1e-3", "--out", str(tmp_path / "d")])
        assert code == 2
        capsys.readouterr()

    def test_bad_betas_text(self, cfg, tmp_path, capsys):
        code = main(["beta-scan", "--config", cfg(RESONANT), "--betas", "1,zap",
                     "--out", str(tmp_path / "d")])
        assert code == 2
        assert "comma-separated" in capsys.readouterr().err


class TestBetaScan:
    def test_directory_layout(self, cfg, tmp_path, capsys):
        out = tmp_path / "scan"
        code = main(["beta-scan", "--config", cfg(RESONANT),
                     "--betas-hw2", "0,1e-2,1e-4", "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert sorted(p.name for p in out.iterdir()) == [
            "curve_0.csv", "curve_1.csv", "curve_2.csv", "tracks.csv"]
        tracks = (out / "tracks.csv").read_text().strip().splitlines()
        assert tracks[0] == "beta_MeV2,E_r_MeV,Gamma_MeV,delta_threshold_deg"
        assert len(tracks) == 4
        # beta = 0 row keeps the threshold phase but has no resonance cells
        zero = tracks[1].split(",")
        assert zero[0] == "0" and zero[1] == "" and zero[2] == ""
        widths = [float(line.split(",")[2]) for line in tracks[2:]]
        assert widths[1] < widths[0]
        assert "no resonance track" in stdout
        curve = (out / "curve_1.csv").read_text().splitlines()
        assert curve[0] == "E_cm_MeV,delta_deg"
        assert len(curve) == 41


class TestPoles:
    def test_stdout_and_csv(self, cfg, tmp_path, capsys):
        out = tmp_path / "poles.csv"
        assert main(["poles", "--config", cfg(ENFORCED), "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "bound state: E = -2.22496" in stdout
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "E_b_MeV,kappa_hw,rms_relative_fm,rms_half_fm,residual,n_max"
        assert len(rows) == 2
        assert float(rows[1].split(",")[0]) == pytest.approx(-2.2249634970079812, abs=1e-9)

    def test_window_flags(self, cfg, capsys):
        deep = ("hbar_omega_mev = 500\nrank = 2\n"
                "v_0_0 = -1500\nv_0_1 = 200\nv_1_1 = -500\n")
        code = main(["poles", "--config", cfg(deep),
                     "--window-emin", "-2500", "--window-emax", "-0.001"])
        assert code == 0
        assert capsys.readouterr().out.count("bound state:") == 2

    def test_no_poles_message(self, cfg, capsys):
        conf = cfg(ENFORCED.replace("-0.81512", "-0.3"))
        assert main(["poles", "--config", conf]) == 0
        assert "no bound states" in capsys.readouterr().out


class TestIsolated:
    def test_reports_pinned_state(self, cfg, tmp_path, capsys):
        out = tmp_path / "isolated.csv"
        assert main(["isolated", "--config", cfg(ENFORCED), "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "isolated state: E = 189.525 MeV [BSEC]" in stdout
        assert "block check ok" in stdout
        rows = out.read_text().strip().splitlines()
        assert rows[0] == ("energy_MeV,classification,last_component,"
                           "minor_gap_MeV,degenerate,block_ok")
        cells = rows[1].split(",")
        assert cells[1] == "BSEC" and cells[4] == "false" and cells[5] == "true"

    def test_generic_has_none(self, cfg, capsys):
        assert main(["isolated", "--config", cfg(GENERIC)]) == 0
        assert "no isolated states" in capsys.readouterr().out


class TestFit:
    def test_fit_directory(self, cfg, tmp_path, capsys):
        from jmscatter.nnfit import load_builtin_dataset, write_dataset
        data = tmp_path / "triplet.txt"
        write_dataset(load_builtin_dataset("triplet"), str(data))
        out = tmp_path / "fit"
        code = main(["fit", "--config", cfg(ENFORCED), "--data", str(data),
                     "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "fitted v_1_1" in stdout
        from jmscatter.config import parse_config
        fitted = parse_config(str(out / "fitted_config.txt"))
        v11_hw = fitted.rank2().v11 / 500.0
        assert v11_hw == pytest.approx(-0.812, abs=5e-3)
        resid = (out / "residuals.csv").read_text().strip().splitlines()
        assert resid[0] == "E_lab_MeV,delta_data_deg,delta_model_deg,residual_deg"
        assert len(resid) == 11

    def test_channel_required(self, cfg, tmp_path, capsys):
        data = tmp_path / "untagged.txt"
        data.write_text("1 147.75\n5 118.18\n10 102.61\n")
        code = main(["fit", "--config", cfg(ENFORCED), "--data", str(data),
                     "--out", str(tmp_path / "f")])
        assert code == 2
        assert "channel" in capsys.readouterr().err

    def test_needs_enforced_template(self, cfg, tmp_path, capsys):
        data = tmp_path / "t.txt"
        data.write_text("# channel = triplet\n1 147.75\n5 118.18\n10 102.61\n")
        code = main(["fit", "--config", cfg(GENERIC), "--data", str(data),
                     "--out", str(tmp_path / "f")])
        assert code == 2
        assert "enforce_is" in capsys.readouterr().err


class TestVerify:
    def test_passes_on_good_config(self, cfg, tmp_path, capsys):
        report = tmp_path / "verify.txt"
        assert main(["verify", "--config", cfg(GENERIC), "--out", str(report)]) == 0
        stdout = capsys.readouterr().out
        assert "verification passed" in stdout
        assert stdout.count("PASS") >= 4
        assert "FAIL" not in stdout
        assert report.read_text() == stdout

    def test_fails_on_asymmetric(self, cfg, capsys):
        assert main(["verify", "--config", cfg(ASYMMETRIC)]) == 4
        stdout = capsys.readouterr().out
        assert "FAIL symmetry" in stdout
        assert "verification failed" in stdout


class TestServerMode:
    def test_round_trip_against_live_service(self, cfg, tmp_path, capsys):
        uvicorn = pytest.importorskip("uvicorn")
        from jmscatter.service import create_app

        config = uvicorn.Config(create_app(), host="127.0.0.1", port=8214,
                                log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        base = "http://127.0.0.1:8214"
        for _ in range(100):
            try:
                with urllib.request.urlopen(base + "/v1/health", timeout=0.5):
                    break
            except Exception:
                time.sleep(0.05)
        else:
            server.should_exit = True
            pytest.fail("service did not come up")
        try:
            conf = cfg(ENFORCED)
            local = tmp_path / "local.csv"
            remote = tmp_path / "remote.csv"
            assert main(["phase-shifts", "--config", conf, "--out", str(local)]) == 0
            assert main(["phase-shifts", "--config", conf, "--out", str(remote),
                         "--server", base]) == 0
            assert local.read_bytes() == remote.read_bytes()
            # server-side config rejection maps back to exit 2
            bad = cfg("hbar_omega_mev = 500\nrank = 2\nv_0_9 = 1", name="bad.cfg")
            assert main(["phase-shifts", "--config", bad, "--server", base]) == 2
        finally:
            server.should_exit = True
            thread.join(timeout=5.0)
        capsys.readouterr()
