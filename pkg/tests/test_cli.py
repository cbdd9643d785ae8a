import json
import math

import numpy as np
import pytest

from bsmimo import bundled_config, channel as ch, cli, scenario
from bsmimo.errors import ConfigError

SMALL = """
[scenario]
name = small
mode = {mode}
seed = 3
[channel]
source = paths
n_paths = 50
tx_spacing_m = 0.12
[collect]
spatial_points = 6
snapshots = 3
interference_prob = 0.2
[sweep]
snr_db = 0:10:20
n_noise_samples = 20
n_trials = 2000
"""


@pytest.fixture(params=["beamspace", "conventional"])
def small_cfg(request, tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL.format(mode=request.param))
    return p


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestConfig:
    def test_defaults_are_table_values(self):
        cfg = scenario.parse_config("[scenario]\nname = x\n")
        assert (cfg.link.n_sync, cfg.link.l_sync, cfg.link.l_train, cfg.link.l_data) == (4, 32, 64, 256)
        assert (cfg.collect.spatial_points, cfg.collect.snapshots) == (400, 11)

    def test_grid_syntax(self):
        cfg = scenario.parse_config("[sweep]\nsnr_db = -10:5:30\n")
        assert cfg.sweep.snr_db == tuple(float(x) for x in range(-10, 31, 5))
        assert scenario.parse_config("[sweep]\nsnr_db = 1, 2.5, 7\n").sweep.snr_db == (1, 2.5, 7)

    @pytest.mark.parametrize("text,field", [
        ("[channel]\nsource = file\nfile = nowhere.csv\n", "channel.file"),
        ("[scenario]\nmode = conventional\n[channel]\nsource = rayleigh\n", "channel.tx_spacing_m"),
        ("[scenario]\nmode = diagonal\n", "scenario.mode"),
        ("[link]\nrrc_rolloff = 2\n", "link"),
        ("[collect]\nsnapshots = many\n", "collect.snapshots"),
        ("[sweep]\nsnr_db = 5, 1\n", "sweep.snr_db"),
        ("[channel]\nsource = ricean\nk_factor = -1\n", "channel.k_factor"),
        ("[bogus]\nx = 1\n", "bogus"),
    ])
    def test_errors_name_the_field(self, text, field, tmp_path):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            scenario.parse_config(text, tmp_path)

    def test_missing_file_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[channel]\nsource = file\nfile = missing.csv\n")
        assert run_cli("run", "--config", cfg, "--out-dir", tmp_path) == 2
        assert "channel.file" in capsys.readouterr().err

    def test_bundled_config_valid(self):
        cfg = scenario.load_config(bundled_config("scenario-nlos-iid.cfg"))
        assert cfg.collect.spatial_points == 400 and cfg.collect.snapshots == 11


class TestSubcommands:
    def test_synth_loads(self, tmp_path):
        assert run_cli("synth-loads", "--out-dir", tmp_path) == 0
        doc = json.loads((tmp_path / "load_schedule.json").read_text())
        assert doc["schema_version"] == 1 and len(doc["states"]) == 4 and doc["symmetric"]
        assert (tmp_path / "loads_sweep.csv").read_text().startswith("x1_free,state,")

    def test_antenna_report(self, tmp_path):
        assert run_cli("antenna-report", "--out-dir", tmp_path) == 0
        doc = json.loads((tmp_path / "antenna_report.json").read_text())
        assert doc["orthogonality_residual"] < 1e-9 and len(doc["return_loss_db"]) == 4

    def test_simulate(self, small_cfg, tmp_path):
        assert run_cli("simulate", "--config", small_cfg, "--out-dir", tmp_path, "--frames", 2) == 0
        lines = (tmp_path / "simulate.csv").read_text().splitlines()
        assert lines[0] == ",".join(scenario.SIMULATE_COLUMNS) and len(lines) == 1 + 3 * 2

    def test_analyze_dataset(self, data_dir, tmp_path):
        assert run_cli("analyze-dataset", data_dir / "ensemble_los_beamspace.csv", "--out-dir", tmp_path) == 0
        doc = json.loads((tmp_path / "analysis.json").read_text())
        assert doc["n_records_kept"] == 4 and doc["n_unvalidated"] == 1 and doc["rms_frobenius"] == pytest.approx(2)

    def test_zero_ensemble_exit_3(self, tmp_path, capsys):
        recs = [ch.ChannelRecord(s, 1, np.zeros((2, 2)), 0.0) for s in (1, 2)]
        ch.save_ensemble(ch.ChannelEnsemble(tuple(recs), ch.EnsembleMeta("zero", 2, 1)), tmp_path / "z.csv")
        assert run_cli("analyze-dataset", tmp_path / "z.csv", "--out-dir", tmp_path) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_sweep_from_file(self, data_dir, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[sweep]\nsnr_db = 0, 10\nn_noise_samples = 10\nn_trials = 1000\n")
        assert run_cli("sweep", "--config", cfg, "--ensemble", data_dir / "ensemble_los_beamspace.csv",
                       "--out-dir", tmp_path) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "snr_db,mi_mean,mi_p10,mi_p50,mi_p90,cap_mean,ser,stderr_ser" and len(lines) == 3

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as e:
            run_cli("fly")
        assert e.value.code == 2


class TestRun:
    def test_small_run_deterministic(self, small_cfg, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("run", "--config", small_cfg, "--out-dir", a) == 0
        assert run_cli("run", "--config", small_cfg, "--out-dir", b, "--threads", 3) == 0
        names = sorted(p.name for p in a.iterdir())
        assert names == ["correlation_abs.csv", "ensemble.csv", "summary.json", "sweep.csv"]
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_seed_override_changes_output(self, small_cfg, tmp_path):
        run_cli("run", "--config", small_cfg, "--out-dir", tmp_path / "a")
        run_cli("run", "--config", small_cfg, "--out-dir", tmp_path / "b", "--seed", 4)
        assert (tmp_path / "a/ensemble.csv").read_bytes() != (tmp_path / "b/ensemble.csv").read_bytes()

    def test_compensation_applied_once(self, small_cfg, tmp_path):
        run_cli("run", "--config", small_cfg, "--out-dir", tmp_path)
        doc = json.loads((tmp_path / "summary.json").read_text())
        expected = scenario.CONVENTIONAL_COMPENSATION_DB if doc["mode"] == "conventional" else 0.0
        assert doc["power_compensation_db"] == expected
        assert doc["rms_frobenius"] == pytest.approx(2, abs=1e-12)

    def test_bundled_scenario(self, tmp_path):
        assert run_cli("run", "--config", bundled_config("scenario-nlos-iid.cfg"), "--out-dir", tmp_path) == 0
        doc = json.loads((tmp_path / "summary.json").read_text())
        for key in ("schema_version", "scenario", "mode", "seed", "n_records", "n_records_kept",
                    "spatial_retention", "rms_frobenius", "ellipticity_mean", "ellipticity_mean_db",
                    "correlation_abs", "power_compensation_db", "rx_power_dbm", "snr_db", "mi_mean",
                    "capacity_mean", "ser"):
            assert key in doc, key
        assert doc["n_records"] == 400 * 11 and doc["spatial_points"] == 400
        assert doc["spatial_retention"] > 0.95
        assert math.isclose(doc["rms_frobenius"], 2, abs_tol=1e-12)
        assert doc["mi_mean"][-1] > 3.5 and doc["ser"] == sorted(doc["ser"], reverse=True)
