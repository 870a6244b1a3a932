import pandas as pd
import yaml

import cli


def write_config(tmp_path, **overrides):
    settings = {
        "name": "cli",
        "m": 6,
        "k": 1,
        "snapshots": 1,
        "sweep": "snr_db",
        "values": ["noiseless", 20],
        "trials": 2,
        "population_size": 6,
        "max_generations": 3,
        "out": str(tmp_path / "results" / "cli"),
        "deterministic": True,
    }
    settings.update(overrides)
    path = tmp_path / "sweep.yaml"
    path.write_text(yaml.safe_dump(settings))
    return path


class TestCli:
    def test_successful_run_writes_both_tables(self, tmp_path):
        path = write_config(tmp_path)
        assert cli.main([str(path)]) == cli.EXIT_OK
        summary = pd.read_csv(tmp_path / "results" / "cli_summary.csv", keep_default_na=False)
        assert summary["sweep_value"].tolist() == ["noiseless", "20.0"]
        assert (tmp_path / "results" / "cli_trials.csv").exists()

    def test_flags_override_file_values(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "override"
        code = cli.main([str(path), "--trials", "1", "--values", "5,10,15", "--out", str(out)])
        assert code == cli.EXIT_OK
        trials = pd.read_csv(tmp_path / "override_trials.csv")
        assert len(trials) == 3

    def test_missing_config_file(self, tmp_path):
        assert cli.main([str(tmp_path / "absent.yaml")]) == cli.EXIT_CONFIG_ERROR

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("values: [1, 2\n")
        assert cli.main([str(path)]) == cli.EXIT_CONFIG_ERROR

    def test_invalid_value(self, tmp_path):
        path = write_config(tmp_path, k=9)
        assert cli.main([str(path)]) == cli.EXIT_CONFIG_ERROR

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        path = write_config(tmp_path, out=str(blocker / "nested" / "run"))
        assert cli.main([str(path)]) == cli.EXIT_IO_ERROR

    def test_store_persists_the_sweep(self, tmp_path):
        path = write_config(tmp_path)
        assert cli.main([str(path), "--store"]) == cli.EXIT_OK
