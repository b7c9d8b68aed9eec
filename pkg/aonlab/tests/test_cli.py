"""
Tests for the command-line surface: flag parsing, config precedence and exit codes.
"""

import pandas as pd
import pytest

from aonlab.commands.options import read_config_file, resolve_config
from aonlab.main import build_parser, main
from aonlab.services import verification_service
from aonlab.settings import Settings, get_settings
from aonlab.utils.error_handlers import EXIT_CONFIGURATION, EXIT_FAILURE, EXIT_OK, ConfigurationError


def _args(*argv):
    return build_parser().parse_args(list(argv))


class TestResolveConfig:
    """Tests for flag > config file > environment > default precedence."""

    def test_defaults(self):
        config = resolve_config(_args("sweep"), Settings())

        assert config.seed == 2024
        assert config.threads == 1
        assert config.m == 64

    def test_flag_overrides_config_file(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("trials=500\nseed=9\nbeta-grid=0:1:0.5\n")
        config = resolve_config(_args("sweep", "--config", str(path), "--seed", "4"), Settings())

        assert config.trials == 500
        assert config.seed == 4
        assert config.beta_grid == [0.0, 0.5, 1.0]

    def test_environment_threads_only_without_flag(self, tmp_path):
        settings = Settings(threads=6)

        assert resolve_config(_args("sweep"), settings).threads == 6
        assert resolve_config(_args("sweep", "--threads", "2"), settings).threads == 2

        path = tmp_path / "run.conf"
        path.write_text("threads=3\n")
        assert resolve_config(_args("sweep", "--config", str(path)), settings).threads == 3

    def test_caps_come_from_settings(self):
        config = resolve_config(_args("verify"), Settings(gram_cap=10, ambient_cap=20, enumeration_cap=30))
        assert (config.gram_cap, config.ambient_cap, config.enumeration_cap) == (10, 20, 30)

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("tirals=5\n")
        with pytest.raises(ConfigurationError) as info:
            read_config_file(str(path))
        assert info.value.key == "tirals"

    def test_key_without_value(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("seed\n")
        with pytest.raises(ConfigurationError):
            read_config_file(str(path))

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            read_config_file(str(tmp_path / "absent.conf"))

    def test_invalid_value_is_configuration_error(self):
        with pytest.raises(ConfigurationError):
            resolve_config(_args("sweep", "--trials", "0"), Settings())

    def test_environment_settings(self, monkeypatch):
        monkeypatch.setenv("AONLAB_THREADS", "5")
        monkeypatch.setenv("AONLAB_GRAM_CAP", "100")

        settings = get_settings()
        assert settings.threads == 5
        assert settings.gram_cap == 100


class TestMain:
    """Tests for the entry point and its exit codes."""

    def test_sweep_to_file(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--prior", "orthogonal", "--m", "16", "--beta-grid", "0:2:0.5",
                     "--trials", "200", "--seed", "1", "--out", str(out)])

        assert code == EXIT_OK
        assert len(pd.read_csv(out)) == 5
        assert (tmp_path / "sweep.csv.meta").exists()

    def test_sweep_to_stdout(self, capsys):
        code = main(["sweep", "--m", "8", "--beta-grid", "0:1:0.5", "--trials", "100"])
        lines = capsys.readouterr().out.splitlines()

        assert code == EXIT_OK
        assert lines[0].startswith("beta,lambda,mmse_hat")
        assert len(lines) == 4

    def test_overlap_command(self, tmp_path):
        out = tmp_path / "overlap.csv"
        code = main(["overlap", "--prior", "bernoulli-rademacher", "--p", "20", "--k", "3", "--d", "2",
                     "--out", str(out)])

        assert code == EXIT_OK
        assert len(pd.read_csv(out)) == 101

    def test_second_moment_command(self, tmp_path):
        out = tmp_path / "sm.csv"
        code = main(["second-moment", "--m", "64", "--lambda-grid", "100", "--rho-grid", "0,0.5", "--out", str(out)])

        assert code == EXIT_OK
        assert set(pd.read_csv(out)["table"]) == {"prop5", "rate", "bound"}

    def test_immse_command(self, tmp_path):
        out = tmp_path / "immse.csv"
        code = main(["immse-check", "--m", "16", "--beta-grid", "0:1:0.25", "--trials", "200", "--out", str(out)])

        assert code == EXIT_OK
        assert len(pd.read_csv(out)) == 5

    def test_invalid_grid_exit_2(self):
        assert main(["sweep", "--beta-grid", "1:0:0.1"]) == EXIT_CONFIGURATION

    def test_sparse_prior_without_k_exit_2(self):
        assert main(["sweep", "--prior", "bernoulli", "--p", "10"]) == EXIT_CONFIGURATION

    def test_unknown_flag_exit_2(self):
        assert main(["sweep", "--tirals", "5"]) == EXIT_CONFIGURATION

    def test_cap_exceeded_exit_1(self, monkeypatch):
        monkeypatch.setenv("AONLAB_GRAM_CAP", "10")
        monkeypatch.setenv("AONLAB_AMBIENT_CAP", "100")

        code = main(["sweep", "--prior", "bernoulli", "--p", "30", "--k", "3", "--d", "2",
                     "--beta-grid", "0:1:0.5", "--trials", "100"])
        assert code == EXIT_FAILURE

    def test_bad_environment_exit_2(self, monkeypatch):
        monkeypatch.setenv("AONLAB_THREADS", "many")
        assert main(["sweep"]) == EXIT_CONFIGURATION

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert "aonlab" in capsys.readouterr().out


class TestVerifyCommand:
    """`verify` through the entry point, on a subset of the suite."""

    @pytest.fixture
    def gram_checks(self, monkeypatch):
        names = {"gram matrix has unit diagonal and is PSD", "transition width interpolation"}
        subset = [entry for entry in verification_service.CHECKS if entry[1] in names]
        monkeypatch.setattr(verification_service, "CHECKS", subset)
        return subset

    def test_passes(self, gram_checks, capsys):
        assert main(["verify", "--threads", "2"]) == EXIT_OK
        assert "FAIL" not in capsys.readouterr().out

    def test_injected_fault_fails(self, gram_checks, capsys):
        assert main(["verify", "--inject-fault", "gram-diagonal"]) == EXIT_FAILURE
        assert "FAIL" in capsys.readouterr().out
