"""Tests for the command-line entry point."""
import json

import pytest

from gia_lab.core.config import reset_settings
from gia_lab.experiments.cli import EXIT_OK, EXIT_PRECONDITION, build_parser, main

TINY = ['--set', 'dataset_count=12', '--set', 'image_size=8', '--batch-size', '2', '--iterations', '2']


class TestParser:
    """Argument parsing."""

    def test_verbs(self):
        """Every verb parses with its own options."""
        parser = build_parser()

        assert parser.parse_args(['search', '--n-trials', '3', '--prune']).prune is True
        assert parser.parse_args(['batchsweep', '--sizes', '1,2,4']).sizes == (1, 2, 4)
        assert parser.parse_args(['matrix', '--presets', 'a,b']).presets == ('a', 'b')
        assert parser.parse_args(['attack', '--update', 'u.giau']).stat_source is None

    @pytest.mark.parametrize("argv", [
        ['client', '--seed', '-1'],
        ['client', '--seed', str(2 ** 64)],
        ['client', '--jobs', '0'],
        ['batchsweep', '--sizes', '1,x'],
        ['attack'],
        ['teleport'],
    ])
    def test_invalid_arguments_exit(self, argv):
        """argparse rejects malformed arguments with status 2."""
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args(argv)

        assert excinfo.value.code == 2


class TestMain:
    """Exit codes and outputs."""

    def test_malformed_set(self, tmp_path):
        """--set without '=' is a precondition failure."""
        assert main(['selftest', '--out', str(tmp_path), '--set', 'nonsense']) == EXIT_PRECONDITION

    def test_unknown_set_key(self, tmp_path):
        """Unknown keys are precondition failures."""
        assert main(['client', '--out', str(tmp_path), '--set', 'colour=red']) == EXIT_PRECONDITION

    def test_missing_config_file(self, tmp_path):
        """A missing --config file is a precondition failure."""
        assert main(['client', '--config', str(tmp_path / 'absent.env')]) == EXIT_PRECONDITION

    def test_missing_update(self, tmp_path):
        """attack on a missing update exits 2."""
        assert main(['attack', '--out', str(tmp_path), '--update', str(tmp_path / 'none.giau')]) == EXIT_PRECONDITION

    def test_oversized_sweep(self, tmp_path):
        """Dataset errors exit 2."""
        assert main(['batchsweep', '--out', str(tmp_path), '--sizes', '64'] + TINY) == EXIT_PRECONDITION

    @pytest.mark.integration
    def test_client_then_attack(self, tmp_path, capsys):
        """client and attack print their output paths and exit 0."""
        assert main(['client', '--out', str(tmp_path), '--setting', 'stats_shared', '--seed', '4'] + TINY) == EXIT_OK
        assert main(['attack', '--out', str(tmp_path), '--update', str(tmp_path / 'update.giau'),
                     '--truth', str(tmp_path / 'truth.giau'), '--seed', '4'] + TINY) == EXIT_OK

        printed = capsys.readouterr().out.split()
        assert printed == [str(tmp_path / 'client.json'), str(tmp_path / 'attack' / 'result.json')]
        document = json.loads((tmp_path / 'attack' / 'result.json').read_text())
        assert document['attack']['stat_source'] == 'recovered'

    def test_config_file_and_flags(self, tmp_path):
        """Flags override the configuration file."""
        config_file = tmp_path / 'exp.env'
        config_file.write_text("dataset_count=12\nimage_size=8\nbatch_size=5\n")

        code = main(['client', '--config', str(config_file), '--out', str(tmp_path / 'out'), '--batch-size', '2'])

        assert code == EXIT_OK
        manifest = json.loads((tmp_path / 'out' / 'client.json').read_text())
        assert manifest['update']['batch_size'] == 2

    def test_jobs_default_from_environment(self, tmp_path, monkeypatch):
        """GIALAB_JOBS supplies --jobs when it is not given."""
        monkeypatch.setenv('GIALAB_JOBS', '3')
        reset_settings()

        assert main(['client', '--out', str(tmp_path)] + TINY) == EXIT_OK
        manifest = json.loads((tmp_path / 'client.json').read_text())
        assert manifest['experiment']['jobs'] == 3
