"""Tests for environment settings."""
import pytest

from gia_lab.core.config import Settings, get_settings, reset_settings


class TestSettings:
    """GIALAB_* environment variables."""

    def test_defaults_under_home(self, isolated_home):
        """Log and database paths default to the home directory."""
        settings = Settings.from_env()

        assert settings.home == isolated_home
        assert settings.log_dir == isolated_home / 'logs'
        assert settings.db_path == isolated_home / 'results.db'
        assert settings.jobs == 1

    def test_explicit_paths(self, tmp_path, monkeypatch):
        """Explicit log and database paths win."""
        monkeypatch.setenv('GIALAB_LOG_DIR', str(tmp_path / 'l'))
        monkeypatch.setenv('GIALAB_DB_PATH', str(tmp_path / 'r.db'))

        settings = Settings.from_env()

        assert settings.log_dir == tmp_path / 'l'
        assert settings.db_path == tmp_path / 'r.db'

    @pytest.mark.parametrize("value,jobs", [('4', 4), ('0', 1), ('-2', 1), ('many', 1)])
    def test_jobs(self, monkeypatch, value, jobs):
        """Jobs are at least 1 and fall back to 1 when unparsable."""
        monkeypatch.setenv('GIALAB_JOBS', value)

        assert Settings.from_env().jobs == jobs

    @pytest.mark.parametrize("value,debug", [('1', True), ('yes', True), ('0', False), ('', False)])
    def test_debug_flag(self, monkeypatch, value, debug):
        """Common truthy spellings enable debug."""
        monkeypatch.setenv('GIALAB_DEBUG', value)

        assert Settings.from_env().debug is debug

    def test_dotenv_file(self, tmp_path, monkeypatch):
        """A .env file fills variables not already set."""
        monkeypatch.setenv('GIALAB_JOBS', 'unset')
        monkeypatch.delenv('GIALAB_JOBS')  # restored to absent afterwards
        env_file = tmp_path / '.env'
        env_file.write_text('GIALAB_JOBS=3\n')

        assert Settings.from_env(env_file).jobs == 3

    def test_cached_until_reset(self, monkeypatch):
        """get_settings caches; reset_settings re-reads the environment."""
        first = get_settings()
        monkeypatch.setenv('GIALAB_JOBS', '6')

        assert get_settings() is first
        reset_settings()
        assert get_settings().jobs == 6
