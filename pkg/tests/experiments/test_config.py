"""Tests for experiment configuration files and overrides."""
from pathlib import Path

import pytest

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models import DatasetKind, ExperimentConfig, SharingSetting, StatSource
from gia_lab.experiments import apply_overrides, load_experiment_config, parse_overrides, parse_values
from gia_lab.experiments.config import config_keys


class TestParseValues:
    """Typed coercion of flat string values."""

    def test_types(self):
        """Ints, floats, bools, enums, tuples and optionals are coerced."""
        kwargs = parse_values({'batch_size': '3', 'lambda_tv': '1e-4', 'smoothing': 'yes', 'setting': 'no_stats',
                               'sizes': '1, 2,4', 'top_fraction': 'all', 'seed': '0x10', 'stat_source': 'proxy'})

        assert kwargs == {'batch_size': 3, 'lambda_tv': 1e-4, 'smoothing': True,
                          'setting': SharingSetting.NO_STATS, 'sizes': (1, 2, 4), 'top_fraction': None,
                          'seed': 16, 'stat_source': StatSource.PROXY}

    def test_dataset_keys_build_a_source(self, tmp_path):
        """Flat dataset keys become the nested dataset source."""
        kwargs = parse_values({'dataset': 'image_dir', 'dataset_path': str(tmp_path), 'image_size': '16'})

        source = kwargs['dataset']
        assert source.kind == DatasetKind.IMAGE_DIR
        assert source.path == tmp_path
        assert source.image_size == 16

    def test_unknown_key(self):
        """Typos are reported, not ignored."""
        with pytest.raises(ConfigError, match="batchsize"):
            parse_values({'batchsize': '3'})

    def test_missing_value(self):
        """A key without a value is an error."""
        with pytest.raises(ConfigError):
            parse_values({'iterations': None})

    @pytest.mark.parametrize("key,raw", [('iterations', 'many'), ('smoothing', 'maybe'), ('setting', 'open')])
    def test_bad_values(self, key, raw):
        """Values that do not parse are configuration errors."""
        with pytest.raises(ConfigError, match=key):
            parse_values({key: raw})

    def test_every_field_is_a_key(self):
        """Every config field except the nested dataset is settable."""
        keys = set(config_keys())

        assert set(ExperimentConfig.field_names()) - {'dataset'} <= keys
        assert {'dataset', 'dataset_path', 'labels_file', 'dataset_count', 'image_size'} <= keys


class TestLoadExperimentConfig:
    """Configuration files and overrides."""

    def test_defaults(self):
        """Without a file the defaults validate."""
        config = load_experiment_config()

        assert config.preset == 'postact_standard'
        assert config.out_dir == Path('runs')

    def test_file_then_overrides(self, tmp_path):
        """File values replace defaults and overrides replace file values."""
        path = tmp_path / 'exp.env'
        path.write_text("# tiny run\nbatch_size=3\niterations=50\ndataset_count=20\n")

        config = load_experiment_config(path, {'iterations': 7, 'seed': None})

        assert (config.batch_size, config.iterations, config.seed) == (3, 7, 0)
        assert config.dataset.count == 20

    def test_missing_file(self, tmp_path):
        """A missing file is reported."""
        with pytest.raises(ConfigError, match="not found"):
            load_experiment_config(tmp_path / 'absent.env')

    def test_invalid_result(self, tmp_path):
        """Values that fail validation are configuration errors."""
        path = tmp_path / 'exp.env'
        path.write_text("batch_size=0\n")

        with pytest.raises(ConfigError):
            load_experiment_config(path)

    def test_search_space_from_a_file(self, tmp_path):
        """Search bounds and choices are read like any other key."""
        path = tmp_path / 'exp.env'
        path.write_text("search_lambda_bn=1e-3,1e-1\nsearch_grad_compare=all,0.5\nsearch_smoothing=off\n"
                        "batch_pool=3\n")

        space = load_experiment_config(path).search_space()

        assert space.lambda_bn == (1e-3, 1e-1)
        assert space.grad_compare == (None, 0.5)
        assert space.smoothing == (False,)
        assert space.batch_pool == 3

    def test_search_bounds_need_two_values(self, tmp_path):
        """A single bound is a configuration error."""
        path = tmp_path / 'exp.env'
        path.write_text("search_learning_rate=0.1\n")

        with pytest.raises(ConfigError, match="search_learning_rate"):
            load_experiment_config(path)


class TestOverrides:
    """Command-line overrides."""

    def test_parse_keeps_dataset_keys_flat(self):
        """Dataset keys stay flat so they update the existing source."""
        overrides = parse_overrides({'dataset_count': '9', 'prune': 'true'})

        assert overrides == {'dataset_count': 9, 'prune': True}

    def test_apply_updates_only_given_source_fields(self):
        """Other dataset fields are kept."""
        config = ExperimentConfig()

        updated = apply_overrides(config, {'image_size': 16, 'dataset': 'synthetic'})

        assert updated.dataset.image_size == 16
        assert updated.dataset.count == config.dataset.count

    def test_unknown_override(self):
        """Unknown override keys are refused."""
        with pytest.raises(ConfigError):
            parse_overrides({'colour': 'red'})
        with pytest.raises(ConfigError):
            apply_overrides(ExperimentConfig(), {'colour': 'red'})
