"""Tests for experiment and attack configuration models."""
import pytest

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models import (SETTINGS_ORDER, AttackConfig, BNMode, DatasetSource, ExperimentConfig,
                                 SearchSpace, SharingSetting, StatSource)
from tests.factories import ExperimentConfigFactory


class TestSharingSetting:
    """The three sharing settings."""

    @pytest.mark.parametrize("setting,mode,shared,source", [
        (SharingSetting.INFERENCE, BNMode.INFERENCE, True, StatSource.FIXED),
        (SharingSetting.STATS_SHARED, BNMode.TRAINING, True, StatSource.RECOVERED),
        (SharingSetting.NO_STATS, BNMode.TRAINING, False, StatSource.PROXY),
    ])
    def test_policy_and_source(self, setting, mode, shared, source):
        """Each setting fixes the client policy and the attacker's statistic source."""
        assert setting.policy.mode == mode
        assert setting.policy.share_running_stats == shared
        assert setting.stat_source == source

    def test_matrix_order(self):
        """Columns run from the hardest setting to the easiest."""
        assert SETTINGS_ORDER == (SharingSetting.NO_STATS, SharingSetting.STATS_SHARED, SharingSetting.INFERENCE)


class TestExperimentConfig:
    """Experiment configuration."""

    def test_stat_source_override(self):
        """An explicit source wins over the setting's default."""
        config = ExperimentConfigFactory(setting='no_stats', stat_source='none')

        assert config.resolved_stat_source == StatSource.NONE

    def test_to_dict_is_json_friendly(self):
        """Enums, paths, tuples and the dataset are flattened."""
        data = ExperimentConfigFactory().to_dict()

        assert data['setting'] == 'inference'
        assert data['out_dir'] == 'runs'
        assert data['sizes'] == [1, 2]
        assert data['dataset']['kind'] == 'synthetic'
        assert set(data) == set(ExperimentConfig.field_names())

    @pytest.mark.parametrize("changes", [{'batch_size': 0}, {'n_trials': 0}, {'aux_batches': 0},
                                         {'sizes': ()}, {'jobs': 0}, {'pretrain_steps': -1},
                                         {'search_lambda_bn': (1.0,)}, {'search_lambda_tv': (1.0, 0.1)},
                                         {'search_smoothing': ()}, {'batch_pool': 0},
                                         {'dataset': DatasetSource(kind='image_dir')}])
    def test_invalid(self, changes):
        """Invalid values are refused by validate."""
        with pytest.raises(ConfigError):
            ExperimentConfigFactory(**changes).validate()

    def test_search_space_follows_the_search_keys(self):
        """The search_* keys and batch_pool define the searched ranges."""
        config = ExperimentConfigFactory(search_lambda_bn=(1e-3, 1e-1), search_grad_compare=(0.5,),
                                         search_smoothing=(False,), batch_pool=2)

        space = config.search_space()

        assert space.lambda_bn == (1e-3, 1e-1)
        assert space.lambda_tv == (1e-6, 1.0)
        assert space.grad_compare == (0.5,)
        assert space.smoothing == (False,)
        assert space.batch_pool == 2

    def test_default_search_space(self):
        """Without search keys the default ranges are searched."""
        assert ExperimentConfig().search_space() == SearchSpace()


class TestAttackConfig:
    """Attack settings."""

    def test_grad_compare_label(self):
        """Compared fraction is echoed as a label."""
        assert AttackConfig().grad_compare == 'all_weights'
        assert AttackConfig(top_fraction=0.25).grad_compare == 'top_fraction(0.25)'

    @pytest.mark.parametrize("changes", [{'lambda_tv': -1.0}, {'learning_rate': 0.0}, {'iterations': 0},
                                         {'top_fraction': 0.0}, {'restarts': 0}, {'smoothing_interval': 0},
                                         {'stat_source': 'proxy'}])
    def test_invalid(self, changes):
        """Invalid attack settings are refused."""
        with pytest.raises(ConfigError):
            AttackConfig(**changes).validate()

    def test_to_dict_counts_aux_batches(self):
        """The echo reports how many auxiliary batches there were, not their data."""
        data = AttackConfig(stat_source='fixed').to_dict()

        assert data['stat_source'] == 'fixed'
        assert data['aux_batches'] == 0
        assert data['normalization'] is None
