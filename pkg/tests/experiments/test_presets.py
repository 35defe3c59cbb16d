"""Tests for the model presets."""
import pytest

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models import BlockStyle
from gia_lab.experiments import PRESETS, preset_config, preset_names


class TestPresets:
    """Named model presets."""

    def test_four_presets_in_matrix_order(self):
        """The matrix rows are fixed."""
        assert preset_names() == ('preact_wide', 'postact_wide', 'postact_standard', 'deep_narrow_noskip')
        assert set(PRESETS) == set(preset_names())

    def test_sized_to_the_dataset(self):
        """Input shape and class count come from the dataset."""
        config = preset_config('preact_wide', (1, 12, 12), 3)

        assert config.block_style == BlockStyle.PRE_ACTIVATION
        assert config.width_multiplier == 2
        assert config.input_shape == (1, 12, 12)
        assert config.num_classes == 3

    def test_negative_control_has_no_skips(self):
        """The deep narrow preset drops the residual path."""
        config = preset_config('deep_narrow_noskip', (3, 8, 8), 10)

        assert not config.skip_connections
        assert config.depth > preset_config('postact_standard', (3, 8, 8), 10).depth

    def test_unknown(self):
        """Unknown names list the choices."""
        with pytest.raises(ConfigError, match="postact_standard"):
            preset_config('resnet152', (3, 8, 8), 10)
