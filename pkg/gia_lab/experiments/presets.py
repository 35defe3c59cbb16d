"""Named model presets of the settings matrix."""
from typing import Any, Dict, Tuple

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models import BlockStyle, ModelConfig

PRESET_BASE_CHANNELS = 8

PRESETS: Dict[str, Dict[str, Any]] = {
    'preact_wide': dict(block_style=BlockStyle.PRE_ACTIVATION, depth=2, width_multiplier=2,
                        skip_connections=True),
    'postact_wide': dict(block_style=BlockStyle.POST_ACTIVATION, depth=2, width_multiplier=2,
                         skip_connections=True),
    'postact_standard': dict(block_style=BlockStyle.POST_ACTIVATION, depth=2, width_multiplier=1,
                             skip_connections=True),
    # robust negative control: deep, narrow, no residual path
    'deep_narrow_noskip': dict(block_style=BlockStyle.POST_ACTIVATION, depth=8, width_multiplier=1,
                               skip_connections=False),
}


def preset_names() -> Tuple[str, ...]:
    return tuple(PRESETS)


def preset_config(name: str, input_shape: Tuple[int, int, int], num_classes: int) -> ModelConfig:
    """The ModelConfig a preset stands for, sized to the dataset."""
    try:
        knobs = PRESETS[name]
    except KeyError:
        raise ConfigError(f"Unknown preset '{name}'; choose from {', '.join(PRESETS)}") from None
    return ModelConfig(input_shape=tuple(input_shape), num_classes=num_classes,
                       base_channels=PRESET_BASE_CHANNELS, **knobs).validate()
