"""Experiment commands: client, attack, search, matrix, batch sweep and self-test."""
from .config import apply_overrides, load_experiment_config, parse_overrides, parse_values
from .presets import PRESETS, preset_config, preset_names
from .scenario import Scenario, attack_config, build_scenario, scenario_seeds
from .commands import SearchOutcome, cmd_attack, cmd_client, cmd_search, infer_stat_source, search_scenario
from .matrix import cmd_matrix, run_cell
from .sweep import cmd_batchsweep, plot_sweep, run_size
from .selftest import GateResult, cmd_selftest, run_selftest

__all__ = [
    'apply_overrides', 'load_experiment_config', 'parse_overrides', 'parse_values',
    'PRESETS', 'preset_config', 'preset_names',
    'Scenario', 'attack_config', 'build_scenario', 'scenario_seeds',
    'SearchOutcome', 'cmd_attack', 'cmd_client', 'cmd_search', 'infer_stat_source', 'search_scenario',
    'cmd_matrix', 'run_cell',
    'cmd_batchsweep', 'plot_sweep', 'run_size',
    'GateResult', 'cmd_selftest', 'run_selftest',
]
