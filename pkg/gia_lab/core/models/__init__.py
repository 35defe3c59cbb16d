"""Domain models."""
from .model import Batch, BlockStyle, BNMode, LayerStats, ModelConfig
from .dataset import DatasetKind, DatasetSource, Normalization
from .federated import ClientUpdate, SharingPolicy, StatsSnapshot
from .attack import AttackConfig, AttackResult, CompareGranularity, ProxySelection, StatSource
from .search import SearchSpace, TrialRecord, TrialStatus
from .experiment import SETTINGS_ORDER, ExperimentConfig, SharingSetting

__all__ = [
    'Batch', 'BlockStyle', 'BNMode', 'LayerStats', 'ModelConfig',
    'DatasetKind', 'DatasetSource', 'Normalization',
    'ClientUpdate', 'SharingPolicy', 'StatsSnapshot',
    'AttackConfig', 'AttackResult', 'CompareGranularity', 'ProxySelection', 'StatSource',
    'SearchSpace', 'TrialRecord', 'TrialStatus',
    'SETTINGS_ORDER', 'ExperimentConfig', 'SharingSetting',
]
