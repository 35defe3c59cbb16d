"""Gradient inversion attacks, regularizers and statistic recovery."""
from .statistics import probe_proxy_stats, recover_batch_stats, recover_update_stats
from .regularizers import cosine_discrepancy, median_smooth, r_bn, top_change_mask, total_variation
from .optimizer import Adam, decayed_learning_rate
from .engine import AttackObjective, ProgressCallback, build_objective, resolve_targets, run_attack
from .persistence import save_attack_result

__all__ = [
    'probe_proxy_stats', 'recover_batch_stats', 'recover_update_stats',
    'cosine_discrepancy', 'median_smooth', 'r_bn', 'top_change_mask', 'total_variation',
    'Adam', 'decayed_learning_rate',
    'AttackObjective', 'ProgressCallback', 'build_objective', 'resolve_targets', 'run_attack',
    'save_attack_result',
]
