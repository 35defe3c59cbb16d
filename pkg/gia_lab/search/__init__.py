"""Random search over attack hyperparameters and candidate batches."""
from .harness import (AttackTarget, AttackTrial, TrialOutcome, TrialSpec, execute_trials, run_search,
                      select_best, trial_attack_config)
from .pruning import MedianStoppingRule
from .recorder import JsonlTrialWriter, read_trials
from .sampler import derive_seed, log_uniform, sample_trial, trial_seed

__all__ = [
    'AttackTarget', 'AttackTrial', 'TrialOutcome', 'TrialSpec', 'execute_trials', 'run_search',
    'select_best', 'trial_attack_config', 'MedianStoppingRule', 'JsonlTrialWriter', 'read_trials',
    'derive_seed', 'log_uniform', 'sample_trial', 'trial_seed',
]
