"""Joint batch and hyperparameter search over attack trials."""
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from gia_lab.attack.engine import run_attack
from gia_lab.core.events import SearchEvent, SearchEventPublisher, SearchEventType
from gia_lab.core.exceptions import AttackDivergedError, ConfigError, NonFiniteError, SearchFailedError
from gia_lab.core.models import AttackConfig, Batch, ClientUpdate, SearchSpace, TrialRecord, TrialStatus
from gia_lab.metrics import score_reconstruction
from gia_lab.nn.model import Model, ModelParams
from gia_lab.search.pruning import MedianStoppingRule
from gia_lab.search.sampler import sample_trial, trial_seed
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


@dataclass(frozen=True)
class TrialSpec:
    """Everything a trial function needs to run one trial."""
    trial_index: int
    seed: int
    sampled: Dict[str, Any]
    batch_id: int


@dataclass(frozen=True)
class TrialOutcome:
    ssim: Optional[float]
    final_discrepancy: float
    pruned: bool = False


TrialFunction = Callable[[TrialSpec], TrialOutcome]


@dataclass(eq=False)
class AttackTarget:
    """One candidate batch: the update it produced and its ground truth for scoring."""
    update: ClientUpdate
    truth: Batch


def trial_attack_config(base_config: AttackConfig, sampled: Dict[str, Any], seed: int) -> AttackConfig:
    """The attack settings a trial runs with."""
    return replace(base_config, lambda_bn=sampled['lambda_bn'], lambda_tv=sampled['lambda_tv'],
                   learning_rate=sampled['learning_rate'], top_fraction=sampled['top_fraction'],
                   smoothing=sampled['smoothing'], init_seed=seed)


class AttackTrial:
    """Trial function running the attack against the sampled candidate batch."""

    def __init__(self, targets: Sequence[AttackTarget], model: Model, params: ModelParams,
                 base_config: AttackConfig, pruner: Optional[MedianStoppingRule] = None):
        self.targets = list(targets)
        self.model = model
        self.params = params
        self.base_config = base_config
        self.pruner = pruner

    def __call__(self, spec: TrialSpec) -> TrialOutcome:
        target = self.targets[spec.batch_id]
        config = trial_attack_config(self.base_config, spec.sampled, spec.seed)
        progress = self.pruner.callback(spec.trial_index) if self.pruner is not None else None
        result = run_attack(target.update, self.model, self.params, config, progress, truth=target.truth)
        if result.pruned:
            return TrialOutcome(ssim=None, final_discrepancy=result.final_discrepancy, pruned=True)
        score, _, _ = score_reconstruction(result.reconstruction, target.truth.images, config.normalization)
        return TrialOutcome(ssim=score, final_discrepancy=result.final_discrepancy)


def _run_trial(space: SearchSpace, master_seed: int, trial_index: int, trial_fn: TrialFunction) -> TrialRecord:
    seed = trial_seed(master_seed, trial_index)
    sampled, batch_id = sample_trial(space, np.random.default_rng(seed))
    spec = TrialSpec(trial_index=trial_index, seed=seed, sampled=sampled, batch_id=batch_id)
    started = time.perf_counter()
    try:
        outcome = trial_fn(spec)
    except (AttackDivergedError, NonFiniteError) as e:
        return TrialRecord(trial_index=trial_index, config=sampled, batch_id=batch_id, seed=seed,
                           status=TrialStatus.DIVERGED, error=str(e),
                           wall_time=time.perf_counter() - started)
    return TrialRecord(
        trial_index=trial_index, config=sampled, batch_id=batch_id, seed=seed,
        ssim=outcome.ssim, final_discrepancy=outcome.final_discrepancy,
        status=TrialStatus.PRUNED if outcome.pruned else TrialStatus.COMPLETED,
        wall_time=time.perf_counter() - started,
    )


def select_best(records: Sequence[TrialRecord]) -> TrialRecord:
    """Highest SSIM among completed trials; ties go to the lower trial index."""
    best = None
    for record in sorted(records, key=lambda r: r.trial_index):
        if record.status != TrialStatus.COMPLETED or record.ssim is None:
            continue
        if best is None or record.ssim > best.ssim:
            best = record
    if best is None:
        raise SearchFailedError("No trial completed; every trial diverged or was pruned", list(records))
    return best


def execute_trials(space: SearchSpace, n_trials: int, master_seed: int, trial_fn: TrialFunction,
                   jobs: int = 1, search_id: Optional[str] = None,
                   metadata: Optional[Dict[str, Any]] = None) -> Tuple[TrialRecord, List[TrialRecord]]:
    """
    Run ``n_trials`` trials and pick the best.

    Records come back, and are published, in trial-index order whatever the
    completion order, so serial and parallel runs give equal records.
    """
    space.validate()
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}")
    search_id = search_id or uuid.uuid4().hex
    context = {'search_id': search_id, 'n_trials': n_trials, 'master_seed': master_seed, 'jobs': jobs}
    logger.info("Search started", extra={'context': context})
    SearchEventPublisher.publish_search_event(
        SearchEvent(SearchEventType.STARTED, search_id, metadata={**context, **(metadata or {})}))

    records: List[TrialRecord] = []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor, \
            tqdm(total=n_trials, desc='trials', unit='trial', disable=None, leave=False) as bar:
        for record in executor.map(lambda i: _run_trial(space, master_seed, i, trial_fn), range(n_trials)):
            records.append(record)
            bar.update(1)
            event_type = SearchEventType.TRIAL_DIVERGED if record.diverged else SearchEventType.TRIAL_COMPLETED
            SearchEventPublisher.publish_search_event(SearchEvent(event_type, search_id, record=record))
            logger.info(
                "Trial finished",
                extra={'context': {'search_id': search_id, 'trial': record.trial_index,
                                   'status': record.status.value, 'ssim': record.ssim,
                                   'batch_id': record.batch_id, 'seed': record.seed}}
            )

    try:
        best = select_best(records)
    except SearchFailedError:
        SearchEventPublisher.publish_search_event(
            SearchEvent(SearchEventType.COMPLETED, search_id, records=records, metadata={'best_trial': None}))
        raise
    SearchEventPublisher.publish_search_event(
        SearchEvent(SearchEventType.COMPLETED, search_id, records=records,
                    metadata={'best_trial': best.trial_index, 'best_ssim': best.ssim}))
    logger.info("Search completed",
                extra={'context': {'search_id': search_id, 'best_trial': best.trial_index, 'best_ssim': best.ssim}})
    return best, records


def run_search(space: SearchSpace, n_trials: int, targets: Sequence[AttackTarget], model: Model,
               params: ModelParams, base_config: AttackConfig, master_seed: int, jobs: int = 1,
               prune: bool = False, search_id: Optional[str] = None,
               metadata: Optional[Dict[str, Any]] = None) -> Tuple[TrialRecord, List[TrialRecord]]:
    """
    Search hyperparameters and candidate batches for the most successful attack.

    Args:
        space: Sampling ranges; ``batch_pool`` must equal the number of targets
        n_trials: Number of trials
        targets: Candidate batches with their updates
        model: Model template
        params: Parameters the clients used
        base_config: Attack settings not sampled by the search
        master_seed: Seed from which every trial seed is derived
        jobs: Worker threads; forced to 1 when pruning
        prune: Enable the median-stopping rule
        search_id: Identifier used in events and records
        metadata: Extra fields for the start event

    Returns:
        The best record and all records in trial order
    """
    if len(targets) != space.batch_pool:
        raise ConfigError(f"Search space expects {space.batch_pool} candidate batches, got {len(targets)}")
    pruner = MedianStoppingRule(base_config.iterations) if prune else None
    if pruner is not None and jobs > 1:
        logger.info("Pruning enabled; running trials serially", extra={'context': {'requested_jobs': jobs}})
        jobs = 1
    trial_fn = AttackTrial(targets, model, params, base_config, pruner)
    return execute_trials(space, n_trials, master_seed, trial_fn, jobs=jobs, search_id=search_id,
                          metadata=metadata)
