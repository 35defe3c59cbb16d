"""Client, attack and search commands."""
import uuid
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from gia_lab.attack import run_attack, save_attack_result
from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models import (AttackResult, Batch, BNMode, ClientUpdate, DatasetSource, ExperimentConfig,
                                 ModelConfig, Normalization, SearchSpace, StatSource, TrialRecord)
from gia_lab.data import initialize_database
from gia_lab.data.repositories import SearchRepository
from gia_lab.datasets import load_dataset
from gia_lab.experiments.reports import read_json, write_json
from gia_lab.experiments.scenario import Scenario, attack_config, build_scenario, scenario_seeds
from gia_lab.federated import read_params, read_truth, read_update, write_params, write_truth, write_update
from gia_lab.metrics import random_baseline_ssim, score_reconstruction, to_pixels
from gia_lab.nn import Model
from gia_lab.search import JsonlTrialWriter, derive_seed, run_search, trial_attack_config
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

UPDATE_FILE = 'update.giau'
TRUTH_FILE = 'truth.giau'
PARAMS_FILE = 'model.giau'
MANIFEST_FILE = 'client.json'
BASELINE_COUNT = 20


@dataclass
class SearchOutcome:
    best: TrialRecord
    records: List[TrialRecord]
    scenario: Scenario
    baseline_ssim: float
    report_path: Path


def infer_stat_source(update: ClientUpdate) -> StatSource:
    """The strongest statistic source an update allows."""
    if update.mode == BNMode.INFERENCE:
        return StatSource.FIXED
    return StatSource.RECOVERED if update.shares_running_stats else StatSource.PROXY


@contextmanager
def recording(search_id: str, jsonl_path: Path) -> Iterator[JsonlTrialWriter]:
    """Stream one search's trials to JSON-lines and, when available, the results database."""
    jsonl_path = Path(jsonl_path)
    jsonl_path.unlink(missing_ok=True)
    database = initialize_database()
    repository = SearchRepository(database).attach(search_id) if database is not None else None
    try:
        with JsonlTrialWriter(jsonl_path, search_id=search_id, include_timing=True) as writer:
            yield writer
    finally:
        if repository is not None:
            repository.detach()


def cmd_client(config: ExperimentConfig) -> Path:
    """
    Run one client step and write the update, the ground truth and the model.

    The manifest (client.json) records everything needed to replay the step.
    """
    scenario = build_scenario(config, pool=1)
    target = scenario.targets[0]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_update(target.update, out / UPDATE_FILE)
    write_truth(target.truth, out / TRUTH_FILE)
    write_params(scenario.params, out / PARAMS_FILE)
    manifest = {
        'experiment': config.to_dict(),
        'model': scenario.model_config.to_dict(),
        'normalization': scenario.dataset.normalization.to_dict(),
        'seeds': scenario.seeds(),
        'files': {'update': UPDATE_FILE, 'truth': TRUTH_FILE, 'params': PARAMS_FILE},
        'update': {
            'mode': target.update.mode.value,
            'share_running_stats': target.update.shares_running_stats,
            'batch_size': target.update.batch_size,
            'labels': list(target.update.labels),
        },
    }
    path = write_json(out / MANIFEST_FILE, manifest)
    logger.info("Client update written", extra={'context': {'out_dir': str(out), 'preset': config.preset,
                                                            'setting': config.setting.value}})
    return path


def _load_client(update_path: Path) -> Tuple[Dict[str, Any], Model, Any, Normalization]:
    manifest_path = update_path.parent / MANIFEST_FILE
    if not manifest_path.is_file():
        raise ConfigError(f"No {MANIFEST_FILE} next to {update_path}; run the client command first")
    manifest = read_json(manifest_path)
    model = Model(ModelConfig(**manifest['model']))
    params = read_params(update_path.parent / manifest['files']['params'], order=list(model.parameter_shapes))
    normalization = Normalization(**manifest['normalization'])
    return manifest, model, params, normalization


def cmd_attack(config: ExperimentConfig, update_path: Path,
               truth_path: Optional[Path] = None) -> Tuple[Path, AttackResult]:
    """
    Attack a stored update and write the reconstruction bundle.

    Without an explicit ``stat_source`` the strongest source the update
    allows is used; an explicit source the update cannot support is refused.
    """
    update_path = Path(update_path)
    if not update_path.is_file():
        raise ConfigError(f"Update file not found: {update_path}")
    update = read_update(update_path)
    manifest, model, params, normalization = _load_client(update_path)
    stat_source = config.stat_source if config.stat_source is not None else infer_stat_source(update)

    aux: List[Batch] = []
    if stat_source == StatSource.PROXY:
        dataset = load_dataset(DatasetSource(**manifest['experiment']['dataset']), manifest['seeds']['data'])
        rng = np.random.default_rng(derive_seed(config.seed, 'aux', update.batch_size))
        aux = dataset.sample_batches(config.aux_batches, update.batch_size, rng)

    truth = read_truth(truth_path) if truth_path is not None else None
    acfg = attack_config(config, normalization, aux, stat_source, init_seed=derive_seed(config.seed, 'attack'))
    result = run_attack(update, model, params, acfg, truth=truth)

    echo: Dict[str, Any] = {
        'experiment': config.to_dict(),
        'attack': acfg.to_dict(),
        'client': manifest,
        'update_file': str(update_path),
        'ssim': None,
    }
    assignment = None
    if truth is not None:
        mean, assignment, per_image = score_reconstruction(result.reconstruction, truth.images, normalization)
        result.ssim_per_image = per_image
        echo['ssim'] = mean
    path = save_attack_result(result, Path(config.out_dir) / 'attack', echo, normalization, truth, assignment)
    logger.info(
        "Attack written",
        extra={'context': {'path': str(path), 'final_discrepancy': result.final_discrepancy,
                           'stat_source': stat_source.value, 'ssim': echo['ssim']}}
    )
    return path, result


def search_scenario(scenario: Scenario, space: SearchSpace, out_dir: Path, master_seed: int,
                    jobs: int = 1, save_best: bool = True) -> SearchOutcome:
    """Search one scenario, stream its trials, and write search.json (plus the best reconstruction)."""
    config = scenario.config
    base = attack_config(config, scenario.dataset.normalization, scenario.aux_batches)
    search_id = uuid.uuid4().hex
    metadata = {'preset': config.preset, 'setting': config.setting.value, 'out_dir': str(out_dir)}
    with recording(search_id, Path(out_dir) / 'trials.jsonl'):
        best, records = run_search(space, config.n_trials, scenario.targets, scenario.model, scenario.params,
                                   base, master_seed, jobs=jobs, prune=config.prune, search_id=search_id,
                                   metadata=metadata)

    target = scenario.targets[best.batch_id]
    normalization = scenario.dataset.normalization
    baseline = random_baseline_ssim(to_pixels(target.truth.images, normalization), BASELINE_COUNT,
                                    seed=derive_seed(master_seed, 'baseline'))
    report = {
        'experiment': config.to_dict(),
        'space': asdict(space),
        'seeds': {**scenario.seeds(), 'search': master_seed},
        'attack': base.to_dict(),
        'best': best.to_dict(include_timing=False),
        'records': [r.to_dict(include_timing=False) for r in records],
        'baseline_ssim': baseline,
    }
    report_path = write_json(Path(out_dir) / 'search.json', report)

    if save_best:
        replay = trial_attack_config(base, best.config, best.seed)
        result = run_attack(target.update, scenario.model, scenario.params, replay, truth=target.truth)
        mean, assignment, per_image = score_reconstruction(result.reconstruction, target.truth.images,
                                                           normalization)
        result.ssim_per_image = per_image
        echo = {'experiment': config.to_dict(), 'attack': replay.to_dict(), 'trial': best.to_dict(False),
                'ssim': mean}
        save_attack_result(result, Path(out_dir) / 'best', echo, normalization, target.truth, assignment)
    return SearchOutcome(best, records, scenario, baseline, report_path)


def cmd_search(config: ExperimentConfig) -> SearchOutcome:
    """Search hyperparameters and candidate batches for one preset and setting."""
    space = config.search_space()
    scenario = build_scenario(config, pool=space.batch_pool)
    outcome = search_scenario(scenario, space, Path(config.out_dir) / 'search',
                              derive_seed(config.seed, 'search'), jobs=config.jobs)
    logger.info(
        "Search written",
        extra={'context': {'path': str(outcome.report_path), 'best_ssim': outcome.best.ssim,
                           'baseline_ssim': outcome.baseline_ssim, 'seeds': scenario_seeds(config)}}
    )
    return outcome
