"""Client scenarios shared by the experiment commands."""
import dataclasses
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from gia_lab.core.models import (AttackConfig, Batch, ExperimentConfig, ModelConfig, Normalization, SharingSetting,
                                 StatSource)
from gia_lab.datasets import Dataset, load_dataset
from gia_lab.experiments.presets import preset_config
from gia_lab.federated import client_step
from gia_lab.nn import Model, ModelParams, build_model, sgd_pretrain
from gia_lab.search import AttackTarget, derive_seed
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

PRETRAIN_BATCHES = 4


@dataclass(eq=False)
class Scenario:
    """A model, its parameters and the client updates an attacker observes."""
    config: ExperimentConfig
    dataset: Dataset
    model: Model
    params: ModelParams
    targets: List[AttackTarget]
    aux_batches: List[Batch]

    @property
    def model_config(self) -> ModelConfig:
        return self.model.config

    def seeds(self) -> dict:
        return scenario_seeds(self.config)


def scenario_seeds(config: ExperimentConfig) -> dict:
    """Every seed a scenario derives from the master seed."""
    return {
        'master': config.seed,
        'data': derive_seed(config.seed, 'data'),
        'model': derive_seed(config.seed, 'model', config.preset),
        'batches': derive_seed(config.seed, 'batches', config.batch_size),
        'aux': derive_seed(config.seed, 'aux', config.batch_size),
        'pretrain': derive_seed(config.seed, 'pretrain'),
    }


def load_model(config: ExperimentConfig, dataset: Dataset) -> Tuple[Model, ModelParams]:
    """Preset model at its seeded initialization, optionally pretrained."""
    seeds = scenario_seeds(config)
    model_config = preset_config(config.preset, dataset.image_shape, dataset.num_classes)
    model, params = build_model(model_config, seeds['model'])
    if config.pretrain_steps:
        rng = np.random.default_rng(seeds['pretrain'])
        batches = dataset.sample_batches(PRETRAIN_BATCHES, config.batch_size, rng)
        params = sgd_pretrain(model, params, batches, config.pretrain_steps, config.pretrain_lr)
    return model, params


def sample_aux_batches(config: ExperimentConfig, dataset: Dataset) -> List[Batch]:
    rng = np.random.default_rng(scenario_seeds(config)['aux'])
    return dataset.sample_batches(config.aux_batches, config.batch_size, rng)


def build_scenario(config: ExperimentConfig, pool: int = 1, dataset: Optional[Dataset] = None) -> Scenario:
    """
    Load data and model, then run one client step per candidate batch.

    Args:
        config: Experiment settings
        pool: Number of candidate batches
        dataset: Already loaded dataset to reuse

    Returns:
        The scenario; targets are in candidate order
    """
    config.validate()
    seeds = scenario_seeds(config)
    if dataset is None:
        dataset = load_dataset(config.dataset, seeds['data'])
    model, params = load_model(config, dataset)

    rng = np.random.default_rng(seeds['batches'])
    batches = dataset.sample_batches(pool, config.batch_size, rng)
    policy = config.setting.policy
    targets = [AttackTarget(update=client_step(model, params, batch, policy), truth=batch) for batch in batches]
    aux = sample_aux_batches(config, dataset) if config.resolved_stat_source == StatSource.PROXY else []

    logger.info(
        "Scenario ready",
        extra={'context': {'preset': config.preset, 'setting': config.setting.value,
                           'batch_size': config.batch_size, 'pool': pool, 'seed': config.seed}}
    )
    return Scenario(config=config, dataset=dataset, model=model, params=params, targets=targets, aux_batches=aux)


def attack_config(config: ExperimentConfig, normalization: Normalization, aux_batches: List[Batch],
                  stat_source: Optional[StatSource] = None, init_seed: int = 0) -> AttackConfig:
    """Attack settings of a run, bound to the dataset normalization."""
    return AttackConfig(
        lambda_tv=config.lambda_tv,
        lambda_bn=config.lambda_bn,
        learning_rate=config.learning_rate,
        iterations=config.iterations,
        top_fraction=config.top_fraction,
        smoothing=config.smoothing,
        stat_source=stat_source if stat_source is not None else config.resolved_stat_source,
        init_seed=init_seed,
        aux_batches=tuple(aux_batches),
        boxed=config.boxed,
        lr_decay=config.lr_decay,
        restarts=config.restarts,
        normalization=normalization,
    ).validate()


def with_cell(config: ExperimentConfig, preset: str, setting: SharingSetting, seed: int) -> ExperimentConfig:
    """Config of one matrix cell; the statistic source follows the setting."""
    return dataclasses.replace(config, preset=preset, setting=setting, seed=seed, stat_source=None)
