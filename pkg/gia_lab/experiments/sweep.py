"""Batch-size sweep of the no-stats attack."""
import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import matplotlib
matplotlib.use('Agg')
from matplotlib.figure import Figure  # noqa: E402

from gia_lab.attack import run_attack, save_attack_result  # noqa: E402
from gia_lab.core.exceptions import DatasetError  # noqa: E402
from gia_lab.core.models import ExperimentConfig, SharingSetting  # noqa: E402
from gia_lab.datasets import Dataset, load_dataset  # noqa: E402
from gia_lab.experiments.reports import write_json  # noqa: E402
from gia_lab.experiments.scenario import attack_config, build_scenario, scenario_seeds  # noqa: E402
from gia_lab.metrics import random_baseline_ssim, score_reconstruction, to_pixels  # noqa: E402
from gia_lab.search import derive_seed  # noqa: E402
from gia_lab.utils.debug_logger import LogManager  # noqa: E402

logger = LogManager.get_logger(__name__)

BASELINE_COUNT = 20
PLOT_HASH_SALT = 'gia-lab'


def run_size(config: ExperimentConfig, dataset: Dataset, size: int, out_dir: Path) -> Tuple[Dict[str, Any], float]:
    """Attack one batch of ``size`` images; returns the sweep point and its wall time."""
    size_config = dataclasses.replace(config, batch_size=size, setting=SharingSetting.NO_STATS, stat_source=None)
    started = time.perf_counter()
    scenario = build_scenario(size_config, pool=1, dataset=dataset)
    target = scenario.targets[0]
    normalization = dataset.normalization
    acfg = attack_config(size_config, normalization, scenario.aux_batches,
                         init_seed=derive_seed(config.seed, 'sweep', size))
    result = run_attack(target.update, scenario.model, scenario.params, acfg, truth=target.truth)
    mean, assignment, per_image = score_reconstruction(result.reconstruction, target.truth.images, normalization)
    result.ssim_per_image = per_image
    wall_time = time.perf_counter() - started

    baseline = random_baseline_ssim(to_pixels(target.truth.images, normalization), BASELINE_COUNT,
                                    seed=derive_seed(config.seed, 'baseline', size))
    point = {
        'batch_size': size,
        'ssim': mean,
        'ssim_per_image': per_image,
        'baseline_ssim': baseline,
        'final_discrepancy': result.final_discrepancy,
        'seeds': {**scenario_seeds(size_config), 'attack': acfg.init_seed},
    }
    echo = {'experiment': size_config.to_dict(), 'attack': acfg.to_dict(), 'ssim': mean}
    save_attack_result(result, out_dir / f'B{size}', echo, normalization, target.truth, assignment)
    logger.info("Sweep point finished", extra={'context': {'batch_size': size, 'ssim': mean,
                                                           'baseline_ssim': baseline, 'wall_time': wall_time}})
    return point, wall_time


def plot_sweep(points: Sequence[Dict[str, Any]], path: Path) -> Path:
    """SSIM against batch size, with the random baseline for reference."""
    sizes = [p['batch_size'] for p in points]
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(sizes, [p['ssim'] for p in points], marker='o', label='reconstruction')
    ax.plot(sizes, [p['baseline_ssim'] for p in points], linestyle='--', color='grey', label='random baseline')
    ax.set_xscale('log', base=2)
    ax.set_xticks(sizes)
    ax.set_xticklabels([str(s) for s in sizes])
    ax.set_xlabel('batch size')
    ax.set_ylabel('SSIM')
    ax.legend()
    fig.tight_layout()
    with matplotlib.rc_context({'svg.hashsalt': PLOT_HASH_SALT}):
        fig.savefig(path, format='svg', metadata={'Date': None})
    return path


def cmd_batchsweep(config: ExperimentConfig) -> Tuple[Path, Path]:
    """
    Run the no-stats attack at every size in ``config.sizes``.

    Writes sweep.json (one point per size, in requested order) and sweep.svg.
    Wall times go to timings.json so the report itself stays byte-stable.

    Raises:
        DatasetError: If a size exceeds the number of available images
    """
    config.validate()
    dataset = load_dataset(config.dataset, derive_seed(config.seed, 'data'))
    too_large = [s for s in config.sizes if s > len(dataset)]
    if too_large:
        raise DatasetError(f"Batch sizes {too_large} exceed the {len(dataset)} available images")

    out_dir = Path(config.out_dir) / 'sweep'
    out_dir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        results = list(executor.map(lambda s: run_size(config, dataset, s, out_dir), config.sizes))
    points: List[Dict[str, Any]] = [point for point, _ in results]

    json_path = write_json(out_dir / 'sweep.json', {'experiment': config.to_dict(), 'points': points})
    write_json(out_dir / 'timings.json', {str(p['batch_size']): t for p, t in results})
    svg_path = plot_sweep(points, out_dir / 'sweep.svg')
    logger.info("Sweep written", extra={'context': {'json': str(json_path), 'svg': str(svg_path),
                                                    'sizes': list(config.sizes)}})
    return json_path, svg_path
