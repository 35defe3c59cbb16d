"""Preset x sharing-setting success matrix."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Tuple

from gia_lab.core.exceptions import GiaLabError, SearchFailedError
from gia_lab.core.models import SETTINGS_ORDER, ExperimentConfig, SearchSpace, SharingSetting, TrialStatus
from gia_lab.datasets import Dataset, load_dataset
from gia_lab.experiments.commands import search_scenario
from gia_lab.experiments.reports import SUCCESS_MARGIN, is_success, matrix_markdown, write_json
from gia_lab.experiments.scenario import build_scenario, scenario_seeds, with_cell
from gia_lab.search import derive_seed
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


def _counts(records) -> Dict[str, int]:
    counts = {status.value: 0 for status in TrialStatus}
    for record in records:
        counts[record.status.value] += 1
    return counts


def run_cell(config: ExperimentConfig, dataset: Dataset, space: SearchSpace, preset: str,
             setting: SharingSetting, out_dir: Path) -> Dict[str, Any]:
    """
    Search one (preset, setting) cell.

    All settings of a preset share the model and candidate batches; only the
    client's sharing policy and the search seed differ. Failures are
    recorded in the cell instead of raised.
    """
    cell_config = with_cell(config, preset, setting, derive_seed(config.seed, 'preset', preset))
    search_seed = derive_seed(config.seed, 'cell', preset, setting.value)
    cell: Dict[str, Any] = {
        'preset': preset,
        'setting': setting.value,
        'stat_source': cell_config.resolved_stat_source.value,
        'seeds': {**scenario_seeds(cell_config), 'search': search_seed},
        'n_trials': cell_config.n_trials,
    }
    try:
        scenario = build_scenario(cell_config, pool=space.batch_pool, dataset=dataset)
        outcome = search_scenario(scenario, space, out_dir / preset / setting.value, search_seed,
                                  jobs=1, save_best=True)
    except SearchFailedError as e:
        cell.update(status='failed', error=str(e), counts=_counts(e.records), best_ssim=None, mean_ssim=None,
                    baseline_ssim=None, success=False, best_trial=None)
        return cell
    except GiaLabError as e:
        logger.error(f"Matrix cell {preset}/{setting.value} failed: {e}")
        cell.update(status='failed', error=str(e), counts=None, best_ssim=None, mean_ssim=None,
                    baseline_ssim=None, success=False, best_trial=None)
        return cell

    scores = [r.ssim for r in outcome.records if r.status == TrialStatus.COMPLETED and r.ssim is not None]
    cell.update(
        status='completed',
        error=None,
        counts=_counts(outcome.records),
        best_ssim=outcome.best.ssim,
        mean_ssim=sum(scores) / len(scores),
        baseline_ssim=outcome.baseline_ssim,
        success=is_success(outcome.best.ssim, outcome.baseline_ssim),
        best_trial=outcome.best.to_dict(include_timing=False),
    )
    logger.info(
        "Matrix cell finished",
        extra={'context': {'preset': preset, 'setting': setting.value, 'best_ssim': cell['best_ssim'],
                           'baseline_ssim': cell['baseline_ssim'], 'success': cell['success']}}
    )
    return cell


def cmd_matrix(config: ExperimentConfig) -> Tuple[Path, Path]:
    """
    Run every preset under the three sharing settings and write matrix.json and matrix.md.

    Cells run on up to ``config.jobs`` threads; the report is assembled in
    cell order and carries no timings, so equal seeds give equal bytes.
    """
    config.validate()
    space = config.search_space()
    dataset = load_dataset(config.dataset, derive_seed(config.seed, 'data'))
    out_dir = Path(config.out_dir) / 'matrix'
    cells_todo: List[Tuple[str, SharingSetting]] = [(p, s) for p in config.presets for s in SETTINGS_ORDER]
    logger.info("Matrix started", extra={'context': {'cells': len(cells_todo), 'jobs': config.jobs,
                                                     'n_trials': config.n_trials, 'seed': config.seed}})

    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        cells = list(executor.map(lambda c: run_cell(config, dataset, space, c[0], c[1], out_dir), cells_todo))

    settings = [s.value for s in SETTINGS_ORDER]
    report = {
        'experiment': config.to_dict(),
        'space': asdict(space),
        'presets': list(config.presets),
        'settings': settings,
        'success_margin': SUCCESS_MARGIN,
        'cells': cells,
    }
    json_path = write_json(out_dir / 'matrix.json', report)
    header = {'seed': config.seed, 'n_trials': config.n_trials, 'batch_size': config.batch_size,
              'iterations': config.iterations, 'dataset': config.dataset.kind.value}
    md_path = out_dir / 'matrix.md'
    md_path.write_text(matrix_markdown(cells, config.presets, settings, header), encoding='utf-8')
    logger.info("Matrix written", extra={'context': {'json': str(json_path), 'markdown': str(md_path)}})
    return json_path, md_path
