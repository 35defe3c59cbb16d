"""Deterministic JSON and markdown reports."""
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

SUCCESS_MARGIN = 0.3
SETTING_TITLES = {
    'no_stats': 'Training, no stats',
    'stats_shared': 'Training, stats shared',
    'inference': 'Inference mode',
}


def _clean(value: Any) -> Any:
    # JSON has no NaN or infinity
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(data: Dict[str, Any]) -> str:
    """Byte-stable JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_clean(data), indent=2, sort_keys=True, default=str) + '\n'


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data), encoding='utf-8')
    return path


def read_json(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding='utf-8'))


def is_success(best_ssim, baseline_ssim, margin: float = SUCCESS_MARGIN) -> bool:
    """A cell succeeds when the best SSIM clears the random baseline by ``margin``."""
    if best_ssim is None or baseline_ssim is None:
        return False
    return best_ssim >= baseline_ssim + margin


def _fmt(value) -> str:
    return '-' if value is None else f"{value:.3f}"


def matrix_markdown(cells: Sequence[Dict[str, Any]], presets: Sequence[str], settings: Sequence[str],
                    header: Dict[str, Any]) -> str:
    """Presets as rows, settings as columns; each cell shows the verdict, best SSIM and baseline."""
    by_key = {(c['preset'], c['setting']): c for c in cells}
    lines: List[str] = ['# Attack success matrix', '']
    for key in sorted(header):
        lines.append(f"- {key}: {header[key]}")
    lines += ['', '| preset | ' + ' | '.join(SETTING_TITLES.get(s, s) for s in settings) + ' |',
              '|---|' + '---|' * len(settings)]
    for preset in presets:
        row = [preset]
        for setting in settings:
            cell = by_key[(preset, setting)]
            if cell['status'] == 'failed':
                row.append(f"failed ({cell['error']})")
                continue
            mark = '✓' if cell['success'] else '×'
            row.append(f"{mark} {_fmt(cell['best_ssim'])} (baseline {_fmt(cell['baseline_ssim'])})")
        lines.append('| ' + ' | '.join(row) + ' |')
    lines += ['', f"A cell is ✓ when best SSIM >= baseline + {SUCCESS_MARGIN}.", '']
    return '\n'.join(lines)
