"""Writing attack results to disk."""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from gia_lab.core.models import AttackResult, Batch, Normalization
from gia_lab.datasets.image_io import write_panel, write_ppm
from gia_lab.metrics import to_pixels


def save_attack_result(result: AttackResult, out_dir: Path, echo: Dict[str, Any],
                       normalization: Optional[Normalization], truth: Optional[Batch] = None,
                       assignment: Optional[List[int]] = None, trace_every: int = 10) -> Path:
    """
    Write one PPM per reconstructed image, panels when ground truth is known, and result.json.

    ``echo`` carries the configuration and seeds needed to replay the run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    recon_px = to_pixels(result.reconstruction, normalization)
    for j, image in enumerate(recon_px):
        write_ppm(image, out_dir / f'recon_{j:02d}.ppm')

    if truth is not None:
        true_px = to_pixels(truth.images, normalization)
        pairing = assignment if assignment is not None else list(range(len(recon_px)))
        for j, i in enumerate(pairing):
            write_panel(true_px[i], recon_px[j], out_dir / f'panel_{j:02d}.ppm')

    document = dict(echo)
    document['result'] = result.to_dict(trace_every=trace_every)
    if assignment is not None:
        document['assignment'] = assignment
    path = out_dir / 'result.json'
    path.write_text(json.dumps(document, indent=2, sort_keys=True, default=str))
    return path
