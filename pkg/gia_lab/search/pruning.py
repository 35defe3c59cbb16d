"""Median-stopping rule for search trials."""
import threading
from typing import Dict, Hashable, List, Optional

import numpy as np

from gia_lab.attack.engine import ProgressCallback


class MedianStoppingRule:
    """
    Abandon a trial whose discrepancy at the checkpoint exceeds the median of earlier trials.

    The checkpoint sits at a quarter of the attack iterations. Each trial
    contributes one value, its lowest checkpoint discrepancy over restarts
    and proxy candidates, and is only compared with other trials. Decisions
    depend on which trials finished first, so searches using the rule run
    serially.
    """

    def __init__(self, iterations: int, fraction: float = 0.25):
        self.checkpoint = max(1, int(iterations * fraction))
        self._history: Dict[Hashable, float] = {}
        self._lock = threading.Lock()

    @property
    def history(self) -> List[float]:
        with self._lock:
            return list(self._history.values())

    def callback(self, trial_index: Optional[int] = None) -> ProgressCallback:
        """Progress hook for one trial; without an index every hook counts as its own trial."""
        key: Hashable = trial_index if trial_index is not None else object()

        def progress(iteration: int, discrepancy: float) -> Optional[bool]:
            if iteration != self.checkpoint:
                return True
            with self._lock:
                others = [value for k, value in self._history.items() if k != key]
                if others and discrepancy > float(np.median(others)):
                    return False
                self._history[key] = min(discrepancy, self._history.get(key, discrepancy))
            return True
        return progress
