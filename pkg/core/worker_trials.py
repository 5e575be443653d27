from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

from config import Config
from logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")


class TrialWorker:
    """
    Runs independent Monte Carlo trials on a thread pool.

    Trials go out in fixed-size batches and results come back in trial order,
    so a stop rule evaluated between batches sees the same history for any
    thread count.
    """

    def __init__(self, threads: Optional[int] = None, batch_size: Optional[int] = None):
        self.threads = Config.thread_count(threads)
        self.batch_size = batch_size or Config.TRIAL_BATCH

    def run(self, trial: Callable[[int], T], n_trials: int,
            stop: Optional[Callable[[List[T]], bool]] = None, label: str = "") -> List[T]:
        """
        Execute trial(0..n_trials-1).

        Args:
            trial: Function of the trial index; must not share mutable state
            n_trials: Upper bound on trials
            stop: Called with all results so far after every batch; True ends the run
            label: Progress bar caption

        Returns:
            Results of the trials actually run, in index order
        """
        results: List[T] = []
        progress = None
        if Config.SHOW_PROGRESS:
            from tqdm import tqdm
            progress = tqdm(total=n_trials, desc=label or "trials", leave=False)

        try:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                for start in range(0, n_trials, self.batch_size):
                    indices = range(start, min(start + self.batch_size, n_trials))
                    results.extend(pool.map(trial, indices))
                    if progress is not None:
                        progress.update(len(indices))
                    if stop is not None and stop(results):
                        logger.debug(f"{label}: stopped after {len(results)} of {n_trials} trials")
                        break
        finally:
            if progress is not None:
                progress.close()
        return results
