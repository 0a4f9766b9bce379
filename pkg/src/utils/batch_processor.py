"""
Batch Processor for tile-parallel work
Runs independent work items (BlockTiles, row bands) on a thread pool and
returns results in submission order so merges stay deterministic.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Sequence

logger = logging.getLogger(__name__)


class BatchProcessor:
    """Ordered parallel map with progress tracking"""

    def __init__(self, max_workers: int = 1, batch_size: int = 256):
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.batch_size = batch_size
        self.progress_callback: Optional[Callable[[int, int, str], None]] = None

    def set_progress_callback(self, callback: Callable[[int, int, str], None]):
        """Set callback for progress updates: callback(current, total, message)"""
        self.progress_callback = callback

    def map_ordered(self, operation: Callable[[Any], Any], items: Sequence[Any],
                    operation_name: str = "Processing") -> List[Any]:
        """
        Apply operation to every item

        Args:
            items: Work items, each processed independently
            operation: Function called once per item
            operation_name: Name for progress reporting

        Returns:
            List of results, result[i] = operation(items[i])

        Raises:
            The first exception raised by any operation, after the pool drains.
        """
        total = len(items)
        if total == 0:
            return []

        if self.max_workers == 1 or total == 1:
            results = []
            for index, item in enumerate(items):
                results.append(operation(item))
                self._report(index + 1, total, operation_name)
            return results

        results: List[Any] = [None] * total
        for batch_start in range(0, total, self.batch_size):
            batch_end = min(batch_start + self.batch_size, total)
            self._process_batch_concurrent(operation, items, batch_start, batch_end, results)
            self._report(batch_end, total, operation_name)

        logger.debug("%s: %d items on %d workers", operation_name, total, self.max_workers)
        return results

    def _process_batch_concurrent(self, operation, items, start, end, results):
        """Process one batch, keeping results at their item index"""
        first_error = None
        with ThreadPoolExecutor(max_workers=min(self.max_workers, end - start)) as executor:
            future_to_index = {
                executor.submit(operation, items[i]): i
                for i in range(start, end)
            }
            for future in as_completed(future_to_index):
                index = future_to_index[future]
                try:
                    results[index] = future.result()
                except Exception as e:
                    if first_error is None or index < first_error[0]:
                        first_error = (index, e)
        if first_error is not None:
            raise first_error[1]

    def _report(self, current: int, total: int, message: str):
        if self.progress_callback:
            self.progress_callback(current, total, message)


def log_progress(current: int, total: int, message: str):
    """Progress callback that narrates batches at debug level"""
    logger.debug("%s: %d/%d", message, current, total)
