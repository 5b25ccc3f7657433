"""
Parallel Trial Executor
Runs independent Monte Carlo trials concurrently and gathers them in trial order
"""
import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn

T = TypeVar("T")


async def run_trials_parallel(
    trial: Callable[[int], T],
    n_trials: int,
    workers: int = 1,
    description: str = "Trials",
    show_progress: bool = True
) -> List[T]:
    """
    Run trial(0), ..., trial(n_trials - 1)

    Args:
        trial: Pure function of the trial index
        n_trials: Number of trials
        workers: Size of the worker pool (1 runs inline)
        description: Progress bar label
        show_progress: Show rich progress bar

    Returns:
        Results ordered by trial index, whatever order they finished in
    """
    if workers <= 1:
        if not show_progress:
            return [trial(index) for index in range(n_trials)]
        results = []
        with _progress() as progress:
            task_id = progress.add_task(f"[cyan]{description}...", total=n_trials)
            for index in range(n_trials):
                results.append(trial(index))
                progress.advance(task_id)
        return results

    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        if not show_progress:
            futures = [loop.run_in_executor(pool, trial, index) for index in range(n_trials)]
            return list(await asyncio.gather(*futures))

        with _progress() as progress:
            task_id = progress.add_task(f"[cyan]{description}...", total=n_trials)

            async def tracked(index: int) -> T:
                result = await loop.run_in_executor(pool, trial, index)
                progress.advance(task_id)
                return result

            # gather preserves argument order
            return list(await asyncio.gather(*(tracked(index) for index in range(n_trials))))


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
    )
