"""Order-preserving map over independent tasks, optionally in worker processes."""

from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, tasks, jobs: int = 1) -> list:
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
