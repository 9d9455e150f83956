"""Shared expensive runs and the per-criterion acceptance summary."""
import time

import pytest

from hypercount.params import ModelParams

# Primary runs use one worker; the determinism check repeats them with this many.
ALT_THREADS = 3

_results: dict = {}


class Recorder:
    def __call__(self, criterion: int, label: str, passed: bool, detail: str = "") -> bool:
        _results.setdefault(criterion, []).append((label, bool(passed), detail))
        print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} {label}: {detail}")
        return bool(passed)


@pytest.fixture(scope="session")
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(_results):
        rows = _results[c]
        ok = all(p for _, p, _ in rows)
        failed = [f"{label} ({detail})" for label, p, detail in rows if not p]
        tail = "; ".join(failed) if failed else f"{len(rows)} checks"
        tr.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}  {tail}")


class Timed:
    def __init__(self, value, seconds):
        self.value, self.seconds = value, seconds


def _timed(fn):
    t0 = time.perf_counter()
    v = fn()
    return Timed(v, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def llt_batch():
    """r=3, n=30000, eps=0.3, 10^4 trials, seed 1."""
    from hypercount.verify import run_batch

    return _timed(lambda: run_batch(ModelParams.from_eps(3, 30000, 0.3), 10**4, seed=1, threads=1))


@pytest.fixture(scope="session")
def tree_batch():
    """H^3(m, p) at branching factor 0.85, m = 2*10^4, 2000 trials, census to k = 10."""
    from hypercount.verify import run_batch

    return _timed(lambda: run_batch(ModelParams.from_lambda(3, 20000, 0.85), 2000, seed=1, threads=1,
                                    census_max=10))


@pytest.fixture(scope="session")
def small_graph_batch():
    """r=2, n=30, lambda=1.5, 10^6 trials."""
    from hypercount.verify import run_batch

    return _timed(lambda: run_batch(ModelParams.from_lambda(2, 30, 1.5), 10**6, seed=1, threads=1))


@pytest.fixture(scope="session")
def edge_split_samples():
    from hypercount.forests import sample_edge_split_seeded

    return {cfg: _timed(lambda cfg=cfg: sample_edge_split_seeded(*cfg, seed=1, size=10**5, threads=1))
            for cfg in ((2, 12, 4), (3, 20, 5))}
