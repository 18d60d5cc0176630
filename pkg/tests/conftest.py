import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mmreid.core import EmbeddingSet, MiniBatch  # noqa: E402

DATA = Path(__file__).parent / "data"


def batch_from_blocks(vis, ir, labels=None):
    """Build a MiniBatch from per-identity lists of visible / infrared vectors."""
    P, K = len(vis), len(vis[0])
    labels = list(range(P)) if labels is None else labels
    feats, ids, mods = [], [], []
    for i in range(P):
        for v in vis[i]:
            feats.append(np.atleast_1d(v)); ids.append(labels[i]); mods.append(0)
        for t in ir[i]:
            feats.append(np.atleast_1d(t)); ids.append(labels[i]); mods.append(1)
    return MiniBatch(EmbeddingSet(np.array(feats, dtype=float), ids, mods), P, K)


def random_batch(rng, P, K, D, spread=1.0):
    F = rng.standard_normal((P, 2, K, D)) * spread
    return batch_from_blocks(F[:, 0].tolist(), F[:, 1].tolist())


@pytest.fixture
def worked_batch():
    # P=2, K=2, 1-D; centers 0.1, 0.5 (identity 1) and 0.6, 1.0 (identity 2)
    return batch_from_blocks([[0.0, 0.2], [0.5, 0.7]], [[0.4, 0.6], [0.9, 1.1]])


_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark and (rep.when == "call" or rep.failed):
        n, text = mark.args
        entry = _criteria.setdefault(n, {"text": text, "failed": [], "passed": []})
        (entry["passed"] if rep.passed else entry["failed"]).append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        status = "FAIL" if entry["failed"] else "PASS"
        detail = f"  (failed: {', '.join(entry['failed'])})" if entry["failed"] else ""
        terminalreporter.write_line(f"{status}  criterion {n:>2}  {entry['text']}{detail}")
