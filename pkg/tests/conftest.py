"""Shared helpers: packaged scenario paths, synthetic log builders, and the
independent relabeling oracle used by labeling and metrics tests."""

import numpy as np
import pytest

from lcas import rng
from lcas.cli import _resolve_scenario
from lcas.features import FEATURE_COLUMNS, INTEGER_FEATURES


@pytest.fixture(scope="session")
def s1_path():
    return _resolve_scenario("s1")


@pytest.fixture(scope="session")
def s2_path():
    return _resolve_scenario("s2")


def relabel_oracle(lane, indicator):
    """Scalar reimplementation of the log labeling rules.

    Returns (labels, windows) where windows is a list of
    [start, end, cls, indicator_used] covering the lane crossings only.
    Written with plain loops and backward scans so a bug in the vectorized
    production path cannot hide in a shared helper.
    """
    lane = [int(v) for v in lane]
    indicator = [int(v) for v in indicator]
    n = len(lane)

    crossings = []
    for i in range(1, n):
        d = lane[i] - lane[i - 1]
        if d == 0:
            continue
        assert abs(d) == 1, "oracle input may not jump lanes"
        crossings.append((i, 1 if d == -1 else 2))

    windows = []
    prev = 0
    for t, cls in crossings:
        onset = None
        if t > 0 and indicator[t - 1] == cls:
            j = t - 1
            floor = max(prev, t - 200)
            while j > floor and indicator[j - 1] == cls:
                j -= 1
            onset = j
        used = onset is not None
        start = onset if used else max(prev, t - 50)
        windows.append([start, t, cls, used])
        prev = t

    labels = [0] * n
    for a, b, cls, _ in windows:
        for k in range(a, b):
            labels[k] = cls
    return labels, windows


def synthetic_log(seed, n=1200, crossing_rate=0.01, indicator_fit=0.8):
    """A random but well-formed log dict with every production column.

    Lane walks step by exactly one, indicators sometimes lead crossings
    (sometimes with the wrong side or not at all), all six ttc series move
    through the full [0, 12] range so threshold logic has work to do.
    """
    k = int(seed)
    lane = np.empty(n, dtype=np.int64)
    indicator = np.zeros(n, dtype=np.int64)
    lane[0] = 1 + rng.randint(3, k, rng.STREAM_TEST, 0)
    i = 1
    while i < n:
        cur = int(lane[i - 1])
        if rng.uniform(k, rng.STREAM_TEST, 1, i) < crossing_rate:
            if cur == 1:
                step = 1
            elif cur == 3:
                step = -1
            else:
                step = 1 if rng.uniform(k, rng.STREAM_TEST, 2, i) < 0.5 else -1
            cls = 1 if step == -1 else 2
            # indicator lead-in of random length, sometimes absent/mismatched
            u = rng.uniform(k, rng.STREAM_TEST, 3, i)
            if u < indicator_fit:
                lead = 1 + rng.randint(260, k, rng.STREAM_TEST, 4, i)
                wrong = rng.uniform(k, rng.STREAM_TEST, 5, i) < 0.1
                code = (3 - cls) if wrong else cls
                for j in range(max(0, i - lead), i):
                    indicator[j] = code
            lane[i] = cur + step
        else:
            lane[i] = cur
        i += 1

    log = {"tick": np.arange(n, dtype=np.int64),
           "lane": lane, "indicator": indicator}
    counters = np.arange(n, dtype=np.uint64)
    for j, d in enumerate(("f", "b", "fl", "bl", "fr", "br")):
        log["ttc_" + d] = 12.0 * rng.uniform_array(counters, k,
                                                   rng.STREAM_TEST, 10 + j)
    for name in FEATURE_COLUMNS:
        if name in log:
            continue
        if name in INTEGER_FEATURES:
            log[name] = np.ones(n, dtype=np.int64)
        else:
            log[name] = np.full(n, 50.0)
    log["gt_maneuver"] = np.zeros(n, dtype=np.int64)
    log["pred_raw"] = np.full(n, -1, dtype=np.int64)
    log["pred_smooth"] = np.full(n, -1, dtype=np.int64)
    return log
