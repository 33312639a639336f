"""Timing comparison between the pure-numpy and compiled kernels.

Runs the three hot kernels on identical synthetic inputs through both
backends, checks the outputs are bit-identical, and prints a small table.
"""

import importlib
import time

import numpy as np

from lcas import _pure, rng


def _dataset(rows, dim, seed):
    counters = np.arange(rows * dim, dtype=np.uint64)
    x = rng.uniform_array(counters, seed, rng.STREAM_TEST, 0).reshape(rows, dim)
    y = (rng.uniform_array(np.arange(rows, dtype=np.uint64), seed,
                           rng.STREAM_TEST, 1) * 3).astype(np.int32)
    return np.ascontiguousarray(x), y


def _time(fn, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(rows=20000, dim=24, trees=20, seed=20260818, out=print):
    backends = {"pure": _pure}
    try:
        backends["compiled"] = importlib.import_module("lcas._core")
    except ImportError:
        out("compiled backend unavailable; timing the pure backend only")

    x, y = _dataset(rows, dim, seed)
    sample = rng.randint_array(rows, np.arange(rows, dtype=np.uint64),
                               seed, rng.STREAM_BOOTSTRAP, 0)
    mf_feature = np.repeat(np.arange(dim, dtype=np.int32), 3)
    grid = np.linspace(0.0, 1.0, 4)
    mf_breaks = np.ascontiguousarray(
        np.tile(grid, (mf_feature.size, 1)) * 0.5
        + np.linspace(0, 0.5, mf_feature.size)[:, None])

    results = {}
    for name, mod in backends.items():
        t_fuzz, fz = _time(lambda m=mod: m.fuzzify_batch(x, mf_feature,
                                                         mf_breaks))
        t_tree, tree = _time(
            lambda m=mod: m.tree_build(x, y, sample, 3, 12, 5, 5,
                                       rng.u64(seed, rng.STREAM_TREE, 0)))
        feat, thr, left, right, leaf = [np.asarray(a) for a in tree]
        offsets = np.array([0, feat.size], dtype=np.int64)
        forest_args = [np.tile(a, trees) for a in (feat, thr, left, right,
                                                   leaf)]
        forest_offsets = np.arange(trees + 1, dtype=np.int64) * feat.size
        t_vote, votes = _time(lambda m=mod: m.forest_votes(
            forest_args[0].astype(np.int32), forest_args[1],
            forest_args[2].astype(np.int32), forest_args[3].astype(np.int32),
            forest_args[4].astype(np.int32), forest_offsets, x, 3))
        results[name] = {"fuzzify": (t_fuzz, fz), "tree_build": (t_tree, tree),
                         "forest_votes": (t_vote, votes)}
        del offsets

    out("kernel timings (best of 3) on %d rows x %d features, %d trees"
        % (rows, dim, trees))
    out("%-14s %12s %12s %10s" % ("kernel", "pure", "compiled", "speedup"))
    for kernel in ("fuzzify", "tree_build", "forest_votes"):
        tp = results["pure"][kernel][0]
        if "compiled" in results:
            tc = results["compiled"][kernel][0]
            out("%-14s %10.1f ms %10.1f ms %9.1fx"
                % (kernel, tp * 1e3, tc * 1e3, tp / tc))
        else:
            out("%-14s %10.1f ms %12s %10s" % (kernel, tp * 1e3, "-", "-"))

    if "compiled" in results:
        same = np.array_equal(results["pure"]["fuzzify"][1],
                              results["compiled"]["fuzzify"][1])
        for a, b in zip(results["pure"]["tree_build"][1],
                        results["compiled"]["tree_build"][1]):
            same = same and np.array_equal(np.asarray(a), np.asarray(b))
        same = same and np.array_equal(results["pure"]["forest_votes"][1],
                                       results["compiled"]["forest_votes"][1])
        out("backend outputs bit-identical: %s" % ("yes" if same else "NO"))
        return same
    return True
