"""Run-log evaluation: violation ratios, threshold sweeps, near misses,
and Welch t-tests between assisted and control groups.

A maneuver "violates" a (direction, threshold) pair when that direction's
TTC drops strictly below the threshold at least once inside the maneuver's
labeled window; each maneuver counts at most once per direction, so ratios
stay in [0, 1] and compare across classes. A near miss is the same event at
the 1 s threshold over any of the class's relevant directions.

The t statistic uses the unequal-variance (Welch) form. Its two-sided p
value comes from a local regularized incomplete beta evaluation, so the
stack carries no statistics dependency; the test suite cross-checks it
against an independent implementation.
"""

import math
from dataclasses import dataclass

import numpy as np

from lcas import labeling
from lcas.features import CLASS_NAMES, LCL, LCR, LK
from lcas.warning import WARNING_TABLE

NEAR_MISS_TTC = 1.0
SWEEP_STEP = 0.5
SWEEP_FLOOR = 1.0

# directions that matter per maneuver class, straight from the warning table
RELEVANT_DIRS = {cls: tuple(sorted(WARNING_TABLE[cls].keys(),
                                   key=("f", "b", "fl", "bl", "fr", "br").index))
                 for cls in (LK, LCL, LCR)}


def _class_windows(log, cls):
    _, intervals = labeling.label_log(log)
    return [(m.start_tick, m.end_tick) for m in intervals if m.cls == cls]


def _window_min(series, start, end):
    if end <= start:
        return math.inf
    return float(np.min(series[start:end]))


def violation_ratio(log, cls, direction, threshold):
    """Fraction of cls maneuvers whose direction TTC dipped below threshold.

    Returns None when the log contains no maneuver of the class, which is
    reported as absent rather than zero.
    """
    windows = _class_windows(log, cls)
    if not windows:
        return None
    series = log["ttc_" + direction]
    hits = sum(1 for a, b in windows if _window_min(series, a, b) < threshold)
    return hits / len(windows)


def sweep(log, cls, direction, start_threshold):
    """Violation ratios at start, start-0.5, ..., down to 1.0."""
    if start_threshold < SWEEP_FLOOR:
        raise ValueError("start_threshold must be at least %.1f" % SWEEP_FLOOR)
    tenths = int(round(start_threshold * 10))
    out = {}
    while tenths >= int(SWEEP_FLOOR * 10):
        thr = tenths / 10.0
        out[thr] = violation_ratio(log, cls, direction, thr)
        tenths -= int(SWEEP_STEP * 10)
    return out


def near_miss_ratio(log, cls):
    """Fraction of cls maneuvers with any relevant-direction TTC < 1 s."""
    windows = _class_windows(log, cls)
    if not windows:
        return None
    dirs = RELEVANT_DIRS[cls]
    hits = 0
    for a, b in windows:
        if any(_window_min(log["ttc_" + d], a, b) < NEAR_MISS_TTC
               for d in dirs):
            hits += 1
    return hits / len(windows)


def maneuver_counts(log):
    _, intervals = labeling.label_log(log)
    counts = {LK: 0, LCL: 0, LCR: 0}
    for m in intervals:
        counts[m.cls] += 1
    return counts


# ---------------- Welch t-test ----------------


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    significant: bool
    degenerate: bool = False


def _betacf(a, b, x):
    # continued fraction for the incomplete beta (Lentz's method)
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            return h
    raise ArithmeticError("incomplete beta did not converge")


def betainc_reg(a, b, x):
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x < 0.0 or x > 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t, df):
    """Two-sided tail probability P(|T| >= t) for Student's t."""
    if df <= 0:
        raise ValueError("df must be positive")
    t = abs(float(t))
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def welch_ttest(sample_a, sample_b, alpha=0.05):
    """Two-sample unequal-variance t-test, two-sided.

    Degenerate zero-variance inputs are flagged: identical constant samples
    give t = 0, p = 1; constant but different samples give p = 0.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two runs")
    ma, mb = float(np.mean(a)), float(np.mean(b))
    va, vb = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
    na, nb = a.size, b.size
    se2 = va / na + vb / nb
    if se2 == 0.0:
        if ma == mb:
            return TTestResult(0.0, 1.0, False, degenerate=True)
        return TTestResult(math.inf if ma > mb else -math.inf, 0.0,
                           True, degenerate=True)
    t = (ma - mb) / math.sqrt(se2)
    df = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = student_t_sf2(t, df)
    return TTestResult(t, p, p < alpha)


# ---------------- per-run summaries and group reports ----------------


def summarize_run(log):
    """All per-run measures used by report(): counts, ratios, sweeps."""
    counts = maneuver_counts(log)
    out = {"counts": {CLASS_NAMES[c]: counts[c] for c in (LK, LCL, LCR)},
           "near_miss": {}, "violation": {}, "sweep": {}}
    for cls in (LK, LCL, LCR):
        cname = CLASS_NAMES[cls]
        out["near_miss"][cname] = near_miss_ratio(log, cls)
        out["violation"][cname] = {}
        out["sweep"][cname] = {}
        for d in RELEVANT_DIRS[cls]:
            start = WARNING_TABLE[cls][d]
            out["violation"][cname][d] = violation_ratio(log, cls, d, start)
            out["sweep"][cname][d] = sweep(log, cls, d, start)
    return out


def _collect(values):
    """Drop absent (None) per-run values; report how many runs contributed."""
    present = [v for v in values if v is not None]
    return present, len(present)


def compare_groups(summaries_a, summaries_b, alpha=0.05):
    """Welch tests per class (near miss) and class x direction (violation).

    Group a is conventionally the assisted group. Entries are None when a
    group has fewer than two contributing runs.
    """
    tests = {"near_miss": {}, "violation": {}}
    for cls in (LK, LCL, LCR):
        cname = CLASS_NAMES[cls]
        a, _ = _collect([s["near_miss"][cname] for s in summaries_a])
        b, _ = _collect([s["near_miss"][cname] for s in summaries_b])
        tests["near_miss"][cname] = (welch_ttest(a, b, alpha)
                                     if len(a) >= 2 and len(b) >= 2 else None)
        tests["violation"][cname] = {}
        for d in RELEVANT_DIRS[cls]:
            a, _ = _collect([s["violation"][cname][d] for s in summaries_a])
            b, _ = _collect([s["violation"][cname][d] for s in summaries_b])
            tests["violation"][cname][d] = (
                welch_ttest(a, b, alpha)
                if len(a) >= 2 and len(b) >= 2 else None)
    return tests


def group_means(summaries):
    out = {"near_miss": {}, "violation": {}}
    for cls in (LK, LCL, LCR):
        cname = CLASS_NAMES[cls]
        vals, n = _collect([s["near_miss"][cname] for s in summaries])
        out["near_miss"][cname] = (sum(vals) / n) if n else None
        out["violation"][cname] = {}
        for d in RELEVANT_DIRS[cls]:
            vals, n = _collect([s["violation"][cname][d] for s in summaries])
            out["violation"][cname][d] = (sum(vals) / n) if n else None
    return out


def _fmt(v):
    if v is None:
        return "absent"
    return "%.4f" % v


def render_text(group_names, group_summaries, tests):
    """Human-readable report; deterministic line order."""
    lines = []
    means = {name: group_means(s)
             for name, s in zip(group_names, group_summaries)}
    lines.append("runs per group: " + ", ".join(
        "%s=%d" % (n, len(s)) for n, s in zip(group_names, group_summaries)))
    lines.append("")
    lines.append("near-miss ratio (TTC < %.1f s), mean over runs" % NEAR_MISS_TTC)
    for cls in (LK, LCL, LCR):
        cname = CLASS_NAMES[cls]
        cells = ["  %-3s" % cname]
        for name in group_names:
            cells.append("%s=%s" % (name, _fmt(means[name]["near_miss"][cname])))
        if tests is not None and tests["near_miss"][cname] is not None:
            r = tests["near_miss"][cname]
            cells.append("t=%.4f p=%.6f%s%s" % (
                r.t, r.p, " *" if r.significant else "",
                " (degenerate)" if r.degenerate else ""))
        lines.append(" ".join(cells))
    lines.append("")
    lines.append("violation ratio at the warning threshold, mean over runs")
    for cls in (LK, LCL, LCR):
        cname = CLASS_NAMES[cls]
        for d in RELEVANT_DIRS[cls]:
            cells = ["  %-3s %-2s thr=%.1f" % (cname, d, WARNING_TABLE[cls][d])]
            for name in group_names:
                cells.append("%s=%s" % (name, _fmt(means[name]["violation"][cname][d])))
            if tests is not None and tests["violation"][cname][d] is not None:
                r = tests["violation"][cname][d]
                cells.append("t=%.4f p=%.6f%s%s" % (
                    r.t, r.p, " *" if r.significant else "",
                    " (degenerate)" if r.degenerate else ""))
            lines.append(" ".join(cells))
    lines.append("")
    lines.append("* significant at p < 0.05")
    return "\n".join(lines) + "\n"


def render_csv(group_names, group_summaries):
    """Flat per-run rows: group, run, class, direction, threshold, ratio."""
    lines = ["group,run,class,direction,threshold,ratio"]
    for name, summaries in zip(group_names, group_summaries):
        for i, s in enumerate(summaries):
            for cls in (LK, LCL, LCR):
                cname = CLASS_NAMES[cls]
                nm = s["near_miss"][cname]
                lines.append("%s,%d,%s,any,%.1f,%s" % (
                    name, i, cname, NEAR_MISS_TTC,
                    "" if nm is None else repr(nm)))
                for d in RELEVANT_DIRS[cls]:
                    for thr in sorted(s["sweep"][cname][d], reverse=True):
                        v = s["sweep"][cname][d][thr]
                        lines.append("%s,%d,%s,%s,%.1f,%s" % (
                            name, i, cname, d, thr,
                            "" if v is None else repr(v)))
    return "\n".join(lines) + "\n"
