"""Offline maneuver labeling from lane crossings and indicator onsets.

A lane change is recognized at the tick where lane_index flips (t_lane).
If the matching indicator was on in a contiguous run ending at the crossing,
the labeled window runs from that onset (t_indicator) to the crossing; the
lookback is capped at 10 s so a forgotten blinker cannot swallow minutes of
cruising. Without an indicator the window is the 2.5 s before the crossing.
Everything else is lane keeping. Windows are half-open [start, end) in
ticks; no window reaches back past the previous lane crossing, so back to
back maneuvers stay disjoint and every tick carries exactly one class.
"""

from dataclasses import dataclass

import numpy as np

from lcas.features import LCL, LCR, LK
from lcas.sim import TICK_HZ

T_CHANGE_TICKS = 50  # 2.5 s at 20 Hz
INDICATOR_LOOKBACK = 200  # 10 s


class MalformedLogError(ValueError):
    pass


@dataclass(frozen=True)
class ManeuverLabel:
    """One labeled interval; ticks [start_tick, end_tick) share cls.

    For LCL/LCR, t_indicator/t_lane are the onset and crossing in seconds
    (t_indicator is synthesized for indicator-less changes) and t_change is
    their difference, or the 2.5 s default. For LK runs the times are just
    the interval bounds.
    """
    start_tick: int
    end_tick: int
    cls: int
    t_indicator: float
    t_lane: float
    t_change: float
    indicator_used: bool = False


def _crossings(lane):
    """(tick, direction cls) per lane_index change; rejects jumps of 2+."""
    deltas = np.diff(lane)
    out = []
    for i in np.flatnonzero(deltas != 0):
        d = int(deltas[i])
        if abs(d) != 1:
            raise MalformedLogError(
                "lane_index jumped by %d at row %d" % (d, i + 1))
        out.append((i + 1, LCL if d == -1 else LCR))
    return out


def _indicator_onset(indicator, crossing, want, floor_row):
    """Start row of the contiguous indicator==want run ending at crossing-1."""
    if crossing == 0 or indicator[crossing - 1] != want:
        return None
    start = crossing - 1
    floor_row = max(floor_row, crossing - INDICATOR_LOOKBACK)
    while start > floor_row and indicator[start - 1] == want:
        start -= 1
    return start


def label_log(log):
    """Label every tick of a feature log.

    Returns (labels, intervals): a per-row class array and the full ordered
    partition into ManeuverLabel intervals (LK runs included). Each lane
    crossing yields exactly one change interval, clipped at the previous
    crossing, so interval counts always match crossing counts.
    """
    lane = np.asarray(log["lane"], dtype=np.int64)
    indicator = np.asarray(log["indicator"], dtype=np.int64)
    n = lane.size
    if n == 0:
        return np.zeros(0, dtype=np.int64), []

    windows = []
    prev_crossing = 0
    for crossing, cls in _crossings(lane):
        want = 1 if cls == LCL else 2
        # no window reaches back past the previous crossing: those ticks
        # belong to the previous maneuver. The indicator onset search stops
        # there and a synthesized window is clipped the same way, so windows
        # never overlap.
        onset = _indicator_onset(indicator, crossing, want, prev_crossing)
        used = onset is not None
        start = (onset if used
                 else max(prev_crossing, crossing - T_CHANGE_TICKS))
        windows.append([start, crossing, cls, used])
        prev_crossing = crossing

    labels = np.zeros(n, dtype=np.int64)
    change_marks = []
    for start, end, cls, used in windows:
        labels[start:end] = cls
        t_lane = end / TICK_HZ
        if used:
            t_ind = start / TICK_HZ
            t_change = t_lane - t_ind
        else:
            t_change = T_CHANGE_TICKS / TICK_HZ
            t_ind = t_lane - t_change
        change_marks.append(ManeuverLabel(
            start_tick=start, end_tick=end, cls=cls, t_indicator=t_ind,
            t_lane=t_lane, t_change=t_change, indicator_used=used))

    intervals = []
    cursor = 0
    for m in change_marks:
        if m.start_tick > cursor:
            intervals.append(ManeuverLabel(
                start_tick=cursor, end_tick=m.start_tick, cls=LK,
                t_indicator=cursor / TICK_HZ, t_lane=m.start_tick / TICK_HZ,
                t_change=(m.start_tick - cursor) / TICK_HZ))
        intervals.append(m)
        cursor = max(cursor, m.end_tick)
    if cursor < n:
        intervals.append(ManeuverLabel(
            start_tick=cursor, end_tick=n, cls=LK,
            t_indicator=cursor / TICK_HZ, t_lane=n / TICK_HZ,
            t_change=(n - cursor) / TICK_HZ))
    return labels, intervals


def change_intervals(intervals, cls=None):
    """The LCL/LCR members of a partition, optionally one class only."""
    out = [m for m in intervals if m.cls != LK]
    if cls is not None:
        out = [m for m in out if m.cls == cls]
    return out


def angle_onset(log, crossing_tick, angle_threshold_deg):
    """Heading-based onset estimate for indicator-less changes.

    Finds the latest tick before the crossing where the ego's heading rises
    through the threshold toward the crossing direction. Falls back to the
    2.5 s rule when the threshold is never crossed; the flag reports which
    path was taken. Diagnostic alternative to the default labeler.
    """
    if angle_threshold_deg <= 0:
        raise ValueError("angle_threshold_deg must be positive")
    lane = np.asarray(log["lane"], dtype=np.int64)
    heading = np.asarray(log["heading"], dtype=np.float64)
    if not (0 < crossing_tick < lane.size):
        raise ValueError("crossing_tick out of range")
    d = int(lane[crossing_tick] - lane[crossing_tick - 1])
    if d == 0:
        raise ValueError("no lane crossing at the given tick")
    sign = 1.0 if d < 0 else -1.0  # leftward changes have positive heading
    thr = np.deg2rad(angle_threshold_deg)
    toward = sign * heading
    for t in range(crossing_tick - 1, 0, -1):
        if toward[t] >= thr and toward[t - 1] < thr:
            return t, False
    return max(0, crossing_tick - T_CHANGE_TICKS), True


def append_label_column(in_path, out_path):
    """Write a copy of a feature log with the label column appended."""
    from lcas import features

    log = features.read_log(in_path)
    labels, _ = label_log(log)
    with features.LogWriter(out_path, labeled=True) as writer:
        for i in range(labels.size):
            writer.write_row(
                int(log["tick"][i]), features.vector_from_row(log, i),
                int(log["gt_maneuver"][i]), int(log["pred_raw"][i]),
                int(log["pred_smooth"][i]), label=int(labels[i]))
    return labels
