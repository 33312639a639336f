"""The 24-input trajectory feature vector and its log file format.

Columns, ranges, and class ids defined here are the data dictionary for the
rest of the stack: fuzzification, labeling, training, and metrics all index
into this layout. Absent neighbors saturate to no-threat values (distance
250 m, TTC 12 s, speed equal to the ego's) so they can never trip a warning
threshold.
"""

from dataclasses import dataclass, fields

import numpy as np

from lcas import sim as simmod

LK, LCL, LCR = 0, 1, 2
CLASS_NAMES = ("LK", "LCL", "LCR")

FEATURE_COLUMNS = (
    "v_ego", "v_f", "v_fl", "v_fr", "v_bl", "v_br", "v_b",
    "d_f", "d_fl", "d_fr", "d_bl", "d_br", "d_b",
    "ttc_f", "ttc_fl", "ttc_fr", "ttc_bl", "ttc_br", "ttc_b",
    "heading", "steering", "lane", "indicator", "gear",
)
CONTINUOUS_FEATURES = FEATURE_COLUMNS[:21]
INTEGER_FEATURES = FEATURE_COLUMNS[21:]

RANGES = {}
for _name in FEATURE_COLUMNS:
    if _name.startswith("v"):
        RANGES[_name] = (0.0, 220.0)
    elif _name.startswith("d"):
        RANGES[_name] = (0.0, 250.0)
    elif _name.startswith("ttc"):
        RANGES[_name] = (0.0, 12.0)
    elif _name in ("heading", "steering"):
        RANGES[_name] = (-3.14, 3.14)
RANGES["lane"] = (1, 3)
RANGES["indicator"] = (0, 2)
RANGES["gear"] = (1, 5)

# full log row: tick, the 24 features, ego ground-truth maneuver phase, and
# the classifier outputs (-1 where no prediction was made)
LOG_COLUMNS = ("tick",) + FEATURE_COLUMNS + ("gt_maneuver", "pred_raw",
                                             "pred_smooth")
LABEL_COLUMN = "label"
_INT_COLUMNS = frozenset(("tick", "lane", "indicator", "gear", "gt_maneuver",
                          "pred_raw", "pred_smooth", LABEL_COLUMN))


@dataclass(frozen=True)
class FeatureVector:
    v_ego: float
    v_f: float
    v_fl: float
    v_fr: float
    v_bl: float
    v_br: float
    v_b: float
    d_f: float
    d_fl: float
    d_fr: float
    d_bl: float
    d_br: float
    d_b: float
    ttc_f: float
    ttc_fl: float
    ttc_fr: float
    ttc_bl: float
    ttc_br: float
    ttc_b: float
    heading: float
    steering: float
    lane: int
    indicator: int
    gear: int

    def to_array(self):
        return np.array([getattr(self, n) for n in FEATURE_COLUMNS],
                        dtype=np.float64)

    def ttcs(self):
        return {d: getattr(self, "ttc_" + d) for d in simmod.DIRECTIONS}


_FIELD_NAMES = tuple(f.name for f in fields(FeatureVector))
assert _FIELD_NAMES == FEATURE_COLUMNS


def _clip(value, name):
    lo, hi = RANGES[name]
    return min(hi, max(lo, value))


def extract(world, ego_id):
    """Pure snapshot-to-FeatureVector conversion with range clipping."""
    ego = world.vehicle(ego_id)
    ns = simmod.neighbors(world, ego_id)
    v_ego = _clip(ego.v, "v_ego")
    vals = {"v_ego": v_ego}
    for d in simmod.DIRECTIONS:
        slot = ns.slot(d)
        if slot is None:
            vals["d_" + d] = 250.0
            vals["ttc_" + d] = 12.0
            vals["v_" + d] = v_ego
        else:
            vals["d_" + d] = _clip(slot.gap, "d_" + d)
            vals["ttc_" + d] = _clip(slot.ttc, "ttc_" + d)
            vals["v_" + d] = _clip(v_ego + slot.rel_speed, "v_" + d)
    vals["heading"] = _clip(ego.heading, "heading")
    vals["steering"] = _clip(ego.steering, "steering")
    vals["lane"] = int(_clip(ego.lane_index, "lane"))
    vals["indicator"] = int(ego.indicator)
    vals["gear"] = int(_clip(ego.gear, "gear"))
    return FeatureVector(**vals)


def clip_vector(fv):
    """Re-clip a FeatureVector to the table ranges (idempotent)."""
    vals = {}
    for name in FEATURE_COLUMNS:
        v = _clip(getattr(fv, name), name)
        vals[name] = int(v) if name in INTEGER_FEATURES else v
    return FeatureVector(**vals)


class LogWriteError(IOError):
    pass


class LogFormatError(ValueError):
    pass


class LogWriter:
    """Streaming CSV writer for per-tick rows.

    Floats are written with repr() so the reader recovers them bit-exactly.
    A trailing "#complete,<rows>" marker distinguishes finished logs from
    runs that died mid-write.
    """

    def __init__(self, path, labeled=False):
        self.path = path
        self.columns = LOG_COLUMNS + ((LABEL_COLUMN,) if labeled else ())
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(",".join(self.columns) + "\n")
        self.rows = 0

    def write_row(self, tick, fv, gt_maneuver, pred_raw=-1, pred_smooth=-1,
                  label=None):
        cells = [str(int(tick))]
        for name in FEATURE_COLUMNS:
            v = getattr(fv, name)
            cells.append(str(int(v)) if name in INTEGER_FEATURES
                         else repr(float(v)))
        cells.append(str(int(gt_maneuver)))
        cells.append(str(int(pred_raw)))
        cells.append(str(int(pred_smooth)))
        if label is not None:
            cells.append(str(int(label)))
        try:
            self._fh.write(",".join(cells) + "\n")
        except OSError as exc:
            self.abort()
            raise LogWriteError(str(exc)) from exc
        self.rows += 1

    def close(self):
        if self._fh is not None:
            self._fh.write("#complete,%d\n" % self.rows)
            self._fh.close()
            self._fh = None

    def abort(self):
        if self._fh is not None:
            try:
                self._fh.write("#aborted\n")
                self._fh.close()
            except OSError:
                pass
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.abort()
        return False


def read_log(path, require_complete=True):
    """Read a log into a dict of column name -> numpy array."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        columns = tuple(header.split(","))
        for col in LOG_COLUMNS:
            if col not in columns:
                raise LogFormatError("log %s missing column %s" % (path, col))
        raw = [[] for _ in columns]
        complete = False
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                complete = line.startswith("#complete")
                continue
            cells = line.split(",")
            if len(cells) != len(columns):
                raise LogFormatError("log %s has a malformed row" % path)
            for i, cell in enumerate(cells):
                raw[i].append(cell)
    if require_complete and not complete:
        raise LogFormatError("log %s is incomplete (no completion marker)" % path)
    out = {}
    for i, col in enumerate(columns):
        if col in _INT_COLUMNS:
            out[col] = np.array([int(c) for c in raw[i]], dtype=np.int64)
        else:
            out[col] = np.array([float(c) for c in raw[i]], dtype=np.float64)
    return out


def log_length(log):
    return int(log["tick"].size)


def feature_matrix(log):
    """(n, 24) float matrix in FEATURE_COLUMNS order from a log dict."""
    return np.column_stack([log[name] for name in FEATURE_COLUMNS])


def continuous_matrix(log):
    return np.column_stack([log[name] for name in CONTINUOUS_FEATURES])


def integer_matrix(log):
    return np.column_stack([log[name] for name in INTEGER_FEATURES])


def vector_from_row(log, i):
    vals = {}
    for name in FEATURE_COLUMNS:
        v = log[name][i]
        vals[name] = int(v) if name in INTEGER_FEATURES else float(v)
    return FeatureVector(**vals)
