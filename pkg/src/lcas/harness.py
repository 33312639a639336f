"""Run orchestration: data collection, training, experiments, reports.

The per-tick loop order is fixed: step the world, extract ego features,
fuzzify, predict, smooth, update the warning display, let the driver
react, write the log row. The prediction the display consumes at tick t
is computed from tick t's features.

Control runs skip the predict/warn path entirely but draw the same random
numbers as assisted runs, so an assisted run at compliance 0.0 and its
control twin produce the same traffic tick for tick. That pairing is what
makes the group comparison meaningful.
"""

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from lcas import features, forest, fuzzy, labeling, metrics, warning
from lcas.driver import DriverProfile, SyntheticDriver
from lcas.features import (CLASS_NAMES, CONTINUOUS_FEATURES,
                           INTEGER_FEATURES, LABEL_COLUMN, LCL, LCR, LK,
                           LogWriter, extract, read_log)
from lcas.forest import ForestModel, ForestParams, Smoother
from lcas.fuzzy import FuzzyModel
from lcas.sim import TICK_HZ, ControlInput, ScenarioConfig, Sim

MODEL_FORMAT = "lcas-model-v1"
META_FORMAT = "lcas-run-meta-v1"

LOG_NAME = "features.csv"
LABELED_NAME = "labeled.csv"
EVENTS_NAME = "events.csv"
META_NAME = "meta.json"
REPORT_TEXT_NAME = "report.txt"
REPORT_CSV_NAME = "report.csv"


class DataError(ValueError):
    """Bad input data or configuration detected before/while running."""


@dataclass(frozen=True)
class RunManifest:
    """Everything one run needs; (manifest, seed) fixes every output byte."""

    scenario: str
    seed: int
    duration_s: float
    out_dir: str
    assisted: bool = False
    model: str = ""
    compliance: float = 0.0
    ego_mode: str = "auto"  # "auto" scripted driver, "control" external

    def __post_init__(self):
        if self.duration_s <= 0:
            raise DataError("duration must be positive")
        if self.assisted and not self.model:
            raise DataError("assisted runs need a model file")
        if self.ego_mode not in ("auto", "control"):
            raise DataError("ego_mode must be 'auto' or 'control'")


# ---------------- model bundles ----------------


@dataclass
class ModelBundle:
    fuzzy: FuzzyModel
    forest: ForestModel

    @property
    def layout(self):
        return self.forest.layout


def save_model(path, fuzzy_model, forest_model):
    if list(fuzzy_model.layout) != list(forest_model.layout):
        raise DataError("fuzzy and forest layouts disagree")
    doc = {
        "format": MODEL_FORMAT,
        "classes": list(CLASS_NAMES),
        "fuzzy": fuzzy_model.to_dict(),
        "forest": forest_model.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError("cannot read model bundle %s: %s" % (path, exc))
    if doc.get("format") != MODEL_FORMAT:
        raise DataError("%s is not a model bundle (format %r)"
                        % (path, doc.get("format")))
    bundle = ModelBundle(FuzzyModel.from_dict(doc["fuzzy"]),
                         ForestModel.from_dict(doc["forest"]))
    if list(bundle.fuzzy.layout) != list(bundle.forest.layout):
        raise DataError("model bundle %s has mismatched layouts" % path)
    return bundle


def _check_pipeline(bundle):
    """The bundle must have been trained on this exact feature dictionary."""
    if list(bundle.fuzzy.feature_names) != list(CONTINUOUS_FEATURES) \
            or list(bundle.fuzzy.passthrough) != list(INTEGER_FEATURES):
        raise DataError("model was trained on a different feature layout")


# ---------------- event log ----------------


class _EventWriter:
    """CSV of admitted display events, one row per event."""

    columns = ("tick", "kind", "intention", "directions", "expires", "audio")

    def __init__(self, path):
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(",".join(self.columns) + "\n")
        self.rows = 0

    def write(self, event):
        self._fh.write("%d,%s,%d,%s,%d,%d\n" % (
            event.issued_tick, event.kind, event.intention,
            "|".join(event.directions), event.expires_tick,
            1 if event.audio else 0))
        self.rows += 1

    def close(self):
        self._fh.write("#complete,%d\n" % self.rows)
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._fh.close()
        return False


def read_events(path):
    """Event log back as a list of dicts (directions as tuples)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if tuple(header) != _EventWriter.columns:
            raise DataError("%s is not an event log" % path)
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            tick, kind, intention, dirs, expires, audio = line.split(",")
            out.append({"tick": int(tick), "kind": kind,
                        "intention": int(intention),
                        "directions": tuple(d for d in dirs.split("|") if d),
                        "expires": int(expires), "audio": audio == "1"})
    return out


# ---------------- the tick loop ----------------


def run_experiment(manifest, profile=None, bridge=None, pace=False):
    """Execute one run per the manifest; returns output paths and counters.

    profile overrides the synthetic driver (defaults to DriverProfile with
    the manifest's compliance). bridge, when given, receives one frame per
    tick and supplies ego controls in ego_mode "control"; pace=True holds
    the loop to real-time 20 Hz (for interactive sessions).
    """
    cfg = ScenarioConfig.from_yaml(manifest.scenario, seed=manifest.seed)
    if profile is None:
        profile = DriverProfile(compliance=manifest.compliance)
    bundle = None
    if manifest.assisted:
        bundle = load_model(manifest.model)
        _check_pipeline(bundle)

    n_ticks = int(round(manifest.duration_s * TICK_HZ))
    sim = Sim(cfg, ego_mode=manifest.ego_mode, ego_v0_kmh=profile.v0_kmh)
    driver = (SyntheticDriver(profile, cfg.seed)
              if manifest.ego_mode == "auto" else None)
    lifecycle = warning.WarningLifecycle() if manifest.assisted else None
    smoother = Smoother() if manifest.assisted else None

    os.makedirs(manifest.out_dir, exist_ok=True)
    log_path = os.path.join(manifest.out_dir, LOG_NAME)
    events_path = os.path.join(manifest.out_dir, EVENTS_NAME)
    meta_path = os.path.join(manifest.out_dir, META_NAME)

    stale_ticks = 0
    controls = ControlInput()
    if pace:
        import time
        next_deadline = time.monotonic()

    with LogWriter(log_path) as logw, _EventWriter(events_path) as evw:
        for _ in range(n_ticks):
            tick = sim.step(controls)
            world = sim.world()
            fv = extract(world, 0)

            pred_raw = pred_smooth = -1
            active = ()
            if manifest.assisted:
                mv = bundle.fuzzy.fuzzify(
                    [getattr(fv, n) for n in CONTINUOUS_FEATURES],
                    [getattr(fv, n) for n in INTEGER_FEATURES])
                pred_raw, _votes = forest.predict(bundle.forest, mv)
                pred_smooth = smoother.push(pred_raw)
                lifecycle.step(tick)
                event = warning.evaluate(pred_smooth, fv.ttcs(), tick)
                if event is not None:
                    admitted = lifecycle.offer(event, tick)
                    if admitted is not None:
                        evw.write(admitted)
                active = lifecycle.active()

            if bridge is not None:
                bridge.publish_frame(world, active, pred_smooth)
            if driver is not None:
                controls = driver.decide(fv, active, tick)
                gt = driver.gt_maneuver()
            else:
                neutral_stale = True
                if bridge is not None:
                    controls, neutral_stale = bridge.latest_controls()
                else:
                    controls = ControlInput()
                if neutral_stale:
                    stale_ticks += 1
                gt = 0

            logw.write_row(tick, fv, gt, pred_raw, pred_smooth)
            if pace:
                next_deadline += 1.0 / TICK_HZ
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)

        events_count = evw.rows

    meta = {
        "format": META_FORMAT,
        "scenario": {
            "name": cfg.name,
            "behavior_mix": list(cfg.behavior_mix),
            "vehicle_count": cfg.vehicle_count,
            "road_length": cfg.road_length,
            "weather_tag": cfg.weather_tag,
            "tick_hz": TICK_HZ,
        },
        "seed": cfg.seed,
        "duration_s": manifest.duration_s,
        "tick_count": n_ticks,
        "assisted": manifest.assisted,
        "compliance": profile.compliance,
        "model": manifest.model or None,
        "ego_mode": manifest.ego_mode,
        "driver": asdict(profile) if driver is not None else None,
        "stale_ticks": stale_ticks if driver is None else None,
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")

    return {"log": log_path, "events": events_path, "meta": meta_path,
            "ticks": n_ticks, "event_count": events_count}


# ---------------- collection and training ----------------


def collect(manifest, profile=None):
    """Unassisted scripted run plus ground-truth labeling of the log."""
    if manifest.assisted:
        raise DataError("collection runs are never assisted")
    result = run_experiment(manifest, profile=profile)
    labeled_path = os.path.join(manifest.out_dir, LABELED_NAME)
    labeling.append_label_column(result["log"], labeled_path)
    log = read_log(labeled_path)
    counts = metrics.maneuver_counts(log)
    summary = {CLASS_NAMES[c]: counts[c] for c in (LK, LCL, LCR)}
    print("labeled %d ticks: %s" % (
        result["ticks"],
        ", ".join("%s=%d" % (k, summary[k]) for k in CLASS_NAMES)))
    if summary["LCL"] + summary["LCR"] == 0:
        print("warning: no lane changes in this log; a model trained on it "
              "cannot learn LCL/LCR")
    result["labeled"] = labeled_path
    result["counts"] = summary
    return result


def train_model(log_path, out_path, *, seed=0, tree_count=100, max_depth=12,
                min_leaf=5, mtry=0, holdout_fraction=0.2, driver_id=""):
    """Fit membership functions and a forest from a labeled log.

    The printed accuracy/recall comes from a time-ordered holdout probe
    (MFs and forest refit on the head, scored on the tail); the shipped
    model is then fit on the full log.
    """
    log = read_log(log_path)
    if LABEL_COLUMN not in log:
        raise DataError("%s has no label column; point this at the labeled "
                        "log from collect" % log_path)
    y = log[LABEL_COLUMN]
    if np.unique(y).size < 2:
        raise DataError("training log holds a single class; collect a "
                        "longer run that includes lane changes")
    params = ForestParams(tree_count=tree_count, max_depth=max_depth,
                          min_leaf=min_leaf, mtry=mtry, seed=seed)
    ranges = {n: features.RANGES[n] for n in CONTINUOUS_FEATURES}
    cont = features.continuous_matrix(log)
    ints = features.integer_matrix(log)

    report = {"accuracy": None, "recall": None}
    n = cont.shape[0]
    cut = int(round(n * (1.0 - holdout_fraction)))
    if 0 < cut < n and np.unique(y[:cut]).size >= 2:
        probe_fuzzy = fuzzy.build_mfs(
            {name: log[name][:cut] for name in CONTINUOUS_FEATURES},
            ranges, passthrough=INTEGER_FEATURES)
        probe = forest.train(probe_fuzzy.fuzzify_batch(cont[:cut], ints[:cut]),
                             y[:cut], params, layout=probe_fuzzy.layout,
                             driver_id=driver_id)
        pred, _ = forest.predict_batch(
            probe, probe_fuzzy.fuzzify_batch(cont[cut:], ints[cut:]))
        tail = y[cut:]
        report["accuracy"] = float(np.mean(pred == tail))
        report["recall"] = {}
        for cls in (LK, LCL, LCR):
            mask = tail == cls
            report["recall"][CLASS_NAMES[cls]] = (
                float(np.mean(pred[mask] == cls)) if mask.any() else None)

    fuzzy_model = fuzzy.build_mfs(
        {name: log[name] for name in CONTINUOUS_FEATURES},
        ranges, passthrough=INTEGER_FEATURES)
    model = forest.train(fuzzy_model.fuzzify_batch(cont, ints), y, params,
                         layout=fuzzy_model.layout, driver_id=driver_id)
    save_model(out_path, fuzzy_model, model)

    if report["accuracy"] is not None:
        print("holdout accuracy %.4f" % report["accuracy"])
        for cname in CLASS_NAMES:
            r = report["recall"][cname]
            print("holdout recall %s %s"
                  % (cname, "absent" if r is None else "%.4f" % r))
    else:
        print("holdout probe skipped (head of the log has a single class)")
    print("model written to %s (%d rows, %d trees)"
          % (out_path, n, params.tree_count))
    report.update({"path": out_path, "rows": n})
    return report


# ---------------- reporting ----------------


def _load_run(run_dir):
    meta_path = os.path.join(run_dir, META_NAME)
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError("cannot read %s: %s" % (meta_path, exc))
    if meta.get("format") != META_FORMAT:
        raise DataError("%s is not a run directory" % run_dir)
    log = read_log(os.path.join(run_dir, LOG_NAME))
    return meta, log


def report(run_dirs, out_dir):
    """Group runs by assisted flag, compare, and write text + CSV reports."""
    if not run_dirs:
        raise DataError("no run directories given")
    groups = {"assisted": [], "control": []}
    configs = {"assisted": [], "control": []}
    for run_dir in sorted(run_dirs):
        meta, log = _load_run(run_dir)
        key = "assisted" if meta["assisted"] else "control"
        groups[key].append(metrics.summarize_run(log))
        configs[key].append((json.dumps(meta["scenario"], sort_keys=True),
                             meta["tick_count"], run_dir))
    for key, items in configs.items():
        distinct = {c[0:2] for c in items}
        if len(distinct) > 1:
            raise DataError(
                "%s group mixes different scenario configs; a comparison "
                "needs like-for-like runs (%s)"
                % (key, ", ".join(sorted(c[2] for c in items))))
    for key in ("assisted", "control"):
        if not groups[key]:
            raise DataError("the %s group is empty; pass runs from both "
                            "groups" % key)

    tests = metrics.compare_groups(groups["assisted"], groups["control"])
    names = ("assisted", "control")
    summaries = (groups["assisted"], groups["control"])
    text = metrics.render_text(names, summaries, tests)
    csv = metrics.render_csv(names, summaries)

    os.makedirs(out_dir, exist_ok=True)
    text_path = os.path.join(out_dir, REPORT_TEXT_NAME)
    csv_path = os.path.join(out_dir, REPORT_CSV_NAME)
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(csv)
    print(text, end="")
    return {"text": text_path, "csv": csv_path, "tests": tests}
