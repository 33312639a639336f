"""End-to-end acceptance battery at full experiment scale.

Each test covers one headline property of the stack and prints a PASS line
with its measured numbers once its assertions hold, so a verbose run reads
as a checklist. Session fixtures build the expensive shared artifacts (a
full-scale trained model, twenty paired runs per arm) exactly once.
"""

import json
import os
import threading
import time

import numpy as np
import pytest

from conftest import relabel_oracle, synthetic_log
from test_bridge import WsClient
from test_fuzzy import _dataset, dbscan_oracle

from lcas import features, forest, fuzzy, harness, labeling, metrics, warning
from lcas.bridge import BridgeServer
from lcas.driver import DriverProfile, SyntheticDriver
from lcas.features import (CONTINUOUS_FEATURES, LCL, LCR, LK, extract,
                           read_log)
from lcas.harness import RunManifest, collect, load_model, run_experiment
from lcas.metrics import welch_ttest
from lcas.sim import ControlInput, ScenarioConfig, Sim
from lcas.warning import APPROVAL_TABLE, WARNING_TABLE, evaluate

SEEDS = tuple(range(101, 121))  # the twenty paired experiment seeds


def _passline(name, detail):
    print("PASS %s: %s" % (name, detail))


# ---------------- session artifacts ----------------


@pytest.fixture(scope="session")
def acceptance_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def trained(acceptance_dir, s1_path):
    """30 simulated minutes collected, model trained, 10 minutes held out."""
    t0 = time.perf_counter()
    train_dir = acceptance_dir / "train_run"
    eval_dir = acceptance_dir / "eval_run"
    collect(RunManifest(scenario=s1_path, seed=11, duration_s=1800.0,
                        out_dir=str(train_dir)))
    collect(RunManifest(scenario=s1_path, seed=21, duration_s=600.0,
                        out_dir=str(eval_dir)))
    model_path = str(acceptance_dir / "model.json")
    harness.train_model(str(train_dir / harness.LABELED_NAME), model_path,
                        seed=7)
    return {"model": model_path,
            "eval_labeled": str(eval_dir / harness.LABELED_NAME),
            "pipeline_s": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def classifier_eval(trained):
    t0 = time.perf_counter()
    bundle = load_model(trained["model"])
    log = read_log(trained["eval_labeled"])
    mv = bundle.fuzzy.fuzzify_batch(features.continuous_matrix(log),
                                    features.integer_matrix(log))
    pred, votes = forest.predict_batch(bundle.forest, mv)
    return {"bundle": bundle, "mv": mv, "pred": pred, "votes": votes,
            "labels": log[features.LABEL_COLUMN],
            "eval_s": time.perf_counter() - t0}


def _run_pair_arm(out_dir, scenario, seed, assisted, model, compliance):
    m = RunManifest(scenario=scenario, seed=seed, duration_s=300.0,
                    out_dir=str(out_dir), assisted=assisted,
                    model=model if assisted else "",
                    compliance=compliance)
    run_experiment(m)
    return str(out_dir)


@pytest.fixture(scope="session")
def paired_battery(acceptance_dir, s2_path, trained):
    """Twenty 5-minute dense-traffic seeds, assisted arm vs control arm."""
    t0 = time.perf_counter()
    runs = {"control": [], "assisted": []}
    for seed in SEEDS:
        runs["control"].append(_run_pair_arm(
            acceptance_dir / ("ctl_%d" % seed), s2_path, seed,
            assisted=False, model="", compliance=0.0))
        runs["assisted"].append(_run_pair_arm(
            acceptance_dir / ("ast_%d" % seed), s2_path, seed,
            assisted=True, model=trained["model"], compliance=1.0))
    return {"runs": runs, "elapsed_s": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def unheeded_battery(acceptance_dir, s2_path, trained):
    """The same twenty seeds with the warning path on but never obeyed."""
    dirs = []
    for seed in SEEDS:
        dirs.append(_run_pair_arm(
            acceptance_dir / ("unheeded_%d" % seed), s2_path, seed,
            assisted=True, model=trained["model"], compliance=0.0))
    return dirs


def _near_miss_by_class(run_dirs):
    out = {LCL: [], LCR: []}
    for run_dir in run_dirs:
        log = read_log(os.path.join(run_dir, harness.LOG_NAME))
        for cls in (LCL, LCR):
            v = metrics.near_miss_ratio(log, cls)
            assert v is not None, (run_dir, cls)
            out[cls].append(v)
    return out


# ---------------- fast oracles ----------------


def test_threshold_table_conformance():
    dirs_all = ("f", "b", "fl", "bl", "fr", "br")
    t0 = time.perf_counter()
    checked = mismatches = 0
    for intention in (LK, LCL, LCR):
        wtable = WARNING_TABLE[intention]
        atable = APPROVAL_TABLE[intention]
        defined = tuple(d for d in dirs_all if d in wtable)
        for probe in defined:
            for i in range(121):
                ttc = i / 10.0
                ttcs = {d: 12.0 for d in dirs_all}
                ttcs[probe] = ttc
                got = evaluate(intention, ttcs, tick=0)
                if ttc < wtable[probe]:
                    want = ("warning", (probe,))
                elif ttc >= atable[probe]:
                    want = ("approval", defined)
                else:
                    want = None
                have = None if got is None else (got.kind, got.directions)
                checked += 1
                if have != want:
                    mismatches += 1
    elapsed = time.perf_counter() - t0
    assert mismatches == 0
    assert elapsed < 1.0
    _passline("threshold-table conformance",
              "%d cells, %d mismatches, %.3f s" % (checked, mismatches,
                                                   elapsed))


def test_violation_ratio_oracle():
    def oracle(log, cls, direction, threshold):
        _, windows = relabel_oracle(log["lane"], log["indicator"])
        change = [(a, b) for a, b, c, _ in windows if c == cls]
        if cls == LK:
            change = []
            cursor = 0
            for a, b, _, _ in windows:
                if cursor < a:
                    change.append((cursor, a))
                cursor = max(cursor, b)
            if cursor < len(log["lane"]):
                change.append((cursor, len(log["lane"])))
        if not change:
            return None
        series = log["ttc_" + direction]
        hits = sum(1 for a, b in change
                   if any(float(series[t]) < threshold for t in range(a, b)))
        return hits / len(change)

    t0 = time.perf_counter()
    cells = 0
    for seed in range(500, 550):
        log = synthetic_log(seed, n=600, crossing_rate=0.02)
        for cls in (LK, LCL, LCR):
            for d in metrics.RELEVANT_DIRS[cls]:
                thr = WARNING_TABLE[cls][d]
                assert metrics.violation_ratio(log, cls, d, thr) \
                    == oracle(log, cls, d, thr), (seed, cls, d)
                cells += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _passline("violation-ratio oracle",
              "50 logs, %d cells exact, %.2f s" % (cells, elapsed))


def _drive_log(scenario_path, seed, ticks):
    """lane/indicator trace of a scripted run, same loop order as the
    harness."""
    cfg = ScenarioConfig.from_yaml(scenario_path, seed=seed)
    sim = Sim(cfg)
    driver = SyntheticDriver(DriverProfile(), cfg.seed)
    controls = ControlInput()
    lane = np.empty(ticks, dtype=np.int64)
    ind = np.empty(ticks, dtype=np.int64)
    for t in range(ticks):
        tick = sim.step(controls)
        fv = extract(sim.world(), 0)
        lane[t] = fv.lane
        ind[t] = fv.indicator
        controls = driver.decide(fv, (), tick)
    return lane, ind


def test_labeling_oracle_on_driver_logs(s1_path):
    logs = windows_checked = synthesized = clipped = 0
    for i in range(50):
        lane, ind = _drive_log(s1_path, 300 + i, 1200)
        labels, intervals = labeling.label_log({"lane": lane,
                                                "indicator": ind})
        want_labels, _ = relabel_oracle(lane, ind)
        assert np.array_equal(labels, np.asarray(want_labels)), 300 + i

        change = [m for m in intervals if m.cls != LK]
        diffs = np.diff(lane)
        assert len([m for m in change if m.cls == LCL]) \
            == int(np.count_nonzero(diffs == -1))
        assert len([m for m in change if m.cls == LCR]) \
            == int(np.count_nonzero(diffs == 1))

        prev_crossing = 0
        for m in change:
            windows_checked += 1
            if not m.indicator_used:
                synthesized += 1
                assert m.start_tick == max(prev_crossing, m.end_tick - 50)
                if m.end_tick - prev_crossing >= 50 and m.end_tick >= 50:
                    assert m.end_tick - m.start_tick == 50
                else:
                    clipped += 1  # window ran into the log head
            prev_crossing = m.end_tick
        logs += 1
    _passline("labeling oracle",
              "%d driver logs exact, %d change windows (%d synthesized, "
              "%d clipped at log start)" % (logs, windows_checked,
                                            synthesized, clipped))


def test_fuzzy_coverage_and_clustering(classifier_eval):
    model = classifier_eval["bundle"].fuzzy
    worst = 1.0
    for name in model.feature_names:
        lo, hi = model.ranges[name]
        grid = np.linspace(lo, hi, 1000)
        cover = np.zeros_like(grid)
        for mf in model.mfs[name]:
            cover = np.maximum(cover, mf.membership(grid))
        assert np.all(cover > 0.0), name
        worst = min(worst, float(cover.min()))

    matched = 0
    for seed in range(600, 620):
        xs = _dataset(seed, n=400)
        eps = float(np.ptp(xs)) / 10.0 or 1.0
        md = max(1.0, 0.01 * xs.size)
        got = fuzzy.fn_dbscan(xs, eps, md)
        want_labels, want_core = dbscan_oracle(xs, eps, md)
        assert np.array_equal(got.labels, want_labels), seed
        assert np.array_equal(got.core, want_core), seed
        matched += 1
    _passline("fuzzy coverage and clustering",
              "%d families cover their range grids (floor %.4f); %d "
              "clustering runs match brute force"
              % (len(model.feature_names), worst, matched))


def test_forest_voting_oracle(classifier_eval):
    model = classifier_eval["bundle"].forest
    mv = classifier_eval["mv"][:1000]
    classes, votes = forest.predict_batch(model, mv)

    def walk(t, v):
        base = int(model.offsets[t])
        node = base
        feat, thr = model.feat, model.thr
        left, right = model.left, model.right
        while feat[node] != -1:
            j = int(feat[node])
            node = base + int(left[node] if v[j] <= thr[node]
                              else right[node])
        return int(model.leaf[node])

    for i in range(mv.shape[0]):
        counts = [0, 0, 0]
        for t in range(model.tree_count):
            counts[walk(t, mv[i])] += 1
        assert int(votes[i].sum()) == model.tree_count
        assert list(votes[i]) == counts
        assert classes[i] == counts.index(max(counts))
    _passline("forest voting oracle",
              "1000 vectors, %d trees, votes and majorities exact"
              % model.tree_count)


# ---------------- full-scale behavior ----------------


def test_classifier_quality(trained, classifier_eval):
    pred = classifier_eval["pred"]
    labels = classifier_eval["labels"]
    acc = float(np.mean(pred == labels))
    recalls = {}
    for cls in (LCL, LCR):
        mask = labels == cls
        assert mask.any()
        recalls[cls] = float(np.mean(pred[mask] == cls))
    total_s = trained["pipeline_s"] + classifier_eval["eval_s"]
    assert acc >= 0.90
    assert recalls[LCL] >= 0.70
    assert recalls[LCR] >= 0.70
    assert total_s < 300.0
    _passline("classifier quality",
              "accuracy %.4f, LCL recall %.4f, LCR recall %.4f, "
              "pipeline %.0f s" % (acc, recalls[LCL], recalls[LCR], total_s))


def test_closed_loop_safety_effect(paired_battery):
    ctl = _near_miss_by_class(paired_battery["runs"]["control"])
    ast = _near_miss_by_class(paired_battery["runs"]["assisted"])
    details = []
    for cls, cname in ((LCL, "LCL"), (LCR, "LCR")):
        mean_ctl = float(np.mean(ctl[cls]))
        mean_ast = float(np.mean(ast[cls]))
        r = welch_ttest(ast[cls], ctl[cls])
        assert mean_ast < mean_ctl, (cname, mean_ast, mean_ctl)
        assert r.p < 0.05, (cname, r)
        details.append("%s %.4f -> %.4f (p=%.2g)"
                       % (cname, mean_ctl, mean_ast, r.p))
    assert paired_battery["elapsed_s"] < 900.0
    _passline("closed-loop safety effect",
              "%d paired seeds, %s, battery %.0f s"
              % (len(SEEDS), "; ".join(details),
                 paired_battery["elapsed_s"]))


def test_compliance_dose_response(paired_battery, unheeded_battery):
    ctl = _near_miss_by_class(paired_battery["runs"]["control"])
    unheeded = _near_miss_by_class(unheeded_battery)
    ps = []
    for cls in (LCL, LCR):
        r = welch_ttest(unheeded[cls], ctl[cls])
        assert r.p >= 0.05, (cls, r)
        ps.append(r.p)
    _passline("compliance dose-response",
              "unheeded warnings leave outcomes indistinguishable "
              "(p=%.3g, %.3g over %d seeds)" % (ps[0], ps[1], len(SEEDS)))


def test_determinism(acceptance_dir, s2_path, trained, paired_battery):
    seed = SEEDS[0]
    checked = []
    for arm, assisted in (("ctl", False), ("ast", True)):
        first = acceptance_dir / ("%s_%d" % (arm, seed))
        again = acceptance_dir / ("redo_%s_%d" % (arm, seed))
        _run_pair_arm(again, s2_path, seed, assisted=assisted,
                      model=trained["model"],
                      compliance=1.0 if assisted else 0.0)
        for fname in (harness.LOG_NAME, harness.EVENTS_NAME,
                      harness.META_NAME):
            assert (first / fname).read_bytes() \
                == (again / fname).read_bytes(), (arm, fname)
            checked.append("%s/%s" % (arm, fname))

    run_dirs = (paired_battery["runs"]["assisted"]
                + paired_battery["runs"]["control"])
    rep1 = harness.report(run_dirs, str(acceptance_dir / "report_a"))
    rep2 = harness.report(run_dirs, str(acceptance_dir / "report_b"))
    for key in ("text", "csv"):
        a = open(rep1[key], "rb").read()
        b = open(rep2[key], "rb").read()
        assert a == b, key
    _passline("determinism",
              "%d run files and both report renderings byte-identical"
              % len(checked))


def test_event_lifetime(paired_battery):
    total = 0
    for run_dir in paired_battery["runs"]["assisted"]:
        for ev in harness.read_events(os.path.join(run_dir,
                                                   harness.EVENTS_NAME)):
            assert ev["expires"] - ev["tick"] == warning.EVENT_TICKS, ev
            total += 1
    assert total > 0
    _passline("event lifetime",
              "%d events across %d assisted runs, all live exactly %d ticks"
              % (total, len(paired_battery["runs"]["assisted"]),
                 warning.EVENT_TICKS))


# ---------------- streaming boundary ----------------


def test_bridge_protocol(acceptance_dir, s2_path):
    server = BridgeServer(port=0).start()
    frames = []
    sent_after_tick = [None]

    def client_loop():
        client = WsClient(server.port)
        hello = client.read_json()
        assert hello["type"] == "hello" and hello["tick_hz"] == 20
        try:
            while True:
                msg = client.read_json()
                if msg["type"] != "frame":
                    continue
                frames.append(msg)
                if len(frames) == 10:
                    sent_after_tick[0] = msg["tick"]
                    client.send_json({"type": "control", "v": 1,
                                      "steering": 0.5})
        except OSError:
            pass

    t = threading.Thread(target=client_loop, daemon=True)
    t.start()
    deadline = time.monotonic() + 5.0
    while time.monotonic() < deadline:
        if server._session is not None and server._session._hello_sent:
            break
        time.sleep(0.01)

    m = RunManifest(scenario=s2_path, seed=9, duration_s=6.0,
                    out_dir=str(acceptance_dir / "bridge_run"),
                    ego_mode="control")
    run_experiment(m, bridge=server, pace=True)
    server.close()
    t.join(timeout=5)

    ticks = [f["tick"] for f in frames]
    assert len(ticks) >= 60
    assert all(a < b for a, b in zip(ticks, ticks[1:]))
    steered = 0.5 * np.pi
    hits = [f["tick"] for f in frames
            if abs(f["ego"]["steering"] - steered) < 1e-3]
    assert hits, "steering command never reached the world"
    lag = hits[0] - sent_after_tick[0]
    assert lag <= 3
    assert frames[-1]["ego"]["steering"] == 0.0  # watchdog recentered
    _passline("bridge protocol",
              "%d frames strictly ordered, steering landed %d tick(s) "
              "after send, watchdog recentered" % (len(ticks), lag))
