"""Fixed-step highway simulation: three lanes, ring road, behavior-typed traffic.

Geometry: a straight unidirectional highway closed into a ring of
road_length meters so the vehicle population is conserved. Lane 1 is the
leftmost lane; lateral position y grows to the left, with lane i centered
at (3 - i) * 3.5 m. A vehicle's lane_index follows its lateral center, so
the index flips exactly when the center crosses a lane boundary.

Longitudinal motion is an intelligent-driver-style car follower per
behavior class; the ego instead uses a reactive cruise-and-brake rule so
its front TTC actually reaches the short values the assistance stack is
about. Lane changes run a smoothstep lateral spline over 2.5 s with the
indicator set for the whole maneuver. All randomness is drawn
from counter-based streams keyed on (seed, stream, vehicle, tick), so one
subsystem's draws never shift another's.

Everything steps at 20 Hz; one step is exactly 0.05 s.
"""

import math
from dataclasses import dataclass

import numpy as np
import yaml

from lcas import rng

TICK_HZ = 20
DT = 0.05
LANE_COUNT = 3
LANE_WIDTH = 3.5
VEHICLE_LENGTH = 4.5
NEIGHBOR_RANGE = 250.0
TTC_MAX = 12.0
V_MAX_KMH = 220.0
T_CHANGE_S = 2.5
LC_TICKS = int(T_CHANGE_S * TICK_HZ)
ANGLE_CLIP = 3.14
KMH = 3.6  # m/s to km/h

CAUTIOUS, NORMAL, AGGRESSIVE, EGO = 0, 1, 2, 3
BEHAVIOR_NAMES = ("Cautious", "Normal", "Aggressive", "Ego")

DIRECTIONS = ("f", "b", "fl", "bl", "fr", "br")

# car-following parameters per behavior class: desired headway T (s),
# max accel A, comfortable decel B (m/s^2), standstill gap s0 (m), and
# eta, the weight on the approach-anticipation term. Aggressive drivers
# run short headways and brake late, which is what carries their front
# TTC down through the overtake window against slower leaders; careful
# drivers anticipate early and only see short TTCs when someone cuts in.
_IDM_T = (1.65, 1.2, 0.42, 1.2)
_IDM_A = (1.0, 1.5, 2.8, 2.0)
_IDM_B = (1.5, 2.0, 3.2, 2.5)
_IDM_S0 = (3.0, 2.5, 2.0, 2.5)
_IDM_ETA = (1.0, 0.6, 0.12, 1.0)
_V0_BAND_KMH = ((85.0, 100.0), (100.0, 120.0), (125.0, 150.0))
_ACCEL_MIN, _ACCEL_MAX = -8.0, 4.0

# ego car following in "auto" mode is reactive rather than anticipatory:
# hold the desired speed, brake only once the front TTC is already short.
# The assistance stack exists because this driving style keeps producing
# low-TTC situations.
_EGO_CRUISE_GAIN = 0.6
_EGO_SOFT_TTC = 3.0
_EGO_HARD_TTC = 2.0
_EGO_SOFT_BRAKE = -3.0
_EGO_HARD_BRAKE = -6.0
_EGO_PANIC_GAP = 7.0

# surrounding-vehicle lane-change triggers: change when front TTC < value,
# except aggressive vehicles which use the overtake window [2.2, 3.0]
_TRIGGER_CAUTIOUS = 6.0
_TRIGGER_NORMAL = 4.0
_AGGRESSIVE_LO, _AGGRESSIVE_HI = 2.2, 3.0

# target-lane acceptance for surrounding vehicles (meters / seconds)
_SUR_FRONT_GAP = 25.0
_SUR_REAR_GAP = 15.0
_SUR_REAR_TTC = 2.5

# keep-right: per-tick probability of drifting back right when the road
# ahead is clear, per behavior class (aggressive overtakes are short)
_KR_PROB = (0.003, 0.004, 0.02)
_KR_FRONT_TTC = 8.0
_KR_FRONT_GAP = 80.0
_KR_TARGET_FRONT = 30.0
_KR_TARGET_REAR = 20.0

_LC_COOLDOWN = 40  # ticks after a completed change before the next trigger


class ConfigError(ValueError):
    """Fatal scenario or world configuration problem."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    behavior_mix: tuple  # (cautious, normal, aggressive) fractions
    vehicle_count: int
    road_length: float
    seed: int
    weather_tag: str = "Clear"
    tick_hz: int = TICK_HZ

    def __post_init__(self):
        if abs(sum(self.behavior_mix) - 1.0) > 1e-9:
            raise ConfigError("behavior_mix must sum to 1.0")
        if len(self.behavior_mix) != 3 or min(self.behavior_mix) < 0:
            raise ConfigError("behavior_mix needs three non-negative fractions")
        if self.tick_hz != TICK_HZ:
            raise ConfigError("tick_hz is fixed at %d" % TICK_HZ)
        if self.vehicle_count < 0:
            raise ConfigError("vehicle_count must be non-negative")
        if self.road_length < 300.0:
            raise ConfigError("road_length too short for spawning")
        if self.weather_tag not in ("Clear", "LightFog"):
            raise ConfigError("weather_tag must be Clear or LightFog")

    @classmethod
    def from_yaml(cls, path, seed=None):
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        try:
            mix = raw["behavior_mix"]
            cfg = cls(
                name=str(raw["name"]),
                behavior_mix=(float(mix["cautious"]), float(mix["normal"]),
                              float(mix["aggressive"])),
                vehicle_count=int(raw["vehicle_count"]),
                road_length=float(raw["road_length"]),
                seed=int(raw.get("seed", 1)) if seed is None else int(seed),
                weather_tag=str(raw.get("weather_tag", "Clear")),
                tick_hz=int(raw.get("tick_hz", TICK_HZ)),
            )
        except KeyError as exc:
            raise ConfigError("scenario file missing key: %s" % exc) from exc
        return cfg


@dataclass(frozen=True)
class VehicleState:
    id: int
    s: float
    lane_index: int
    lateral_offset: float
    v: float  # km/h
    a: float
    heading: float
    steering: float
    indicator: int
    gear: int
    behavior: str


@dataclass
class ControlInput:
    steering: float = 0.0  # normalized [-1, 1], positive steers left
    throttle: float = 0.0
    brake: float = 0.0
    indicator: int = 0
    lane_change: int = 0  # scripted maneuver request: 0 none, 1 left, 2 right

    def clamped(self):
        return ControlInput(
            steering=min(1.0, max(-1.0, float(self.steering))),
            throttle=min(1.0, max(0.0, float(self.throttle))),
            brake=min(1.0, max(0.0, float(self.brake))),
            indicator=int(self.indicator) if self.indicator in (0, 1, 2) else 0,
            lane_change=int(self.lane_change) if self.lane_change in (0, 1, 2) else 0,
        )


@dataclass(frozen=True)
class Neighbor:
    id: int
    gap: float  # bumper gap, m
    rel_speed: float  # other minus ego, km/h
    ttc: float


@dataclass(frozen=True)
class NeighborSet:
    f: Neighbor = None
    b: Neighbor = None
    fl: Neighbor = None
    bl: Neighbor = None
    fr: Neighbor = None
    br: Neighbor = None

    def slot(self, direction):
        return getattr(self, direction)

    def ttcs(self):
        """TTC per direction with absent slots saturated to the table max."""
        return {d: (self.slot(d).ttc if self.slot(d) is not None else TTC_MAX)
                for d in DIRECTIONS}


def lane_center(lane_index):
    return (LANE_COUNT - lane_index) * LANE_WIDTH


def lane_from_y(y):
    idx = LANE_COUNT - int(math.floor(y / LANE_WIDTH + 0.5))
    return min(LANE_COUNT, max(1, idx))


def gear_for_speed(v_kmh):
    if v_kmh < 20.0:
        return 1
    if v_kmh < 40.0:
        return 2
    if v_kmh < 70.0:
        return 3
    if v_kmh < 100.0:
        return 4
    return 5


def ttc(gap, closing_speed):
    """Seconds to collision at constant speeds, clipped to [0, 12].

    closing_speed is m/s, positive when the gap is shrinking. Non-closing
    pairs saturate at the table maximum.
    """
    if gap < 0:
        raise ValueError("gap must be non-negative")
    if closing_speed <= 0.0:
        return TTC_MAX
    return min(TTC_MAX, max(0.0, gap / closing_speed))


def _smoothstep(tau):
    return tau * tau * (3.0 - 2.0 * tau)


class WorldState:
    """Immutable per-tick snapshot. Arrays are private copies."""

    __slots__ = ("tick", "road_length", "seed", "ego_mode", "ids", "s", "y",
                 "v", "a", "vy", "lane", "indicator", "behavior", "heading",
                 "steering", "gear", "_extra")

    def __init__(self, tick, road_length, seed, ego_mode, ids, s, y, v, a, vy,
                 lane, indicator, behavior, heading, steering, gear, extra):
        self.tick = tick
        self.road_length = road_length
        self.seed = seed
        self.ego_mode = ego_mode
        self.ids = ids
        self.s = s
        self.y = y
        self.v = v
        self.a = a
        self.vy = vy
        self.lane = lane
        self.indicator = indicator
        self.behavior = behavior
        self.heading = heading
        self.steering = steering
        self.gear = gear
        self._extra = extra

    def index_of(self, vid):
        idx = np.flatnonzero(self.ids == vid)
        if idx.size != 1:
            raise ConfigError("vehicle id %r not present exactly once" % vid)
        return int(idx[0])

    def vehicle(self, vid):
        i = self.index_of(vid)
        lane_i = int(self.lane[i])
        return VehicleState(
            id=int(self.ids[i]),
            s=float(self.s[i]),
            lane_index=lane_i,
            lateral_offset=float(self.y[i] - lane_center(lane_i)),
            v=min(V_MAX_KMH, max(0.0, float(self.v[i]) * KMH)),
            a=float(self.a[i]),
            heading=min(ANGLE_CLIP, max(-ANGLE_CLIP, float(self.heading[i]))),
            steering=min(ANGLE_CLIP, max(-ANGLE_CLIP, float(self.steering[i]))),
            indicator=int(self.indicator[i]),
            gear=int(self.gear[i]),
            behavior=BEHAVIOR_NAMES[int(self.behavior[i])],
        )

    def vehicles(self):
        return [self.vehicle(int(v)) for v in self.ids]


def neighbors(world, ego_id):
    """Nearest vehicle per direction within 250 m, as a NeighborSet."""
    i = world.index_of(ego_id)
    return _neighbors_from_arrays(world.s, world.v, world.lane,
                                  world.road_length, i)


def _nearest(s, v, members, s_ego, v_ego, L, front):
    if members.size == 0:
        return None, None, None
    if front:
        dist = np.mod(s[members] - s_ego, L)
    else:
        dist = np.mod(s_ego - s[members], L)
    k = int(np.argmin(dist))
    gap = float(dist[k]) - VEHICLE_LENGTH
    if gap > NEIGHBOR_RANGE:
        return None, None, None
    return int(members[k]), max(0.0, gap), float(v[members[k]])


def _neighbors_from_arrays(s, v, lane, L, ego_idx):
    s_ego = s[ego_idx]
    v_ego = v[ego_idx]
    ego_lane = int(lane[ego_idx])
    slots = {}
    for direction in DIRECTIONS:
        target = ego_lane
        if direction in ("fl", "bl"):
            target = ego_lane - 1
        elif direction in ("fr", "br"):
            target = ego_lane + 1
        if target < 1 or target > LANE_COUNT:
            slots[direction] = None
            continue
        members = np.flatnonzero(lane == target)
        members = members[members != ego_idx]
        front = direction in ("f", "fl", "fr")
        idx, gap, v_other = _nearest(s, v, members, s_ego, v_ego, L, front)
        if idx is None:
            slots[direction] = None
            continue
        closing = (v_ego - v_other) if front else (v_other - v_ego)
        slots[direction] = Neighbor(
            id=idx, gap=gap, rel_speed=(v_other - v_ego) * KMH,
            ttc=ttc(gap, closing))
    return NeighborSet(**slots)


def _largest_remainder(fractions, total):
    raw = [f * total for f in fractions]
    base = [int(math.floor(r)) for r in raw]
    short = total - sum(base)
    order = sorted(range(len(raw)), key=lambda k: (-(raw[k] - base[k]), k))
    for k in order[:short]:
        base[k] += 1
    return base


class Sim:
    """Mutable stepping engine; use world() to take immutable snapshots.

    ego_mode selects how the ego moves: "auto" keeps the built-in reactive
    follower in charge of speed and accepts scripted lane_change requests
    (synthetic driver runs); "control" obeys throttle/brake/steering
    directly (human cockpit runs).
    """

    def __init__(self, config, ego_mode="auto", ego_v0_kmh=118.0,
                 ego_start_lane=2):
        self.config = config
        self.seed = config.seed
        self.ego_mode = ego_mode
        self.tick = 0
        n = config.vehicle_count + 1  # plus ego
        L = config.road_length
        self.L = L
        self.n = n

        self.ids = np.arange(n, dtype=np.int64)
        self.s = np.zeros(n)
        self.y = np.zeros(n)
        self.v = np.zeros(n)
        self.a = np.zeros(n)
        self.vy = np.zeros(n)
        self.v0 = np.zeros(n)
        self.lane = np.zeros(n, dtype=np.int64)
        self.indicator = np.zeros(n, dtype=np.int64)
        self.behavior = np.zeros(n, dtype=np.int64)
        self.heading = np.zeros(n)
        self.steering = np.zeros(n)
        self.gear = np.ones(n, dtype=np.int64)
        self.lc_dir = np.zeros(n, dtype=np.int64)
        self.lc_start = np.full(n, -1, dtype=np.int64)
        self.lc_from_y = np.zeros(n)
        self.lc_to_y = np.zeros(n)
        self.cooldown_until = np.zeros(n, dtype=np.int64)
        self.ego_heading_state = 0.0

        self._spawn(ego_v0_kmh, ego_start_lane)
        self._refresh_gears()

    # ---------------- spawning ----------------

    def _spawn(self, ego_v0_kmh, ego_start_lane):
        cfg = self.config
        n_sur = cfg.vehicle_count
        quotas = _largest_remainder(cfg.behavior_mix, n_sur)
        pool = ([CAUTIOUS] * quotas[0] + [NORMAL] * quotas[1]
                + [AGGRESSIVE] * quotas[2])
        order = rng.shuffled(range(n_sur), self.seed, rng.STREAM_SPAWN, 0)
        for k in range(n_sur):
            self.behavior[1 + k] = pool[order[k]]

        self.behavior[0] = EGO
        self.lane[0] = ego_start_lane
        self.y[0] = lane_center(ego_start_lane)
        self.s[0] = 0.0
        self.v0[0] = ego_v0_kmh / KMH
        self.v[0] = self.v0[0]

        # surrounding vehicles round-robin across lanes, evenly spaced with
        # jitter inside a band that keeps everyone clear of the ego at start
        lane_members = {1: [], 2: [], 3: []}
        for k in range(n_sur):
            lane_members[1 + (k % LANE_COUNT)].append(1 + k)
        band_lo, band_hi = 60.0, self.L - 60.0
        usable = band_hi - band_lo
        for lane_idx, members in lane_members.items():
            if not members:
                continue
            spacing = usable / len(members)
            if spacing < 50.0:
                raise ConfigError(
                    "vehicle_count too high for road_length (lane %d spacing %.1f m)"
                    % (lane_idx, spacing))
            for j, vid in enumerate(members):
                jitter = rng.uniform_range(-0.3, 0.3, self.seed,
                                           rng.STREAM_SPAWN, vid, 1)
                self.s[vid] = band_lo + (j + 0.5 + jitter) * spacing
                self.lane[vid] = lane_idx
                self.y[vid] = lane_center(lane_idx)
                lo, hi = _V0_BAND_KMH[self.behavior[vid]]
                self.v0[vid] = rng.uniform_range(lo, hi, self.seed,
                                                 rng.STREAM_SPAWN, vid, 2) / KMH
                self.v[vid] = self.v0[vid]

    # ---------------- per-tick helpers ----------------

    def _lane_order(self):
        """Sorted member indices per lane, by longitudinal position."""
        out = {}
        for lane_idx in range(1, LANE_COUNT + 1):
            members = np.flatnonzero(self.lane == lane_idx)
            out[lane_idx] = members[np.argsort(self.s[members], kind="stable")]
        return out

    def _front_arrays(self, lane_order):
        """Front gap (bumper), closing speed, and leader speed per vehicle."""
        gap = np.full(self.n, self.L)
        closing = np.zeros(self.n)
        for members in lane_order.values():
            if members.size == 0:
                continue
            nxt = np.roll(members, -1)
            g = np.mod(self.s[nxt] - self.s[members], self.L) - VEHICLE_LENGTH
            if members.size == 1:
                g = np.array([self.L - VEHICLE_LENGTH])
            gap[members] = np.maximum(0.0, g)
            closing[members] = self.v[members] - self.v[nxt]
            if members.size == 1:
                closing[members] = 0.0
        return gap, closing

    def _idm_accel(self, gap, closing):
        beh = self.behavior
        T = np.take(_IDM_T, beh)
        A = np.take(_IDM_A, beh)
        B = np.take(_IDM_B, beh)
        s0 = np.take(_IDM_S0, beh)
        eta = np.take(_IDM_ETA, beh)
        v = self.v
        with np.errstate(divide="ignore", invalid="ignore"):
            sstar = s0 + v * T + eta * v * closing / (2.0 * np.sqrt(A * B))
            sstar = np.maximum(sstar, 0.0)
            acc = A * (1.0 - (v / self.v0) ** 4
                       - (sstar / np.maximum(gap, 0.5)) ** 2)
        return np.clip(acc, _ACCEL_MIN, _ACCEL_MAX)

    def _ego_follow_accel(self, gap, closing):
        """Reactive ego speed control: cruise plus tiered late braking."""
        acc = _EGO_CRUISE_GAIN * (self.v0[0] - self.v[0])
        if gap < _EGO_PANIC_GAP:
            return _ACCEL_MIN
        t = ttc(gap, closing)
        if t < _EGO_HARD_TTC:
            acc = min(acc, _EGO_HARD_BRAKE)
        elif t < _EGO_SOFT_TTC:
            acc = min(acc, _EGO_SOFT_BRAKE)
        return min(max(acc, _ACCEL_MIN), _ACCEL_MAX)

    def _target_lane_gaps(self, vid, target_lane, lane_order):
        """(front gap, rear gap, rear closing speed) toward target lane."""
        members = lane_order[target_lane]
        members = members[members != vid]
        if members.size == 0:
            return self.L, self.L, 0.0
        ahead = np.mod(self.s[members] - self.s[vid], self.L)
        k_f = int(np.argmin(ahead))
        k_b = int(np.argmax(ahead))
        front_gap = max(0.0, float(ahead[k_f]) - VEHICLE_LENGTH)
        rear_gap = max(0.0, self.L - float(ahead[k_b]) - VEHICLE_LENGTH)
        rear_closing = float(self.v[members[k_b]] - self.v[vid])
        return front_gap, rear_gap, rear_closing

    def _accept_target(self, vid, target_lane, lane_order,
                       front_need, rear_need, rear_ttc_need):
        fg, bg, bc = self._target_lane_gaps(vid, target_lane, lane_order)
        if fg < front_need or bg < rear_need:
            return False
        return ttc(bg, bc) >= rear_ttc_need

    def _begin_lane_change(self, vid, direction, tick):
        target = int(self.lane[vid]) + (-1 if direction == 1 else 1)
        self.lc_dir[vid] = direction
        self.lc_start[vid] = tick
        self.lc_from_y[vid] = self.y[vid]
        self.lc_to_y[vid] = lane_center(target)
        if vid != 0:
            self.indicator[vid] = direction

    def _surrounding_decisions(self, tick, lane_order, gap_f, closing_f):
        ttc_f = np.where(closing_f > 0.0,
                         np.clip(gap_f / np.where(closing_f > 0.0, closing_f, 1.0),
                                 0.0, TTC_MAX),
                         TTC_MAX)
        beh = self.behavior
        eligible = ((self.ids != 0) & (self.lc_dir == 0)
                    & (tick >= self.cooldown_until))
        trigger = np.where(
            beh == AGGRESSIVE,
            (ttc_f >= _AGGRESSIVE_LO) & (ttc_f <= _AGGRESSIVE_HI),
            np.where(beh == CAUTIOUS, ttc_f < _TRIGGER_CAUTIOUS,
                     ttc_f < _TRIGGER_NORMAL))
        for vid in np.flatnonzero(eligible & trigger):
            vid = int(vid)
            started = False
            for direction, delta in ((1, -1), (2, 1)):
                target = int(self.lane[vid]) + delta
                if target < 1 or target > LANE_COUNT:
                    continue
                if self._accept_target(vid, target, lane_order, _SUR_FRONT_GAP,
                                       _SUR_REAR_GAP, _SUR_REAR_TTC):
                    self._begin_lane_change(vid, direction, tick)
                    started = True
                    break
            if started:
                continue

        # keep-right drift back when the road ahead is clear
        kr = (eligible & (self.lc_dir == 0) & (self.lane < LANE_COUNT)
              & (ttc_f >= _KR_FRONT_TTC) & (gap_f >= _KR_FRONT_GAP))
        for vid in np.flatnonzero(kr):
            vid = int(vid)
            p = _KR_PROB[int(self.behavior[vid])]
            if rng.uniform(self.seed, rng.STREAM_BEHAVIOR, vid, tick) >= p:
                continue
            target = int(self.lane[vid]) + 1
            if self._accept_target(vid, target, lane_order, _KR_TARGET_FRONT,
                                   _KR_TARGET_REAR, _SUR_REAR_TTC):
                self._begin_lane_change(vid, 2, tick)

    # ---------------- stepping ----------------

    def step(self, controls=None):
        """Advance the world exactly one tick (1/20 s)."""
        c = (controls or ControlInput()).clamped()
        t = self.tick
        lane_order = self._lane_order()
        gap_f, closing_f = self._front_arrays(lane_order)
        acc = self._idm_accel(gap_f, closing_f)

        self._surrounding_decisions(t, lane_order, gap_f, closing_f)

        # ego maneuver request from the driver (scripted-spline interface)
        if c.lane_change in (1, 2) and self.lc_dir[0] == 0:
            target = int(self.lane[0]) + (-1 if c.lane_change == 1 else 1)
            if 1 <= target <= LANE_COUNT:
                self._begin_lane_change(0, c.lane_change, t)
        self.indicator[0] = c.indicator

        if self.ego_mode == "control":
            acc[0] = c.throttle * 3.0 - c.brake * 8.0
        else:
            acc[0] = self._ego_follow_accel(float(gap_f[0]),
                                            float(closing_f[0]))
        self.a = acc

        # integrate longitudinal motion
        self.v = np.clip(self.v + acc * DT, 0.0, V_MAX_KMH / KMH)
        self.s = np.mod(self.s + self.v * DT, self.L)

        # lateral: splines for active maneuvers, lane hold otherwise
        self.vy.fill(0.0)
        active = np.flatnonzero(self.lc_dir != 0)
        for vid in active:
            vid = int(vid)
            tau = (t + 1 - self.lc_start[vid]) / float(LC_TICKS)
            if tau >= 1.0:
                self.y[vid] = self.lc_to_y[vid]
                self.vy[vid] = 0.0
                self.lc_dir[vid] = 0
                self.lc_start[vid] = -1
                self.cooldown_until[vid] = t + 1 + _LC_COOLDOWN
                if vid != 0:
                    self.indicator[vid] = 0
            else:
                span = self.lc_to_y[vid] - self.lc_from_y[vid]
                self.y[vid] = self.lc_from_y[vid] + span * _smoothstep(tau)
                self.vy[vid] = span * 6.0 * tau * (1.0 - tau) / T_CHANGE_S

        if self.ego_mode == "control" and self.lc_dir[0] == 0:
            # kinematic steering: command sets a heading target, heading
            # drives lateral speed; positive steering moves left (+y)
            target = c.steering * 0.10
            self.ego_heading_state += (target - self.ego_heading_state) * 0.2
            self.vy[0] = self.v[0] * math.sin(self.ego_heading_state)
            self.y[0] = min(lane_center(1) + LANE_WIDTH / 2 - 0.1,
                            max(lane_center(3) - LANE_WIDTH / 2 + 0.1,
                                self.y[0] + self.vy[0] * DT))

        self.lane = np.clip(
            LANE_COUNT - np.floor(self.y / LANE_WIDTH + 0.5).astype(np.int64),
            1, LANE_COUNT)

        # derived pose features
        with np.errstate(invalid="ignore"):
            self.heading = np.clip(
                np.arctan2(self.vy, np.maximum(self.v, 1e-6)),
                -ANGLE_CLIP, ANGLE_CLIP)
        if self.ego_mode == "control":
            self.heading[0] = min(ANGLE_CLIP, max(-ANGLE_CLIP,
                                                  self.ego_heading_state))
            self.steering = np.clip(2.0 * self.heading, -ANGLE_CLIP, ANGLE_CLIP)
            self.steering[0] = min(ANGLE_CLIP, max(-ANGLE_CLIP,
                                                   c.steering * math.pi))
        else:
            self.steering = np.clip(2.0 * self.heading, -ANGLE_CLIP, ANGLE_CLIP)

        self._refresh_gears()
        self.tick = t + 1
        return self.tick

    def _refresh_gears(self):
        v_kmh = self.v * KMH
        self.gear = np.select(
            [v_kmh < 20.0, v_kmh < 40.0, v_kmh < 70.0, v_kmh < 100.0],
            [1, 2, 3, 4], default=5).astype(np.int64)

    # ---------------- snapshots ----------------

    def world(self):
        return WorldState(
            tick=self.tick, road_length=self.L, seed=self.seed,
            ego_mode=self.ego_mode, ids=self.ids.copy(), s=self.s.copy(),
            y=self.y.copy(), v=self.v.copy(), a=self.a.copy(),
            vy=self.vy.copy(), lane=self.lane.copy(),
            indicator=self.indicator.copy(), behavior=self.behavior.copy(),
            heading=self.heading.copy(), steering=self.steering.copy(),
            gear=self.gear.copy(),
            extra=(self.v0.copy(), self.lc_dir.copy(), self.lc_start.copy(),
                   self.lc_from_y.copy(), self.lc_to_y.copy(),
                   self.cooldown_until.copy(), self.ego_heading_state,
                   self.config))

    @classmethod
    def from_world(cls, world):
        ids = np.asarray(world.ids)
        if np.unique(ids).size != ids.size:
            raise ConfigError("world has duplicate vehicle ids")
        v0, lc_dir, lc_start, lc_from_y, lc_to_y, cooldown, ehs, config = \
            world._extra
        sim = cls.__new__(cls)
        sim.config = config
        sim.seed = world.seed
        sim.ego_mode = world.ego_mode
        sim.tick = world.tick
        sim.L = world.road_length
        sim.n = ids.size
        sim.ids = ids.copy()
        sim.s = np.asarray(world.s, dtype=np.float64).copy()
        sim.y = np.asarray(world.y, dtype=np.float64).copy()
        sim.v = np.asarray(world.v, dtype=np.float64).copy()
        sim.a = np.asarray(world.a, dtype=np.float64).copy()
        sim.vy = np.asarray(world.vy, dtype=np.float64).copy()
        sim.v0 = v0.copy()
        sim.lane = np.asarray(world.lane, dtype=np.int64).copy()
        sim.indicator = np.asarray(world.indicator, dtype=np.int64).copy()
        sim.behavior = np.asarray(world.behavior, dtype=np.int64).copy()
        sim.heading = np.asarray(world.heading, dtype=np.float64).copy()
        sim.steering = np.asarray(world.steering, dtype=np.float64).copy()
        sim.gear = np.asarray(world.gear, dtype=np.int64).copy()
        sim.lc_dir = lc_dir.copy()
        sim.lc_start = lc_start.copy()
        sim.lc_from_y = lc_from_y.copy()
        sim.lc_to_y = lc_to_y.copy()
        sim.cooldown_until = cooldown.copy()
        sim.ego_heading_state = ehs
        return sim


def step(world, controls=None):
    """Pure-style step: rebuild the engine from a snapshot, advance, snapshot.

    Convenience for tests and small scripts; long runs should hold a Sim.
    """
    sim = Sim.from_world(world)
    sim.step(controls)
    return sim.world()
