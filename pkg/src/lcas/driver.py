"""Scripted ego driver standing in for the human participants.

A small state machine: cruise, then on a lane-change intention an optional
indicator lead-in, then the lateral maneuver, then a cooldown. Gap checks
before committing are deliberately distance-only, so TTC-based warnings
carry information the driver does not already act on.

Compliance is the experimental knob: when a warning touching the target
side of a pending maneuver is on display, a compliant driver abandons the
attempt (indicator off, stay in lane) and looks again shortly after; a
non-compliant driver carries on. Compliance is drawn once per attempt.
All draws are counter-keyed so runs with compliance 0.0 behave
byte-identically to runs with no warning path at all.
"""

from dataclasses import dataclass

from lcas import rng
from lcas.features import LCL, LCR
from lcas.sim import ControlInput

CRUISE, LEADIN, LATERAL, COOLDOWN = 0, 1, 2, 3

# warning directions that should stall a pending maneuver
_BLOCKING_DIRS = {LCL: ("fl", "bl"), LCR: ("fr", "br")}


@dataclass(frozen=True)
class DriverProfile:
    v0_kmh: float = 122.0
    trigger_ttc: float = 4.0  # overtake when front TTC falls below this
    stuck_gap: float = 32.0  # ... or when boxed this close behind a leader
    stuck_speed_frac: float = 0.9  # while dragged under this share of v0
    indicator_prob: float = 0.85
    compliance: float = 0.0
    reaction_ticks: int = 10  # 0.5 s from warning display to reaction
    leadin_ticks: int = 25
    cooldown_ticks: int = 60
    retry_ticks: int = 20  # pause after an abandoned attempt
    abort_ticks: int = 150  # give up an attempt stuck on failed gap checks
    keep_right_prob: float = 0.012  # per tick, when the road ahead is clear
    front_accept: float = 15.0  # target-lane front gap needed, m
    rear_accept: float = 10.0
    kr_front_ttc: float = 8.0
    kr_front_gap: float = 100.0

    def __post_init__(self):
        if not (0.0 <= self.compliance <= 1.0):
            raise ValueError("compliance must be in [0, 1]")
        if not (0.0 <= self.indicator_prob <= 1.0):
            raise ValueError("indicator_prob must be in [0, 1]")


class SyntheticDriver:
    """Produces per-tick ControlInput from the ego feature vector."""

    def __init__(self, profile, seed):
        self.profile = profile
        self.seed = seed
        self.state = CRUISE
        self.direction = 0
        self.maneuver_seq = 0
        self.use_indicator = False
        self.complies = False
        self.leadin_elapsed = 0
        self.lateral_elapsed = 0
        self.cooldown_left = 0
        self.crossed = False
        self.alerted = False  # a recent warning keeps the indicator habit on
        self._lane_prev = None

    # ---------------- decision pieces ----------------

    def _gaps_ok(self, fv, direction):
        p = self.profile
        if direction == LCL:
            front, rear = fv.d_fl, fv.d_bl
            if fv.lane <= 1:
                return False
        else:
            front, rear = fv.d_fr, fv.d_br
            if fv.lane >= 3:
                return False
        return front >= p.front_accept and rear >= p.rear_accept

    def _want_overtake(self, fv):
        p = self.profile
        stuck = (fv.d_f < p.stuck_gap
                 and fv.v_ego < p.stuck_speed_frac * p.v0_kmh)
        if (fv.ttc_f >= p.trigger_ttc and not stuck) or fv.d_f < 6.0:
            return 0
        can_left = fv.lane > 1
        can_right = fv.lane < 3
        if can_left and self._gaps_ok(fv, LCL):
            return LCL
        if can_right and self._gaps_ok(fv, LCR):
            return LCR
        # boxed in: the urge does not go away, the commit just has to wait
        if can_left:
            return LCL
        if can_right:
            return LCR
        return 0

    def _want_keep_right(self, fv, tick):
        p = self.profile
        if fv.lane >= 3:
            return False
        if fv.ttc_f < p.kr_front_ttc or fv.d_f < p.kr_front_gap:
            return False
        if not self._gaps_ok(fv, LCR):
            return False
        return rng.uniform(self.seed, rng.STREAM_DRIVER, tick, 1) < p.keep_right_prob

    def _warning_blocks(self, active_events):
        dirs = _BLOCKING_DIRS[self.direction]
        for event in active_events:
            if event.kind != "warning":
                continue
            if any(d in event.directions for d in dirs):
                return True
        return False

    def _begin_intention(self, direction, tick):
        self.direction = direction
        self.maneuver_seq += 1
        self.use_indicator = (rng.uniform(self.seed, rng.STREAM_DRIVER,
                                          self.maneuver_seq, 2)
                              < self.profile.indicator_prob) or self.alerted
        self.complies = (rng.uniform(self.seed, rng.STREAM_COMPLIANCE,
                                     self.maneuver_seq)
                         < self.profile.compliance)
        self.leadin_elapsed = 0
        self.state = LEADIN if self.use_indicator else LATERAL
        self.lateral_elapsed = 0
        self.crossed = False

    # ---------------- main step ----------------

    def decide(self, fv, active_events, tick):
        """One tick of driving; returns the ControlInput for the next step.

        fv is this tick's ego feature vector; active_events the warning
        displays currently shown (empty in control runs). The ground-truth
        maneuver phase is exposed afterwards via gt_maneuver().
        """
        p = self.profile
        lane_changed = (self._lane_prev is not None
                        and fv.lane != self._lane_prev)
        self._lane_prev = fv.lane

        if self.state == COOLDOWN:
            self.cooldown_left -= 1
            if self.cooldown_left <= 0:
                self.state = CRUISE
            return ControlInput()

        if self.state == CRUISE:
            want = self._want_overtake(fv)
            if not want and self._want_keep_right(fv, tick):
                want = LCR
            if want:
                self._begin_intention(want, tick)
                if self.state == LATERAL:
                    if self._gaps_ok(fv, self.direction):
                        self.lateral_elapsed = 1
                        return ControlInput(lane_change=self.direction)
                    # no signal and no room: wait for the gap in silence
                    self.state = LEADIN
                if self.use_indicator:
                    return ControlInput(indicator=self.direction)
                return ControlInput()
            return ControlInput()

        if self.state == LEADIN:
            self.leadin_elapsed += 1
            shown = self.direction if self.use_indicator else 0
            if (self.complies and self.leadin_elapsed >= p.reaction_ticks
                    and self._warning_blocks(active_events)):
                # warned off: drop the attempt, look again shortly
                self.state = COOLDOWN
                self.cooldown_left = p.retry_ticks
                self.direction = 0
                self.alerted = True
                return ControlInput()
            if self.use_indicator and self.leadin_elapsed < p.leadin_ticks:
                return ControlInput(indicator=shown)
            # courtesy period over: re-check the gap, commit or keep waiting
            if not self._gaps_ok(fv, self.direction):
                if self.leadin_elapsed >= p.abort_ticks:
                    self.state = COOLDOWN
                    self.cooldown_left = p.retry_ticks
                    self.direction = 0
                    return ControlInput()
                return ControlInput(indicator=shown)
            self.state = LATERAL
            self.lateral_elapsed = 1
            return ControlInput(indicator=shown,
                                lane_change=self.direction)

        # LATERAL: committed; indicator stays on until the lane flips
        self.lateral_elapsed += 1
        if lane_changed:
            self.crossed = True
        if self.lateral_elapsed >= 50:
            self.state = COOLDOWN
            self.cooldown_left = p.cooldown_ticks
            self.direction = 0
            self.alerted = False  # made it across; back to normal habits
            return ControlInput()
        indicator = 0 if (self.crossed or not self.use_indicator) \
            else self.direction
        return ControlInput(indicator=indicator)

    def gt_maneuver(self):
        """Current ground-truth maneuver phase (0 none, else direction)."""
        if self.state in (LEADIN, LATERAL):
            return self.direction
        return 0
