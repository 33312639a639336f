"""Directional collision warnings and maneuver approvals from TTC thresholds.

Per predicted intention, each relevant direction has a warning threshold;
a direction warns when its TTC is strictly below it. Approval thresholds
sit exactly 2 s above the warning ones, and an approval fires only when
every defined direction clears its approval threshold at once. Events
display for 2 s (40 ticks); warnings carry the audio cue, approvals are
silent.

The lifecycle layer de-duplicates: a direction already showing a warning is
not re-triggered until it expires, an approval is not re-issued while the
same intention's approval is live, and any warning preempts approvals.
"""

from dataclasses import dataclass

from lcas.features import LCL, LCR, LK

EVENT_TICKS = 40  # 2 s at 20 Hz

WARNING_TABLE = {
    LK: {"f": 4.0, "b": 3.0, "fl": 3.5, "bl": 3.5},
    LCL: {"f": 4.5, "b": 4.0, "fl": 5.5, "bl": 5.5},
    LCR: {"f": 4.5, "b": 4.0, "fr": 5.5, "br": 5.5},
}
APPROVAL_TABLE = {
    intention: {d: thr + 2.0 for d, thr in dirs.items()}
    for intention, dirs in WARNING_TABLE.items()
}

_DIR_ORDER = ("f", "b", "fl", "bl", "fr", "br")


@dataclass(frozen=True)
class WarningEvent:
    kind: str  # "warning" or "approval"
    intention: int
    directions: tuple
    issued_tick: int
    expires_tick: int
    audio: bool

    def active_at(self, tick):
        return self.issued_tick <= tick < self.expires_tick


def evaluate(intention, ttcs, tick, warning_table=None, approval_table=None):
    """One tick of threshold logic; returns an event or None.

    ttcs maps direction name to the current TTC (saturated values for
    absent neighbors). Directions outside the intention's defined set are
    ignored entirely.
    """
    wtable = (warning_table or WARNING_TABLE)[intention]
    atable = (approval_table or APPROVAL_TABLE)[intention]
    warned = tuple(d for d in _DIR_ORDER
                   if d in wtable and ttcs[d] < wtable[d])
    if warned:
        return WarningEvent("warning", intention, warned, tick,
                            tick + EVENT_TICKS, audio=True)
    defined = tuple(d for d in _DIR_ORDER if d in atable)
    if all(ttcs[d] >= atable[d] for d in defined):
        return WarningEvent("approval", intention, defined, tick,
                            tick + EVENT_TICKS, audio=False)
    return None


class WarningLifecycle:
    """Tracks active displays and filters re-triggers.

    step(tick) expires old events; offer(event, tick) admits a new event,
    possibly trimmed, and returns what was actually issued (None when fully
    suppressed). Admitted events always live exactly EVENT_TICKS.
    """

    def __init__(self):
        self._active = []

    def step(self, tick):
        self._active = [e for e in self._active if tick < e.expires_tick]

    def active(self, tick=None):
        if tick is None:
            return tuple(self._active)
        return tuple(e for e in self._active if e.active_at(tick))

    def active_warning_directions(self):
        out = set()
        for e in self._active:
            if e.kind == "warning":
                out.update(e.directions)
        return out

    def offer(self, event, tick):
        if event is None:
            return None
        if event.kind == "warning":
            fresh = tuple(d for d in event.directions
                          if d not in self.active_warning_directions())
            if not fresh:
                return None
            admitted = WarningEvent("warning", event.intention, fresh,
                                    tick, tick + EVENT_TICKS, audio=True)
            # a warning owns the display: drop any live approvals
            self._active = [e for e in self._active if e.kind == "warning"]
            self._active.append(admitted)
            return admitted
        # approvals never share the display with a warning
        if any(e.kind == "warning" for e in self._active):
            return None
        if any(e.kind == "approval" and e.intention == event.intention
               for e in self._active):
            return None
        admitted = WarningEvent("approval", event.intention, event.directions,
                                tick, tick + EVENT_TICKS, audio=False)
        self._active = [e for e in self._active if e.kind != "approval"]
        self._active.append(admitted)
        return admitted
