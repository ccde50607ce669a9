"""Default-deny visibility policy per (application, class).

A PolicyStore starts with every taxonomy class Hidden, detects first-time
class appearances, answers three-dimension group queries, applies user
interactions for the group-based technique and for both baselines, and
hands out immutable per-frame snapshots. Every state change goes through
apply_interaction and is audited.

The policy digest is the lowercase hex SHA-256 of the newline-joined,
name-sorted ``class=State`` lines of the effective per-class visibility
(slider level folded in), so equal digests mean identical sanitization
behavior in any mode.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .taxonomy import (
    Dimension,
    NotFoundError,
    Taxonomy,
    ValidationError,
    normalize_name as _norm,
    parse_dimension,
)


class VisibilityState(Enum):
    HIDDEN = "Hidden"
    REVEALED = "Revealed"


class Resolution(Enum):
    HIDDEN = "Hidden"
    REVEALED = "Revealed"
    NOT_SENSITIVE = "NotSensitive"


class Mode(Enum):
    VISGUARDIAN = "VisGuardian"
    SLIDER_BASELINE = "SliderBaseline"
    OBJECT_BASELINE = "ObjectBaseline"


class EventKind(Enum):
    SELECT_OBJECT = "SelectObject"
    TOGGLE_CLASS = "ToggleClass"
    APPLY_GROUP = "ApplyGroup"
    SET_CLASS = "SetClass"
    SET_SLIDER = "SetSlider"


class ModeMismatchError(ValueError):
    """Event kind is not valid for the store's mode."""


class InvalidLevelError(ValueError):
    """Slider level outside 1..5."""


# Cumulative hidden sets for the 5-position slider baseline, lowest to
# highest privacy. Position 1 hides nothing; position 5 hides everything.
SLIDER_LEVELS: Dict[int, frozenset] = {
    1: frozenset(),
    2: frozenset({"person", "medicine", "underwear", "license plate", "jewelry"}),
    3: frozenset(
        {
            "person", "medicine", "underwear", "license plate", "jewelry",
            "toilet", "mobile phone", "laptop computer", "gun", "drunk",
        }
    ),
    4: frozenset(
        {
            "person", "medicine", "underwear", "license plate", "jewelry",
            "toilet", "mobile phone", "laptop computer", "gun", "drunk",
            "wheelchair", "signed document", "id card", "checkbook",
            "swimsuit", "calendar",
        }
    ),
    5: frozenset(
        {
            "person", "medicine", "underwear", "license plate", "jewelry",
            "toilet", "mobile phone", "laptop computer", "gun", "drunk",
            "wheelchair", "signed document", "id card", "checkbook",
            "swimsuit", "calendar",
            "skirt", "pajamas", "legging", "file cabinet", "book", "badge",
        }
    ),
}

MIN_SLIDER_LEVEL = 1
MAX_SLIDER_LEVEL = 5
DEFAULT_SLIDER_LEVEL = 5  # obfuscate all: matches the default-deny posture


def slider_hidden_classes(level: int, taxonomy: Taxonomy) -> frozenset:
    """Taxonomy members hidden at a slider level.

    Position 5 means "obfuscate all", so it hides every member even in a
    custom taxonomy whose classes are absent from the level table.
    """
    if not MIN_SLIDER_LEVEL <= level <= MAX_SLIDER_LEVEL:
        raise InvalidLevelError(f"slider level must be in 1..5, got {level}")
    members = frozenset(taxonomy.classes)
    if level == MAX_SLIDER_LEVEL:
        return members
    return SLIDER_LEVELS[level] & members


@dataclass(frozen=True)
class InteractionEvent:
    """One atomic user action. Only the fields for its kind are set."""

    kind: EventKind
    class_name: Optional[str] = None
    anchor: Optional[str] = None
    dimension: Optional[Dimension] = None
    action: Optional[VisibilityState] = None
    state: Optional[VisibilityState] = None
    level: Optional[int] = None
    track_id: Optional[int] = None
    timestamp: float = 0.0

    @classmethod
    def select(cls, track_id: int, class_name: str, timestamp: float = 0.0) -> "InteractionEvent":
        return cls(EventKind.SELECT_OBJECT, class_name=class_name, track_id=track_id, timestamp=timestamp)

    @classmethod
    def toggle(cls, class_name: str, timestamp: float = 0.0) -> "InteractionEvent":
        return cls(EventKind.TOGGLE_CLASS, class_name=class_name, timestamp=timestamp)

    @classmethod
    def apply_group(
        cls,
        anchor: str,
        dimension: Union[Dimension, str],
        action: Union[VisibilityState, str],
        timestamp: float = 0.0,
    ) -> "InteractionEvent":
        return cls(
            EventKind.APPLY_GROUP,
            anchor=anchor,
            dimension=parse_dimension(dimension),
            action=_parse_action(action),
            timestamp=timestamp,
        )

    @classmethod
    def set_class(
        cls, class_name: str, state: Union[VisibilityState, str], timestamp: float = 0.0
    ) -> "InteractionEvent":
        return cls(EventKind.SET_CLASS, class_name=class_name, state=_parse_state(state), timestamp=timestamp)

    @classmethod
    def set_slider(cls, level: int, timestamp: float = 0.0) -> "InteractionEvent":
        return cls(EventKind.SET_SLIDER, level=level, timestamp=timestamp)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "timestamp": self.timestamp}
        if self.class_name is not None:
            out["class"] = self.class_name
        if self.anchor is not None:
            out["anchor"] = self.anchor
        if self.dimension is not None:
            out["dimension"] = self.dimension.value
        if self.action is not None:
            out["action"] = "Hide" if self.action is VisibilityState.HIDDEN else "Reveal"
        if self.state is not None:
            out["state"] = self.state.value
        if self.level is not None:
            out["level"] = self.level
        if self.track_id is not None:
            out["track"] = self.track_id
        return out

    @classmethod
    def from_json(cls, raw: Mapping) -> "InteractionEvent":
        try:
            kind = EventKind(raw["kind"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"bad event kind: {raw!r}") from exc
        ts = float(raw.get("timestamp", 0.0))
        try:
            if kind is EventKind.SELECT_OBJECT:
                return cls.select(int(raw["track"]), str(raw["class"]), ts)
            if kind is EventKind.TOGGLE_CLASS:
                return cls.toggle(str(raw["class"]), ts)
            if kind is EventKind.APPLY_GROUP:
                return cls.apply_group(str(raw["anchor"]), str(raw["dimension"]), str(raw["action"]), ts)
            if kind is EventKind.SET_CLASS:
                return cls.set_class(str(raw["class"]), str(raw["state"]), ts)
            return cls.set_slider(int(raw["level"]), ts)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad {kind.value} event: {raw!r}") from exc


def _parse_state(value: Union[VisibilityState, str]) -> VisibilityState:
    if isinstance(value, VisibilityState):
        return value
    needle = value.strip().lower()
    for member in VisibilityState:
        if member.value.lower() == needle:
            return member
    raise ValidationError(f"unknown visibility state {value!r}")


def _parse_action(value: Union[VisibilityState, str]) -> VisibilityState:
    if isinstance(value, VisibilityState):
        return value
    needle = value.strip().lower()
    if needle == "hide":
        return VisibilityState.HIDDEN
    if needle == "reveal":
        return VisibilityState.REVEALED
    return _parse_state(value)


@dataclass(frozen=True)
class NewClassEvent:
    """Emitted the first time a store sees a taxonomy class in a frame."""

    class_name: str
    frame_index: int
    default_state: VisibilityState = VisibilityState.HIDDEN

    def to_json(self) -> dict:
        return {
            "class": self.class_name,
            "frame": self.frame_index,
            "default_state": self.default_state.value,
        }


@dataclass(frozen=True)
class GroupQuery:
    """The three member sets sharing the anchor's attributes."""

    anchor: str
    sensitivity_group: Tuple[str, ...]
    category_group: Tuple[str, ...]
    spatial_group: Tuple[str, ...]

    def group(self, dimension: Dimension) -> Tuple[str, ...]:
        return {
            Dimension.SENSITIVITY: self.sensitivity_group,
            Dimension.CATEGORY: self.category_group,
            Dimension.SPATIAL: self.spatial_group,
        }[dimension]

    def to_json(self) -> dict:
        return {
            "anchor": self.anchor,
            "sensitivity": list(self.sensitivity_group),
            "category": list(self.category_group),
            "spatial": list(self.spatial_group),
        }


def query_groups(taxonomy: Taxonomy, anchor: str) -> GroupQuery:
    """Member sets along all three dimensions for the anchor's attributes."""
    entry = taxonomy.lookup(anchor)
    return GroupQuery(
        anchor=entry.name,
        sensitivity_group=tuple(taxonomy.group_members(Dimension.SENSITIVITY, entry.risk)),
        category_group=tuple(taxonomy.group_members(Dimension.CATEGORY, entry.type_group)),
        spatial_group=tuple(taxonomy.group_members(Dimension.SPATIAL, entry.space)),
    )


@dataclass(frozen=True)
class AuditRecord:
    """Applied event plus the per-class state changes it caused."""

    event: InteractionEvent
    delta: Tuple[Tuple[str, VisibilityState, VisibilityState], ...]
    digest: str

    def to_json(self) -> dict:
        return {
            "event": self.event.to_json(),
            "delta": [
                {"class": name, "old": old.value, "new": new.value}
                for name, old, new in self.delta
            ],
            "digest": self.digest,
        }


class PolicyView:
    """Immutable snapshot of a store's effective policy at one instant."""

    def __init__(self, states: Dict[str, VisibilityState], mode: Mode, digest: str):
        self._states = dict(states)
        self.mode = mode
        self.digest = digest

    def resolve(self, class_name: str) -> Resolution:
        state = self._states.get(_norm(class_name))
        if state is None:
            return Resolution.NOT_SENSITIVE
        return Resolution.HIDDEN if state is VisibilityState.HIDDEN else Resolution.REVEALED

    @property
    def states(self) -> Dict[str, VisibilityState]:
        return dict(self._states)

    @property
    def hidden_classes(self) -> List[str]:
        return sorted(c for c, s in self._states.items() if s is VisibilityState.HIDDEN)


def compute_digest(states: Mapping[str, VisibilityState]) -> str:
    lines = "\n".join(f"{name}={states[name].value}" for name in sorted(states))
    return hashlib.sha256(lines.encode("utf-8")).hexdigest()


_MODE_EVENTS = {
    Mode.VISGUARDIAN: {EventKind.SELECT_OBJECT, EventKind.TOGGLE_CLASS, EventKind.APPLY_GROUP},
    Mode.SLIDER_BASELINE: {EventKind.SET_SLIDER},
    Mode.OBJECT_BASELINE: {EventKind.SET_CLASS},
}


class PolicyStore:
    """Per-application visibility state with default-deny initialization.

    Mutations are serialized through an internal lock; readers should use
    snapshots. State changes only happen in apply_interaction.
    """

    def __init__(self, app_id: str, taxonomy: Taxonomy, mode: Mode = Mode.VISGUARDIAN):
        self.app_id = app_id
        self.taxonomy = taxonomy
        self.mode = mode
        self._states: Dict[str, VisibilityState] = {
            _norm(c): VisibilityState.HIDDEN for c in taxonomy.classes
        }
        self._observed: set = set()
        self.slider_level = DEFAULT_SLIDER_LEVEL
        self._lock = threading.Lock()

    # -- queries ---------------------------------------------------------

    def effective_states(self) -> Dict[str, VisibilityState]:
        """Per-class visibility with the slider level folded in."""
        if self.mode is Mode.SLIDER_BASELINE:
            hidden = slider_hidden_classes(self.slider_level, self.taxonomy)
            return {
                _norm(c): VisibilityState.HIDDEN if c in hidden else VisibilityState.REVEALED
                for c in self.taxonomy.classes
            }
        return dict(self._states)

    @property
    def digest(self) -> str:
        return compute_digest(self.effective_states())

    @property
    def observed(self) -> set:
        return set(self._observed)

    def resolve(self, class_name: str) -> Resolution:
        key = _norm(class_name)
        if key not in self._states:
            return Resolution.NOT_SENSITIVE
        state = self.effective_states()[key]
        return Resolution.HIDDEN if state is VisibilityState.HIDDEN else Resolution.REVEALED

    def snapshot(self) -> PolicyView:
        with self._lock:
            states = self.effective_states()
            return PolicyView(states, self.mode, compute_digest(states))

    # -- mutations -------------------------------------------------------

    def observe(self, classes: Iterable[str], frame_index: int = 0) -> List[NewClassEvent]:
        """Record taxonomy classes present in a frame; emit one event per
        first-ever appearance. Never touches visibility states."""
        events = []
        with self._lock:
            for name in classes:
                key = _norm(name)
                if key in self._states and key not in self._observed:
                    self._observed.add(key)
                    events.append(NewClassEvent(key, frame_index))
        return events

    def apply_interaction(self, event: InteractionEvent) -> AuditRecord:
        with self._lock:
            if event.kind not in _MODE_EVENTS[self.mode]:
                raise ModeMismatchError(
                    f"{event.kind.value} not valid in {self.mode.value} mode"
                )
            before = self.effective_states()
            self._apply(event)
            after = self.effective_states()
            delta = tuple(
                (name, before[name], after[name])
                for name in sorted(after)
                if before[name] is not after[name]
            )
            return AuditRecord(event=event, delta=delta, digest=compute_digest(after))

    def _apply(self, event: InteractionEvent):
        if event.kind is EventKind.SELECT_OBJECT:
            self._require_member(event.class_name)
            return  # audited, no state change
        if event.kind is EventKind.TOGGLE_CLASS:
            key = self._require_member(event.class_name)
            current = self._states[key]
            self._states[key] = (
                VisibilityState.REVEALED
                if current is VisibilityState.HIDDEN
                else VisibilityState.HIDDEN
            )
            return
        if event.kind is EventKind.APPLY_GROUP:
            self._require_member(event.anchor)
            groups = query_groups(self.taxonomy, event.anchor)
            for member in groups.group(event.dimension):
                self._states[_norm(member)] = event.action
            return
        if event.kind is EventKind.SET_CLASS:
            key = self._require_member(event.class_name)
            self._states[key] = event.state
            return
        # SET_SLIDER
        if event.level is None or not MIN_SLIDER_LEVEL <= event.level <= MAX_SLIDER_LEVEL:
            raise InvalidLevelError(f"slider level must be in 1..5, got {event.level}")
        self.slider_level = event.level

    def _require_member(self, name: Optional[str]) -> str:
        if name is None:
            raise NotFoundError(name)
        key = _norm(name)
        if key not in self._states:
            raise NotFoundError(name)
        return key

    # -- persistence -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "app_id": self.app_id,
            "mode": self.mode.value,
            "slider_level": self.slider_level,
            "states": {c: s.value for c, s in sorted(self._states.items())},
            "observed": sorted(self._observed),
        }

    def load_states(self, raw: Mapping):
        """Restore states/observed/slider level from a to_json dump."""
        with self._lock:
            for name, state in raw.get("states", {}).items():
                key = self._require_member(name)
                self._states[key] = _parse_state(state)
            for name in raw.get("observed", []):
                self._observed.add(_norm(name))
            level = raw.get("slider_level")
            if level is not None:
                if not MIN_SLIDER_LEVEL <= int(level) <= MAX_SLIDER_LEVEL:
                    raise InvalidLevelError(f"slider level must be in 1..5, got {level}")
                self.slider_level = int(level)


def new_store(app_id: str, taxonomy: Taxonomy, mode: Mode = Mode.VISGUARDIAN) -> PolicyStore:
    """Fresh default-deny store: every taxonomy class Hidden, nothing observed."""
    return PolicyStore(app_id, taxonomy, mode)
