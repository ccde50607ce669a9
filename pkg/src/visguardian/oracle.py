"""Brute-force interaction-cost comparator.

For a scene (classes on screen), a start policy state, and a target
visibility configuration, finds a provably minimal-cost event sequence
for each technique:

- group-based (VisGuardian): SelectObject on a scene member enables
  ToggleClass / ApplyGroup on that class until the next selection;
- ObjectBaseline: one SetClass per action;
- SliderBaseline: SetSlider moves between the five cumulative levels.

The search is uniform-cost (A* with admissible heuristics) over class-state
maps restricted to scene classes, expanding actions in a canonical order so
the returned witness is the lexicographically least among the minimal ones.
Every action costs 1 by default, the anchor selection click included.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .policy import (
    EventKind,
    InteractionEvent,
    MAX_SLIDER_LEVEL,
    MIN_SLIDER_LEVEL,
    Mode,
    VisibilityState,
    slider_hidden_classes,
)
from .taxonomy import Dimension, Taxonomy, ValidationError, normalize_name as _norm

HIDDEN = VisibilityState.HIDDEN
REVEALED = VisibilityState.REVEALED


@dataclass(frozen=True)
class Scene:
    """Canonical classes present on screen."""

    classes: Tuple[str, ...]

    @classmethod
    def of(cls, taxonomy: Taxonomy, classes: Iterable[str]) -> "Scene":
        resolved = []
        for name in classes:
            entry = taxonomy.lookup(name)
            resolved.append(entry.name)
        if len(set(resolved)) != len(resolved):
            raise ValidationError(f"scene has duplicate classes: {sorted(resolved)}")
        return cls(tuple(sorted(resolved)))


@dataclass(frozen=True)
class CostModel:
    """Positive integer cost per event kind; defaults to 1 per atomic action."""

    costs: Mapping[EventKind, int] = field(
        default_factory=lambda: {kind: 1 for kind in EventKind}
    )

    def __post_init__(self):
        for kind in EventKind:
            cost = self.costs.get(kind, 1)
            if not isinstance(cost, int) or cost < 1:
                raise ValidationError(f"cost for {kind.value} must be a positive integer")

    def cost(self, kind: EventKind) -> int:
        return self.costs.get(kind, 1)


@dataclass(frozen=True)
class Witness:
    """A minimal-cost event sequence reaching the target."""

    cost: int
    events: Tuple[InteractionEvent, ...]


def _event_key(event: InteractionEvent) -> tuple:
    return (
        event.kind.value,
        event.class_name or event.anchor or "",
        event.dimension.value if event.dimension else "",
        event.action.value if event.action else "",
        event.state.value if event.state else "",
        event.level or 0,
    )


def _as_state_map(
    taxonomy: Taxonomy, scene: Scene, spec: Union[str, Mapping[str, object]]
) -> Dict[str, VisibilityState]:
    """Scene-restricted state map; 'default' or unmentioned classes are Hidden."""
    states = {c: HIDDEN for c in scene.classes}
    if spec == "default":
        return states
    if not isinstance(spec, Mapping):
        raise ValidationError(f"state map must be 'default' or an object, got {spec!r}")
    for name, value in spec.items():
        key = taxonomy.lookup(name).name
        if key not in states:
            raise ValidationError(f"state for off-scene class {name!r}")
        states[key] = value if isinstance(value, VisibilityState) else _parse_state_str(value)
    return states


def _parse_state_str(value: object) -> VisibilityState:
    needle = str(value).strip().lower()
    for member in VisibilityState:
        if member.value.lower() == needle:
            return member
    raise ValidationError(f"unknown visibility state {value!r}")


@dataclass(frozen=True)
class TargetConfig:
    """Desired visibility per scene class (total over the scene)."""

    states: Tuple[Tuple[str, VisibilityState], ...]

    @classmethod
    def of(cls, taxonomy: Taxonomy, scene: Scene, spec: Mapping[str, object]) -> "TargetConfig":
        resolved = {}
        for name, value in spec.items():
            key = taxonomy.lookup(name).name
            if key not in scene.classes:
                raise ValidationError(f"target mentions off-scene class {name!r}")
            resolved[key] = value if isinstance(value, VisibilityState) else _parse_state_str(value)
        missing = set(scene.classes) - set(resolved)
        if missing:
            raise ValidationError(f"target must cover every scene class; missing {sorted(missing)}")
        return cls(tuple((c, resolved[c]) for c in scene.classes))

    def as_dict(self) -> Dict[str, VisibilityState]:
        return dict(self.states)


def _group_members_in_scene(
    taxonomy: Taxonomy, scene: Scene
) -> Dict[Tuple[str, Dimension], Tuple[str, ...]]:
    """anchor class x dimension -> taxonomy group members restricted to the scene."""
    members = {}
    scene_set = set(scene.classes)
    for name in scene.classes:
        entry = taxonomy.lookup(name)
        for dimension in Dimension:
            group = taxonomy.group_members(dimension, entry.attribute(dimension))
            members[(name, dimension)] = tuple(c for c in group if c in scene_set)
    return members


def min_interactions(
    technique: Mode,
    taxonomy: Taxonomy,
    scene: Scene,
    start: Union[str, Mapping[str, object]],
    target: TargetConfig,
    cost_model: Optional[CostModel] = None,
) -> Optional[Witness]:
    """Minimal-cost event sequence from start to target, or None if the
    technique cannot express the target (slider baseline only)."""
    cost_model = cost_model or CostModel()
    start_states = _as_state_map(taxonomy, scene, start)
    goal = target.as_dict()
    if technique is Mode.SLIDER_BASELINE:
        return _search_slider(taxonomy, scene, goal, cost_model)
    if technique is Mode.OBJECT_BASELINE:
        return _search_object(scene, start_states, goal, cost_model)
    return _search_group(taxonomy, scene, start_states, goal, cost_model)


def _states_tuple(states: Mapping[str, VisibilityState], order: Sequence[str]) -> tuple:
    return tuple(states[c] is HIDDEN for c in order)


def _search_object(
    scene: Scene,
    start: Dict[str, VisibilityState],
    goal: Dict[str, VisibilityState],
    cost_model: CostModel,
) -> Optional[Witness]:
    # In this technique each event rewrites exactly one class and effects do
    # not depend on prior state, so a minimal sequence contains one
    # SetClass(c, goal[c]) per differing class and nothing else; restricting
    # expansion to those actions preserves every minimal witness.
    order = scene.classes
    set_cost = cost_model.cost(EventKind.SET_CLASS)
    start_key = _states_tuple(start, order)
    goal_key = _states_tuple(goal, order)

    def heuristic(key: tuple) -> int:
        return set_cost * sum(1 for a, b in zip(key, goal_key) if a != b)

    frontier = [(heuristic(start_key), (), start_key)]
    best: Dict[tuple, int] = {}
    while frontier:
        f, path, key = heapq.heappop(frontier)
        cost = f - heuristic(key)
        if key == goal_key:
            return Witness(cost, tuple(ev for _, ev in path))
        if key in best and best[key] <= cost:
            continue
        best[key] = cost
        for i, name in enumerate(order):
            if key[i] == goal_key[i]:
                continue
            event = InteractionEvent.set_class(name, goal[name])
            new_key = key[:i] + (goal_key[i],) + key[i + 1 :]
            new_path = path + ((_event_key(event), event),)
            heapq.heappush(
                frontier,
                (cost + set_cost + heuristic(new_key), new_path, new_key),
            )
    return None


def _search_slider(
    taxonomy: Taxonomy,
    scene: Scene,
    goal: Dict[str, VisibilityState],
    cost_model: CostModel,
) -> Optional[Witness]:
    scene_set = set(scene.classes)
    goal_hidden = frozenset(c for c, s in goal.items() if s is HIDDEN)
    level_hidden = {
        level: frozenset(slider_hidden_classes(level, taxonomy)) & scene_set
        for level in range(MIN_SLIDER_LEVEL, MAX_SLIDER_LEVEL + 1)
    }
    start_level = MAX_SLIDER_LEVEL  # fresh stores default to obfuscate-all
    if level_hidden[start_level] == goal_hidden:
        return Witness(0, ())
    matching = [lvl for lvl, hidden in level_hidden.items() if hidden == goal_hidden]
    if not matching:
        return None
    level = min(matching)
    return Witness(
        cost_model.cost(EventKind.SET_SLIDER),
        (InteractionEvent.set_slider(level),),
    )


def _search_group(
    taxonomy: Taxonomy,
    scene: Scene,
    start: Dict[str, VisibilityState],
    goal: Dict[str, VisibilityState],
    cost_model: CostModel,
) -> Optional[Witness]:
    order = scene.classes
    start_key = _states_tuple(start, order)
    goal_key = _states_tuple(goal, order)
    index = {name: i for i, name in enumerate(order)}
    groups = _group_members_in_scene(taxonomy, scene)
    select_cost = cost_model.cost(EventKind.SELECT_OBJECT)
    toggle_cost = cost_model.cost(EventKind.TOGGLE_CLASS)
    group_cost = cost_model.cost(EventKind.APPLY_GROUP)
    min_act_cost = min(toggle_cost, group_cost)

    def heuristic(selected: Optional[str], key: tuple) -> int:
        # Any mismatch needs at least one state-changing action, and a
        # selection first if nothing is selected yet.
        if key == goal_key:
            return 0
        if selected is None:
            return select_cost + min_act_cost
        return min_act_cost

    start_node = (None, start_key)
    frontier = [(heuristic(*start_node), (), start_node)]
    best: Dict[tuple, int] = {}
    while frontier:
        f, path, (selected, key) = heapq.heappop(frontier)
        cost = f - heuristic(selected, key)
        if key == goal_key:
            return Witness(cost, tuple(ev for _, ev in path))
        if (selected, key) in best and best[(selected, key)] <= cost:
            continue
        best[(selected, key)] = cost

        def push(event: InteractionEvent, step: int, node):
            new_path = path + ((_event_key(event), event),)
            heapq.heappush(frontier, (cost + step + heuristic(*node), new_path, node))

        for name in order:
            if name != selected:
                push(InteractionEvent.select(0, name), select_cost, (name, key))
        if selected is not None:
            i = index[selected]
            flipped = key[:i] + (not key[i],) + key[i + 1 :]
            push(InteractionEvent.toggle(selected), toggle_cost, (selected, flipped))
            for dimension in Dimension:
                members = groups[(selected, dimension)]
                for action, as_hidden in ((HIDDEN, True), (REVEALED, False)):
                    new_key = list(key)
                    for member in members:
                        new_key[index[member]] = as_hidden
                    new_key = tuple(new_key)
                    if new_key == key:
                        continue  # no-op group action can never help
                    event = InteractionEvent.apply_group(selected, dimension, action)
                    push(event, group_cost, (selected, new_key))
    return None


TECHNIQUES = (Mode.VISGUARDIAN, Mode.SLIDER_BASELINE, Mode.OBJECT_BASELINE)


@dataclass(frozen=True)
class ComparisonRow:
    technique: Mode
    witness: Optional[Witness]

    @property
    def cost_label(self) -> str:
        return "Unreachable" if self.witness is None else str(self.witness.cost)


def compare_techniques(
    taxonomy: Taxonomy,
    scene: Scene,
    start: Union[str, Mapping[str, object]],
    target: TargetConfig,
    cost_model: Optional[CostModel] = None,
    techniques: Sequence[Mode] = TECHNIQUES,
) -> List[ComparisonRow]:
    """Minimal cost and witness per technique, in the given order."""
    return [
        ComparisonRow(t, min_interactions(t, taxonomy, scene, start, target, cost_model))
        for t in techniques
    ]


@dataclass(frozen=True)
class Scenario:
    scene: Scene
    start: Union[str, Dict[str, str]]
    target: TargetConfig
    techniques: Tuple[Mode, ...]
    cost_model: CostModel


def load_scenario(path: Union[str, Path], taxonomy: Taxonomy) -> Scenario:
    """Parse a scenario file: {scene, start, target, techniques?, costs?}."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(raw, dict) or "scene" not in raw or "target" not in raw:
        raise ValidationError("scenario must be an object with 'scene' and 'target'")
    scene = Scene.of(taxonomy, raw["scene"])
    target = TargetConfig.of(taxonomy, scene, raw["target"])
    start = raw.get("start", "default")
    names = raw.get("techniques")
    if names is None:
        techniques = TECHNIQUES
    else:
        try:
            techniques = tuple(Mode(name) for name in names)
        except ValueError as exc:
            raise ValidationError(f"unknown technique in {names!r}") from exc
    costs_raw = raw.get("costs", {})
    try:
        costs = {EventKind(k): v for k, v in costs_raw.items()}
    except ValueError as exc:
        raise ValidationError(f"unknown event kind in costs: {costs_raw!r}") from exc
    model = CostModel({kind: costs.get(kind, 1) for kind in EventKind})
    return Scenario(scene, start, target, techniques, model)


def format_witness(witness: Optional[Witness]) -> str:
    if witness is None:
        return "-"
    parts = []
    for event in witness.events:
        data = event.to_json()
        data.pop("timestamp", None)
        kind = data.pop("kind")
        args = ", ".join(f"{k}={v}" for k, v in data.items())
        parts.append(f"{kind}({args})")
    return " ; ".join(parts) if parts else "(none)"


def comparison_table(rows: Sequence[ComparisonRow]) -> str:
    lines = [f"{'technique':<16} {'cost':<12} witness"]
    lines.append("-" * 72)
    for row in rows:
        lines.append(f"{row.technique.value:<16} {row.cost_label:<12} {format_witness(row.witness)}")
    return "\n".join(lines)


def comparison_csv_rows(rows: Sequence[ComparisonRow]) -> List[List[str]]:
    out = [["technique", "cost", "witness"]]
    for row in rows:
        out.append([row.technique.value, row.cost_label, format_witness(row.witness)])
    return out
