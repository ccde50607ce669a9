"""Privacy-object taxonomy: sensitive classes, their grouping attributes, and
the detector-label alias map.

The taxonomy is loaded from a JSON document with two top-level keys:
``entries`` (list of ``{class, risk, space, type}``) and ``aliases``
(label -> canonical class). A bundled default document ships with the
package; custom documents can be supplied by path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union


class ParseError(ValueError):
    """Raised when a taxonomy document is not valid JSON / not the right shape."""


class ValidationError(ValueError):
    """Raised when a parsed document violates a taxonomy invariant."""


class NotFoundError(KeyError):
    """Raised when a class name is not a taxonomy member."""


class RiskLevel(Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    def __lt__(self, other: "RiskLevel") -> bool:
        order = {"Low": 0, "Medium": 1, "High": 2}
        return order[self.value] < order[other.value]


class SpatialGroup(Enum):
    PERSONAL = "Personal"
    ACTIVITY = "Activity"
    BEDROOM = "Bedroom"
    OFFICE = "Office"
    BATHROOM = "Bathroom"
    LIVING = "Living"


class TypeGroup(Enum):
    PERSONAL_MARKER = "Personal Marker"
    CLOTHES = "Clothes"
    DIGITAL = "Digital"
    SAFETY = "Safety"
    APPENDENCES = "Appendences"
    OTHERS = "Others"


class Dimension(Enum):
    """The three grouping dimensions a user can act along."""

    SENSITIVITY = "Sensitivity"
    CATEGORY = "Category"
    SPATIAL = "Spatial"


# Accepted spellings for enum values in documents (normalized key -> member).
def _enum_index(enum_cls) -> Dict[str, Enum]:
    index = {}
    for member in enum_cls:
        index[_norm(member.value)] = member
        index[_norm(member.name)] = member
    return index


def normalize_name(name: str) -> str:
    """Trim, collapse whitespace, lowercase: the comparison form of names."""
    return " ".join(name.strip().lower().split())


_norm = normalize_name


_RISK_INDEX = _enum_index(RiskLevel)
_SPACE_INDEX = _enum_index(SpatialGroup)
# "Bath" appears as a shorthand for the bathroom space in source material.
_SPACE_INDEX["bath"] = SpatialGroup.BATHROOM
_TYPE_INDEX = _enum_index(TypeGroup)
_TYPE_INDEX["personalmarker"] = TypeGroup.PERSONAL_MARKER
_DIMENSION_INDEX = _enum_index(Dimension)


@dataclass(frozen=True)
class TaxonomyEntry:
    """One sensitive object class with its three grouping attributes."""

    name: str
    risk: RiskLevel
    space: SpatialGroup
    type_group: TypeGroup

    def attribute(self, dimension: Dimension) -> Enum:
        if dimension is Dimension.SENSITIVITY:
            return self.risk
        if dimension is Dimension.CATEGORY:
            return self.type_group
        return self.space


class Taxonomy:
    """Immutable set of taxonomy entries plus the detector-label alias map.

    All name comparisons are case-insensitive after trimming; canonical
    names are stored lowercase.
    """

    def __init__(self, entries: Iterable[TaxonomyEntry], aliases: Dict[str, str]):
        self._entries: Dict[str, TaxonomyEntry] = {}
        for entry in entries:
            key = _norm(entry.name)
            if key in self._entries:
                raise ValidationError(f"duplicate class {entry.name!r}")
            self._entries[key] = entry
        self._aliases: Dict[str, str] = {}
        for label, target in aliases.items():
            target_key = _norm(target)
            if target_key not in self._entries:
                raise ValidationError(f"alias {label!r} -> {target!r} has no matching entry")
            self._aliases[_norm(label)] = self._entries[target_key].name

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: str) -> bool:
        return _norm(name) in self._entries

    @property
    def classes(self) -> List[str]:
        """All canonical class names, sorted."""
        return sorted(e.name for e in self._entries.values())

    @property
    def aliases(self) -> Dict[str, str]:
        return dict(self._aliases)

    def canonicalize(self, label: str) -> Optional[str]:
        """Map a detector label to its canonical class name, or None if the
        label is not a sensitive class (aliases first, then entries)."""
        key = _norm(label)
        if key in self._aliases:
            return self._aliases[key]
        entry = self._entries.get(key)
        return entry.name if entry else None

    def lookup(self, name: str) -> TaxonomyEntry:
        """Exact-match retrieval of an entry; raises NotFoundError for non-members."""
        entry = self._entries.get(_norm(name))
        if entry is None:
            raise NotFoundError(name)
        return entry

    def get(self, name: str) -> Optional[TaxonomyEntry]:
        return self._entries.get(_norm(name))

    def group_members(self, dimension: Dimension, value: Union[Enum, str]) -> List[str]:
        """Classes whose attribute along `dimension` equals `value`, sorted."""
        value = parse_dimension_value(dimension, value) if isinstance(value, str) else value
        return sorted(
            e.name for e in self._entries.values() if e.attribute(dimension) == value
        )

    def to_document(self) -> dict:
        """The taxonomy as a plain JSON-serializable document."""
        return {
            "entries": [
                {
                    "class": e.name,
                    "risk": e.risk.value,
                    "space": e.space.value,
                    "type": e.type_group.value,
                }
                for e in sorted(self._entries.values(), key=lambda e: e.name)
            ],
            "aliases": dict(sorted(self._aliases.items())),
        }


def parse_dimension_value(dimension: Dimension, value: str) -> Enum:
    index = {
        Dimension.SENSITIVITY: _RISK_INDEX,
        Dimension.CATEGORY: _TYPE_INDEX,
        Dimension.SPATIAL: _SPACE_INDEX,
    }[dimension]
    member = index.get(_norm(value))
    if member is None:
        raise ValidationError(f"unknown {dimension.value} value {value!r}")
    return member


def parse_dimension(value: Union[Dimension, str]) -> Dimension:
    if isinstance(value, Dimension):
        return value
    member = _DIMENSION_INDEX.get(_norm(value))
    if member is None:
        raise ValidationError(f"unknown dimension {value!r}")
    return member


def _parse_entry(raw: dict, position: int) -> TaxonomyEntry:
    try:
        name = raw["class"]
        risk_raw = raw["risk"]
        space_raw = raw["space"]
        type_raw = raw["type"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"entry #{position}: missing field {exc}") from exc
    if not isinstance(name, str) or not name.strip():
        raise ParseError(f"entry #{position}: class must be a non-empty string")
    risk = _RISK_INDEX.get(_norm(str(risk_raw)))
    if risk is None:
        raise ValidationError(f"entry {name!r}: unknown risk value {risk_raw!r}")
    space = _SPACE_INDEX.get(_norm(str(space_raw)))
    if space is None:
        raise ValidationError(f"entry {name!r}: unknown space value {space_raw!r}")
    type_group = _TYPE_INDEX.get(_norm(str(type_raw)))
    if type_group is None:
        raise ValidationError(f"entry {name!r}: unknown type value {type_raw!r}")
    return TaxonomyEntry(_norm(name), risk, space, type_group)


def parse_taxonomy(document: Union[str, dict]) -> Taxonomy:
    """Parse and validate a taxonomy document (JSON text or parsed dict)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ParseError("taxonomy document must be a JSON object")
    raw_entries = document.get("entries")
    raw_aliases = document.get("aliases", {})
    if not isinstance(raw_entries, list):
        raise ParseError("missing or invalid 'entries' list")
    if not isinstance(raw_aliases, dict):
        raise ParseError("'aliases' must be an object")
    entries = [_parse_entry(raw, i) for i, raw in enumerate(raw_entries)]
    return Taxonomy(entries, raw_aliases)


def load_taxonomy(path: Union[str, Path]) -> Taxonomy:
    """Load a taxonomy document from a file path."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read taxonomy file {path}: {exc}") from exc
    return parse_taxonomy(text)


def default_taxonomy() -> Taxonomy:
    """The bundled default taxonomy (22 classes)."""
    text = resources.files("visguardian.data").joinpath("default_taxonomy.json").read_text("utf-8")
    return parse_taxonomy(text)
