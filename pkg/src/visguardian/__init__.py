"""Group-based visual-privacy middleware for camera streams.

Detections are resolved through a default-deny per-class policy, hidden
objects are occluded with frozen patches before any application sees the
frame, and users adjust visibility live through group-level interactions.
"""

from .detect import BBox, Detection, IouTracker, assign_tracks, iou, load_fixture
from .policy import (
    AuditRecord,
    InteractionEvent,
    Mode,
    NewClassEvent,
    PolicyStore,
    Resolution,
    VisibilityState,
    new_store,
    query_groups,
)
from .sanitize import PatchCache, capture_patch, clamp, render_overlay, sanitize_frame
from .taxonomy import (
    Dimension,
    RiskLevel,
    SpatialGroup,
    Taxonomy,
    TaxonomyEntry,
    TypeGroup,
    default_taxonomy,
    load_taxonomy,
    parse_taxonomy,
)

__version__ = "0.1.0"

__all__ = [
    "AuditRecord",
    "BBox",
    "Detection",
    "Dimension",
    "InteractionEvent",
    "IouTracker",
    "Mode",
    "NewClassEvent",
    "PatchCache",
    "PolicyStore",
    "Resolution",
    "RiskLevel",
    "SpatialGroup",
    "Taxonomy",
    "TaxonomyEntry",
    "TypeGroup",
    "VisibilityState",
    "assign_tracks",
    "capture_patch",
    "clamp",
    "default_taxonomy",
    "iou",
    "load_fixture",
    "load_taxonomy",
    "new_store",
    "parse_taxonomy",
    "query_groups",
    "render_overlay",
    "sanitize_frame",
]
