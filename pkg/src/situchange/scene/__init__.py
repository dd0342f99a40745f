from .model import (
    ATTRIBUTE_FACETS,
    Alignment,
    ChangeKind,
    ChangeRecord,
    Finding,
    HumanFields,
    Obb,
    ObjectInstance,
    ParseError,
    RigidMotion,
    ScanPair,
    SceneError,
    SceneScan,
    StandableGrid,
    ValidationError,
    ValidationReport,
    validate_pair,
)
from .io import (
    canonical_dumps,
    dump_scan_pair,
    import_human_annotations,
    iter_split,
    load_scan_pair,
    load_split,
    pair_from_dict,
    pair_to_dict,
    scan_from_dict,
    scan_to_dict,
)
# fixtures depends on the geometry module (which imports scene.model), so its
# names load lazily to keep the import graph acyclic
_FIXTURE_NAMES = ("FixtureError", "FixtureSpec", "make_fixture", "make_fixture_batch")


def __getattr__(name):
    if name in _FIXTURE_NAMES:
        from . import fixtures

        return getattr(fixtures, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

__all__ = [
    "ATTRIBUTE_FACETS",
    "Alignment",
    "ChangeKind",
    "ChangeRecord",
    "Finding",
    "FixtureError",
    "FixtureSpec",
    "HumanFields",
    "Obb",
    "ObjectInstance",
    "ParseError",
    "RigidMotion",
    "ScanPair",
    "SceneError",
    "SceneScan",
    "StandableGrid",
    "ValidationError",
    "ValidationReport",
    "canonical_dumps",
    "dump_scan_pair",
    "import_human_annotations",
    "iter_split",
    "load_scan_pair",
    "load_split",
    "make_fixture",
    "make_fixture_batch",
    "pair_from_dict",
    "pair_to_dict",
    "scan_from_dict",
    "scan_to_dict",
    "validate_pair",
]
