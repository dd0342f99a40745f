"""On-disk interchange: scan files, pair manifests, split manifests, human annotations.

All files are UTF-8 JSON; lengths in meters, angles in radians. The canonical
form (sorted keys, compact separators, trailing newline) round-trips
byte-for-byte through load/dump.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .model import (
    Alignment,
    ChangeKind,
    ChangeRecord,
    HumanFields,
    Obb,
    ObjectInstance,
    ParseError,
    RigidMotion,
    ScanPair,
    SceneScan,
    StandableGrid,
    ValidationError,
    validate_pair,
)


def canonical_dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"


def _loads(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise ParseError(f"{source}: {e.msg}", byte_offset=offset) from e


def scan_to_dict(scan: SceneScan) -> dict:
    objects = []
    for o in scan.objects:
        entry: dict[str, Any] = {
            "id": o.id,
            "label": o.label,
            "obb": {
                "center": list(o.obb.center),
                "half_extents": list(o.obb.half_extents),
                "yaw": o.obb.yaw,
            },
        }
        if o.attributes:
            entry["attributes"] = {k: list(v) for k, v in o.attributes.items()}
        if o.samples is not None:
            entry["samples"] = [[float(v) for v in row] for row in o.samples]
        objects.append(entry)
    out: dict[str, Any] = {
        "scan_id": scan.scan_id,
        "floor_height": scan.floor_height,
        "objects": objects,
    }
    if scan.standable is not None:
        g = scan.standable
        out["standable"] = {
            "origin": list(g.origin),
            "cell_size": g.cell_size,
            "rows": ["".join("1" if v else "0" for v in row) for row in g.cells],
        }
    return out


def scan_from_dict(d: dict) -> SceneScan:
    objects = []
    for entry in d.get("objects", []):
        obb = Obb(
            center=tuple(entry["obb"]["center"]),
            half_extents=tuple(entry["obb"]["half_extents"]),
            yaw=float(entry["obb"].get("yaw", 0.0)),
        )
        samples = None
        if entry.get("samples") is not None:
            samples = np.asarray(entry["samples"], dtype=float)
            samples.flags.writeable = False
        objects.append(
            ObjectInstance(
                id=int(entry["id"]),
                label=entry["label"],
                obb=obb,
                attributes={k: tuple(v) for k, v in entry.get("attributes", {}).items()},
                samples=samples,
            )
        )
    standable = None
    if d.get("standable") is not None:
        g = d["standable"]
        cells = np.array([[ch == "1" for ch in row] for row in g["rows"]], dtype=bool)
        cells.flags.writeable = False
        standable = StandableGrid(origin=tuple(g["origin"]), cell_size=float(g["cell_size"]), cells=cells)
    return SceneScan(
        scan_id=d["scan_id"],
        objects=tuple(objects),
        floor_height=float(d.get("floor_height", 0.0)),
        standable=standable,
    )


def _change_to_dict(ch: ChangeRecord) -> dict:
    out: dict[str, Any] = {"kind": ch.kind.value}
    if ch.object_id_prev is not None:
        out["prev_id"] = ch.object_id_prev
    if ch.object_id_curr is not None:
        out["curr_id"] = ch.object_id_curr
    if ch.rigid_transform is not None:
        out["transform"] = {"yaw": ch.rigid_transform.yaw, "t": list(ch.rigid_transform.translation)}
    if ch.human_fields is not None:
        h = ch.human_fields
        out["human"] = {
            "reason": h.reason,
            "warning": h.warning,
            "description": h.description,
            "rearrangement": h.rearrangement,
        }
    return out


def _change_from_dict(d: dict) -> ChangeRecord:
    transform = None
    if d.get("transform") is not None:
        transform = RigidMotion(yaw=float(d["transform"]["yaw"]), translation=tuple(d["transform"]["t"]))
    human = None
    if d.get("human") is not None:
        h = d["human"]
        human = HumanFields(
            reason=h.get("reason", ""),
            warning=h.get("warning", ""),
            description=h.get("description", ""),
            rearrangement=h.get("rearrangement", ""),
        )
    return ChangeRecord(
        kind=ChangeKind(d["kind"]),
        object_id_prev=d.get("prev_id"),
        object_id_curr=d.get("curr_id"),
        rigid_transform=transform,
        human_fields=human,
    )


def pair_to_dict(pair: ScanPair, inline: bool = True) -> dict:
    out: dict[str, Any] = {
        "pair_id": pair.pair_id,
        "alignment": {"yaw": pair.alignment.yaw, "t": list(pair.alignment.translation)},
        "changes": [_change_to_dict(ch) for ch in pair.changes],
    }
    if inline:
        out["prev"] = scan_to_dict(pair.prev)
        out["curr"] = scan_to_dict(pair.curr)
    else:
        out["prev_scan"] = f"{pair.prev.scan_id}.scan.json"
        out["curr_scan"] = f"{pair.curr.scan_id}.scan.json"
    return out


def pair_from_dict(d: dict, base_dir: Path | None = None) -> ScanPair:
    if "prev" in d and "curr" in d:
        prev = scan_from_dict(d["prev"])
        curr = scan_from_dict(d["curr"])
    else:
        if base_dir is None:
            raise ParseError("pair manifest references scan files but no base directory is known")
        prev = scan_from_dict(_loads((base_dir / d["prev_scan"]).read_text("utf-8"), d["prev_scan"]))
        curr = scan_from_dict(_loads((base_dir / d["curr_scan"]).read_text("utf-8"), d["curr_scan"]))
    align = d.get("alignment", {"yaw": 0.0, "t": [0.0, 0.0, 0.0]})
    pair = ScanPair(
        pair_id=d.get("pair_id", f"{prev.scan_id}~{curr.scan_id}"),
        prev=prev,
        curr=curr,
        alignment=Alignment(yaw=float(align["yaw"]), translation=tuple(align["t"])),
        changes=tuple(_change_from_dict(c) for c in d.get("changes", [])),
    )
    report = validate_pair(pair)
    if not report.ok:
        raise ValidationError(list(report.findings))
    return pair


def load_scan_pair(path: str | Path) -> ScanPair:
    """Load and fully validate one pair manifest (scan files resolved relative to it)."""
    path = Path(path)
    d = _loads(path.read_text("utf-8"), str(path))
    return pair_from_dict(d, base_dir=path.parent)


def dump_scan_pair(pair: ScanPair, directory: str | Path, inline: bool = False) -> Path:
    """Write the pair manifest (and scan files unless inline) in canonical form."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not inline:
        for scan in (pair.prev, pair.curr):
            (directory / f"{scan.scan_id}.scan.json").write_text(
                canonical_dumps(scan_to_dict(scan)), "utf-8"
            )
    manifest = directory / f"{pair.pair_id}.pair.json"
    manifest.write_text(canonical_dumps(pair_to_dict(pair, inline=inline)), "utf-8")
    return manifest


def iter_split(path: str | Path) -> Iterable[ScanPair]:
    """Yield pairs from a split manifest: one JSON value per line, either a
    relative manifest path or an inline pair object."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            value = _loads(line, f"{path}:{lineno}")
            if isinstance(value, dict) and "_header" in value:
                continue
            if isinstance(value, str):
                yield load_scan_pair(path.parent / value)
            else:
                yield pair_from_dict(value, base_dir=path.parent)


def load_split(path: str | Path) -> list[ScanPair]:
    return list(iter_split(path))


def import_human_annotations(pair: ScanPair, path: str | Path) -> ScanPair:
    """Attach reviewer-authored fields, keyed "label_id", to matching change records."""
    data = _loads(Path(path).read_text("utf-8"), str(path))
    by_key: dict[str, HumanFields] = {}
    for key, fields in data.items():
        by_key[key] = HumanFields(
            reason=fields.get("reason", ""),
            warning=fields.get("warning", ""),
            description=fields.get("description", ""),
            rearrangement=fields.get("rearrangement", ""),
        )
    changes = []
    for ch in pair.changes:
        obj = None
        if ch.object_id_curr is not None:
            obj = pair.curr.get(ch.object_id_curr)
        if obj is None and ch.object_id_prev is not None:
            obj = pair.prev.get(ch.object_id_prev)
        if obj is not None and obj.key in by_key:
            changes.append(
                ChangeRecord(
                    kind=ch.kind,
                    object_id_prev=ch.object_id_prev,
                    object_id_curr=ch.object_id_curr,
                    rigid_transform=ch.rigid_transform,
                    human_fields=by_key[obj.key],
                )
            )
        else:
            changes.append(ch)
    return ScanPair(
        pair_id=pair.pair_id,
        prev=pair.prev,
        curr=pair.curr,
        alignment=pair.alignment,
        changes=tuple(changes),
    )
