import numpy as np
import pytest

from situchange.scene.fixtures import FixtureSpec, make_fixture
from situchange.scene.model import Obb, ObjectInstance, ScanPair, SceneScan, Alignment


@pytest.fixture(scope="session")
def fixture_pair():
    return make_fixture(3)


@pytest.fixture(scope="session")
def fixture_pairs_10():
    from situchange.scene.fixtures import make_fixture_batch

    return make_fixture_batch(10, seed=5)


def box(oid, label, cx, cy, hx, hy, hz, yaw=0.0, bottom=0.0, color=None, **facets):
    attributes = dict(facets)
    if color:
        attributes["color"] = (color,) if isinstance(color, str) else tuple(color)
    return ObjectInstance(
        id=oid,
        label=label,
        obb=Obb(center=(cx, cy, bottom + hz), half_extents=(hx, hy, hz)),
        attributes={k: (v,) if isinstance(v, str) else tuple(v) for k, v in attributes.items()},
    )


def scene(scan_id, *objects, floor=0.0, standable=None):
    return SceneScan(scan_id=scan_id, objects=tuple(objects), floor_height=floor, standable=standable)


def pair_of(prev, curr, changes=(), alignment=None, pair_id="testpair"):
    return ScanPair(
        pair_id=pair_id,
        prev=prev,
        curr=curr,
        alignment=alignment or Alignment(),
        changes=tuple(changes),
    )
