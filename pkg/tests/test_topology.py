import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from naqc.topology import (
    GridSpec,
    HardwareState,
    InvalidPlacementError,
    InvalidSiteError,
    conflicts,
    distance,
    interactable,
    is_connected,
    zone_of,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(0, 3, 1)
    with pytest.raises(ValueError):
        GridSpec(3, 3, 0.5)
    with pytest.raises(ValueError):
        GridSpec(3, 3, 1, zone_divisor=0)
    # above the diagonal behaves like all-to-all
    g = GridSpec(4, 4, 100)
    assert g.adjacency.sum() == 16 * 15


def test_index_and_center():
    g = GridSpec(10, 10, 2)
    assert g.index((3, 4)) == 43
    assert g.coord(43) == (3, 4)
    assert g.center == g.index((4, 4))
    assert g.central_order[0] == g.center
    with pytest.raises(InvalidSiteError):
        g.index((10, 0))


def test_distance_and_interactable():
    g = GridSpec(10, 10, 2)
    assert distance((0, 0), (3, 4)) == 5.0
    assert interactable([(0, 0), (2, 0)], g)
    assert interactable([(0, 0), (1, 1), (2, 0)], g)
    assert not interactable([(0, 0), (2, 1)], g)
    assert interactable([(0, 0), (1, 1)], GridSpec(3, 3, math.sqrt(2)))
    with pytest.raises(InvalidPlacementError):
        interactable([(0, 0), (0, 0)], g)


def test_zone_radius_and_tangency():
    g = GridSpec(10, 10, 4)
    za = zone_of([(0, 0), (2, 0)], g)
    assert za.radius == 1.0
    # circles of radius 1 centered 2 apart are tangent: no conflict
    zb = zone_of([(4, 0), (6, 0)], g)
    assert not conflicts(za, zb)
    zc = zone_of([(3, 0), (5, 0)], g)
    assert conflicts(za, zc)


def test_single_qubit_zone_inside_other():
    g = GridSpec(10, 10, 4)
    big = zone_of([(0, 0), (4, 0)], g)
    assert conflicts(big, zone_of([(1, 0)], g))
    assert not conflicts(big, zone_of([(0, 3)], g))


def test_custom_zone_divisor():
    g = GridSpec(10, 10, 4, zone_divisor=1.0)
    assert zone_of([(0, 0), (2, 0)], g).radius == 2.0


def test_connectivity():
    g = GridSpec(3, 3, 1)
    assert is_connected(HardwareState(g))
    # remove the middle column
    assert not is_connected(HardwareState(g, frozenset({1, 4, 7})))
    assert is_connected(HardwareState(g.with_mid(2), frozenset({1, 4, 7})))
    with pytest.raises(InvalidSiteError):
        HardwareState(g, frozenset({9}))


sites = st.tuples(st.integers(0, 9), st.integers(0, 9))


@given(st.lists(sites, min_size=1, max_size=3, unique=True), st.lists(sites, min_size=1, max_size=3, unique=True))
def test_conflict_symmetric(a, b):
    g = GridSpec(10, 10, 20)
    za, zb = zone_of(a, g), zone_of(b, g)
    assert conflicts(za, zb) == conflicts(zb, za)


@given(st.lists(sites, min_size=2, max_size=3, unique=True), st.floats(1, 14))
def test_interactable_matches_max_distance(s, mid):
    g = GridSpec(10, 10, mid)
    far = max(distance(a, b) for a in s for b in s)
    assert interactable(s, g) == (far <= mid + 1e-9)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(1, 8))
def test_adjacency_symmetric(w, h, mid):
    g = GridSpec(w, h, mid)
    a = g.adjacency
    assert (a == a.T).all() and not a.diagonal().any()
    assert np.allclose(g.dist, g.dist.T)
