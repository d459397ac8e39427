"""Grid geometry, interaction-distance adjacency and restriction zones.

Sites are addressed either by ``(x, y)`` coordinates or by their row-major
index ``y * width + x``. Public geometry helpers take coordinates; the
compiler works with indices and the cached distance matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K

__all__ = [
    "GridSpec",
    "HardwareState",
    "Zone",
    "InvalidSiteError",
    "InvalidPlacementError",
    "distance",
    "interactable",
    "zone_of",
    "conflicts",
    "is_connected",
]

Site = tuple[int, int]

EPS = K.EPS


class InvalidSiteError(ValueError):
    pass


class InvalidPlacementError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """A ``width x height`` array with unit spacing.

    ``mid`` is the maximum interaction distance in site units. Values above
    the array diagonal are accepted and behave like the diagonal (all-to-all).
    """

    width: int
    height: int
    mid: float
    zone_divisor: float = 2.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.mid < 1:
            raise ValueError(f"max interaction distance must be >= 1, got {self.mid}")
        if self.zone_divisor <= 0:
            raise ValueError("zone divisor must be positive")

    spacing = 1.0

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width - 1, self.height - 1)

    def with_mid(self, mid: float) -> GridSpec:
        return GridSpec(self.width, self.height, mid, self.zone_divisor)

    def zone_radius(self, d: float) -> float:
        return d / self.zone_divisor

    def index(self, site: Site) -> int:
        x, y = site
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise InvalidSiteError(f"site {site} outside {self.width}x{self.height} grid")
        return int(y) * self.width + int(x)

    def coord(self, index: int) -> Site:
        if not 0 <= index < self.n_sites:
            raise InvalidSiteError(f"site index {index} outside grid")
        return (index % self.width, index // self.width)

    @cached_property
    def coords(self) -> np.ndarray:
        idx = np.arange(self.n_sites)
        return np.stack([idx % self.width, idx // self.width], axis=1).astype(np.float64)

    @cached_property
    def dist(self) -> np.ndarray:
        """All-pairs Euclidean distance matrix over site indices."""
        return K.pairwise_distances(self.coords)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = self.dist <= self.mid + EPS
        np.fill_diagonal(a, False)
        return a

    @property
    def center(self) -> int:
        return self.index(((self.width - 1) // 2, (self.height - 1) // 2))

    @cached_property
    def central_order(self) -> np.ndarray:
        """Site indices ordered by distance to the center, ties row-major."""
        d = self.dist[self.center]
        return np.lexsort((np.arange(self.n_sites), np.round(d, 9)))


@dataclass(frozen=True)
class HardwareState:
    grid: GridSpec
    lost: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        lost = frozenset(int(s) for s in self.lost)
        if any(s < 0 or s >= self.grid.n_sites for s in lost):
            raise InvalidSiteError("lost site outside grid")
        object.__setattr__(self, "lost", lost)

    @cached_property
    def usable(self) -> np.ndarray:
        mask = np.ones(self.grid.n_sites, dtype=bool)
        if self.lost:
            mask[list(self.lost)] = False
        return mask

    @property
    def n_usable(self) -> int:
        return self.grid.n_sites - len(self.lost)

    def with_lost(self, sites: Iterable[int]) -> HardwareState:
        return HardwareState(self.grid, self.lost | frozenset(sites))


@dataclass(frozen=True)
class Zone:
    centers: tuple[Site, ...]
    radius: float


def distance(a: Site, b: Site, grid: GridSpec | None = None) -> float:
    if grid is not None:
        grid.index(a)
        grid.index(b)
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _max_pairwise(sites: Sequence[Site]) -> float:
    return max(
        (distance(sites[i], sites[j]) for i in range(len(sites)) for j in range(i + 1, len(sites))),
        default=0.0,
    )


def interactable(sites: Sequence[Site], grid: GridSpec) -> bool:
    """True iff every pair of operand sites is within the interaction distance."""
    for s in sites:
        grid.index(s)
    if len(set(map(tuple, sites))) != len(sites):
        raise InvalidPlacementError(f"duplicate operand sites {sites}")
    return _max_pairwise(sites) <= grid.mid + EPS


def zone_of(sites: Sequence[Site], grid: GridSpec) -> Zone:
    for s in sites:
        grid.index(s)
    return Zone(tuple(tuple(s) for s in sites), grid.zone_radius(_max_pairwise(sites)))


def conflicts(za: Zone, zb: Zone) -> bool:
    """Strict circle overlap between any center of ``za`` and any center of ``zb``.

    This also covers a center lying strictly inside the other zone's circle,
    which is what makes zero-radius (single-qubit) zones conflict.
    """
    reach = za.radius + zb.radius - EPS
    return any(distance(a, b) < reach for a in za.centers for b in zb.centers)


def is_connected(hw: HardwareState) -> bool:
    """Whether the usable sites form one component under the interaction graph."""
    if hw.n_usable <= 1:
        return True
    labels = K.components(hw.grid.adjacency, hw.usable)
    return int(labels.max()) == 0


# index-level helpers shared by the compiler and loss simulator


def max_pair_dist(grid: GridSpec, sites: Sequence[int]) -> float:
    D = grid.dist
    m = 0.0
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            if D[sites[i], sites[j]] > m:
                m = D[sites[i], sites[j]]
    return m


def sites_interactable(grid: GridSpec, sites: Sequence[int], mid: float | None = None) -> bool:
    limit = grid.mid if mid is None else mid
    return max_pair_dist(grid, sites) <= limit + EPS


def sites_conflict(grid: GridSpec, a: Sequence[int], b: Sequence[int]) -> bool:
    reach = grid.zone_radius(max_pair_dist(grid, a)) + grid.zone_radius(max_pair_dist(grid, b)) - EPS
    D = grid.dist
    return any(D[x, y] < reach for x in a for y in b)
