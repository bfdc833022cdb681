"""Virtual-cell based user grouping and a BS-clustering baseline."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import Topology, VirtualCellMap


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint user groups and the antenna set serving each group.

    Groups are tuples of ascending user indices, ordered by their smallest
    member; antenna sets are ascending tuples.
    """

    groups: tuple[tuple[int, ...], ...]
    antenna_sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.groups) != len(self.antenna_sets):
            raise ValueError("one antenna set per group is required")
        seen = set()
        for g in self.groups:
            if not g:
                raise ValueError("empty group")
            if seen.intersection(g):
                raise ValueError("groups overlap")
            seen.update(g)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups]

    def group_of(self, K: int) -> np.ndarray:
        """Group index of every user; -1 for users not in any group."""
        out = np.full(K, -1, dtype=int)
        for m, g in enumerate(self.groups):
            out[list(g)] = m
        return out

    def to_json(self) -> str:
        return json.dumps({"groups": [list(g) for g in self.groups],
                           "antenna_sets": [list(a) for a in self.antenna_sets]},
                          separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "GroupPartition":
        doc = json.loads(text)
        return cls(tuple(tuple(int(u) for u in g) for g in doc["groups"]),
                   tuple(tuple(int(a) for a in s) for s in doc["antenna_sets"]))


def group_users(vcells: VirtualCellMap, order=None) -> GroupPartition:
    """Merge users whose virtual cells share an antenna, transitively.

    Seeds a group with the first remaining user, then sweeps the remaining
    users and absorbs every one whose cell meets the group's antenna set,
    repeating until a sweep absorbs nobody.  ``order`` overrides the
    processing order (ascending user index by default); the partition does
    not depend on it.
    """
    cells = [frozenset(int(a) for a in row) for row in vcells.cells]
    remaining = list(range(vcells.K)) if order is None else [int(k) for k in order]
    if sorted(remaining) != list(range(vcells.K)):
        raise ValueError("order must be a permutation of the users")

    groups = []
    while remaining:
        k = remaining.pop(0)
        members = [k]
        antennas = set(cells[k])
        grew = True
        while grew:
            grew = False
            keep = []
            for j in remaining:
                if antennas.isdisjoint(cells[j]):
                    keep.append(j)
                else:
                    members.append(j)
                    antennas |= cells[j]
                    grew = True
            remaining = keep
        groups.append((tuple(sorted(members)), tuple(sorted(antennas))))

    groups.sort(key=lambda g: g[0][0])
    return GroupPartition(tuple(g for g, _ in groups), tuple(a for _, a in groups))


@dataclass(frozen=True)
class ClusterBaseline:
    clusters: tuple[tuple[int, ...], ...]
    user_assignment: tuple[int, ...]

    def as_partition(self) -> GroupPartition:
        """Clusters that serve at least one user, as a partition for ZFBF."""
        groups, sets = [], []
        assign = np.asarray(self.user_assignment)
        for c, ants in enumerate(self.clusters):
            users = tuple(int(u) for u in np.flatnonzero(assign == c))
            if users:
                groups.append(users)
                sets.append(ants)
        return GroupPartition(tuple(groups), tuple(sets))


def _balanced_sizes(counts: np.ndarray) -> np.ndarray:
    """Sizes differing by at most one; the +1 slots go to the fullest sectors."""
    n = counts.size
    base, extra = divmod(int(counts.sum()), n)
    sizes = np.full(n, base)
    # stable sort: ties resolved by lower sector index
    sizes[np.argsort(-counts, kind="stable")[:extra]] += 1
    return sizes


def cluster_bs_baseline(topo: Topology, n_clusters: int) -> ClusterBaseline:
    """Partition antennas into angular sectors of the disk.

    Antennas start in ``n_clusters`` equal-angle sectors anchored at angle 0.
    Sector boundaries then shift, moving boundary antennas between adjacent
    sectors, until sizes differ by at most one.  Each user joins the cluster
    of its nearest antenna.
    """
    L = topo.L
    if n_clusters < 1:
        raise ValueError("n_clusters must be at least 1")
    if n_clusters > L:
        raise ValueError(f"n_clusters={n_clusters} exceeds L={L}")
    bs = topo.bs_positions
    angle = np.mod(np.arctan2(bs[:, 1], bs[:, 0]), 2.0 * np.pi)
    by_angle = np.argsort(angle, kind="stable")
    sector = np.minimum((angle * n_clusters / (2.0 * np.pi)).astype(int), n_clusters - 1)
    counts = np.bincount(sector, minlength=n_clusters)
    # sectors stay contiguous in angle; only where they split changes
    bounds = np.concatenate(([0], np.cumsum(_balanced_sizes(counts))))
    clusters = tuple(tuple(sorted(int(a) for a in by_angle[bounds[c]:bounds[c + 1]]))
                     for c in range(n_clusters))

    owner = np.empty(L, dtype=int)
    for c, ants in enumerate(clusters):
        owner[list(ants)] = c
    nearest = np.argmin(topo.user_bs_distances(), axis=1)
    return ClusterBaseline(clusters, tuple(int(c) for c in owner[nearest]))
