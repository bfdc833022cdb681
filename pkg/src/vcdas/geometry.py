"""Random topologies on the unit disk, large-scale gains and virtual cells."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

D_MIN = 1e-6
TOPOLOGY_FORMAT_VERSION = 1


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Topology:
    """User and BS-antenna positions, shapes ``(K, 2)`` and ``(L, 2)``."""

    user_positions: np.ndarray
    bs_positions: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        users = _frozen(self.user_positions)
        bs = _frozen(self.bs_positions)
        for name, pts in (("user_positions", users), ("bs_positions", bs)):
            if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
                raise ValueError(f"{name} must be a nonempty (n, 2) array")
            if not np.all(np.isfinite(pts)):
                raise ValueError(f"{name} must be finite")
            if np.any(np.hypot(pts[:, 0], pts[:, 1]) > 1.0 + 1e-12):
                raise ValueError(f"{name} must lie in the closed unit disk")
        object.__setattr__(self, "user_positions", users)
        object.__setattr__(self, "bs_positions", bs)

    @property
    def K(self) -> int:
        return self.user_positions.shape[0]

    @property
    def L(self) -> int:
        return self.bs_positions.shape[0]

    def user_bs_distances(self) -> np.ndarray:
        diff = self.user_positions[:, None, :] - self.bs_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def user_user_distances(self) -> np.ndarray:
        diff = self.user_positions[:, None, :] - self.user_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (self.seed == other.seed
                and np.array_equal(self.user_positions, other.user_positions)
                and np.array_equal(self.bs_positions, other.bs_positions))

    def to_json(self) -> str:
        """Versioned JSON document; coordinates use 17 significant digits."""
        def pts(a):
            return "[" + ",".join(f"[{x:.17g},{y:.17g}]" for x, y in a) + "]"

        seed = "null" if self.seed is None else str(int(self.seed))
        return ('{"version":%d,"k":%d,"l":%d,"users":%s,"bs":%s,"seed":%s}'
                % (TOPOLOGY_FORMAT_VERSION, self.K, self.L,
                   pts(self.user_positions), pts(self.bs_positions), seed))

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        version = doc.get("version", TOPOLOGY_FORMAT_VERSION)
        if version != TOPOLOGY_FORMAT_VERSION:
            raise ValueError(f"unsupported topology version {version}")
        users = np.array(doc["users"], dtype=float).reshape(-1, 2)
        bs = np.array(doc["bs"], dtype=float).reshape(-1, 2)
        if users.shape[0] != doc["k"] or bs.shape[0] != doc["l"]:
            raise ValueError("k/l do not match the position lists")
        return cls(users, bs, seed=doc.get("seed"))


@dataclass(frozen=True, eq=False)
class LargeScaleGains:
    """Amplitude gains ``gamma[k, l] = max(d, D_MIN) ** (-alpha / 2)``."""

    gamma: np.ndarray
    alpha: float

    def __post_init__(self):
        g = _frozen(self.gamma)
        if g.ndim != 2 or np.any(~np.isfinite(g)) or np.any(g <= 0):
            raise ValueError("gamma must be a 2-D array of positive finite values")
        object.__setattr__(self, "gamma", g)

    @property
    def K(self) -> int:
        return self.gamma.shape[0]

    @property
    def L(self) -> int:
        return self.gamma.shape[1]

    @property
    def power(self) -> np.ndarray:
        """Squared gains ``gamma ** 2``."""
        return self.gamma ** 2


@dataclass(frozen=True, eq=False)
class VirtualCellMap:
    """Each user's ``V`` nearest antennas, nearest first.

    ``cells`` and ``cell_distances`` have shape ``(K, V)``.
    """

    V: int
    cells: np.ndarray
    cell_distances: np.ndarray
    L: int = field(default=0)

    def __post_init__(self):
        cells = _frozen(self.cells, dtype=np.int64)
        dist = _frozen(self.cell_distances)
        if cells.ndim != 2 or cells.shape != dist.shape or cells.shape[1] != self.V:
            raise ValueError("cells and cell_distances must both be (K, V)")
        if self.V < 1 or (self.L and self.V > self.L):
            raise ValueError("need 1 <= V <= L")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "cell_distances", dist)

    @property
    def K(self) -> int:
        return self.cells.shape[0]

    @property
    def radius(self) -> np.ndarray:
        """Distance to each user's V-th closest antenna."""
        return self.cell_distances[:, -1]

    def membership(self, L: int | None = None) -> np.ndarray:
        """Boolean ``(K, L)`` matrix, True where antenna l serves user k."""
        L = L or self.L or int(self.cells.max()) + 1
        m = np.zeros((self.K, L), dtype=bool)
        np.put_along_axis(m, self.cells, True, axis=1)
        return m


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), int(rng)
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng), None
    raise TypeError("rng must be a numpy Generator, SeedSequence or int seed")


def uniform_disk(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. points uniform on the unit disk."""
    r = np.sqrt(rng.random(n))
    theta = rng.random(n) * (2.0 * np.pi)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def generate_topology(K: int, L: int, rng) -> Topology:
    """Drop K users and L antennas uniformly on the unit disk.

    ``rng`` may be a Generator or an integer seed; an integer seed is
    recorded on the returned topology.
    """
    if K < 1 or L < 1:
        raise ValueError("K and L must be at least 1")
    gen, seed = _as_rng(rng)
    users = uniform_disk(K, gen)
    bs = uniform_disk(L, gen)
    return Topology(users, bs, seed=seed)


def gains_from_distances(d, alpha: float):
    d = np.maximum(np.asarray(d, dtype=float), D_MIN)
    return d ** (-alpha / 2.0)


def pairwise_gains(topo: Topology, alpha: float) -> LargeScaleGains:
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    return LargeScaleGains(gains_from_distances(topo.user_bs_distances(), alpha), float(alpha))


def nearest_indices(d: np.ndarray, V: int) -> np.ndarray:
    """Column indices of the V smallest entries per row, nearest first.

    Ties go to the lower index (stable sort).
    """
    return np.argsort(d, axis=1, kind="stable")[:, :V]


def form_virtual_cells(topo: Topology, V: int) -> VirtualCellMap:
    if V < 1:
        raise ValueError("V must be at least 1")
    if V > topo.L:
        raise ValueError(f"V={V} exceeds L={topo.L}")
    d = topo.user_bs_distances()
    idx = nearest_indices(d, V)
    return VirtualCellMap(V, idx, np.take_along_axis(d, idx, axis=1), L=topo.L)


def closest_interferer(topo: Topology, k: int) -> int:
    """Index of the user nearest to user ``k`` (lowest index on ties)."""
    if topo.K < 2:
        raise ValueError("need at least two users")
    if not 0 <= k < topo.K:
        raise IndexError(k)
    diff = topo.user_positions - topo.user_positions[k]
    d = np.hypot(diff[:, 0], diff[:, 1])
    d[k] = np.inf
    return int(np.argmin(d))
