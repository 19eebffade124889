"""Backward-reachable level families stored as indexed ball unions.

For an accuracy ``delta`` the output slab is the set of augmented states
whose most recent output has magnitude at most ``delta``.  Level 0 collects,
for each data record whose successor state lies strictly inside the slab,
the ball around the successor with the slab inradius.  Level j+1 collects,
for each record whose successor lies inside the level-j union with positive
inradius ``r``, the ball around the record's *state* with the certified
radius ``state_dev_inv(r)``: from anywhere in that ball, replaying the
record's target provably lands the successor inside level j.

Inradius of a point in a ball union is NP-hard to compute exactly, so the
single-ball underestimate ``max_j (radius_j - dist(p, center_j))`` is used
throughout; every certificate built on it stays sound.  Entries with
inradius below 1e-12 are dropped (zero-measure certificates).

Families store (record index, inradius, certified radius) tuples per level;
balls are reconstructed on demand from the dataset.  Membership queries are
vectorized exhaustive scans over a level's entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .narx import FLOAT_FMT, NarxDataset

__all__ = [
    "Ball",
    "LevelEntries",
    "LevelFamily",
    "slab_inradius",
    "union_inradius",
    "index_set_slab",
    "index_set_level",
    "build_level_family",
    "pairwise_distances",
    "check_nesting",
    "dump_family",
    "load_family",
]

MIN_INRADIUS = 1e-12


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius < 0:
            raise ValueError("radius must be >= 0")


@dataclass
class LevelEntries:
    """Entries of one level: parallel arrays over records."""

    idx: np.ndarray          # record indices into the dataset
    inradius: np.ndarray     # r_i > 0, inradius in the previous target set
    cert_radius: np.ndarray  # state_dev_inv(r_i)

    def __len__(self):
        return len(self.idx)

    @staticmethod
    def empty():
        return LevelEntries(np.array([], dtype=int), np.array([]), np.array([]))


@dataclass
class LevelFamily:
    """Levels 0..depth for one accuracy value.

    Level 0 balls: (successor state, inradius).  Level j >= 1 balls:
    (record state, certified radius).  ``truncated_at`` records the first
    empty level when construction stopped early (remaining levels are empty).
    """

    delta: float
    depth: int
    levels: List[LevelEntries]
    dataset: NarxDataset
    truncated_at: Optional[int] = None

    def centers_radii(self, level):
        """Ball centers and radii realizing level ``level``."""
        e = self.levels[level]
        if level == 0:
            return self.dataset.succ_states[e.idx], e.inradius
        return self.dataset.states[e.idx], e.cert_radius

    def contains(self, level, point):
        """Closed-ball membership of ``point`` in the level's union."""
        if not 0 <= level <= self.depth:
            raise IndexError(f"level {level} outside 0..{self.depth}")
        e = self.levels[level]
        if len(e) == 0:
            return False
        centers, radii = self.centers_radii(level)
        d = np.linalg.norm(centers - np.asarray(point, dtype=float), axis=1)
        return bool((d <= radii).any())


def slab_inradius(succ_state, delta, order):
    """Inradius of a successor state in the output slab, or None if the
    point is not strictly inside (slab geometry: ``delta - |y component|``)."""
    p = np.asarray(succ_state, dtype=float)
    r = delta - abs(p[order - 1])
    return r if r > 0 else None


def union_inradius(point, balls):
    """Single-ball underestimate of the inradius of ``point`` in a ball
    union, or None if no ball contains it with positive margin."""
    if not balls:
        return None
    p = np.asarray(point, dtype=float)
    best = max(b.radius - float(np.linalg.norm(p - b.center)) for b in balls)
    return best if best > 0 else None


def _entries_from_inradii(inradii, bounds):
    idx = np.flatnonzero(inradii > MIN_INRADIUS)
    r = inradii[idx]
    return LevelEntries(idx=idx, inradius=r, cert_radius=bounds.state_dev_inv(r))


def index_set_slab(dataset: NarxDataset, delta, bounds) -> LevelEntries:
    """Records whose successor lies strictly inside the output slab."""
    inr = delta - np.abs(dataset.succ_states[:, dataset.order - 1])
    return _entries_from_inradii(inr, bounds)


def index_set_level(dataset: NarxDataset, family: LevelFamily, level,
                    bounds) -> LevelEntries:
    """Records whose successor lies inside the given level's ball union,
    with the single-ball inradius underestimate."""
    centers, radii = family.centers_radii(level)
    if len(radii) == 0:
        return LevelEntries.empty()
    d = cdist(dataset.succ_states, centers)
    inr = (radii[None, :] - d).max(axis=1)
    return _entries_from_inradii(inr, bounds)


def build_level_family(dataset: NarxDataset, bounds, delta, depth,
                       _dists=None) -> LevelFamily:
    """Construct levels 0..depth; stops early once a level comes out empty
    (an empty family is a valid, reported outcome).

    ``_dists`` optionally carries the two pairwise distance matrices
    (successors-to-successors, successors-to-states) so that a batch build
    over several accuracies shares them.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if _dists is None:
        _dists = pairwise_distances(dataset)
    D_ss, D_sz = _dists
    fam = LevelFamily(delta=float(delta), depth=int(depth), levels=[], dataset=dataset)
    fam.levels.append(index_set_slab(dataset, delta, bounds))
    for j in range(depth):
        prev = fam.levels[j]
        if len(prev) == 0:
            if fam.truncated_at is None:
                fam.truncated_at = j
            fam.levels.append(LevelEntries.empty())
            continue
        if j == 0:
            D, radii = D_ss[:, prev.idx], prev.inradius
        else:
            D, radii = D_sz[:, prev.idx], prev.cert_radius
        inr = (radii[None, :] - D).max(axis=1)
        fam.levels.append(_entries_from_inradii(inr, bounds))
    if fam.truncated_at is None:
        for j, e in enumerate(fam.levels):
            if len(e) == 0:
                fam.truncated_at = j
                break
    return fam


def pairwise_distances(dataset: NarxDataset):
    """(successor-to-successor, successor-to-state) distance matrices,
    shared across family builds over one dataset."""
    return (cdist(dataset.succ_states, dataset.succ_states),
            cdist(dataset.succ_states, dataset.states))


def check_nesting(family: LevelFamily) -> bool:
    """Sufficient single-ball test that every level-0 ball lies inside some
    level-1 ball.  True certifies the nesting needed for indefinite
    regulation; False is inconclusive and only reported."""
    e0, e1 = family.levels[0], family.levels[1]
    if len(e0) == 0:
        return True
    if len(e1) == 0:
        return False
    c0, r0 = family.centers_radii(0)
    c1, r1 = family.centers_radii(1)
    d = cdist(c0, c1)
    return bool(((d + r0[:, None]) <= r1[None, :]).any(axis=1).all())


def dump_family(path, family: LevelFamily):
    """Rows ``level,record,inradius,cert_radius`` after a small header."""
    with open(path, "w") as fh:
        fh.write(f"delta = {format(family.delta, FLOAT_FMT)}\n")
        fh.write(f"depth = {family.depth}\n")
        trunc = "" if family.truncated_at is None else str(family.truncated_at)
        fh.write(f"truncated_at = {trunc}\n")
        fh.write("j,i,r_i,gamma_inv_r_i\n")
        for j, e in enumerate(family.levels):
            for i, r, c in zip(e.idx, e.inradius, e.cert_radius):
                fh.write(f"{j},{i},{format(r, FLOAT_FMT)},{format(c, FLOAT_FMT)}\n")


def load_family(path, dataset: NarxDataset) -> LevelFamily:
    """Rebuild a family from its dump and the dataset it references."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("j,"):
                continue
            if "=" in line:
                key, _, val = line.partition("=")
                meta[key.strip()] = val.strip()
            else:
                j, i, r, c = line.split(",")
                rows.append((int(j), int(i), float(r), float(c)))
    depth = int(meta["depth"])
    per_level = [[] for _ in range(depth + 1)]
    for j, i, r, c in rows:
        per_level[j].append((i, r, c))
    levels = []
    for entries in per_level:
        if entries:
            idx, r, c = (np.array(v) for v in zip(*entries))
            levels.append(LevelEntries(idx=idx.astype(int), inradius=r, cert_radius=c))
        else:
            levels.append(LevelEntries.empty())
    trunc = meta.get("truncated_at", "")
    return LevelFamily(
        delta=float(meta["delta"]), depth=depth, levels=levels, dataset=dataset,
        truncated_at=int(trunc) if trunc else None,
    )
