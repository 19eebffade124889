"""Online reference selection and control over precomputed level families.

Each step: find the first (accuracy, level) pair containing the current
augmented state, scanning accuracies ascending and levels ascending within
each accuracy.  A hit at level 0 only certifies position, not an action, so
the search is repeated over levels >= 1.  Among the covering entries of the
chosen level the controller picks the one maximizing the slack
``cert_radius - dist(state, entry state)`` (ties by lowest record index),
reads off the entry's stored target as the reference, and applies the
interpolant at ``[reference; state]``.

When no family covers the state the nearest-training-neighbour fallback is
used: the record minimizing the state distance supplies the reference
(distance ties broken toward the smallest-magnitude target, then lowest
index) and the step is flagged uncertified.  Certificate bookkeeping stays
honest either way; descent of a certified step is asserted against the same
family one level down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .levelsets import LevelFamily

__all__ = ["StepCertificate", "Controller"]


@dataclass(frozen=True)
class StepCertificate:
    """Decision record of one control step."""

    delta: Optional[float]   # None on fallback
    kappa: Optional[int]
    index: int               # selected record (reference provider)
    slack: Optional[float]   # cert_radius - distance, >= 0 when certified
    certified: bool


class Controller:
    """Immutable online controller over one dataset's families."""

    def __init__(self, families, interpolant, fallback="nearest"):
        """``families``: list of LevelFamily with strictly ascending,
        positive accuracies, all built over the same dataset."""
        families = sorted(families, key=lambda f: f.delta)
        deltas = [f.delta for f in families]
        if any(d <= 0 for d in deltas):
            raise ValueError("accuracies must be positive")
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError("duplicate accuracy values")
        if fallback != "nearest":
            raise ValueError(f"unknown fallback policy {fallback!r}")
        self.families = families
        self.interpolant = interpolant
        self.fallback = fallback
        self.dataset = families[0].dataset
        for f in families:
            if f.dataset is not self.dataset:
                raise ValueError("families must share one dataset")
        # stacked per-family arrays for fast location
        self._stacks = [self._stack(f) for f in families]

    @staticmethod
    def _stack(family: LevelFamily):
        lv, ii, rr = [], [], []
        for j, e in enumerate(family.levels):
            if len(e) == 0:
                continue
            lv.append(np.full(len(e), j))
            ii.append(e.idx)
            rr.append(e.inradius if j == 0 else e.cert_radius)
        if not lv:
            return (np.array([], dtype=int), np.array([], dtype=int), np.array([]))
        return (np.concatenate(lv), np.concatenate(ii), np.concatenate(rr))

    def locate(self, state, min_level=0):
        """First (delta, level) containing the state, scanning accuracies
        ascending then levels ascending; None when uncovered."""
        state = np.asarray(state, dtype=float)
        d_state = np.linalg.norm(self.dataset.states - state, axis=1)
        d_succ = np.linalg.norm(self.dataset.succ_states - state, axis=1)
        for fam, (lv, ii, rr) in zip(self.families, self._stacks):
            if len(lv) == 0:
                continue
            dist = np.where(lv == 0, d_succ[ii], d_state[ii])
            hit = (dist <= rr) & (lv >= min_level)
            if hit.any():
                return fam.delta, int(lv[hit].min())
        return None

    def family(self, delta) -> LevelFamily:
        for f in self.families:
            if f.delta == delta:
                return f
        raise KeyError(f"no family with accuracy {delta}")

    def select_reference(self, state, delta, kappa):
        """Max-slack covering entry of the level; returns the certificate
        and the entry's stored target."""
        if kappa < 1:
            raise ValueError("reference selection needs level >= 1")
        fam = self.family(delta)
        e = fam.levels[kappa]
        state = np.asarray(state, dtype=float)
        d = np.linalg.norm(self.dataset.states[e.idx] - state, axis=1)
        slack = e.cert_radius - d
        ok = np.flatnonzero(slack >= 0)
        if ok.size == 0:
            raise RuntimeError(
                "containment reported but no covering entry found; "
                "tolerance inconsistency between locate and select")
        # argmax slack, ties by lowest record index
        order = np.lexsort((e.idx[ok], -slack[ok]))
        k = ok[order[0]]
        cert = StepCertificate(delta=delta, kappa=int(kappa), index=int(e.idx[k]),
                               slack=float(slack[k]), certified=True)
        return cert, float(self.dataset.targets[e.idx[k]])

    def _fallback(self, state):
        state = np.asarray(state, dtype=float)
        d = np.linalg.norm(self.dataset.states - state, axis=1)
        targets = self.dataset.targets
        order = np.lexsort((np.arange(len(d)), np.abs(targets), d))
        j = int(order[0])
        cert = StepCertificate(delta=None, kappa=None, index=j, slack=None,
                               certified=False)
        return cert, float(targets[j])

    def control(self, state):
        """(input, certificate) for the current state."""
        loc = self.locate(state)
        if loc is not None and loc[1] == 0:
            loc = self.locate(state, min_level=1)
        if loc is None:
            cert, reference = self._fallback(state)
        else:
            cert, reference = self.select_reference(state, *loc)
        x = np.concatenate([[reference], np.asarray(state, dtype=float)])
        return self.interpolant.predict(x), cert

    def assert_descent(self, certificate: StepCertificate, next_state):
        """True when the successor of a certified step sits one level down
        in the same family; None (skipped) for uncertified steps."""
        if not certificate.certified:
            return None
        fam = self.family(certificate.delta)
        return fam.contains(certificate.kappa - 1, next_state)
