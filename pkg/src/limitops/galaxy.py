"""Limit operators by patch stabilisation along diverging sequences.

A limit operator is represented by the stabilised matrix of ``P_B T P_B`` on a
ball ``B`` around a (finitely approximated) point at infinity.  Extraction
follows a nested diagonal refinement: at every radius of the schedule the
surviving centers are partitioned by isometry type of their ball and by
entrywise agreement of their patches, and only the largest class is kept.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InconclusiveError
from .operator import Operator
from .space import CoarseUnion, Space, ZLattice, _lattice_offsets

DEFAULT_TOL = 1e-6
DEFAULT_MIN_SURVIVORS = 3
DEFAULT_CENTERS = 64


def default_radii(top: int) -> list:
    """``r_k = 2k`` up to the first value >= ``top``."""
    out, r = [], 2
    while True:
        out.append(r)
        if r >= top:
            return out
        r += 2


@dataclass
class PointedPatch:
    center: tuple
    radius: int
    labels: list
    points: tuple
    entries: np.ndarray
    distances: np.ndarray

    def restrict(self, r: int) -> "PointedPatch":
        n = int(np.count_nonzero(self.distances[0] <= r))
        return PointedPatch(self.center, r, self.labels[:n], self.points[:n],
                            self.entries[:n, :n], self.distances[:n, :n])


@functools.lru_cache(maxsize=64)
def _lattice_distances(dim, metric, r):
    offs = np.array(_lattice_offsets(dim, metric, r), dtype=np.int64).reshape(-1, dim)
    diff = np.abs(offs[:, None, :] - offs[None, :, :])
    D = diff.sum(axis=2) if metric == "l1" else diff.max(axis=2)
    D.setflags(write=False)
    return D


def patch(op: Operator, center, radius: int) -> PointedPatch:
    """``P_B T P_B`` on ``B = ball(center, radius)`` in canonical order."""
    space = op.space
    center = space.point(center)
    region = space.canonical_labeling(center, radius)
    if op.propagation is None and isinstance(space, CoarseUnion):
        if len({p[0] for p in region.points}) > 1:
            raise DomainError(f"ball({center}, {radius}) crosses components of an unbounded block operator")
    if isinstance(space, ZLattice):
        D = _lattice_distances(space.dim, space.metric, int(radius))
    else:
        D = space.distance_matrix(region.points)
    return PointedPatch(center, int(radius), space.labels(center, region), region.points,
                        op.matrix(region.points, region.points), D)


@dataclass
class GalaxySample:
    centers: list
    stabilized_radii: list
    subsequence_trace: list
    tolerance: float
    strategy: str = ""

    def survivors(self) -> list:
        idx = self.subsequence_trace[-1] if self.subsequence_trace else range(len(self.centers))
        return [self.centers[i] for i in idx]

    def to_dict(self):
        return {"centers": [list(c) for c in self.centers], "stabilized_radii": list(self.stabilized_radii),
                "subsequence_trace": [list(t) for t in self.subsequence_trace], "tolerance": self.tolerance,
                "strategy": self.strategy}


@dataclass
class LimitOperatorRep:
    """Stabilised limit operator; the radius-``r`` kernel is the leading ``sizes[r]`` block."""

    labels: list
    distances: np.ndarray
    kernel: np.ndarray
    radii: list
    sizes: list
    provenance: GalaxySample
    source_propagation: object
    survivors: int
    rep_id: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def achieved_radius(self) -> int:
        return self.radii[-1]

    @property
    def kernel_propagation(self) -> int:
        """Largest stabilised distance carrying a nonzero kernel entry."""
        nz = self.kernel != 0
        return int(self.distances[nz].max()) if nz.any() else 0

    def size_at(self, r: int) -> int:
        return int(np.count_nonzero(self.distances[0] <= r))

    def kernel_at(self, r: int) -> np.ndarray:
        n = self.size_at(r)
        return self.kernel[:n, :n]

    def to_dict(self):
        def cm(M):
            return {"re": np.real(M).tolist(), "im": np.imag(M).tolist()}

        return {"id": self.rep_id,
                "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
                "radii": list(self.radii), "sizes": list(self.sizes),
                "achieved_radius": self.achieved_radius,
                "distances": self.distances.tolist(), "kernel": cm(self.kernel),
                "survivors": self.survivors,
                "source_propagation": self.source_propagation,
                "provenance": self.provenance.to_dict(), "meta": self.meta}


def _cluster(patches, order, tol):
    """Greedy clustering in ``order``: join the first class whose representative is within tol."""
    classes = []  # (key, rep_index, members)
    for i in order:
        p = patches[i]
        key = (p.distances.shape[0], p.distances.tobytes())
        for cls in classes:
            if cls[0] == key:
                q = patches[cls[1]]
                if np.max(np.abs(p.entries - q.entries), initial=0.0) <= tol:
                    cls[2].append(i)
                    break
        else:
            classes.append((key, i, [i]))
    return classes


def extract_limit_operator(op: Operator, centers, radii_schedule=None, tol: float = DEFAULT_TOL,
                           min_survivors: int = DEFAULT_MIN_SURVIVORS, strategy: str = "") -> LimitOperatorRep:
    """Extract a limit operator along ``centers`` (ordered by increasing distance from the basepoint).

    Raises
    ------
    InconclusiveError
        Fewer than ``min_survivors`` centers survive the refinement.
    """
    space = op.space
    centers = [space.point(c) for c in centers]
    if radii_schedule is None:
        radii_schedule = default_radii(2 * 8)
    radii = sorted(int(r) for r in radii_schedule)
    if tol <= 0 or min_survivors < 2:
        raise DomainError("need tol > 0 and min_survivors >= 2")
    if len(set(radii)) != len(radii):
        raise DomainError("radii schedule must be strictly increasing")
    full = [patch(op, c, radii[-1]) for c in centers]
    survivors = list(range(len(centers)))
    trace = []
    for r in radii:
        sub = {i: full[i].restrict(r) for i in survivors}
        # most divergent first, so each class is represented by its farthest member
        classes = _cluster(sub, sorted(survivors, reverse=True), tol)
        best = max(classes, key=lambda c: (len(c[2]), max(c[2])))
        survivors = sorted(best[2])
        trace.append(survivors)
        if len(survivors) < min_survivors:
            reached = radii[len(trace) - 2] if len(trace) > 1 else None
            raise InconclusiveError(
                f"inconclusive: increase centers or tol ({len(survivors)} < {min_survivors} survivors "
                f"at radius {r}; last stabilized radius {reached}; strategy {strategy or 'custom'})")
    ref = full[survivors[-1]]
    diffs = np.mean([full[i].entries - ref.entries for i in survivors], axis=0)
    kernel = ref.entries + diffs
    sample = GalaxySample(centers, radii, trace, tol, strategy)
    return LimitOperatorRep(list(ref.labels), np.array(ref.distances), kernel, radii,
                            [ref.restrict(r).entries.shape[0] for r in radii], sample,
                            op.propagation, len(survivors))


def _same_class(a: LimitOperatorRep, b: LimitOperatorRep, tol: float) -> bool:
    r = min(a.achieved_radius, b.achieved_radius)
    n = a.size_at(r)
    if n != b.size_at(r) or not np.array_equal(a.distances[:n, :n], b.distances[:n, :n]):
        return False
    return float(np.max(np.abs(a.kernel[:n, :n] - b.kernel[:n, :n]), initial=0.0)) <= tol


def group_limit_operators(reps, tol: float = DEFAULT_TOL) -> list:
    """Partition reps into classes; each class lists members, first member is the representative."""
    classes = []
    for rep in reps:
        for cls in classes:
            if _same_class(cls[0], rep, tol):
                cls.append(rep)
                break
        else:
            classes.append([rep])
    return classes


def dedup_limit_operators(reps, tol: float = DEFAULT_TOL) -> list:
    """One representative per class of isometric, entrywise-agreeing limit operators."""
    return [cls[0] for cls in group_limit_operators(reps, tol)]


def check_limit_propagation(rep: LimitOperatorRep, source_op: Operator = None, tol: float = None,
                            propagation=None) -> bool:
    """True iff the kernel vanishes (up to tol) wherever the stabilised distance exceeds R."""
    R = propagation if propagation is not None else (source_op.propagation if source_op is not None
                                                     else rep.source_propagation)
    if R is None:
        raise DomainError("source operator has unbounded propagation")
    tol = rep.provenance.tolerance if tol is None else tol
    far = rep.distances > R
    return bool(np.all(np.abs(rep.kernel[far]) <= tol))


def extract_along(op: Operator, strategy: str, count: int = DEFAULT_CENTERS, seed: int = 0,
                  radii=None, tol: float = DEFAULT_TOL, min_survivors: int = DEFAULT_MIN_SURVIVORS,
                  **strategy_kw) -> LimitOperatorRep:
    """Convenience: diverging sequence + extraction, tagging the rep with its strategy."""
    centers = op.space.diverging_sequence(strategy, count, seed, **strategy_kw)
    label = strategy + "".join(f"[{k}={v}]" for k, v in sorted(strategy_kw.items()))
    rep = extract_limit_operator(op, centers, radii, tol, min_survivors, strategy=label)
    rep.rep_id = label
    return rep
