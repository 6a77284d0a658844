"""Structural diagnostics: propagation, quasi-locality, ghost decay, column support.

All profiles except :func:`propagation_of` are estimates over finite samples and
carry the horizon they were computed at.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .operator import Operator, TermOperator
from .space import CoarseUnion, ZLattice


def propagation_of(op: Operator):
    """Exact propagation bound from the term structure; ``"unbounded"`` for unbounded block families."""
    p = op.propagation
    return "unbounded" if p is None else p


def _sample_centers(space, n_far=8, seed=0):
    centers = [space.basepoint()]
    for strategy, kw in space.default_strategies():
        centers += space.diverging_sequence(strategy, n_far, seed, **kw)
    return list(dict.fromkeys(centers))


@dataclass
class QuasiLocalityProfile:
    eps: list
    radius: list          # None where no tested separation achieved eps
    block_norms: list     # max block norm at separation s, s = 0..horizon
    horizon: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def quasi_locality_profile(op: Operator, eps_list, region_budget: int = 4, max_separation: int = 8,
                           n_far: int = 6, seed: int = 0) -> QuasiLocalityProfile:
    """Least tested separation beyond which sampled blocks ``P_Y1 T P_Y2`` have norm < eps.

    ``Y1`` ranges over balls of radius ``0..region_budget`` around sampled centers and
    ``Y2`` over the points of a window around ``Y1`` at distance > s from it.
    """
    space = op.space
    S = max_separation
    worst = np.zeros(S + 1)
    for c in _sample_centers(space, n_far, seed):
        for rho in range(region_budget + 1):
            Y1 = space.ball(c, rho)
            window = space.ball(c, rho + S + region_budget + 1)
            dist = {y: min(space.distance(y, a) for a in Y1) for y in window if y not in Y1}
            for s in range(S + 1):
                Y2 = [y for y, d in dist.items() if d > s]
                if not Y2:
                    break
                M = op.matrix(Y1.points, Y2)
                nrm = np.linalg.norm(M, 2) if M.size else 0.0
                worst[s] = max(worst[s], nrm)
    # worst[s] is the max over Y2 sets shrinking in s, hence nonincreasing
    worst = np.maximum.accumulate(worst[::-1])[::-1]
    radius = []
    for eps in eps_list:
        ok = [s for s in range(S + 1) if worst[s] < eps]
        radius.append(ok[0] if ok else None)
    return QuasiLocalityProfile(list(map(float, eps_list)), radius, [float(w) for w in worst],
                                {"region_budget": region_budget, "max_separation": S,
                                 "centers": len(_sample_centers(space, n_far, seed)),
                                 "estimate": "horizon-limited"})


@dataclass
class GhostProfile:
    cutoffs: list
    sup_outside: list
    verdict: str                  # "ghost-consistent" or "not ghost"
    witness: dict | None
    decay_slope: float | None
    horizon: dict = field(default_factory=dict)

    @property
    def ghost_consistent(self) -> bool:
        return self.verdict == "ghost-consistent"

    def to_dict(self):
        return asdict(self)


def default_cutoffs(space, top: int = 256) -> list:
    total = space.total_points() if isinstance(space, CoarseUnion) else None
    limit = top if total is None else min(top, total - 1)
    out, n = [], 1
    while n <= limit:
        out.append(n)
        n *= 2
    if total is not None and out and out[-1] < limit:
        out.append(limit)
    return out or [1]


def _enum_index(space, p, cap: int = 1 << 20):
    """Enumeration index of ``p``, or a lower bound >= ``cap`` for far lattice points."""
    if isinstance(space, ZLattice) and space.dim > 1:
        d = space.norm(p)
        if space.growth_bound(d) > cap:
            return space.growth_bound(d - 1)
    return space.index_of(p)


def ghost_profile(op: Operator, cutoffs=None, tol: float = 1e-6, decay_slope: float = 0.25,
                  n_far: int = 16, seed: int = 0) -> GhostProfile:
    """Sup of ``|entry(x, y)|`` outside the initial ``n x n`` box of the enumeration.

    Columns are sampled from the first ``2 * max(cutoffs)`` enumerated points plus far
    points on the default diverging sequences beyond the sampled range.  The
    verdict is "ghost-consistent" when the sup drops below ``tol`` at the last cutoff,
    or when it keeps decaying like a power law with log-log slope <= ``-decay_slope``
    across the second half of the cutoffs; otherwise "not ghost" with a witness entry.
    """
    space = op.space
    cutoffs = sorted(cutoffs) if cutoffs is not None else default_cutoffs(space)
    n_box = 2 * cutoffs[-1]
    total = space.total_points() if isinstance(space, CoarseUnion) else None
    if total is not None:
        n_box = min(n_box, total)
    records = []  # (max enumeration index of x and y, |value|, x, y)
    for i in range(n_box):
        y = space.point_at(i)
        for x, v in op.column(y).items():
            records.append((max(i, space.index_of(x)), abs(v), x, y))
    far = []
    for strategy, kw in space.default_strategies():
        far += space.diverging_sequence(strategy, n_far, seed, **kw)
    for y in dict.fromkeys(far):
        iy = _enum_index(space, y)
        if iy < n_box:
            continue
        for x, v in op.column(y).items():
            records.append((max(iy, _enum_index(space, x)), abs(v), x, y))
    sups, witness = [], None
    for n in cutoffs:
        out = [r for r in records if r[0] >= n]
        best = max(out, key=lambda r: r[1], default=None)
        sups.append(0.0 if best is None else float(best[1]))
        if n == cutoffs[-1] and best is not None and best[1] > 0:
            witness = {"row": list(best[2]), "col": list(best[3]), "abs_value": float(best[1])}
    sups = list(np.minimum.accumulate(sups))
    slope = None
    tail = [(n, m) for n, m in zip(cutoffs, sups)][len(cutoffs) // 2:]
    if len(tail) >= 2 and all(m > 0 for _, m in tail):
        ln = np.log([n for n, _ in tail])
        lm = np.log([m for _, m in tail])
        slope = float(np.polyfit(ln, lm, 1)[0]) if np.ptp(ln) > 0 else None
    ghost = sups[-1] <= tol or (slope is not None and slope <= -decay_slope)
    return GhostProfile(list(cutoffs), [float(s) for s in sups],
                        "ghost-consistent" if ghost else "not ghost",
                        None if ghost else witness, slope,
                        {"box_columns": n_box, "far_columns": len(set(far)), "tol": tol,
                         "decay_slope": decay_slope, "estimate": "horizon-limited"})


def ghost_terms(op: TermOperator, **kw) -> list:
    """Indices of the terms of ``op`` whose own ghost profile is ghost-consistent."""
    out = []
    for i, t in enumerate(op.terms):
        if ghost_profile(TermOperator(op.space, [t]), **kw).ghost_consistent:
            out.append(i)
    return out


@dataclass
class ColumnSupportProfile:
    eps: list
    support: list
    witness_columns: list
    horizon: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def best_m_term_size(column_abs: np.ndarray, eps: float) -> int:
    """Least M such that dropping all but the M largest entries leaves l2 error < eps."""
    a = np.sort(np.asarray(column_abs, dtype=float))  # ascending
    tails = np.sqrt(np.concatenate(([0.0], np.cumsum(a ** 2))))  # tails[k] = error when k smallest dropped
    n = len(a)
    for M in range(n + 1):
        if tails[n - M] < eps:
            return M
    return n


def column_support_profile(op: Operator, eps_list, sample_size: int = 32, seed: int = 0) -> ColumnSupportProfile:
    """Column-approximability by finitely supported vectors, sampled centrally and far out."""
    space = op.space
    central = [space.point_at(i) for i in range(max(1, sample_size // 2))]
    far = []
    strategies = space.default_strategies()
    per = max(1, (sample_size - len(central)) // max(1, len(strategies)))
    for strategy, kw in strategies:
        far += space.diverging_sequence(strategy, per, seed, **kw)
    cols = list(dict.fromkeys(central + far))
    mags = {y: np.abs(np.array(list(op.column(y).values()), dtype=complex)) for y in cols}
    support, witnesses = [], []
    for eps in eps_list:
        best_M, best_y = 0, None
        for y in cols:
            M = best_m_term_size(mags[y], eps)
            if M > best_M:
                best_M, best_y = M, y
        support.append(best_M)
        witnesses.append(None if best_y is None else list(best_y))
    return ColumnSupportProfile(list(map(float, eps_list)), support, witnesses,
                                {"columns": len(cols), "estimate": "horizon-limited"})
