"""Lower norms of column truncations and the window / schedule machinery built on them.

``nu(T P_F) = inf{ ||T v|| : ||v|| = 1, supp v in F }`` is the smallest singular value of
the column truncation; rows outside the column support are zero and are dropped.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .galaxy import GalaxySample, LimitOperatorRep
from .operator import Operator
from .space import FiniteRegion


def sigma_min(matrix, tol: float = 1e-10) -> float:
    """Lower norm ``min ||A v|| / ||v||`` of a dense matrix.

    Equals the smallest singular value when ``rows >= cols`` and 0 otherwise.
    Computed by the LAPACK divide-and-conquer SVD (values only), which is
    deterministic for fixed input; ``tol`` is the relative accuracy asked of it
    and is only validated here.
    """
    A = np.asarray(matrix)
    if A.ndim != 2 or A.size == 0:
        raise DomainError("sigma_min needs a nonempty 2-d matrix")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    m, n = A.shape
    if m < n:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def lower_norm_truncated(op: Operator, F) -> float:
    M, _ = op.column_truncation(F)
    return sigma_min(M)


@dataclass
class LowerNormCurve:
    center: tuple
    radii: list
    values: list
    target: float | None = None
    tolerance_schedule: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["center"] = list(self.center)
        return d

    def to_csv(self) -> str:
        lines = ["r,nu"] + [f"{r},{v!r}" for r, v in zip(self.radii, self.values)]
        return "\n".join(lines) + "\n"


def lower_norm_curve(op: Operator, center, radii) -> LowerNormCurve:
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly increasing")
    center = op.space.point(center)
    values = [lower_norm_truncated(op, op.space.ball(center, r)) for r in radii]
    return LowerNormCurve(center, radii, values)


@dataclass
class WindowWitness:
    Y: FiniteRegion
    F: FiniteRegion
    nu_Y: float
    nu_F: float
    gap: float
    s: int
    delta: float | None = None
    candidates: int = 0

    def to_dict(self):
        return {"Y": [list(p) for p in self.Y.points], "Y_diameter": self.Y.diameter,
                "F_size": len(self.F), "F_diameter": self.F.diameter, "nu_Y": self.nu_Y,
                "nu_F": self.nu_F, "gap": self.gap, "s": self.s, "delta": self.delta,
                "within_delta": None if self.delta is None else self.gap <= self.delta,
                "candidates": self.candidates}


def window_candidates(space, F: FiniteRegion, s: int) -> list:
    """Subsets of F of diameter <= s: F cut by balls of radius floor(s/2), and for odd s
    by unions of two such balls around adjacent centers."""
    h = s // 2
    out = {}
    for y in F.points:
        Y = tuple(p for p in space.ball(y, h).points if p in F)
        if Y:
            out.setdefault(frozenset(Y), Y)
        if s % 2 == 1:
            for y2 in space.neighbors(y):
                pts = dict.fromkeys(p for p in space.ball(y, h).points + space.ball(y2, h).points if p in F)
                Y2 = tuple(sorted(pts, key=F.index.__getitem__))
                if Y2 and space.set_diameter(Y2) <= s:
                    out.setdefault(frozenset(Y2), Y2)
    return [space.region(Y) for Y in out.values()]


def window_search(op: Operator, F: FiniteRegion, s: int, delta: float | None = None) -> WindowWitness:
    """Window of diameter <= s inside F whose truncated lower norm is smallest.

    The gap ``nu(T P_Y) - nu(T P_F)`` is measured, never assumed to be below ``delta``.
    """
    if s < 0:
        raise DomainError("s must be nonnegative")
    if len(F) == 0:
        raise DomainError("F is empty")
    space = op.space
    nu_F = lower_norm_truncated(op, F)
    if len(F) == 1:
        return WindowWitness(F, F, nu_F, nu_F, 0.0, s, delta, 1)
    cands = window_candidates(space, F, s)
    best, best_nu = None, math.inf
    for Y in cands:
        v = lower_norm_truncated(op, Y)
        if v < best_nu:
            best, best_nu = Y, v
    # nu is monotone under inclusion, so the gap is >= 0 up to rounding
    gap = max(0.0, best_nu - nu_F)
    return WindowWitness(best, F, best_nu, nu_F, gap, s, delta, len(cands))


@dataclass
class ScheduleProbe:
    curves: list
    w_target: float
    k_max: int
    consistent: bool
    center: tuple | None
    failing_k: int | None
    failing_value: float | None

    def to_dict(self):
        return {"w_target": self.w_target, "k_max": self.k_max, "consistent": self.consistent,
                "center": None if self.center is None else list(self.center),
                "failing_k": self.failing_k, "failing_value": self.failing_value,
                "curves": [c.to_dict() for c in self.curves]}


def schedule_probe(op: Operator, galaxy_sample: GalaxySample, w_target: float, k_max: int,
                   radii=None, late: int = 3) -> ScheduleProbe:
    """Check ``|nu(T P_B(x, r_k)) - w| < 2^-k`` for ``k = 0..k_max`` at late centers of the sample.

    Radii default to the sample's stabilised radii, extended by steps of 2 when
    ``k_max + 1`` values are needed.
    """
    if w_target < 0:
        raise DomainError("w_target must be nonnegative")
    if radii is None:
        radii = list(galaxy_sample.stabilized_radii)
        while len(radii) < k_max + 1:
            radii.append((radii[-1] if radii else 0) + 2)
    radii = list(radii)[:k_max + 1]
    if len(radii) < k_max + 1:
        raise DomainError("need k_max + 1 radii")
    centers = galaxy_sample.survivors()[-late:][::-1]
    sched = [2.0 ** -k for k in range(k_max + 1)]
    curves, first_fail = [], None
    for c in centers:
        curve = lower_norm_curve(op, c, radii)
        curve.target, curve.tolerance_schedule = w_target, sched
        curves.append(curve)
        bad = [k for k in range(k_max + 1) if not abs(curve.values[k] - w_target) < sched[k]]
        if not bad:
            return ScheduleProbe(curves, w_target, k_max, True, c, None, None)
        if first_fail is None:
            first_fail = (c, bad[0], curve.values[bad[0]])
    c, k, v = first_fail
    return ScheduleProbe(curves, w_target, k_max, False, c, k, v)


def rep_lower_norms(rep: LimitOperatorRep, r_probe: int):
    """``(nu, nu_adjoint)`` of the limit operator on ``ball(center, r_probe)``.

    Needs the stabilised ball to contain every row the truncation can hit; returns
    ``None`` when the achieved radius is insufficient.  Rows are bounded by the
    propagation of the limit operator itself, which never exceeds the source's
    (finite-rank parts of the source leave no trace at infinity).
    """
    R = rep.source_propagation
    if R is not None:
        R = min(R, rep.kernel_propagation)
    need = r_probe + (R if R is not None else 0)
    if rep.achieved_radius < need:
        return None
    cols = rep.size_at(r_probe)
    rows = rep.kernel.shape[0] if R is None else rep.size_at(need)
    K = rep.kernel[:rows, :rows]
    nu = sigma_min(K[:, :cols])
    nu_star = sigma_min(K.conj().T[:, :cols])
    return nu, nu_star


def lower_norm_spectrum(op: Operator, galaxy_reps, r_probe: int) -> dict:
    """Lower-norm estimates of each (deduplicated) limit operator at the probe radius."""
    entries = []
    for i, rep in enumerate(galaxy_reps):
        rid = rep.rep_id or f"rep{i}"
        res = rep_lower_norms(rep, r_probe)
        if res is None:
            entries.append({"id": rid, "status": "insufficient radius",
                            "achieved_radius": rep.achieved_radius, "nu": None, "nu_adjoint": None})
        else:
            entries.append({"id": rid, "status": "ok", "achieved_radius": rep.achieved_radius,
                            "nu": res[0], "nu_adjoint": res[1]})
    ok = [e for e in entries if e["status"] == "ok"]
    return {"r_probe": r_probe, "estimates": entries,
            "min_nu": min((e["nu"] for e in ok), default=None),
            "min_two_sided": min((min(e["nu"], e["nu_adjoint"]) for e in ok), default=None)}
