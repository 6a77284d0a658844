"""Fredholm verdicts from limit operators, plus the exact symbol oracle on Z.

For an eventually periodic band operator on Z each tail is a block Laurent
operator with matrix symbol ``a(theta) = sum_d A_d exp(i d theta)``; the tail is
invertible iff ``a`` is pointwise invertible, its lower norm is
``min_theta sigma_min(a(theta))`` and the Fredholm index of the whole operator
is ``wind(det a_left) - wind(det a_right)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .diagnostics import ghost_terms
from .errors import DomainError, InconclusiveError, OracleUnavailable
from .galaxy import (DEFAULT_CENTERS, DEFAULT_MIN_SURVIVORS, DEFAULT_TOL, default_radii,
                     extract_along, group_limit_operators)
from .lowernorm import rep_lower_norms
from .operator import (Adjoint, BlockTerm, DiagTerm, FiniteTerm, Operator, Product, Scaled,
                       ShiftTerm, Sum, TermOperator)
from .space import ZLattice

SIDES = ("left_tail", "right_tail")


@dataclass
class SymbolFunction:
    """Matrix trigonometric polynomial; ``coeffs[d]`` is the ``p x p`` coefficient of ``exp(i d theta)``."""

    period: int
    coeffs: dict

    def __call__(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros((theta.size, self.period, self.period), dtype=complex)
        for d, A in self.coeffs.items():
            out += np.exp(1j * d * theta)[:, None, None] * A[None]
        return out

    def is_scalar(self):
        return self.period == 1

    def lipschitz_bound(self) -> float:
        return float(sum(np.linalg.norm(A, 2) * abs(d) for d, A in self.coeffs.items()))

    def tail_entry(self, x: int, y: int) -> complex:
        p = self.period
        d = x // p - y // p
        A = self.coeffs.get(d)
        return 0j if A is None else complex(A[x % p, y % p])

    def refold(self, q: int) -> "SymbolFunction":
        """Same operator viewed with period ``q`` (a multiple of the current period)."""
        p = self.period
        if q % p:
            raise ValueError("new period must be a multiple")
        k = q // p
        out = {}
        for d, A in self.coeffs.items():
            for a in range(k):
                for b in range(k):
                    # a - b + D k = d
                    num = d - a + b
                    if num % k:
                        continue
                    D = num // k
                    M = out.setdefault(D, np.zeros((q, q), dtype=complex))
                    M[a * p:(a + 1) * p, b * p:(b + 1) * p] += A
        return SymbolFunction(q, out)

    def adjoint(self) -> "SymbolFunction":
        return SymbolFunction(self.period, {-d: A.conj().T for d, A in self.coeffs.items()})

    def _common(self, other):
        q = math.lcm(self.period, other.period)
        return self.refold(q), other.refold(q)

    def __add__(self, other):
        a, b = self._common(other)
        out = {d: A.copy() for d, A in a.coeffs.items()}
        for d, B in b.coeffs.items():
            out[d] = out[d] + B if d in out else B.copy()
        return SymbolFunction(a.period, out)

    def __matmul__(self, other):
        a, b = self._common(other)
        out = {}
        for d1, A in a.coeffs.items():
            for d2, B in b.coeffs.items():
                out[d1 + d2] = out.get(d1 + d2, 0) + A @ B
        return SymbolFunction(a.period, out)

    def scale(self, c):
        return SymbolFunction(self.period, {d: c * A for d, A in self.coeffs.items()})

    def to_dict(self):
        return {"period": self.period,
                "coeffs": [{"offset": int(d), "re": np.real(A).tolist(), "im": np.imag(A).tolist()}
                           for d, A in sorted(self.coeffs.items())]}


def _term_symbol(term, side) -> SymbolFunction:
    if isinstance(term, FiniteTerm):
        return SymbolFunction(1, {})
    if isinstance(term, BlockTerm):
        raise OracleUnavailable("block terms have no symbol")
    tail = term.coeff.tail(side)
    if tail is None:
        raise OracleUnavailable(f"coefficient {term.coeff!r} is not eventually periodic")
    p, values = tail
    off = term.offset[0] if isinstance(term, ShiftTerm) else 0
    out = {}
    for i in range(p):
        # entry(x, x - off) = c(x); x = i in block 0, y = i - off
        y = i - off
        d = -(y // p)
        M = out.setdefault(d, np.zeros((p, p), dtype=complex))
        M[i, y % p] += values[i]
    return SymbolFunction(p, out)


def symbol_of(op: Operator, side: str) -> SymbolFunction:
    """Symbol of the periodic tail of an eventually periodic operator on Z.

    Raises
    ------
    OracleUnavailable
        Not on Z^1, or some coefficient is not eventually periodic.
    """
    if side not in SIDES:
        raise DomainError(f"side must be one of {SIDES}")
    if not (isinstance(op.space, ZLattice) and op.space.dim == 1):
        raise OracleUnavailable("symbol oracle is only available on Z^1")
    if isinstance(op, TermOperator):
        sym = SymbolFunction(1, {})
        for t in op.terms:
            sym = sym + _term_symbol(t, side)
        return _prune(sym)
    if isinstance(op, Adjoint):
        return symbol_of(op.base, side).adjoint()
    if isinstance(op, Scaled):
        return symbol_of(op.base, side).scale(op.factor)
    if isinstance(op, Sum):
        sym = SymbolFunction(1, {})
        for part in op.parts:
            sym = sym + symbol_of(part, side)
        return _prune(sym)
    if isinstance(op, Product):
        return _prune(symbol_of(op.a, side) @ symbol_of(op.b, side))
    raise OracleUnavailable(f"no symbol for {type(op).__name__}")


def _prune(sym):
    return SymbolFunction(sym.period, {d: A for d, A in sym.coeffs.items() if np.any(A != 0)})


@dataclass
class SymbolCheck:
    min_value: float
    certified: bool
    status: str            # "invertible", "vanishing" or "uncertified"
    theta: float
    lower_bound: float
    grid_size: int

    def __iter__(self):
        return iter((self.min_value, self.certified))

    def to_dict(self):
        return asdict(self)


def _smin_grid(sym, theta):
    vals = np.linalg.svd(sym(theta), compute_uv=False)
    return vals[:, -1]


def symbol_invertibility(sym: SymbolFunction, grid_size: int = 4096, lipschitz_bound: float | None = None,
                         vanish_tol: float = 1e-9) -> SymbolCheck:
    """Grid minimum of ``sigma_min(a(theta))`` with a Lipschitz certificate.

    ``grid_min - (pi / N) L > 0`` certifies invertibility; a locally refined
    minimum below ``vanish_tol`` certifies vanishing.
    """
    if grid_size < 8:
        raise DomainError("grid_size must be >= 8")
    L = sym.lipschitz_bound() if lipschitz_bound is None else lipschitz_bound
    theta = 2 * np.pi * np.arange(grid_size) / grid_size
    if not sym.coeffs:
        return SymbolCheck(0.0, True, "vanishing", 0.0, 0.0, grid_size)
    vals = _smin_grid(sym, theta)
    j = int(np.argmin(vals))
    gmin = float(vals[j])
    lower = gmin - np.pi / grid_size * L
    if lower > 0:
        return SymbolCheck(gmin, True, "invertible", float(theta[j]), float(lower), grid_size)
    h = 2 * np.pi / grid_size
    res = minimize_scalar(lambda t: float(_smin_grid(sym, t)[0]), bounds=(theta[j] - h, theta[j] + h),
                          method="bounded", options={"xatol": 1e-12})
    tmin, vmin = (float(res.x), float(res.fun)) if res.fun < gmin else (float(theta[j]), gmin)
    if vmin < vanish_tol:
        return SymbolCheck(vmin, True, "vanishing", tmin % (2 * np.pi), 0.0, grid_size)
    return SymbolCheck(vmin, False, "uncertified", tmin % (2 * np.pi), float(lower), grid_size)


def winding_number(sym: SymbolFunction, grid_size: int = 4096) -> int:
    """Winding number of ``det a(theta)`` around 0 by accumulated argument."""
    theta = 2 * np.pi * np.arange(grid_size + 1) / grid_size
    f = np.linalg.det(sym(theta)) if sym.coeffs else np.zeros(theta.size)
    if np.any(np.abs(f) == 0):
        raise DomainError("symbol vanishes on the grid; winding number undefined")
    steps = np.angle(f[1:] / f[:-1])
    if np.max(np.abs(steps)) > np.pi / 2:
        raise DomainError("grid too coarse")
    w = steps.sum() / (2 * np.pi)
    n = int(round(w))
    if abs(w - n) >= 0.1:
        raise DomainError("grid too coarse")
    return n


# verdicts

VERDICTS = ("generalized-Fredholm-consistent", "not-Fredholm", "inconclusive")
EXIT_CODES = {"generalized-Fredholm-consistent": 0, "not-Fredholm": 2, "inconclusive": 3}


@dataclass
class FredholmConfig:
    strategies: list | None = None      # [(strategy, kwargs), ...]; None = space defaults
    centers: int = DEFAULT_CENTERS
    seed: int = 0
    radii: list | None = None
    tol: float = DEFAULT_TOL
    min_survivors: int = DEFAULT_MIN_SURVIVORS
    tau: float = 1e-3
    mode: str | None = None             # "ghost" or "compact"; None picks by Property A
    probe_radius: int = 50
    grid_size: int = 4096
    trend_ratio: float = 0.55
    ghost_tol: float = 1e-6

    def resolved_mode(self, space) -> str:
        if self.mode is None:
            return "compact" if space.property_a else "ghost"
        if self.mode not in ("ghost", "compact"):
            raise DomainError(f"mode must be 'ghost' or 'compact', got {self.mode!r}")
        return self.mode


@dataclass
class LimitClass:
    class_id: str
    members: list
    nu: float | None
    nu_adjoint: float | None
    trend: list
    trend_radii: list
    decreasing: bool
    side: str | None
    status: str

    @property
    def two_sided(self):
        return None if self.nu is None else min(self.nu, self.nu_adjoint)

    def to_dict(self):
        d = asdict(self)
        d["two_sided"] = self.two_sided
        return d


@dataclass
class FredholmReport:
    operator_id: str
    verdict: str
    mode: str
    fredholm_type: str
    uniform_bound: float | str
    index: int | str
    classes: list
    witnesses: list
    failures: list
    dropped_ghost_terms: list
    oracle: dict
    horizon: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def to_dict(self):
        return {"operator_id": self.operator_id, "verdict": self.verdict, "mode": self.mode,
                "fredholm_type": self.fredholm_type, "uniform_bound": self.uniform_bound,
                "index": self.index, "classes": [c.to_dict() for c in self.classes],
                "witnesses": self.witnesses, "failures": self.failures,
                "dropped_ghost_terms": self.dropped_ghost_terms, "oracle": self.oracle,
                "horizon": self.horizon}


def _rep_side(rep):
    c = rep.provenance.survivors()[-1]
    return "right_tail" if c[0] > 0 else "left_tail"


def _decreasing(values, ratio, floor=1e-12):
    if all(v is not None and v <= floor for v in values):
        return True
    if any(v is None or v <= 0 for v in values):
        return False
    return all(b / a <= ratio for a, b in zip(values, values[1:]))


def quotient_ghost_terms(op: Operator, ghost_tol: float = 1e-6):
    """Drop ghost-consistent terms (their limit operators vanish). Returns ``(op', dropped)``."""
    if not isinstance(op, TermOperator):
        return op, []
    idx = ghost_terms(op, tol=ghost_tol)
    kept = [t for i, t in enumerate(op.terms) if i not in idx]
    return TermOperator(op.space, kept), [op.terms[i].to_dict() for i in idx]


def extract_classes(op: Operator, config: FredholmConfig):
    """Run every strategy; return ``(classes_of_reps, failures)``."""
    space = op.space
    R = op.propagation
    radii = config.radii or default_radii(config.probe_radius + (R or 0))
    strategies = config.strategies or space.default_strategies()
    reps, failures = [], []
    for strategy, kw in strategies:
        try:
            reps.append(extract_along(op, strategy, config.centers, config.seed, radii,
                                      config.tol, config.min_survivors, **kw))
        except InconclusiveError as e:
            failures.append({"strategy": strategy, "params": kw, "reason": str(e)})
    return group_limit_operators(reps, config.tol), failures, radii


def _oracle_checks(op, grid_size):
    try:
        syms = {side: symbol_of(op, side) for side in SIDES}
    except OracleUnavailable as e:
        return None, {"available": False, "reason": str(e)}
    checks = {side: symbol_invertibility(syms[side], grid_size) for side in SIDES}
    info = {"available": True, "period": {s: syms[s].period for s in SIDES},
            "checks": {s: checks[s].to_dict() for s in SIDES}}
    return (syms, checks), info


def fredholm_verdict(op: Operator, config: FredholmConfig | None = None, operator_id: str = "") -> FredholmReport:
    """Aggregate limit-operator invertibility into a verdict with uniform bound and index."""
    config = config or FredholmConfig()
    space = op.space
    mode = config.resolved_mode(space)
    dropped = []
    work = op
    if mode == "ghost":
        work, dropped = quotient_ghost_terms(op, config.ghost_tol)
    groups, failures, radii = extract_classes(work, config)
    probe = config.probe_radius
    trend_radii = sorted({max(1, probe // 4), max(1, probe // 2), probe})
    classes = []
    for i, members in enumerate(groups):
        rep = members[0]
        est = rep_lower_norms(rep, probe)
        trend = []
        for r in trend_radii:
            v = rep_lower_norms(rep, r)
            trend.append(None if v is None else min(v))
        side = _rep_side(rep) if isinstance(space, ZLattice) and space.dim == 1 else None
        classes.append(LimitClass(f"class{i}", [m.rep_id for m in members],
                                  None if est is None else est[0], None if est is None else est[1],
                                  trend, trend_radii, _decreasing(trend, config.trend_ratio), side,
                                  "ok" if est is not None else "insufficient radius"))
    oracle, oracle_info = _oracle_checks(work, config.grid_size)

    witnesses = []
    if oracle is not None:
        for s in SIDES:
            chk = oracle[1][s]
            if chk.status == "vanishing":
                witnesses.append({"kind": "vanishing_symbol", "side": s, "theta": chk.theta,
                                  "min_sigma": chk.min_value})
    for c in classes:
        if c.two_sided is not None and c.two_sided < config.tau / 10 and c.decreasing:
            witnesses.append({"kind": "limit_class", "class_id": c.class_id, "nu": c.nu,
                              "nu_adjoint": c.nu_adjoint, "trend": c.trend})

    M, index = "none", "n/a"
    if witnesses:
        verdict = "not-Fredholm"
    elif failures or not classes or any(c.status != "ok" for c in classes):
        verdict = "inconclusive"
    elif all(c.two_sided > config.tau and not c.decreasing for c in classes):
        verdict = "generalized-Fredholm-consistent"
        M = 1.0 / min(c.two_sided for c in classes)
    else:
        verdict = "inconclusive"

    ftype = "n/a"
    if verdict == "generalized-Fredholm-consistent":
        if mode == "compact" and space.property_a:
            ftype = "Fredholm (Property A: ghost ideal = compacts)"
            if oracle is not None and all(oracle[1][s].status == "invertible" for s in SIDES):
                syms = oracle[0]
                index = (winding_number(syms["left_tail"], config.grid_size)
                         - winding_number(syms["right_tail"], config.grid_size))
        else:
            ftype = "generalized Fredholm (modulo ghost ideal)"

    horizon = {"centers": config.centers, "radii": list(radii), "probe_radius": probe, "tol": config.tol,
               "tau": config.tau, "min_survivors": config.min_survivors, "seed": config.seed,
               "strategies": [[s, kw] for s, kw in (config.strategies or space.default_strategies())],
               "scope": "sampled limit classes only"}
    return FredholmReport(operator_id, verdict, mode, ftype, M, index, classes, witnesses, failures,
                          dropped, oracle_info, horizon)


@dataclass
class CrosscheckReport:
    agreement: bool
    entry_tol: float
    nu_tol: float
    reps: list
    failures: list
    symbols: dict

    def to_dict(self):
        return asdict(self)


def _best_phase(rep, sym):
    """Phase of the periodic tail that best matches the rep kernel; returns (phase, max error, argmax)."""
    offs = [l[0] for l in rep.labels]
    best = None
    for phi in range(sym.period):
        T = np.array([[sym.tail_entry(phi + a, phi + b) for b in offs] for a in offs], dtype=complex)
        E = np.abs(rep.kernel - T)
        err = float(E.max(initial=0.0))
        if best is None or err < best[1]:
            i, j = np.unravel_index(int(np.argmax(E)), E.shape) if E.size else (0, 0)
            best = (phi, err, {"row_offset": offs[i], "col_offset": offs[j],
                               "kernel": [float(rep.kernel[i, j].real), float(rep.kernel[i, j].imag)],
                               "symbol": [float(T[i, j].real), float(T[i, j].imag)]})
    return best


def oracle_crosscheck(op: Operator, config: FredholmConfig | None = None, entry_tol: float = 1e-6,
                      nu_tol: float = 1e-3) -> CrosscheckReport:
    """Compare extracted limit operators with the tail symbols.

    Each extracted rep must equal some phase of its tail's periodic operator entrywise
    (<= ``entry_tol``) and its two-sided lower norm at the probe radius must be within
    ``nu_tol`` of ``min_theta sigma_min(a(theta))``.
    """
    config = config or FredholmConfig()
    syms = {side: symbol_of(op, side) for side in SIDES}
    checks = {side: symbol_invertibility(syms[side], config.grid_size) for side in SIDES}
    if config.strategies is None:
        # one ray per residue class so every phase of a periodic tail is sampled
        p = math.lcm(*(s.period for s in syms.values()))
        strategies = [("axis_ray", {"sign": sg, **({"phase": ph} if ph else {})})
                      for sg in (1, -1) for ph in range(p)]
        config = replace(config, strategies=strategies)
    groups, failures, _ = extract_classes(op, config)
    rows, ok = [], not failures
    for members in groups:
        for rep in members:
            side = _rep_side(rep)
            phi, err, where = _best_phase(rep, syms[side])
            est = rep_lower_norms(rep, config.probe_radius)
            nu = None if est is None else min(est)
            target = checks[side].min_value
            nu_err = None if nu is None else abs(nu - target)
            entries_ok = err <= entry_tol
            nu_ok = nu_err is not None and nu_err <= nu_tol
            ok = ok and entries_ok and nu_ok
            rows.append({"rep": rep.rep_id, "side": side, "phase": phi, "entry_error": err,
                         "entries_ok": entries_ok, "offending": None if entries_ok else where,
                         "nu_estimate": nu, "symbol_min": target, "nu_error": nu_err, "nu_ok": nu_ok})
    return CrosscheckReport(bool(ok), entry_tol, nu_tol, rows, failures,
                            {s: {"symbol": syms[s].to_dict(), "check": checks[s].to_dict()} for s in SIDES})
