import json
import math

import numpy as np
import pytest

from limitops import battery
from limitops.errors import DomainError, OracleUnavailable
from limitops.fredholm import (FredholmConfig, SymbolFunction, fredholm_verdict, oracle_crosscheck,
                               symbol_invertibility, symbol_of, winding_number)
from limitops.operator import (BlockTerm, Constant, Converging, DiagTerm, FiniteTerm, ShiftTerm, TermOperator,
                               adjoint, compose)
from limitops.space import ZLattice

CONSISTENT = [n for n, v in battery.EXPECTED_VERDICT.items() if v == "generalized-Fredholm-consistent"
              and n in battery.EVENTUALLY_PERIODIC]


def scalar(coeffs):
    return SymbolFunction(1, {d: np.array([[complex(c)]]) for d, c in coeffs.items()})


def coeffs(sym):
    return {d: A.tolist() for d, A in sorted(sym.coeffs.items())}


def winding_by_roots(cs):
    """Winding of sum c_d e^{i d theta}: zeros of z^{-dmin} a(z) inside the unit disk, plus dmin."""
    dmin, dmax = min(cs), max(cs)
    poly = [cs.get(d, 0) for d in range(dmax, dmin - 1, -1)]
    roots = np.roots(poly)
    return int(np.sum(np.abs(roots) < 1)) + dmin


def test_symbol_examples():
    assert coeffs(symbol_of(battery.shift_op(), "right_tail")) == {1: [[1]]}
    assert coeffs(symbol_of(battery.laplacian_minus(0), "left_tail")) == {-1: [[-1]], 0: [[2]], 1: [[-1]]}
    assert coeffs(symbol_of(battery.shift_minus_b(), "right_tail")) == {0: [[-2]], 1: [[1]]}
    assert coeffs(symbol_of(battery.shift_minus_b(), "left_tail")) == {0: [[-0.5]], 1: [[1]]}


def test_symbol_algebra():
    S = battery.shift_op()
    assert coeffs(symbol_of(adjoint(S), "right_tail")) == {-1: [[1]]}
    assert coeffs(symbol_of(compose(S, adjoint(S)), "right_tail")) == {0: [[1]]}
    sym = symbol_of(battery.laplacian_minus(5), "right_tail")
    theta = np.linspace(0, 2 * np.pi, 17)
    assert np.allclose(sym(theta)[:, 0, 0], 2 - 2 * np.cos(theta) - 5)


@pytest.mark.parametrize("name", battery.EVENTUALLY_PERIODIC)
def test_tail_entries_match_operator(name):
    op = battery.build(name)
    for side, base in (("right_tail", 1000), ("left_tail", -1000)):
        sym = symbol_of(op, side)
        for q in (sym.period, 2 * sym.period, 6):
            ref = sym.refold(q) if q % sym.period == 0 else sym
            for x in range(base, base + 8):
                for y in range(x - 3, x + 4):
                    assert ref.tail_entry(x, y) == op.entry(x, y)


def test_periodic_shift_is_two_by_two():
    sym = symbol_of(battery.periodic_shift(), "right_tail")
    assert sym.period == 2
    # c(n) S with c = (2, 0): rows of even index carry the 2
    assert coeffs(sym) == {1: [[0, 2], [0, 0]]}


def test_oracle_unavailable():
    Z1 = ZLattice(1)
    with pytest.raises(OracleUnavailable):
        symbol_of(TermOperator(Z1, [DiagTerm(Converging(1, 1))]), "right_tail")
    with pytest.raises(OracleUnavailable):
        symbol_of(battery.averaging(), "right_tail")
    with pytest.raises(OracleUnavailable):
        symbol_of(TermOperator(ZLattice(2), [DiagTerm(Constant(1))]), "right_tail")
    assert coeffs(symbol_of(TermOperator(Z1, [DiagTerm(Converging(3, 0))]), "left_tail")) == {0: [[3]]}
    with pytest.raises(DomainError):
        symbol_of(battery.shift_op(), "middle")


def dense_min(sym, n=200_000):
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False) + 1e-7
    return float(np.min(np.linalg.svd(sym(theta), compute_uv=False)[:, -1]))


def test_invertibility_examples():
    chk = symbol_invertibility(scalar({1: 1, 0: -2}))
    assert chk.status == "invertible" and chk.certified
    assert chk.min_value == pytest.approx(1) and chk.min_value == pytest.approx(dense_min(scalar({1: 1, 0: -2})))
    chk = symbol_invertibility(scalar({0: 1, 1: -1}))
    assert chk.status == "vanishing" and chk.theta == pytest.approx(0, abs=1e-9)
    sym = scalar({0: -3, 1: -1, -1: -1})
    value, certified = symbol_invertibility(sym)
    assert certified and value == pytest.approx(1) and value == pytest.approx(dense_min(sym), abs=1e-9)
    with pytest.raises(DomainError):
        symbol_invertibility(sym, grid_size=4)


def test_vanishing_off_grid_found_by_refinement():
    # zero at theta = 1 (not a grid point)
    sym = scalar({0: -np.exp(1j), 1: 1})
    chk = symbol_invertibility(sym, grid_size=64)
    assert chk.status == "vanishing" and chk.theta == pytest.approx(1, abs=1e-5)


def test_uncertified_near_miss():
    sym = scalar({0: -(1 + 1e-4), 1: 1})
    chk = symbol_invertibility(sym, grid_size=64)
    assert chk.status == "uncertified" and not chk.certified
    assert chk.min_value == pytest.approx(1e-4, rel=1e-3)
    assert symbol_invertibility(sym, grid_size=1 << 16).status == "invertible"


@pytest.mark.parametrize("cs,expected", [({1: 1}, 1), ({1: 1, 0: -2}, 0), ({1: 1, 0: -0.5}, 1), ({-1: 1}, -1),
                                         ({2: 1, 0: 0.1}, 2), ({0: 3, 1: 1, -2: 0.5}, 0)])
def test_winding_examples(cs, expected):
    assert winding_number(scalar(cs)) == expected == winding_by_roots(cs)


def test_winding_errors():
    with pytest.raises(DomainError):
        winding_number(scalar({0: 1, 1: -1}))
    with pytest.raises(DomainError, match="grid too coarse"):
        winding_number(scalar({40: 1}), grid_size=64)


def test_matrix_winding_is_det_winding():
    sym = symbol_of(battery.periodic_shift(), "right_tail")
    with pytest.raises(DomainError):
        winding_number(sym)  # det vanishes identically
    blk = SymbolFunction(2, {0: np.diag([-0.5, 3]), 1: np.eye(2)})
    assert winding_number(blk) == 1


@pytest.mark.parametrize("name", [n for n in battery.EXPECTED_VERDICT if n in battery.EVENTUALLY_PERIODIC])
def test_verdicts_on_battery(name):
    rep = fredholm_verdict(battery.build(name), operator_id=name)
    assert rep.verdict == battery.EXPECTED_VERDICT[name]
    if rep.verdict == "not-Fredholm":
        assert rep.witnesses and rep.uniform_bound == "none"
    json.dumps(rep.to_dict())


def test_verdict_examples():
    rep = fredholm_verdict(battery.shift_op())
    assert rep.uniform_bound == pytest.approx(1) and rep.index == 0 and len(rep.classes) == 1
    rep = fredholm_verdict(battery.shift_minus_b())
    assert len(rep.classes) == 2 and rep.index == 1
    assert sorted(c.nu for c in rep.classes) == pytest.approx([0.5, 1], abs=1e-3)
    assert rep.uniform_bound == pytest.approx(2, abs=1e-2)
    rep = fredholm_verdict(battery.laplacian_minus(5))
    assert rep.uniform_bound == pytest.approx(1, abs=1e-2) and rep.fredholm_type.startswith("Fredholm")
    rep = fredholm_verdict(battery.identity_minus_shift())
    assert {w["kind"] for w in rep.witnesses} == {"vanishing_symbol"}
    # nu(50) = 2 sin(pi/204) is above tau/10, but halves with every doubling of the radius
    assert rep.classes[0].decreasing and rep.classes[0].two_sided > 1e-4


@pytest.mark.parametrize("name", CONSISTENT)
def test_index_antisymmetry(name):
    op = battery.build(name)
    a, b = fredholm_verdict(op), fredholm_verdict(adjoint(op))
    assert b.verdict == a.verdict and b.index == -a.index


def test_index_of_shifted_two_step():
    # S^2 - b with b = 2 right, 1/2 left: left winding 2, right winding 0
    op = TermOperator(ZLattice(1), [ShiftTerm((2,), Constant(1)), DiagTerm(battery.two_sided(-0.5, -2))])
    assert fredholm_verdict(op).index == 2


@pytest.mark.parametrize("name", CONSISTENT)
def test_nu_estimates_approach_symbol_minimum(name):
    op = battery.build(name)
    syms = {s: symbol_of(op, s) for s in ("left_tail", "right_tail")}
    prev = None
    for probe in (10, 20, 50):
        rep = fredholm_verdict(op, FredholmConfig(probe_radius=probe))
        deficits = []
        for c in rep.classes:
            target = symbol_invertibility(syms[c.side]).min_value
            assert c.two_sided >= target - 1e-9
            deficits.append(c.two_sided - target)
        if prev is not None:
            assert max(deficits) <= prev + 1e-12
        prev = max(deficits)
    assert prev < 2e-3


def test_monotone_under_larger_budget():
    op = battery.identity_minus_shift()
    for centers in (8, 16, 64):
        assert fredholm_verdict(op, FredholmConfig(centers=centers)).verdict == "not-Fredholm"


def test_inconclusive_lists_strategy():
    op = battery.shift_op()
    rep = fredholm_verdict(op, FredholmConfig(centers=2))
    assert rep.verdict == "inconclusive" and rep.failures[0]["strategy"] == "axis_ray"
    assert rep.exit_code == 3


def test_ghost_mode_soundness():
    union = battery.cycles_union()
    cfg = FredholmConfig(radii=[1, 2, 3, 4], probe_radius=4, centers=12, mode="ghost")
    band = TermOperator(union, [DiagTerm(Constant(2))])
    both = TermOperator(union, [DiagTerm(Constant(2)), BlockTerm("averaging", 5)])
    a, b = fredholm_verdict(band, cfg), fredholm_verdict(both, cfg)
    assert a.verdict == b.verdict == "generalized-Fredholm-consistent"
    assert b.uniform_bound == pytest.approx(0.5) and b.index == "n/a"
    assert b.fredholm_type.startswith("generalized")


def test_finite_rank_does_not_change_verdict():
    op = battery.shift_minus_b()
    pert = TermOperator(op.space, list(op.terms) + [FiniteTerm((((0,), (0,), 4.0),))])
    a, b = fredholm_verdict(op), fredholm_verdict(pert)
    assert (a.verdict, a.index, a.uniform_bound) == (b.verdict, b.index, b.uniform_bound)


@pytest.mark.parametrize("name", ["shift", "diag_b", "periodic_shift", "shift_minus_b", "laplacian_minus_5"])
def test_crosscheck_agrees(name):
    rep = oracle_crosscheck(battery.build(name))
    assert rep.agreement, rep.reps
    json.dumps(rep.to_dict())


def test_crosscheck_periodic_phases():
    rep = oracle_crosscheck(battery.periodic_shift())
    assert sorted({(r["side"], r["phase"]) for r in rep.reps}) == [
        ("left_tail", 0), ("left_tail", 1), ("right_tail", 0), ("right_tail", 1)]


def test_crosscheck_flags_wrong_symbol():
    # the oracle sees the tails, extraction sees a table that persists far out
    op = TermOperator(ZLattice(1), [DiagTerm(battery.EventuallyPeriodic(1, (1,), (1,), {2 ** m: 5 for m in range(70)}))])
    rep = oracle_crosscheck(op)
    assert not rep.agreement
    bad = [r for r in rep.reps if not r["entries_ok"]]
    assert bad and bad[0]["offending"]["kernel"] == [5.0, 0.0]


def test_crosscheck_vanishing_symbol_nu_gap():
    # the truncated lower norm of I - S at radius r is 2 sin(pi/(4r+4)), never 0
    rep = oracle_crosscheck(battery.identity_minus_shift())
    assert all(r["entries_ok"] for r in rep.reps)
    assert all(r["nu_estimate"] == pytest.approx(2 * math.sin(math.pi / 204)) for r in rep.reps)
