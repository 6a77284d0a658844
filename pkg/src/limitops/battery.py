"""Named example operators with known answers, shared by the tests, the CLI and the spec files."""
from __future__ import annotations

from .operator import (BlockTerm, Constant, DiagTerm, EventuallyPeriodic, ShiftTerm, TermOperator)
from .space import CoarseUnion, ZLattice


def z1() -> ZLattice:
    return ZLattice(1, "l1")


def cycles_union(max_k: int = 12) -> CoarseUnion:
    """Cycles C_4, C_6, ..., C_{2 max_k}."""
    return CoarseUnion("cycles", [2 * k for k in range(2, max_k + 1)], property_a=False)


def two_sided(left, right) -> EventuallyPeriodic:
    return EventuallyPeriodic(1, (left,), (right,))


def shift_op():
    return TermOperator(z1(), [ShiftTerm((1,), Constant(1))])


def shift_minus_b():
    """S - bI with b = 2 for n >= 0 and 1/2 for n < 0."""
    return TermOperator(z1(), [ShiftTerm((1,), Constant(1)), DiagTerm(two_sided(-0.5, -2))])


def identity_minus_shift():
    return TermOperator(z1(), [DiagTerm(Constant(1)), ShiftTerm((1,), Constant(-1))])


def laplacian_minus(lam: float):
    """Delta - lam I with Delta = 2I - S - S*."""
    return TermOperator(z1(), [DiagTerm(Constant(2 - lam)), ShiftTerm((1,), Constant(-1)),
                               ShiftTerm((-1,), Constant(-1))])


def diag_b():
    return TermOperator(z1(), [DiagTerm(two_sided(0.5, 2))])


def periodic_shift():
    """c(n) S with c(n) = 1 + (-1)^n."""
    c = EventuallyPeriodic(2, (2, 0), (2, 0))
    return TermOperator(z1(), [ShiftTerm((1,), c)])


def averaging(max_k: int = 12):
    return TermOperator(cycles_union(max_k), [BlockTerm("averaging")])


def identity_minus_averaging(max_k: int = 12):
    return TermOperator(cycles_union(max_k), [DiagTerm(Constant(1)), BlockTerm("averaging", -1)])


BATTERY = {
    "shift": shift_op,
    "shift_minus_b": shift_minus_b,
    "identity_minus_shift": identity_minus_shift,
    "laplacian_minus_5": lambda: laplacian_minus(5),
    "laplacian_plus_1": lambda: laplacian_minus(-1),
    "laplacian_minus_2": lambda: laplacian_minus(2),
    "diag_b": diag_b,
    "periodic_shift": periodic_shift,
    "averaging_cycles": averaging,
    "identity_minus_averaging": identity_minus_averaging,
}

# operators on Z with eventually periodic coefficients (the symbol oracle applies)
EVENTUALLY_PERIODIC = ("shift", "shift_minus_b", "identity_minus_shift", "laplacian_minus_5",
                       "laplacian_plus_1", "laplacian_minus_2", "diag_b", "periodic_shift")

EXPECTED_VERDICT = {
    "shift": "generalized-Fredholm-consistent",
    "shift_minus_b": "generalized-Fredholm-consistent",
    "identity_minus_shift": "not-Fredholm",
    "laplacian_minus_5": "generalized-Fredholm-consistent",
    "laplacian_plus_1": "generalized-Fredholm-consistent",
    "laplacian_minus_2": "not-Fredholm",
    "diag_b": "generalized-Fredholm-consistent",
    "periodic_shift": "not-Fredholm",
    "identity_minus_averaging": "generalized-Fredholm-consistent",
}


def build(name: str) -> TermOperator:
    try:
        return BATTERY[name]()
    except KeyError:
        raise KeyError(f"unknown battery operator {name!r}; known: {sorted(BATTERY)}") from None
