"""Band and band-dominated operators assembled from kernel terms.

An operator is a sum of :class:`KernelTerm` objects over a :class:`~limitops.space.Space`.
Term conventions (``x`` is the row point, ``y`` the column point):

* ``ShiftTerm(offset, c)``: ``entry(x, y) = c(x[axis])`` when ``x - y == offset``.
  With offset ``+1`` and ``c = 1`` this is the bilateral shift ``(Sv)(x) = v(x - 1)``.
* ``DiagTerm(c)``: ``entry(x, x) = c(x[axis])`` on Z^n, ``c(k)`` on component ``k`` of a
  coarse union.
* ``FiniteTerm``: an explicit finite list of ``(x, y, value)``.
* ``BlockTerm``: one matrix per component of a coarse union.

Operators are immutable after assembly; all evaluation methods are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, DomainError
from .space import CoarseUnion, FiniteRegion, Space, ZLattice


# coefficient functions on the integers

@dataclass(frozen=True)
class Constant:
    value: complex

    def __call__(self, n: int) -> complex:
        return complex(self.value)

    def sup(self) -> float:
        return abs(self.value)

    def tail(self, side: str):
        return 1, (complex(self.value),)

    def to_dict(self):
        return {"kind": "constant", "value": _cdump(self.value)}


@dataclass(frozen=True)
class EventuallyPeriodic:
    """``table[n]`` near 0, else ``right[n % p]`` for n >= 0 and ``left[n % p]`` for n < 0."""

    period: int
    left: tuple
    right: tuple
    table: tuple = ()

    def __post_init__(self):
        if self.period < 1 or len(self.left) != self.period or len(self.right) != self.period:
            raise ConfigurationError("eventually_periodic needs period >= 1 and period-length value lists")
        object.__setattr__(self, "left", tuple(complex(v) for v in self.left))
        object.__setattr__(self, "right", tuple(complex(v) for v in self.right))
        object.__setattr__(self, "table", tuple(sorted((int(n), complex(v)) for n, v in dict(self.table).items())))
        object.__setattr__(self, "_lookup", dict(self.table))

    def __call__(self, n: int) -> complex:
        v = self._lookup.get(n)
        if v is not None:
            return v
        return (self.right if n >= 0 else self.left)[n % self.period]

    def sup(self) -> float:
        vals = self.left + self.right + tuple(v for _, v in self.table)
        return max(abs(v) for v in vals)

    def tail(self, side: str):
        return self.period, (self.right if side == "right_tail" else self.left)

    def to_dict(self):
        return {"kind": "eventually_periodic", "period": self.period,
                "left": [_cdump(v) for v in self.left], "right": [_cdump(v) for v in self.right],
                "table": [{"n": n, "value": _cdump(v)} for n, v in self.table]}


@dataclass(frozen=True)
class Converging:
    """``c(n) = alpha + beta / (1 + |n|)``."""

    alpha: complex
    beta: complex

    def __call__(self, n: int) -> complex:
        return complex(self.alpha) + complex(self.beta) / (1 + abs(n))

    def sup(self) -> float:
        return abs(self.alpha) + abs(self.beta)

    def tail(self, side: str):
        if self.beta != 0:
            return None
        return 1, (complex(self.alpha),)

    def to_dict(self):
        return {"kind": "converging", "alpha": _cdump(self.alpha), "beta": _cdump(self.beta)}


def _cdump(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# kernel terms

class KernelTerm:
    kind: str

    def validate(self, space: Space) -> None:
        pass

    def propagation(self, space: Space):
        raise NotImplementedError

    def entry(self, space, x, y) -> complex:
        raise NotImplementedError

    def column(self, space, y) -> dict:
        raise NotImplementedError

    def row(self, space, x) -> dict:
        raise NotImplementedError

    def row_sup(self, space) -> float:
        raise NotImplementedError

    def col_sup(self, space) -> float:
        return self.row_sup(space)


def _require_lattice(term, space):
    if not isinstance(space, ZLattice):
        raise ConfigurationError(f"{term.kind} term needs a Z^n space, got {space.kind}")


@dataclass(frozen=True)
class ShiftTerm(KernelTerm):
    offset: tuple
    coeff: object
    axis: int = 0
    kind = "shift"

    def validate(self, space):
        _require_lattice(self, space)
        if len(self.offset) != space.dim or not 0 <= self.axis < space.dim:
            raise ConfigurationError(f"shift offset {self.offset} / axis {self.axis} do not fit Z^{space.dim}")

    def propagation(self, space):
        return space.norm(self.offset)

    def entry(self, space, x, y):
        if all(a - b == o for a, b, o in zip(x, y, self.offset)):
            return self.coeff(x[self.axis])
        return 0j

    def column(self, space, y):
        x = tuple(a + o for a, o in zip(y, self.offset))
        return {x: self.coeff(x[self.axis])}

    def row(self, space, x):
        y = tuple(a - o for a, o in zip(x, self.offset))
        return {y: self.coeff(x[self.axis])}

    def row_sup(self, space):
        return self.coeff.sup()

    def to_dict(self):
        d = {"kind": "shift", "offset": list(self.offset), "coeff": self.coeff.to_dict()}
        if self.axis:
            d["axis"] = self.axis
        return d


@dataclass(frozen=True)
class DiagTerm(KernelTerm):
    coeff: object
    axis: int = 0
    kind = "diag"

    def validate(self, space):
        if isinstance(space, ZLattice) and not 0 <= self.axis < space.dim:
            raise ConfigurationError(f"diag axis {self.axis} does not fit Z^{space.dim}")

    def _arg(self, x):
        return x[self.axis] if len(x) > self.axis else x[0]

    def propagation(self, space):
        return 0

    def entry(self, space, x, y):
        return self.coeff(self._arg(x)) if x == y else 0j

    def column(self, space, y):
        return {y: self.coeff(self._arg(y))}

    row = column

    def row_sup(self, space):
        return self.coeff.sup()

    def to_dict(self):
        d = {"kind": "diag", "coeff": self.coeff.to_dict()}
        if self.axis:
            d["axis"] = self.axis
        return d


@dataclass(frozen=True)
class FiniteTerm(KernelTerm):
    entries: tuple
    kind = "finite"

    def validate(self, space):
        for x, y, _ in self.entries:
            space.point(x), space.point(y)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((tuple(x), tuple(y), complex(v)) for x, y, v in self.entries))
        acc = {}
        for x, y, v in self.entries:
            acc[(tuple(x), tuple(y))] = acc.get((tuple(x), tuple(y)), 0j) + complex(v)
        object.__setattr__(self, "_by_pair", acc)
        cols, rows = {}, {}
        for (x, y), v in acc.items():
            cols.setdefault(y, {})[x] = v
            rows.setdefault(x, {})[y] = v
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "_rows", rows)

    def propagation(self, space):
        return max((space.distance(x, y) for x, y in self._by_pair), default=0)

    def entry(self, space, x, y):
        return self._by_pair.get((x, y), 0j)

    def column(self, space, y):
        return dict(self._cols.get(y, {}))

    def row(self, space, x):
        return dict(self._rows.get(x, {}))

    def row_sup(self, space):
        return max((sum(abs(v) for v in r.values()) for r in self._rows.values()), default=0.0)

    def col_sup(self, space):
        return max((sum(abs(v) for v in c.values()) for c in self._cols.values()), default=0.0)

    def to_dict(self):
        return {"kind": "finite", "entries": [{"row": list(x), "col": list(y), "value": _cdump(v)}
                                              for x, y, v in self.entries]}


BLOCK_GENERATORS = ("averaging", "adjacency", "laplacian")


@dataclass(frozen=True)
class BlockTerm(KernelTerm):
    """Per-component matrix: ``averaging`` (all entries 1/|G_k|), ``adjacency`` or graph ``laplacian``."""

    generator: str
    scale: complex = 1.0
    kind = "block"

    def validate(self, space):
        if not isinstance(space, CoarseUnion):
            raise ConfigurationError("block terms need a coarse union space")
        if self.generator not in BLOCK_GENERATORS:
            raise ConfigurationError(f"unknown block generator {self.generator!r}")

    def propagation(self, space):
        if space.n_components is None:
            return None
        return max(space.component_diameter(k) for k in range(space.n_components))

    def _value(self, space, k, v, w):
        s = complex(self.scale)
        if self.generator == "averaging":
            return s / space.size(k)
        adjacent = w in space._local_neighbors(k, v)
        if self.generator == "adjacency":
            return s if adjacent else 0j
        if v == w:
            return s * len(space._local_neighbors(k, v))
        return -s if adjacent else 0j

    def entry(self, space, x, y):
        if x[0] != y[0]:
            return 0j
        return self._value(space, x[0], x[1], y[1])

    def column(self, space, y):
        k, w = y
        if self.generator == "averaging":
            val = complex(self.scale) / space.size(k)
            return {(k, v): val for v in range(space.size(k))}
        support = [w] + space._local_neighbors(k, w)
        return {(k, v): self._value(space, k, v, w) for v in support}

    def row(self, space, x):
        # every generator is symmetric
        return self.column(space, x)

    def row_sup(self, space):
        s = abs(complex(self.scale))
        return {"averaging": s, "adjacency": 2 * s, "laplacian": 4 * s}[self.generator]

    def to_dict(self):
        return {"kind": "block", "generator": self.generator, "scale": _cdump(self.scale)}


# operators

class Operator:
    """Abstract operator on l2 of a space.  Subclasses provide ``column`` and ``row``."""

    space: Space

    @property
    def propagation(self):
        """Propagation bound, or ``None`` when unbounded."""
        raise NotImplementedError

    @property
    def is_band(self) -> bool:
        return self.propagation is not None

    def column(self, y) -> dict:
        raise NotImplementedError

    def row(self, x) -> dict:
        raise NotImplementedError

    def entry(self, x, y) -> complex:
        x, y = self.space.point(x), self.space.point(y)
        return complex(self.column(y).get(x, 0j))

    def apply(self, v: Mapping) -> dict:
        out = {}
        for y, c in v.items():
            if c == 0:
                continue
            for x, a in self.column(self.space.point(y)).items():
                out[x] = out.get(x, 0j) + a * c
        return out

    def matrix(self, rows, cols) -> np.ndarray:
        """Dense block ``P_rows T P_cols`` in the given orders."""
        rows = [self.space.point(p) for p in rows]
        cols = [self.space.point(p) for p in cols]
        ridx = {p: i for i, p in enumerate(rows)}
        M = np.zeros((len(rows), len(cols)), dtype=complex)
        for j, y in enumerate(cols):
            for x, v in self.column(y).items():
                i = ridx.get(x)
                if i is not None:
                    M[i, j] += v
        return M

    def column_truncation(self, F):
        """Matrix of ``T P_F`` with rows restricted to the structural column support.

        Returns ``(matrix, rows)``; omitted rows are identically zero.
        """
        cols = list(F.points if isinstance(F, FiniteRegion) else F)
        if not cols:
            raise DomainError("truncation set F is empty")
        cols = [self.space.point(p) for p in cols]
        support = {}
        for y in cols:
            for x in self.column(y):
                support[x] = None
        rows = sorted(support)
        return self.matrix(rows, cols), rows

    def schur_bound(self) -> float:
        r, c = self._row_col_sup()
        return math.sqrt(r * c)

    def _row_col_sup(self):
        raise NotImplementedError

    def norm_bound(self) -> float:
        return self.schur_bound()

    def adjoint(self) -> "Operator":
        return Adjoint(self)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __matmul__(self, other):
        return compose(self, other)


class TermOperator(Operator):
    """Operator assembled from kernel terms; the only leaf type."""

    def __init__(self, space: Space, terms, declared_norm_bound=None):
        self.space = space
        self.terms = tuple(terms)
        for t in self.terms:
            t.validate(space)
        self.declared_norm_bound = declared_norm_bound
        props = [t.propagation(space) for t in self.terms]
        self._propagation = None if any(p is None for p in props) else max(props, default=0)

    def __repr__(self):
        return f"TermOperator({self.space!r}, {len(self.terms)} terms)"

    @property
    def propagation(self):
        return self._propagation

    def entry(self, x, y):
        x, y = self.space.point(x), self.space.point(y)
        return complex(sum((t.entry(self.space, x, y) for t in self.terms), 0j))

    def column(self, y):
        out = {}
        for t in self.terms:
            for x, v in t.column(self.space, y).items():
                out[x] = out.get(x, 0j) + v
        return out

    def row(self, x):
        out = {}
        for t in self.terms:
            for y, v in t.row(self.space, x).items():
                out[y] = out.get(y, 0j) + v
        return out

    def _row_col_sup(self):
        return (sum(t.row_sup(self.space) for t in self.terms),
                sum(t.col_sup(self.space) for t in self.terms))

    def norm_bound(self):
        return self.declared_norm_bound if self.declared_norm_bound else self.schur_bound()

    def with_terms(self, terms) -> "TermOperator":
        return TermOperator(self.space, terms)

    def to_dict(self):
        d = {"terms": [t.to_dict() for t in self.terms]}
        if self.declared_norm_bound:
            d["declared_norm_bound"] = self.declared_norm_bound
        return d


class Adjoint(Operator):
    def __init__(self, base: Operator):
        self.base = base
        self.space = base.space

    @property
    def propagation(self):
        return self.base.propagation

    def column(self, y):
        return {x: complex(v).conjugate() for x, v in self.base.row(y).items()}

    def row(self, x):
        return {y: complex(v).conjugate() for y, v in self.base.column(x).items()}

    def adjoint(self):
        return self.base

    def _row_col_sup(self):
        r, c = self.base._row_col_sup()
        return c, r


class Sum(Operator):
    def __init__(self, parts):
        self.parts = tuple(parts)
        self.space = self.parts[0].space

    @property
    def propagation(self):
        props = [p.propagation for p in self.parts]
        return None if any(p is None for p in props) else max(props)

    def _merge(self, dicts):
        out = {}
        for d in dicts:
            for k, v in d.items():
                out[k] = out.get(k, 0j) + v
        return out

    def column(self, y):
        return self._merge(p.column(y) for p in self.parts)

    def row(self, x):
        return self._merge(p.row(x) for p in self.parts)

    def _row_col_sup(self):
        sups = [p._row_col_sup() for p in self.parts]
        return sum(s[0] for s in sups), sum(s[1] for s in sups)


class Scaled(Operator):
    def __init__(self, base: Operator, factor: complex):
        self.base = base
        self.factor = complex(factor)
        self.space = base.space

    @property
    def propagation(self):
        return self.base.propagation

    def column(self, y):
        return {x: self.factor * v for x, v in self.base.column(y).items()}

    def row(self, x):
        return {y: self.factor * v for y, v in self.base.row(x).items()}

    def _row_col_sup(self):
        r, c = self.base._row_col_sup()
        return abs(self.factor) * r, abs(self.factor) * c


class Product(Operator):
    """``a @ b``; entries are finite sums over the column support of ``b``."""

    def __init__(self, a: Operator, b: Operator):
        self.a, self.b = a, b
        self.space = a.space

    @property
    def propagation(self):
        pa, pb = self.a.propagation, self.b.propagation
        return None if pa is None or pb is None else pa + pb

    def column(self, y):
        out = {}
        for z, bz in self.b.column(y).items():
            for x, axz in self.a.column(z).items():
                out[x] = out.get(x, 0j) + axz * bz
        return out

    def row(self, x):
        out = {}
        for z, az in self.a.row(x).items():
            for y, bzy in self.b.row(z).items():
                out[y] = out.get(y, 0j) + az * bzy
        return out

    def _row_col_sup(self):
        ra, ca = self.a._row_col_sup()
        rb, cb = self.b._row_col_sup()
        return ra * rb, ca * cb


def _same_space(a: Operator, b: Operator):
    if a.space != b.space:
        raise ConfigurationError("operators live on different spaces")


def assemble(space: Space, spec) -> TermOperator:
    """Build an operator from a list of terms or an ``OperatorSpec``-like mapping."""
    if isinstance(spec, Mapping):
        from .specfile import term_from_dict

        terms = [t if isinstance(t, KernelTerm) else term_from_dict(t, space) for t in spec.get("terms", [])]
        return TermOperator(space, terms, spec.get("declared_norm_bound"))
    return TermOperator(space, spec)


def entry(op: Operator, x, y) -> complex:
    return op.entry(x, y)


def apply(op: Operator, v: Mapping) -> dict:
    return op.apply(v)


def adjoint(op: Operator) -> Operator:
    return op.adjoint()


def add(a: Operator, b: Operator) -> Operator:
    _same_space(a, b)
    if isinstance(a, TermOperator) and isinstance(b, TermOperator):
        return TermOperator(a.space, a.terms + b.terms)
    return Sum([a, b])


def scale(op: Operator, factor: complex) -> Operator:
    return Scaled(op, factor)


def compose(a: Operator, b: Operator) -> Operator:
    _same_space(a, b)
    return Product(a, b)


def truncate_columns(op: Operator, F) -> np.ndarray:
    return op.column_truncation(F)[0]


# convenience constructors used by the battery, the tests and the CLI

def shift(space, offset=1, coeff=1.0, axis=0) -> TermOperator:
    offset = (offset,) if isinstance(offset, int) else tuple(offset)
    c = coeff if callable(coeff) else Constant(coeff)
    return TermOperator(space, [ShiftTerm(offset, c, axis)])


def diag(space, coeff=1.0, axis=0) -> TermOperator:
    c = coeff if callable(coeff) else Constant(coeff)
    return TermOperator(space, [DiagTerm(c, axis)])


def identity(space) -> TermOperator:
    return diag(space, 1.0)
