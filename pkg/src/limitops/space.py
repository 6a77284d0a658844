"""Uniformly locally finite metric spaces given procedurally.

Two kinds are built in:

* ``ZLattice`` -- the integer lattice Z^n with the l1 (default) or l-infinity
  metric.  Points are tuples of ``n`` integers.
* ``CoarseUnion`` -- a coarse disjoint union of finite graphs (cycles or paths)
  with path metric inside each component.  Points are ``(component, vertex)``
  tuples.

Spaces are infinite (or large) and never materialised; only finite regions
are built on demand.  Every oracle is a pure function of the descriptor.
"""
from __future__ import annotations

import functools
import itertools
import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

Point = tuple

STRATEGIES = ("axis_ray", "diagonal_ray", "component_walk", "randomized")


@dataclass(frozen=True)
class FiniteRegion:
    """Finite ordered set of points; the order is the canonical labeling."""

    points: tuple
    diameter: int

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        return p in self.index

    @functools.cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}


class Space:
    """Common interface of the built-in spaces."""

    kind: str
    property_a: bool

    def basepoint(self) -> Point:
        raise NotImplementedError

    def point(self, p) -> Point:
        raise NotImplementedError

    def distance(self, x: Point, y: Point) -> int:
        raise NotImplementedError

    def ball(self, x: Point, r: int) -> FiniteRegion:
        raise NotImplementedError

    def canonical_labeling(self, x: Point, r: int) -> FiniteRegion:
        return self.ball(x, r)

    def growth_bound(self, r: int) -> int:
        raise NotImplementedError

    def diverging_sequence(self, strategy: str, count: int, seed: int = 0, **kw) -> list:
        raise NotImplementedError

    def index_of(self, p: Point) -> int:
        raise NotImplementedError

    def point_at(self, i: int) -> Point:
        raise NotImplementedError

    def neighbors(self, x: Point) -> list:
        """Points at distance exactly one from ``x``."""
        return [y for y in self.ball(x, 1) if y != x]

    def labels(self, center: Point, region: FiniteRegion) -> list:
        """Center-relative labels used to compare pointed patches."""
        raise NotImplementedError

    def region(self, points: Iterable[Point]) -> FiniteRegion:
        """Wrap arbitrary points as a region, keeping the given order and computing the diameter."""
        pts = tuple(dict.fromkeys(self.point(p) for p in points))
        return FiniteRegion(pts, self.set_diameter(pts))

    def set_diameter(self, pts: Sequence[Point]) -> int:
        if len(pts) <= 1:
            return 0
        return int(self.distance_matrix(pts).max())

    def distance_matrix(self, pts: Sequence[Point]) -> np.ndarray:
        n = len(pts)
        D = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = self.distance(pts[i], pts[j])
        return D

    def set_distance(self, A: Iterable[Point], B: Iterable[Point]) -> int:
        B = list(B)
        return min(self.distance(a, b) for a in A for b in B)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_radius(r):
    if int(r) != r or r < 0:
        raise DomainError(f"radius must be a nonnegative integer, got {r!r}")
    return int(r)


@functools.lru_cache(maxsize=256)
def _lattice_offsets(dim: int, metric: str, r: int) -> tuple:
    rng = range(-r, r + 1)
    if metric == "l1":
        offs = [o for o in itertools.product(rng, repeat=dim) if sum(map(abs, o)) <= r]
        key = lambda o: (sum(map(abs, o)), o)
    else:
        offs = list(itertools.product(rng, repeat=dim))
        key = lambda o: (max(map(abs, o), default=0), o)
    offs.sort(key=key)
    return tuple(offs)


class ZLattice(Space):
    """The lattice Z^n.

    Parameters
    ----------
    dim : int
        Dimension ``n >= 1``.
    metric : {"l1", "linf"}
        Metric on Z^n.  Both are ULF and coarsely equivalent.
    """

    kind = "z_lattice"

    def __init__(self, dim: int = 1, metric: str = "l1", property_a: bool = True):
        if int(dim) != dim or dim < 1:
            raise ConfigurationError(f"dim must be a positive integer, got {dim!r}")
        if metric not in ("l1", "linf"):
            raise ConfigurationError(f"metric must be 'l1' or 'linf', got {metric!r}")
        if not property_a:
            raise ConfigurationError("Z^n has Property A; property_a=false is inconsistent")
        self.dim = int(dim)
        self.metric = metric
        self.property_a = True

    def __repr__(self):
        return f"ZLattice(dim={self.dim}, metric={self.metric!r})"

    def __eq__(self, other):
        return isinstance(other, ZLattice) and (self.dim, self.metric) == (other.dim, other.metric)

    def __hash__(self):
        return hash((self.kind, self.dim, self.metric))

    def basepoint(self):
        return (0,) * self.dim

    def point(self, p):
        if isinstance(p, (int, np.integer)) and not isinstance(p, bool):
            p = (int(p),)
        try:
            p = tuple(int(c) for c in p)
        except TypeError:
            raise DomainError(f"invalid point {p!r}") from None
        if len(p) != self.dim:
            raise DomainError(f"point {p!r} is not in Z^{self.dim}")
        return p

    def norm(self, o) -> int:
        if self.metric == "l1":
            return sum(abs(c) for c in o)
        return max((abs(c) for c in o), default=0)

    def distance(self, x, y):
        x, y = self.point(x), self.point(y)
        return self.norm(tuple(a - b for a, b in zip(x, y)))

    def ball(self, x, r):
        x = self.point(x)
        r = _check_radius(r)
        pts = tuple(tuple(a + b for a, b in zip(x, o)) for o in _lattice_offsets(self.dim, self.metric, r))
        return FiniteRegion(pts, 2 * r)

    def labels(self, center, region):
        center = self.point(center)
        return [tuple(a - b for a, b in zip(p, center)) for p in region.points]

    def distance_matrix(self, pts):
        A = np.array([self.point(p) for p in pts], dtype=object)
        if len(pts) == 0:
            return np.zeros((0, 0), dtype=np.int64)
        # exact integer arithmetic: coordinates may exceed int64
        diff = np.abs(A[:, None, :] - A[None, :, :])
        D = diff.sum(axis=2) if self.metric == "l1" else diff.max(axis=2)
        return D.astype(np.int64)

    def growth_bound(self, r):
        r = _check_radius(r)
        n = self.dim
        if self.metric == "linf":
            return (2 * r + 1) ** n
        return sum(2 ** k * math.comb(n, k) * math.comb(r, k) for k in range(min(n, r) + 1))

    def _sphere(self, d):
        return [o for o in _lattice_offsets(self.dim, self.metric, d) if self.norm(o) == d]

    def index_of(self, p):
        p = self.point(p)
        d = self.norm(p)
        before = self.growth_bound(d - 1) if d > 0 else 0
        if self.dim == 1:
            return before + (0 if p[0] <= 0 else 1) if d > 0 else 0
        return before + self._sphere(d).index(p)

    def point_at(self, i):
        if i < 0:
            raise DomainError("enumeration index must be nonnegative")
        if self.dim == 1:
            # 0, -1, 1, -2, 2, ...
            return (0,) if i == 0 else ((-(i + 1) // 2,) if i % 2 else (i // 2,))
        d = 0
        while self.growth_bound(d) <= i:
            d += 1
        before = self.growth_bound(d - 1) if d > 0 else 0
        return self._sphere(d)[i - before]

    def diverging_sequence(self, strategy, count, seed=0, axis=0, sign=1, signs=None, phase=0):
        if count < 1:
            raise DomainError("count must be >= 1")
        n = self.dim
        if strategy == "axis_ray":
            if not 0 <= axis < n or sign not in (1, -1) or phase < 0:
                raise ConfigurationError("axis_ray needs 0 <= axis < dim, sign = +-1 and phase >= 0")
            # phase shifts the ray off the powers of two, e.g. to reach odd residues
            return [tuple(sign * (2 ** m + phase) if i == axis else 0 for i in range(n)) for m in range(count)]
        if strategy == "diagonal_ray":
            signs = tuple(signs) if signs is not None else (1,) * n
            if len(signs) != n or any(s not in (1, -1) for s in signs):
                raise ConfigurationError("diagonal_ray needs one +-1 sign per coordinate")
            return [tuple(s * 2 ** m for s in signs) for m in range(count)]
        if strategy == "randomized":
            rnd = random.Random(seed)
            out = []
            for m in range(count):
                radius = 2 ** m + rnd.randrange(2 ** m)
                out.append(self._random_on_sphere(rnd, radius))
            return out
        if strategy == "component_walk":
            raise ConfigurationError("component_walk applies to coarse unions only")
        raise ConfigurationError(f"unknown strategy {strategy!r}")

    def _random_on_sphere(self, rnd, radius):
        n = self.dim
        if self.metric == "l1":
            cuts = sorted(rnd.randint(0, radius) for _ in range(n - 1))
            parts = [b - a for a, b in zip([0] + cuts, cuts + [radius])]
        else:
            parts = [rnd.randint(0, radius) for _ in range(n)]
            parts[rnd.randrange(n)] = radius
        return tuple(c if rnd.random() < 0.5 else -c for c in parts)

    def default_strategies(self):
        out = []
        for axis in range(self.dim):
            for sign in (1, -1):
                out.append(("axis_ray", {"axis": axis, "sign": sign}))
        if self.dim > 1:
            for signs in itertools.product((1, -1), repeat=self.dim):
                out.append(("diagonal_ray", {"signs": list(signs)}))
        return out

    def to_dict(self):
        return {"kind": "z_lattice", "dim": self.dim, "metric": self.metric, "property_a": True}


class CoarseUnion(Space):
    """Coarse disjoint union of cycles or paths.

    Components are laid out along a spine: component ``k`` hangs off spine
    position ``P_k`` at its vertex 0, and

        d((j, v), (k, w)) = d_j(v, 0) + |P_j - P_k| + d_k(0, w)      (j != k)

    with ``P_k - P_{k-1} = 2k (1 + max(diam G_{k-1}, diam G_k))``, so
    ``d(G_j, G_k) >= (j + k + 1)`` and any fixed radius eventually stays in one
    component.

    Parameters
    ----------
    family : {"cycles", "paths"}
    sizes : list of int, or dict ``{"start": a, "step": b[, "count": n]}``
        Component sizes; a dict without ``count`` describes an infinite family.
    property_a : bool
        User-asserted metadata.
    horizon : int
        Number of components scanned by ``growth_bound`` for infinite families.
    """

    kind = "coarse_union"

    def __init__(self, family="cycles", sizes=(4, 6, 8), property_a=False, horizon=32):
        if family not in ("cycles", "paths"):
            raise ConfigurationError(f"unknown component family {family!r}")
        self.family = family
        if isinstance(sizes, dict):
            start, step = int(sizes["start"]), int(sizes.get("step", 0))
            cnt = sizes.get("count")
            self._sizes = None
            self._progression = (start, step)
            self.n_components = None if cnt is None else int(cnt)
            if step < 0:
                raise ConfigurationError("size step must be nonnegative")
        else:
            self._sizes = [int(s) for s in sizes]
            self._progression = None
            self.n_components = len(self._sizes)
            if not self._sizes:
                raise ConfigurationError("coarse union needs at least one component")
        minimum = 3 if family == "cycles" else 1
        if self.size(0) < minimum or (self._sizes is not None and min(self._sizes) < minimum):
            raise ConfigurationError(f"{family} components need at least {minimum} vertices")
        self.property_a = bool(property_a)
        self.horizon = int(horizon) if self.n_components is None else self.n_components
        self._spine = [0]
        self._growth = {}

    def __repr__(self):
        return f"CoarseUnion(family={self.family!r}, sizes={self._sizes or self._progression})"

    def _key(self):
        return (self.kind, self.family, tuple(self._sizes) if self._sizes else None,
                self._progression, self.n_components)

    def __eq__(self, other):
        return isinstance(other, CoarseUnion) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    # component structure

    def size(self, k: int) -> int:
        if k < 0 or (self.n_components is not None and k >= self.n_components):
            raise DomainError(f"no component {k}")
        if self._sizes is not None:
            return self._sizes[k]
        start, step = self._progression
        return start + step * k

    def component_diameter(self, k: int) -> int:
        n = self.size(k)
        return n // 2 if self.family == "cycles" else n - 1

    def _local_neighbors(self, k, v):
        n = self.size(k)
        if self.family == "cycles":
            return list(dict.fromkeys([(v - 1) % n, (v + 1) % n]))
        return [w for w in (v - 1, v + 1) if 0 <= w < n]

    def local_distance(self, k, v, w):
        n = self.size(k)
        a = abs(v - w)
        return min(a, n - a) if self.family == "cycles" else a

    def spine(self, k: int) -> int:
        while len(self._spine) <= k:
            j = len(self._spine)
            gap = 2 * j * (1 + max(self.component_diameter(j - 1), self.component_diameter(j)))
            self._spine.append(self._spine[-1] + gap)
        return self._spine[k]

    def _bfs(self, k, v, r):
        """BFS order inside component k from v up to radius r; neighbours in local orientation."""
        seen = {v: 0}
        order = [v]
        q = deque([v])
        while q:
            u = q.popleft()
            if seen[u] == r:
                continue
            for w in self._local_neighbors(k, u):
                if w not in seen:
                    seen[w] = seen[u] + 1
                    order.append(w)
                    q.append(w)
        return order, seen

    # Space interface

    def basepoint(self):
        return (0, 0)

    def point(self, p):
        try:
            k, v = (int(c) for c in p)
        except (TypeError, ValueError):
            raise DomainError(f"invalid point {p!r}") from None
        if not 0 <= v < self.size(k):
            raise DomainError(f"vertex {v} not in component {k}")
        return (k, v)

    def distance(self, x, y):
        (j, v), (k, w) = self.point(x), self.point(y)
        if j == k:
            return self.local_distance(j, v, w)
        return self.local_distance(j, v, 0) + abs(self.spine(j) - self.spine(k)) + self.local_distance(k, 0, w)

    def ball(self, x, r):
        j, v = self.point(x)
        r = _check_radius(r)
        order, dist = self._bfs(j, v, r)
        entries = [(dist[u], 0, 0, i, (j, u)) for i, u in enumerate(order)]
        reach = r - self.local_distance(j, v, 0)
        if reach > 0:
            for step in (-1, 1):
                k = j + step
                while k >= 0 and (self.n_components is None or k < self.n_components):
                    gap = abs(self.spine(j) - self.spine(k))
                    if gap > reach:
                        break
                    order_k, dist_k = self._bfs(k, 0, reach - gap)
                    base = r - reach + gap
                    for i, u in enumerate(order_k):
                        entries.append((base + dist_k[u], 1, k, i, (k, u)))
                    k += step
        entries.sort(key=lambda e: e[:4])
        pts = tuple(e[4] for e in entries)
        return FiniteRegion(pts, self.set_diameter(pts) if len(pts) > 1 else 0)

    def labels(self, center, region):
        # BFS rank is the label; isometry type is carried by the distance matrix
        return list(range(len(region.points)))

    def growth_bound(self, r):
        r = _check_radius(r)
        if r in self._growth:
            return self._growth[r]
        best = 1
        for k in range(self.horizon):
            # on a cycle vertex 0 sees the same arc as any other vertex and reaches furthest off-component
            verts = [0] if self.family == "cycles" else range(self.size(k))
            for v in verts:
                best = max(best, len(self.ball((k, v), r)))
        self._growth[r] = best
        return best

    def index_of(self, p):
        k, v = self.point(p)
        return sum(self.size(i) for i in range(k)) + v

    def point_at(self, i):
        if i < 0:
            raise DomainError("enumeration index must be nonnegative")
        k = 0
        while True:
            n = self.size(k)
            if i < n:
                return (k, i)
            i -= n
            k += 1

    def total_points(self):
        return None if self.n_components is None else sum(self._sizes or (self.size(k) for k in range(self.n_components)))

    def component_points(self, k):
        return [(k, v) for v in range(self.size(k))]

    def diverging_sequence(self, strategy, count, seed=0, **kw):
        if count < 1:
            raise DomainError("count must be >= 1")
        available = count if self.n_components is None else min(count, self.n_components - 1)
        comps = range(1, available + 1)
        if strategy == "component_walk":
            return [(k, 0) for k in comps]
        if strategy == "randomized":
            rnd = random.Random(seed)
            return [(k, rnd.randrange(self.size(k))) for k in comps]
        if strategy in ("axis_ray", "diagonal_ray"):
            raise ConfigurationError(f"{strategy} applies to Z^n only")
        raise ConfigurationError(f"unknown strategy {strategy!r}")

    def default_strategies(self):
        return [("component_walk", {})]

    def to_dict(self):
        sizes = list(self._sizes) if self._sizes is not None else {
            "start": self._progression[0], "step": self._progression[1],
            **({} if self.n_components is None else {"count": self.n_components})}
        return {"kind": "coarse_union", "components": {"family": self.family, "sizes": sizes},
                "property_a": self.property_a}


def space_from_dict(d: dict) -> Space:
    kind = d.get("kind")
    if kind == "z_lattice":
        return ZLattice(d.get("dim", 1), d.get("metric", "l1"), d.get("property_a", True))
    if kind == "coarse_union":
        comp = d.get("components", {})
        return CoarseUnion(comp.get("family", "cycles"), comp.get("sizes", [4, 6, 8]),
                           d.get("property_a", False), d.get("horizon", 32))
    raise ConfigurationError(f"unknown space kind {kind!r}")


# functional aliases

def distance(space: Space, x, y) -> int:
    return space.distance(x, y)


def ball(space: Space, x, r: int) -> FiniteRegion:
    return space.ball(space.point(x), r)


def canonical_labeling(space: Space, x, r: int) -> FiniteRegion:
    return space.canonical_labeling(space.point(x), r)


def growth_bound(space: Space, r: int) -> int:
    return space.growth_bound(r)


def diverging_sequence(space: Space, strategy: str, count: int, seed: int = 0, **kw) -> list:
    return space.diverging_sequence(strategy, count, seed, **kw)
