"""Plumbing forests with vertex framings and their intersection lattices.

A plumbing description is a finite forest whose vertices carry integer
framings.  At most one vertex may be left unframed; that distinguished
vertex marks a knot in the three-manifold presented by the framed part of
the graph.  This module provides:

* the `FramedForest` container with validation (forest shape, framing
  bookkeeping, uniqueness of names),
* exact integer/rational linear algebra helpers (Bareiss determinants,
  adjugates, Fraction matrix inverses, integer Smith normal form with
  unimodular transforms),
* negative-definiteness and bad-vertex tests,
* spin-c structures as characteristic-vector classes with canonical
  fundamental-parallelepiped representatives,
* the homology class of the distinguished vertex in the rational span of
  the framed vertices, and its square as a function of the framing,
* the blow-up / blow-down moves of the plumbing calculus, and
* a seeded generator of random negative-definite trees.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

Rat = Fraction


# ---------------------------------------------------------------------------
# Exact matrix utilities
# ---------------------------------------------------------------------------


def bareiss_det(mat: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free Bareiss)."""
    n = len(mat)
    if n == 0:
        return 1
    a = [[int(x) for x in row] for row in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def leading_principal_minors(mat: Sequence[Sequence[int]]) -> list[int]:
    """Determinants of the k x k upper-left blocks, k = 1..n."""
    return [bareiss_det([row[:k] for row in mat[:k]])
            for k in range(1, len(mat) + 1)]


def fraction_inverse(mat: Sequence[Sequence[int]]) -> list[list[Fraction]]:
    """Exact inverse of a nonsingular integer matrix."""
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def adjugate_int(mat: Sequence[Sequence[int]]) -> tuple[int, list[list[int]]]:
    """Return (det, det * inverse) with the latter exactly integral."""
    det = bareiss_det(mat)
    if det == 0:
        raise ValueError("matrix is singular")
    inv = fraction_inverse(mat)
    adj = []
    for row in inv:
        arow = []
        for x in row:
            y = x * det
            if y.denominator != 1:
                raise AssertionError("adjugate is not integral")
            arow.append(y.numerator)
        adj.append(arow)
    return det, adj


def integer_smith(mat: Sequence[Sequence[int]]
                  ) -> tuple[list[list[int]], list[list[int]], list[list[int]], list[list[int]]]:
    """Integer Smith normal form with transforms.

    Returns ``(d, u, uinv, v)`` with ``d = u @ mat @ v``, ``u`` and ``v``
    unimodular, ``uinv = u^{-1}``, ``d`` diagonal with nonnegative entries
    and d_i | d_{i+1}.
    """
    nr = len(mat)
    nc = len(mat[0]) if nr else 0
    d = [[int(x) for x in row] for row in mat]
    u = [[int(i == j) for j in range(nr)] for i in range(nr)]
    uinv = [[int(i == j) for j in range(nr)] for i in range(nr)]
    v = [[int(i == j) for j in range(nc)] for i in range(nc)]

    def row_swap(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]
        for row in uinv:
            row[i], row[j] = row[j], row[i]

    def row_add(i, j, c):
        d[i] = [x + c * y for x, y in zip(d[i], d[j])]
        u[i] = [x + c * y for x, y in zip(u[i], u[j])]
        for row in uinv:
            row[j] -= c * row[i]

    def row_neg(i):
        d[i] = [-x for x in d[i]]
        u[i] = [-x for x in u[i]]
        for row in uinv:
            row[i] = -row[i]

    def col_swap(i, j):
        for row in d:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def col_add(i, j, c):
        for row in d:
            row[i] += c * row[j]
        for row in v:
            row[i] += c * row[j]

    t = 0
    limit = min(nr, nc)
    while t < limit:
        best = None
        for r in range(t, nr):
            for c in range(t, nc):
                if d[r][c] and (best is None or abs(d[r][c]) < abs(d[best[0]][best[1]])):
                    best = (r, c)
        if best is None:
            break
        row_swap(t, best[0])
        col_swap(t, best[1])
        while True:
            progressed = False
            for r in range(nr):
                if r != t and d[r][t]:
                    q = d[r][t] // d[t][t]
                    if q:
                        row_add(r, t, -q)
                    if d[r][t]:
                        row_swap(t, r)
                        progressed = True
            for c in range(nc):
                if c != t and d[t][c]:
                    q = d[t][c] // d[t][t]
                    if q:
                        col_add(c, t, -q)
                    if d[t][c]:
                        col_swap(t, c)
                        progressed = True
            if progressed:
                continue
            bad = None
            for r in range(t + 1, nr):
                for c in range(t + 1, nc):
                    if d[r][c] % d[t][t]:
                        bad = r
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_add(t, bad, 1)
        if d[t][t] < 0:
            row_neg(t)
        t += 1
    return d, u, uinv, v


# ---------------------------------------------------------------------------
# The forest container
# ---------------------------------------------------------------------------


def _norm_edge(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class FramedForest:
    """A forest of named vertices with integer framings.

    ``vertices`` fixes the ordering used for all matrices.  ``framings``
    assigns an integer to every vertex except the optional
    ``distinguished`` (unframed) one.
    """

    __slots__ = ("vertices", "framings", "edges", "distinguished",
                 "_index", "_adj")

    def __init__(self, vertices: Sequence[str],
                 framings: Mapping[str, int],
                 edges: Iterable[tuple[str, str]] = (),
                 distinguished: Optional[str] = None):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex names")
        vset = set(self.vertices)
        self.distinguished = distinguished
        if distinguished is not None and distinguished not in vset:
            raise ValueError(f"unknown distinguished vertex {distinguished!r}")
        expect = vset - ({distinguished} if distinguished else set())
        if set(framings) != expect:
            missing = expect - set(framings)
            extra = set(framings) - expect
            raise ValueError(
                f"framing mismatch (missing {sorted(missing)}, extra {sorted(extra)})")
        self.framings = {v: int(framings[v]) for v in self.vertices
                         if v != distinguished}
        eset = set()
        for a, b in edges:
            if a not in vset or b not in vset:
                raise ValueError(f"edge ({a!r}, {b!r}) uses unknown vertex")
            if a == b:
                raise ValueError(f"loop edge at {a!r}")
            e = _norm_edge(a, b)
            if e in eset:
                raise ValueError(f"duplicate edge {e!r}")
            eset.add(e)
        self.edges = frozenset(eset)
        self._index = {v: i for i, v in enumerate(self.framed)}
        self._adj: dict[str, tuple[str, ...]] = {v: () for v in self.vertices}
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        self._adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}
        self._check_forest()

    # -- validation ----------------------------------------------------------

    def _check_forest(self) -> None:
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                raise ValueError("graph contains a cycle; not a forest")
            parent[ra] = rb

    # -- basic structure -----------------------------------------------------

    @property
    def framed(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if v != self.distinguished)

    @property
    def n(self) -> int:
        return len(self.framed)

    def neighbors(self, v: str) -> tuple[str, ...]:
        return self._adj[v]

    def degree(self, v: str) -> int:
        return len(self._adj[v])

    def framing(self, v: str) -> int:
        return self.framings[v]

    def vertex_index(self, v: str) -> int:
        """Index of a framed vertex in the intersection-matrix order."""
        return self._index[v]

    def components(self) -> list[frozenset[str]]:
        seen: set[str] = set()
        comps = []
        for v in self.vertices:
            if v in seen:
                continue
            stack, comp = [v], set()
            while stack:
                x = stack.pop()
                if x in comp:
                    continue
                comp.add(x)
                stack.extend(self._adj[x])
            seen |= comp
            comps.append(frozenset(comp))
        return comps

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, FramedForest)
                and self.vertices == other.vertices
                and self.framings == other.framings
                and self.edges == other.edges
                and self.distinguished == other.distinguished)

    def __hash__(self) -> int:
        return hash((self.vertices, tuple(sorted(self.framings.items())),
                     self.edges, self.distinguished))

    def __repr__(self) -> str:
        parts = []
        for v in self.vertices:
            if v == self.distinguished:
                parts.append(f"{v}:*")
            else:
                parts.append(f"{v}:{self.framings[v]}")
        es = ",".join(f"{a}-{b}" for a, b in sorted(self.edges))
        return f"FramedForest({' '.join(parts)}; {es})"

    # -- matrices -------------------------------------------------------------

    def intersection_matrix(self) -> list[list[int]]:
        """Framings on the diagonal, 1 for each edge; framed part only."""
        fr = self.framed
        idx = self._index
        m = [[0] * len(fr) for _ in fr]
        for i, v in enumerate(fr):
            m[i][i] = self.framings[v]
        for a, b in self.edges:
            if a in idx and b in idx:
                m[idx[a]][idx[b]] = 1
                m[idx[b]][idx[a]] = 1
        return m

    def adjacency_row_of_distinguished(self) -> list[int]:
        """0/1 incidence of the unframed vertex with each framed vertex."""
        if self.distinguished is None:
            raise ValueError("no distinguished vertex")
        row = [0] * self.n
        for u in self._adj[self.distinguished]:
            row[self._index[u]] = 1
        return row

    def is_negative_definite(self) -> bool:
        """Exact test: k-th leading principal minor has sign (-1)^k."""
        minors = leading_principal_minors(self.intersection_matrix())
        return all((m > 0 if k % 2 == 0 else m < 0)
                   for k, m in enumerate(minors, start=1))

    def bad_vertices(self) -> list[str]:
        """Framed vertices v with framing(v) + degree(v) > 0."""
        return [v for v in self.framed
                if self.framings[v] + self.degree(v) > 0]

    # -- derived forests -------------------------------------------------------

    def with_framing(self, m0: int) -> "FramedForest":
        """Frame the distinguished vertex, producing a fully framed forest."""
        if self.distinguished is None:
            raise ValueError("no distinguished vertex to frame")
        fr = dict(self.framings)
        fr[self.distinguished] = int(m0)
        return FramedForest(self.vertices, fr, self.edges, None)

    def background(self) -> "FramedForest":
        """The framed part, with the distinguished vertex deleted."""
        if self.distinguished is None:
            return self
        return self.without_vertex(self.distinguished)

    def without_vertex(self, v: str) -> "FramedForest":
        if v not in self._adj:
            raise ValueError(f"unknown vertex {v!r}")
        verts = tuple(x for x in self.vertices if x != v)
        fr = {x: f for x, f in self.framings.items() if x != v}
        edges = [e for e in self.edges if v not in e]
        dist = self.distinguished if self.distinguished != v else None
        return FramedForest(verts, fr, edges, dist)

    def disjoint_union(self, other: "FramedForest",
                       suffix: str = "'") -> "FramedForest":
        """Disjoint union; clashing names in ``other`` get ``suffix``."""
        mapping = {}
        mine = set(self.vertices)
        for v in other.vertices:
            w = v
            while w in mine:
                w = w + suffix
            mapping[v] = w
            mine.add(w)
        verts = self.vertices + tuple(mapping[v] for v in other.vertices)
        fr = dict(self.framings)
        fr.update({mapping[v]: f for v, f in other.framings.items()})
        edges = list(self.edges) + [(mapping[a], mapping[b])
                                    for a, b in other.edges]
        if self.distinguished and other.distinguished:
            raise ValueError("both forests have a distinguished vertex")
        dist = self.distinguished or (
            mapping[other.distinguished] if other.distinguished else None)
        return FramedForest(verts, fr, edges, dist)

    def fresh_name(self, stem: str = "e") -> str:
        used = set(self.vertices)
        if stem not in used:
            return stem
        k = 1
        while f"{stem}{k}" in used:
            k += 1
        return f"{stem}{k}"


# ---------------------------------------------------------------------------
# Spin-c structures: characteristic vectors modulo 2 * (image of M)
# ---------------------------------------------------------------------------


class SpincStructures:
    """Spin-c structures of the plumbed manifold of a fully framed forest.

    A characteristic vector is an integer vector K with
    K(v) = framing(v) mod 2 for every vertex; two are equivalent when
    their difference lies in 2 M Z^n.  The canonical representative of a
    class is computed by reducing in a Smith basis of M to the fundamental
    parallelepiped.
    """

    def __init__(self, forest: FramedForest):
        if forest.distinguished is not None:
            raise ValueError("spin-c enumeration needs a fully framed forest")
        self.forest = forest
        self.m = forest.intersection_matrix()
        self.diag = [self.m[i][i] for i in range(forest.n)]
        d, u, uinv, _v = integer_smith(self.m)
        self._d = [d[i][i] for i in range(forest.n)]
        self._u = u
        self._uinv = uinv
        if any(x == 0 for x in self._d):
            raise ValueError("intersection form is degenerate")
        self.count = 1
        for x in self._d:
            self.count *= x

    def is_characteristic(self, k: Sequence[int]) -> bool:
        return all((kv - mv) % 2 == 0 for kv, mv in zip(k, self.diag))

    def canonical(self, k: Sequence[int]) -> tuple[int, ...]:
        """Canonical representative of the class of characteristic k."""
        n = self.forest.n
        if len(k) != n or not self.is_characteristic(k):
            raise ValueError(f"not a characteristic vector: {k}")
        x = [(kv - mv) // 2 for kv, mv in zip(k, self.diag)]
        y = [sum(self._u[i][j] * x[j] for j in range(n)) % self._d[i]
             for i in range(n)]
        xs = [sum(self._uinv[i][j] * y[j] for j in range(n))
              for i in range(n)]
        return tuple(mv + 2 * xv for mv, xv in zip(self.diag, xs))

    def enumerate(self) -> list[tuple[int, ...]]:
        """All canonical representatives, sorted lexicographically."""
        n = self.forest.n
        reps = []
        for ys in itertools.product(*(range(d) for d in self._d)):
            xs = [sum(self._uinv[i][j] * ys[j] for j in range(n))
                  for i in range(n)]
            reps.append(tuple(mv + 2 * xv
                              for mv, xv in zip(self.diag, xs)))
        reps.sort()
        if len(set(reps)) != len(reps):
            raise AssertionError("spin-c representatives collide")
        return reps


# ---------------------------------------------------------------------------
# The class of the distinguished vertex
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistinguishedClass:
    """Rational coefficients a with Sigma = v0 + sum a_j v_j orthogonal to
    the framed vertices, plus the part of Sigma^2 not depending on the
    framing of v0."""

    coeffs: tuple[Fraction, ...]
    sq0: Fraction

    def sq(self, m0: int) -> Fraction:
        """Self-intersection of Sigma once v0 is framed by m0."""
        return m0 + self.sq0

    def pair_char(self, k: Sequence[int]) -> Fraction:
        """Evaluation K(Sigma - v0) = sum_j a_j K(v_j)."""
        return sum((a * kv for a, kv in zip(self.coeffs, k)),
                   start=Fraction(0))


def distinguished_class(marked: FramedForest) -> DistinguishedClass:
    """Solve M a = -(incidence of v0) exactly over the rationals."""
    if marked.distinguished is None:
        raise ValueError("forest has no distinguished vertex")
    m = marked.background().intersection_matrix()
    w = marked.adjacency_row_of_distinguished()
    inv = fraction_inverse(m) if m else []
    n = len(m)
    a = tuple(-sum(inv[i][j] * w[j] for j in range(n)) for i in range(n))
    sq0 = sum((ai * wi for ai, wi in zip(a, w)), start=Fraction(0))
    return DistinguishedClass(coeffs=a, sq0=sq0)


# ---------------------------------------------------------------------------
# Blow-ups and blow-downs
# ---------------------------------------------------------------------------


def blow_up_disjoint(g: FramedForest, name: Optional[str] = None
                     ) -> FramedForest:
    """Add an isolated (-1)-framed vertex."""
    e = name or g.fresh_name()
    fr = dict(g.framings)
    fr[e] = -1
    return FramedForest(g.vertices + (e,), fr, g.edges, g.distinguished)


def blow_up_vertex(g: FramedForest, v: str, name: Optional[str] = None
                   ) -> FramedForest:
    """Attach a new (-1) leaf at v and lower the framing of v by one."""
    if v not in g.vertices:
        raise ValueError(f"unknown vertex {v!r}")
    e = name or g.fresh_name()
    fr = dict(g.framings)
    if v != g.distinguished:
        fr[v] = fr[v] - 1
    fr[e] = -1
    edges = list(g.edges) + [(v, e)]
    return FramedForest(g.vertices + (e,), fr, edges, g.distinguished)


def blow_up_edge(g: FramedForest, a: str, b: str,
                 name: Optional[str] = None) -> FramedForest:
    """Subdivide the edge (a, b) by a new (-1) vertex and lower both
    endpoint framings by one (unframed endpoints keep no framing)."""
    if _norm_edge(a, b) not in g.edges:
        raise ValueError(f"no edge between {a!r} and {b!r}")
    e = name or g.fresh_name()
    fr = dict(g.framings)
    for x in (a, b):
        if x != g.distinguished:
            fr[x] = fr[x] - 1
    fr[e] = -1
    edges = [ed for ed in g.edges if ed != _norm_edge(a, b)]
    edges += [(a, e), (e, b)]
    return FramedForest(g.vertices + (e,), fr, edges, g.distinguished)


def blow_down(g: FramedForest, e: str) -> FramedForest:
    """Remove a (-1)-framed vertex of valency at most 2, reconnecting and
    raising the neighbouring framings."""
    if e not in g.vertices:
        raise ValueError(f"unknown vertex {e!r}")
    if e == g.distinguished:
        raise ValueError("cannot blow down the distinguished vertex")
    if g.framings[e] != -1:
        raise ValueError(f"vertex {e!r} has framing {g.framings[e]}, not -1")
    nbrs = g.neighbors(e)
    if len(nbrs) > 2:
        raise ValueError(f"vertex {e!r} has valency {len(nbrs)} > 2")
    verts = tuple(v for v in g.vertices if v != e)
    fr = {v: f for v, f in g.framings.items() if v != e}
    for v in nbrs:
        if v != g.distinguished:
            fr[v] = fr[v] + 1
    edges = [ed for ed in g.edges if e not in ed]
    if len(nbrs) == 2:
        a, b = nbrs
        if _norm_edge(a, b) in g.edges:
            raise ValueError("blow-down would create a double edge")
        edges.append((a, b))
    return FramedForest(verts, fr, edges, g.distinguished)


# ---------------------------------------------------------------------------
# Random negative-definite trees
# ---------------------------------------------------------------------------


def random_negdef_tree(rng: random.Random, n_min: int = 2, n_max: int = 6,
                       slack: int = 3,
                       distinguished: bool = False) -> FramedForest:
    """A seeded random negative-definite tree.

    The tree shape is drawn uniformly via a random Pruefer sequence, the
    framings uniformly from [-(degree + slack), -1], with rejection until
    the intersection form is negative definite.  When ``distinguished`` is
    set, an extra unframed vertex is attached to a random vertex.
    """
    n = rng.randint(n_min, n_max)
    names = [f"v{i+1}" for i in range(n)]
    edges: list[tuple[str, str]] = []
    if n == 2:
        edges = [(names[0], names[1])]
    elif n > 2:
        seq = [rng.randrange(n) for _ in range(n - 2)]
        degree = [1] * n
        for i in seq:
            degree[i] += 1
        leaves = [i for i in range(n) if degree[i] == 1]
        heapq.heapify(leaves)
        for i in seq:
            leaf = heapq.heappop(leaves)
            edges.append((names[leaf], names[i]))
            degree[leaf] -= 1
            degree[i] -= 1
            if degree[i] == 1:
                heapq.heappush(leaves, i)
        a = heapq.heappop(leaves)
        b = heapq.heappop(leaves)
        edges.append((names[a], names[b]))

    deg = {v: 0 for v in names}
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1

    for _attempt in range(1000):
        fr = {v: -rng.randint(1, deg[v] + slack) for v in names}
        g = FramedForest(names, fr, edges, None)
        if g.is_negative_definite():
            break
    else:  # pragma: no cover - diagonally dominant fallback always works
        fr = {v: -(deg[v] + 1) for v in names}
        g = FramedForest(names, fr, edges, None)

    if distinguished:
        target = names[rng.randrange(n)]
        verts = g.vertices + ("v0",)
        return FramedForest(verts, g.framings,
                            list(g.edges) + [(target, "v0")],
                            distinguished="v0")
    return g


# ---------------------------------------------------------------------------
# Named fixture graphs
# ---------------------------------------------------------------------------


def single_vertex(framing: int = -1) -> FramedForest:
    return FramedForest(("v1",), {"v1": framing}, ())


def linear_chain(framings: Sequence[int]) -> FramedForest:
    names = tuple(f"v{i+1}" for i in range(len(framings)))
    edges = [(names[i], names[i + 1]) for i in range(len(framings) - 1)]
    return FramedForest(names, dict(zip(names, framings)), edges)


def chain_of_blowdowns(k: int) -> FramedForest:
    """The k+1 vertex chain (-2, ..., -2, -1): the standard sphere
    presented after k successive blow-ups of a single (-1) vertex."""
    return linear_chain([-2] * k + [-1])


def trefoil_marked() -> FramedForest:
    """The central (-1) vertex with (-2) and (-3) legs, marked at the
    centre: the right-handed trefoil in the three-sphere."""
    return FramedForest(
        ("v1", "v2", "v3", "v0"),
        {"v1": -1, "v2": -2, "v3": -3},
        [("v1", "v2"), ("v1", "v3"), ("v1", "v0")],
        distinguished="v0",
    )


def torus_knot_sum_family(n: int) -> FramedForest:
    """n disjoint trefoil backgrounds with one unframed vertex attached to
    every central vertex: the n-fold connected sum presented on a single
    graph (3n + 1 vertices)."""
    verts: list[str] = []
    fr: dict[str, int] = {}
    edges: list[tuple[str, str]] = []
    for i in range(1, n + 1):
        c, a, b = f"c{i}", f"a{i}", f"b{i}"
        verts += [c, a, b]
        fr.update({c: -1, a: -2, b: -3})
        edges += [(c, a), (c, b), (c, "v0")]
    verts.append("v0")
    return FramedForest(verts, fr, edges, distinguished="v0")


def marked_chain_unknot(k: int) -> FramedForest:
    """The chain of k+1 vertices (-2, ..., -2, -1) with the unframed
    vertex attached at the (-1) end: an unknot in the three-sphere."""
    g = chain_of_blowdowns(k)
    verts = g.vertices + ("v0",)
    edges = list(g.edges) + [(g.vertices[-1], "v0")]
    return FramedForest(verts, g.framings, edges, distinguished="v0")
