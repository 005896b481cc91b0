"""Lattice chain complexes of negative-definite forests over F2[U].

A fully framed negative-definite forest determines a chain complex with
one F2[U]-generator per *cell* ``[K, E]``: ``K`` a characteristic vector
of the intersection form and ``E`` a subset of the vertices.  The
boundary of a cell removes one vertex ``v`` from ``E`` at a time, in two
ways (keeping ``K`` or shifting it by twice the row of ``v``), weighted
by U-powers derived from minima of a combinatorial weight function.
This module computes that complex and its homology exactly:

* cell-level operations (weights, U-exponents, boundary, gradings,
  the conjugation involution);
* enumeration of all cells above a Maslov-grading cutoff, certified by
  an exact ellipsoid search over characteristic vectors;
* homology in the minus / hat / reduced / U-inverted flavours, returned
  as a :class:`~lathom.algebra.GradedModule` with per-sector
  certificates, by a deepening-window algorithm;
* box-truncated homology of the U-forgetting (bar) complex;
* finite complexes with gradings, tensor products, and an independent
  Smith-normal-form cross-check of the homology engine.

All gradings are handled as exact integers scaled by ``4 * |det M|`` so
that every Maslov grading in sight is integral; the public API converts
back to :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .algebra import (F2Map, GradedModule, MathError, Rat, StructureError,
                      UMatrix, UPoly, graded_piece_homology, barcode_intervals,
                      module_from_complex, simplify_complex)
from .plumbing import (FramedForest, SpincStructures, adjugate_int,
                       fraction_inverse)

__all__ = [
    "Cell", "Lattice", "weight_f", "min_weight_g", "ab_exponents",
    "boundary", "hat_boundary", "bar_boundary", "maslov_gr", "k_square",
    "j_involution", "cell_spinc", "enumerate_support", "homology",
    "HomologyResult", "bar_homology_box", "FiniteComplex", "finite_complex",
    "tensor_complex", "complex_homology", "snf_crosscheck",
    "WindowTooShallow", "PackedComplex", "support_packed", "morse_reduce",
    "packed_to_data", "packed_d_squared_check", "reduced_support_data",
]


Cell = tuple[tuple[int, ...], frozenset]


class WindowTooShallow(Exception):
    """The truncation window does not certify the homology; deepen it.

    ``q0_seen`` is the smallest grading (scaled) with nonzero mod-U
    homology observed so far, or None when none was visible at all.
    """

    def __init__(self, q0_seen: Optional[int] = None, sector=None):
        super().__init__(f"window too shallow (q0 seen: {q0_seen}, "
                         f"sector {sector})")
        self.q0_seen = q0_seen
        self.sector = sector


# ---------------------------------------------------------------------------
# Per-forest exact data
# ---------------------------------------------------------------------------


_LATTICES: dict[FramedForest, "Lattice"] = {}


class Lattice:
    """Exact arithmetic data for the lattice complex of one forest.

    Caches per-characteristic-vector weight tables; shared across all
    public functions via :meth:`of`.
    """

    def __init__(self, forest: FramedForest):
        if forest.distinguished is not None:
            raise ValueError("lattice complex needs a fully framed forest")
        if not forest.is_negative_definite():
            raise ValueError("intersection form is not negative definite")
        self.forest = forest
        self.n = forest.n
        self.m = tuple(tuple(row) for row in forest.intersection_matrix())
        self.diag = tuple(self.m[i][i] for i in range(self.n))
        self.rows2 = tuple(tuple(2 * x for x in row) for row in self.m)
        if self.n:
            det, madj = adjugate_int([list(r) for r in self.m])
        else:
            det, madj = 1, []
        self.det = det
        self.absdet = abs(det)
        self.sgn = 1 if det > 0 else -1
        self.scale = 4 * self.absdet
        self.madj = tuple(tuple(row) for row in madj)
        self.adj_mask = tuple(
            sum(1 << j for j in range(self.n)
                if j != i and self.m[i][j]) for i in range(self.n))
        if self.n:
            self.spinc = SpincStructures(forest)
            self.reps = tuple(self.spinc.enumerate())
        else:
            self.spinc = None
            self.reps = ((),)
        self.rep_index = {r: i for i, r in enumerate(self.reps)}
        self._gtab: dict[tuple[int, ...], list[int]] = {}
        self._kmk: dict[tuple[int, ...], int] = {}

    @classmethod
    def of(cls, forest: FramedForest) -> "Lattice":
        lat = _LATTICES.get(forest)
        if lat is None:
            lat = cls(forest)
            _LATTICES[forest] = lat
        return lat

    # -- cell plumbing -------------------------------------------------------

    def mask_of(self, verts: Iterable[str]) -> int:
        mask = 0
        for v in verts:
            mask |= 1 << self.forest.vertex_index(v)
        return mask

    def names_of(self, mask: int) -> frozenset:
        return frozenset(self.forest.framed[i] for i in range(self.n)
                         if mask >> i & 1)

    def check_char(self, k: Sequence[int]) -> tuple[int, ...]:
        k = tuple(int(x) for x in k)
        if len(k) != self.n:
            raise ValueError(f"vector has length {len(k)}, expected {self.n}")
        if any((kv - mv) % 2 for kv, mv in zip(k, self.diag)):
            raise ValueError(f"not a characteristic vector: {k}")
        return k

    def twist(self, k: tuple[int, ...], v: int) -> tuple[int, ...]:
        """The vector K + 2 v* (v* = the intersection pairing with v)."""
        row = self.rows2[v]
        return tuple(kw + rw for kw, rw in zip(k, row))

    def kmk(self, k: tuple[int, ...]) -> int:
        """The integer K . (det M . M^{-1}) . K  ( = det * K^2 )."""
        val = self._kmk.get(k)
        if val is None:
            val = sum(k[i] * sum(self.madj[i][j] * k[j]
                                 for j in range(self.n))
                      for i in range(self.n))
            self._kmk[k] = val
        return val

    def k_square(self, k: tuple[int, ...]) -> Rat:
        if self.n == 0:
            return Rat(0)
        return Fraction(self.kmk(k), self.det)

    # -- weight tables -------------------------------------------------------

    def f_table(self, k: tuple[int, ...]) -> list[int]:
        """2^n minima source: f(I) for every vertex subset I (as bitmask)."""
        n = self.n
        f = [0] * (1 << n)
        for mask in range(1, 1 << n):
            v = (mask & -mask).bit_length() - 1
            prev = mask & (mask - 1)
            f[mask] = (f[prev] + (k[v] + self.diag[v]) // 2
                       + (prev & self.adj_mask[v]).bit_count())
        return f

    def g_table(self, k: tuple[int, ...]) -> list[int]:
        """g(E) = min over subsets I of E of f(I), for every E."""
        tab = self._gtab.get(k)
        if tab is not None:
            return tab
        g = self.f_table(k)
        n = self.n
        for v in range(n):
            bit = 1 << v
            for mask in range(1 << n):
                if mask & bit and g[mask ^ bit] < g[mask]:
                    g[mask] = g[mask ^ bit]
        self._gtab[k] = g
        return g

    # -- gradings and exponents ----------------------------------------------

    def gr0_scaled(self, k: tuple[int, ...], mask: int) -> int:
        """Maslov grading of the cell [k, mask], times ``self.scale``."""
        return (8 * self.absdet * self.g_table(k)[mask]
                + self.scale * mask.bit_count()
                + self.sgn * self.kmk(k) + self.n * self.absdet)

    def ab(self, k: tuple[int, ...], mask: int, v: int) -> tuple[int, int]:
        """U-exponents (a_v, b_v) of the two boundary terms removing v."""
        bit = 1 << v
        if not mask & bit:
            raise ValueError("vertex is not in the cell")
        g = self.g_table(k)
        a = g[mask ^ bit] - g[mask]
        k2 = self.twist(k, v)
        b = ((k[v] + self.diag[v]) // 2
             + self.g_table(k2)[mask ^ bit] - g[mask])
        if a < 0 or b < 0 or min(a, b) != 0:
            raise MathError(f"bad exponents a={a} b={b} for {k} mask={mask}")
        return a, b

    def j_char(self, k: tuple[int, ...], mask: int) -> tuple[int, ...]:
        out = [-x for x in k]
        for u in range(self.n):
            if mask >> u & 1:
                row = self.rows2[u]
                for w in range(self.n):
                    out[w] -= row[w]
        return tuple(out)

    def canonical(self, k: tuple[int, ...]) -> tuple[int, ...]:
        if self.n == 0:
            return ()
        return self.spinc.canonical(k)


# ---------------------------------------------------------------------------
# Cell-level public operations
# ---------------------------------------------------------------------------


def _cell(lat: Lattice, cell) -> tuple[tuple[int, ...], int]:
    k, verts = cell
    return lat.check_char(k), lat.mask_of(verts)


def weight_f(g: FramedForest, k: Sequence[int], verts: Iterable[str]) -> int:
    """The weight f[k, I] = (sum of k over I + (sum of I)^2) / 2."""
    lat = Lattice.of(g)
    kk = lat.check_char(k)
    return lat.f_table(kk)[lat.mask_of(verts)]


def min_weight_g(g: FramedForest, cell) -> int:
    """Minimum of the weight f[k, I] over all subsets I of the cell's E."""
    lat = Lattice.of(g)
    kk, mask = _cell(lat, cell)
    return lat.g_table(kk)[mask]


def ab_exponents(g: FramedForest, cell, v: str) -> tuple[int, int]:
    """U-exponents of the two boundary terms of ``cell`` that remove v."""
    lat = Lattice.of(g)
    kk, mask = _cell(lat, cell)
    return lat.ab(kk, mask, g.vertex_index(v))


def boundary(g: FramedForest, cell) -> list[tuple[int, Cell]]:
    """Full boundary as a list of (U-exponent, cell), F2-cancelled."""
    lat = Lattice.of(g)
    kk, mask = _cell(lat, cell)
    terms: dict[tuple[int, tuple, int], int] = defaultdict(int)
    for v in range(lat.n):
        if mask >> v & 1:
            a, b = lat.ab(kk, mask, v)
            m2 = mask ^ (1 << v)
            terms[(a, kk, m2)] ^= 1
            terms[(b, lat.twist(kk, v), m2)] ^= 1
    out = [(e, (k2, lat.names_of(m2)))
           for (e, k2, m2), c in terms.items() if c]
    out.sort(key=lambda t: (t[0], t[1][0], sorted(t[1][1])))
    return out


def hat_boundary(g: FramedForest, cell) -> list[tuple[int, Cell]]:
    """Boundary terms with U-exponent zero (the mod-U boundary)."""
    return [t for t in boundary(g, cell) if t[0] == 0]


def bar_boundary(g: FramedForest, cell) -> list[Cell]:
    """Boundary with all U-powers forgotten (coefficients in F2)."""
    lat = Lattice.of(g)
    kk, mask = _cell(lat, cell)
    terms: dict[tuple[tuple, int], int] = defaultdict(int)
    for v in range(lat.n):
        if mask >> v & 1:
            m2 = mask ^ (1 << v)
            terms[(kk, m2)] ^= 1
            terms[(lat.twist(kk, v), m2)] ^= 1
    out = [(k2, lat.names_of(m2)) for (k2, m2), c in terms.items() if c]
    out.sort(key=lambda t: (t[0], sorted(t[1])))
    return out


def maslov_gr(g: FramedForest, j: int, cell) -> Rat:
    """Maslov grading of U^j times the cell."""
    lat = Lattice.of(g)
    kk, mask = _cell(lat, cell)
    return Fraction(lat.gr0_scaled(kk, mask), lat.scale) - 2 * j


def k_square(g: FramedForest, k: Sequence[int]) -> Rat:
    """The self-pairing K M^{-1} K, exactly."""
    lat = Lattice.of(g)
    return lat.k_square(lat.check_char(k))


def j_involution(g: FramedForest, cell) -> Cell:
    """The conjugation involution [k, E] -> [-k - 2 sum_{u in E} u*, E]."""
    lat = Lattice.of(g)
    kk, mask = _cell(lat, cell)
    return lat.j_char(kk, mask), lat.names_of(mask)


def cell_spinc(g: FramedForest, k: Sequence[int]) -> tuple[int, ...]:
    """Canonical representative of the sector of a characteristic vector."""
    lat = Lattice.of(g)
    return lat.canonical(lat.check_char(k))


# ---------------------------------------------------------------------------
# Exact enumeration of characteristic vectors in an ellipsoid
# ---------------------------------------------------------------------------


def _ldl(a: list[list[Fraction]]) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Q(x) = sum_i q_i (x_i + sum_{j>i} l[i][j] x_j)^2 for PD Q."""
    n = len(a)
    a = [row[:] for row in a]
    q = [Fraction(0)] * n
    l = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        q[i] = a[i][i]
        if q[i] <= 0:
            raise MathError("quadratic form is not positive definite")
        for j in range(i + 1, n):
            l[i][j] = a[i][j] / q[i]
        for j in range(i + 1, n):
            for t in range(j, n):
                a[j][t] -= l[i][j] * a[i][t]
                a[t][j] = a[j][t]
    return q, l


def ellipsoid_chars(lat: Lattice, cmax: Fraction
                    ) -> Iterator[tuple[tuple[int, ...], Fraction]]:
    """All characteristic vectors K with -K^2 <= cmax, with their -K^2.

    Exact: the recursion encloses the ellipsoid level by level with
    rational interval arithmetic, fixing the integer endpoints by exact
    predicate checks, so no vector is missed or double-produced.
    """
    n = lat.n
    if n == 0:
        if cmax >= 0:
            yield (), Fraction(0)
        return
    if cmax < 0:
        return
    neg_inv = [[-x for x in row] for row in fraction_inverse(
        [list(r) for r in lat.m])]
    q, l = _ldl(neg_inv)
    diag = lat.diag
    x = [0] * n
    t = [Fraction(0)] * n

    def rec(i: int, rem: Fraction) -> Iterator[tuple[tuple[int, ...], Fraction]]:
        if i < 0:
            yield tuple(x), cmax - rem
            return
        qi, ti, d = q[i], t[i], diag[i]

        def ok(y: int) -> bool:
            v = d + 2 * y + ti
            return qi * v * v <= rem

        s = rem / qi
        center = float(-ti - d) / 2.0
        half = math.sqrt(float(s)) / 2.0 if s > 0 else 0.0
        ylo = math.floor(center - half) - 1
        yhi = math.ceil(center + half) + 1
        while ok(ylo - 1):
            ylo -= 1
        while ylo <= yhi and not ok(ylo):
            ylo += 1
        while ok(yhi + 1):
            yhi += 1
        while yhi >= ylo and not ok(yhi):
            yhi -= 1
        for y in range(ylo, yhi + 1):
            xi = d + 2 * y
            x[i] = xi
            vi = xi + ti
            rem2 = rem - qi * vi * vi
            saved = t[:i]
            for j in range(i):
                t[j] += l[j][i] * xi
            yield from rec(i - 1, rem2)
            t[:i] = saved

    yield from rec(n - 1, cmax)


# ---------------------------------------------------------------------------
# Bulk support: all cells above a grading cutoff
# ---------------------------------------------------------------------------


@dataclass
class Support:
    """All cells with Maslov grading >= cutoff (scaled), plus one buffer
    grading level below (targets of mod-U boundary terms)."""

    lat: Lattice
    q_min_scaled: int          # requested floor (scaled)
    cutoff: int                # = q_min_scaled - scale (buffer included)
    ks: tuple                  # kept characteristic vectors
    kidx: dict                 # vector -> row
    g: np.ndarray              # int32 [rows, 2^n] minima tables
    ck: list[int]              # per-row scaled grading constant
    srep: list[int]            # per-row sector index (into lat.reps)

    def gr0(self, row: int, mask: int) -> int:
        lat = self.lat
        return (8 * lat.absdet * int(self.g[row, mask])
                + lat.scale * mask.bit_count() + self.ck[row])


def build_support(lat: Lattice, q_min_scaled: int) -> Support:
    n = lat.n
    s = lat.scale
    ad = lat.absdet
    cutoff = q_min_scaled - s
    if n == 0:
        return Support(lat, q_min_scaled, cutoff, ((),), {(): 0},
                       np.zeros((1, 1), dtype=np.int32), [0], [0])
    # A cell [K, E] can reach grading >= cutoff only if the upper bound
    # n + (K^2 + n)/4 (weights g <= 0) clears it; enumerate that ellipsoid.
    cint = s * n + n * ad + s - q_min_scaled
    cand: list[tuple[int, ...]] = []
    kmks: list[int] = []
    for k, qval in ellipsoid_chars(lat, Fraction(cint, ad)):
        kk = -lat.sgn * qval * ad
        if kk.denominator != 1:
            raise MathError("ellipsoid value is not integral")
        cand.append(k)
        kmks.append(int(kk))
    nm = 1 << n
    popvec = np.array([m.bit_count() for m in range(nm)], dtype=np.int64)
    halves = [lat.diag[v] for v in range(n)]
    ks: list[tuple[int, ...]] = []
    ck: list[int] = []
    g_parts: list[np.ndarray] = []
    kept_kmk: list[int] = []
    for lo in range(0, len(cand), 4096):
        chunk = cand[lo:lo + 4096]
        ckmk = kmks[lo:lo + 4096]
        arr = np.array(chunk, dtype=np.int64).reshape(len(chunk), n)
        f = np.zeros((len(chunk), nm), dtype=np.int64)
        for mask in range(1, nm):
            v = (mask & -mask).bit_length() - 1
            prev = mask & (mask - 1)
            f[:, mask] = (f[:, prev] + (arr[:, v] + halves[v]) // 2
                          + (prev & lat.adj_mask[v]).bit_count())
        g = f
        for v in range(n):
            bit = 1 << v
            idx = np.array([m for m in range(nm) if m & bit], dtype=np.intp)
            g[:, idx] = np.minimum(g[:, idx], g[:, idx ^ bit])
        const = np.array(ckmk, dtype=np.int64) * lat.sgn + n * ad
        grmax = (8 * ad * g + s * popvec[None, :]).max(axis=1) + const
        keep = np.nonzero(grmax >= cutoff)[0]
        if len(keep) == 0:
            continue
        gk = g[keep]
        if gk.size and (np.abs(gk).max() >= 2 ** 31 // (8 * ad + 1)):
            raise MathError("weight table exceeds 32-bit range")
        g_parts.append(gk.astype(np.int32))
        for i in keep:
            ks.append(chunk[i])
            ck.append(int(const[i]))
            kept_kmk.append(ckmk[i])
    if ks:
        g_all = np.concatenate(g_parts, axis=0)
    else:
        g_all = np.zeros((0, nm), dtype=np.int32)
    kidx = {k: i for i, k in enumerate(ks)}
    srep = [lat.rep_index[lat.canonical(k)] for k in ks]
    for k, v in zip(ks, kept_kmk):
        lat._kmk.setdefault(k, v)
    return Support(lat, q_min_scaled, cutoff, tuple(ks), kidx, g_all, ck, srep)


# ---------------------------------------------------------------------------
# Generic graded complex data and the homology engine
# ---------------------------------------------------------------------------


@dataclass
class ComplexData:
    """One F2[U]-free complex with scaled integer gradings.

    ``boundary[i]`` lists ``(target, U-exponent)`` pairs; the term
    U^e . target must sit one grading (times ``scale``) below generator
    i and one delta level below.  ``honest_floor`` is the scaled grading
    at and above which the generator list is complete (None: the complex
    is complete everywhere).
    """

    scale: int
    gr: list[int]
    delta: list[int]
    spinc: list[int]
    boundary: list[list[tuple[int, int]]]
    spinc_keys: tuple
    honest_floor: Optional[int]
    labels: Optional[list] = None

    def validate(self) -> None:
        s = self.scale
        for i, terms in enumerate(self.boundary):
            for t, e in terms:
                if e < 0:
                    raise MathError("negative U-exponent in boundary")
                if self.gr[t] != self.gr[i] - s + 2 * s * e:
                    raise MathError(
                        f"boundary term does not drop the grading by one: "
                        f"gen {i} -> {t} (exp {e})")
                if self.delta[t] != self.delta[i] - 1:
                    raise MathError("boundary term does not drop delta by one")
                if self.spinc[t] != self.spinc[i]:
                    raise MathError("boundary term changes the sector")


@dataclass
class SectorResult:
    """Certified homology of one sector of a :class:`ComplexData`."""

    key: tuple
    scale: int
    q0: Optional[int]                 # scaled; None for the zero module
    top: Optional[int]
    read_bottom: Optional[int]
    towers: list[tuple[int, int]]             # (delta, maslov scaled)
    torsions: list[tuple[int, int, int]]       # (delta, maslov scaled, order)
    hat: dict[tuple[int, int], int]            # (grading scaled, delta) -> dim

    @property
    def inf_rank(self) -> int:
        return len(self.towers)


def _sector_homology(data: ComplexData, gen_ids: list[int],
                     expect_structure: bool, margin: int,
                     key: tuple) -> SectorResult:
    s = data.scale
    gr = data.gr
    delta = data.delta
    bnd = data.boundary
    floor = data.honest_floor
    top = max(gr[i] for i in gen_ids)
    base = gr[gen_ids[0]]
    for i in gen_ids:
        if (gr[i] - base) % s:
            raise MathError("gradings within a sector differ by non-integers")

    # ---- hat (mod U) homology per graded piece -----------------------------
    hat_list: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i in gen_ids:
        hat_list[(gr[i], delta[i])].append(i)
    hat_pos = {qd: {gi: p for p, gi in enumerate(lst)}
               for qd, lst in hat_list.items()}

    hat_maps: dict[tuple[int, int], F2Map] = {}

    def hat_map(qd: tuple[int, int]) -> F2Map:
        """The mod-U differential leaving the hat piece ``qd``."""
        mp = hat_maps.get(qd)
        if mp is None:
            q, d = qd
            src = hat_list.get(qd, [])
            tgt = hat_pos.get((q - s, d - 1), {})
            images = []
            for gi in src:
                v = 0
                for tj, e in bnd[gi]:
                    if e == 0:
                        v ^= 1 << tgt[tj]
                images.append(v)
            mp = F2Map(len(src), len(tgt), images)
            hat_maps[qd] = mp
        return mp

    hat_dims: dict[tuple[int, int], int] = {}
    trusted = (lambda q: True) if floor is None else (lambda q: q >= floor)
    for (q, d) in hat_list:
        if not trusted(q):
            continue
        h = graded_piece_homology(hat_map((q + s, d + 1)), hat_map((q, d)))
        if h.dim:
            hat_dims[(q, d)] = h.dim

    by_grading: dict[int, int] = defaultdict(int)
    for (q, d), dim in hat_dims.items():
        by_grading[q] += dim
    if not by_grading:
        if floor is not None:
            raise WindowTooShallow(None, key)
        # A complete complex with vanishing mod-U homology is acyclic.
        if expect_structure:
            raise StructureError(f"sector {key}: homology is zero")
        return SectorResult(key, s, None, top, None, [], [], {})
    q0 = min(by_grading)
    if floor is not None and q0 - margin * s < floor:
        raise WindowTooShallow(q0, key)

    bottom = q0 - 2 * s

    # ---- minus-flavour graded pieces (U-translates of the generators) ------
    piece: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    low = bottom - 2 * s
    for i in gen_ids:
        j = 0
        q = gr[i]
        while q >= low:
            piece[(q, delta[i])].append((i, j))
            j += 1
            q -= 2 * s
    pos = {qd: {gj: p for p, gj in enumerate(lst)}
           for qd, lst in piece.items()}

    dmaps: dict[tuple[int, int], F2Map] = {}

    def dmap(qd: tuple[int, int]) -> F2Map:
        mp = dmaps.get(qd)
        if mp is None:
            q, d = qd
            src = piece.get(qd, [])
            tgt = pos.get((q - s, d - 1), {})
            images = []
            for (gi, j) in src:
                v = 0
                for tj, e in bnd[gi]:
                    v ^= 1 << tgt[(tj, j + e)]
                images.append(v)
            mp = F2Map(len(src), len(tgt), images)
            dmaps[qd] = mp
        return mp

    deltas = sorted({d for (_q, d) in piece})
    hom: dict[tuple[int, int], object] = {}
    for (q, d) in list(piece):
        if q < bottom - s:
            continue
        d_in = dmap((q + s, d + 1))
        d_out = dmap((q, d))
        for v in d_in.images:
            if d_out(v):
                raise MathError("differential does not square to zero")
        hom[(q, d)] = graded_piece_homology(d_in, d_out)

    def hdim(q: int, d: int) -> int:
        h = hom.get((q, d))
        return h.dim if h is not None else 0

    umaps: dict[tuple[int, int], F2Map] = {}

    def umap(q: int, d: int) -> F2Map:
        """U on homology: H(q, d) -> H(q - 2s, d)."""
        mp = umaps.get((q, d))
        if mp is None:
            hsrc = hom.get((q, d))
            htgt = hom.get((q - 2 * s, d))
            dim_to = htgt.dim if htgt is not None else 0
            images = []
            if hsrc is not None:
                shift = pos.get((q - 2 * s, d), {})
                lst = piece.get((q, d), [])
                for rep in hsrc.basis:
                    w = 0
                    r = rep
                    while r:
                        b = (r & -r).bit_length() - 1
                        gi, j = lst[b]
                        w ^= 1 << shift[(gi, j + 1)]
                        r &= r - 1
                    images.append(htgt.coords(w))
            mp = F2Map(len(images), dim_to, images)
            umaps[(q, d)] = mp
        return mp

    towers: list[tuple[int, int]] = []
    torsions: list[tuple[int, int, int]] = []
    for d in deltas:
        for res in {q % (2 * s) for (q, dd) in hom if dd == d}:
            qs = [q for (q, dd) in hom if dd == d and q % (2 * s) == res]
            if not qs:
                continue
            chain_top = max(qs)
            chain_bot = bottom if (bottom - res) % (2 * s) == 0 else bottom - s
            dims = {q: hdim(q, d) for q in
                    range(chain_top, chain_bot - 1, -2 * s)}
            if not any(dims.values()):
                continue
            comp_cache: dict[tuple[int, int], F2Map] = {}

            def composite(t: int, b: int, d=d) -> F2Map:
                """The U-power map H(t, d) -> H(b, d), memoised."""
                if t == b:
                    h = hom.get((t, d))
                    return F2Map.identity(h.dim if h is not None else 0)
                prev = comp_cache.get((t, b))
                if prev is None:
                    prev = umap(b + 2 * s, d).compose(
                        composite(t, b + 2 * s, d))
                    comp_cache[(t, b)] = prev
                return prev

            def rank(t: int, b: int, d=d) -> int:
                if t == b:
                    return hdim(t, d)
                return composite(t, b, d).rank()

            alive, finite = barcode_intervals(dims, rank, chain_top,
                                              chain_bot, step=2 * s)
            towers.extend((d, t) for t in alive)
            torsions.extend((d, t, (t - b) // (2 * s) + 1)
                            for (b, t) in finite)

    # ---- structure certificates --------------------------------------------
    for (d, t, order) in torsions:
        b = t - 2 * s * (order - 1)
        if b < q0 + s:
            raise MathError(
                f"sector {key}: torsion bottom {b} undercuts the mod-U "
                f"vanishing certificate at {q0}")
    for (d, t) in towers:
        if t < q0:
            raise MathError(f"sector {key}: tower top below q0")
    if expect_structure:
        if len(towers) != 1:
            raise StructureError(
                f"sector {key}: expected exactly one tower, got {towers}")
        if towers[0][0] != 0:
            raise StructureError(
                f"sector {key}: tower has delta {towers[0][0]} != 0")

    # ---- mod-U consistency of the announced module -------------------------
    derived: dict[tuple[int, int], int] = defaultdict(int)
    for (d, t) in towers:
        derived[(t, d)] += 1
    for (d, t, order) in torsions:
        b = t - 2 * s * (order - 1)
        derived[(t, d)] += 1
        derived[(b - s, d + 1)] += 1
    checked = set(derived) | set(hat_dims)
    for qd in checked:
        if not trusted(qd[0]):
            continue
        if derived.get(qd, 0) != hat_dims.get(qd, 0):
            raise MathError(
                f"sector {key}: mod-U homology ({hat_dims.get(qd, 0)}) and "
                f"module prediction ({derived.get(qd, 0)}) disagree at {qd}")

    return SectorResult(key, s, q0, top, bottom, towers, torsions,
                        dict(hat_dims))


def homology_of_data(data: ComplexData, expect_structure: bool = True,
                     margin: int = 6) -> dict[int, SectorResult]:
    """Run the homology engine on every sector of ``data``."""
    sectors: dict[int, list[int]] = defaultdict(list)
    for i, si in enumerate(data.spinc):
        sectors[si].append(i)
    out: dict[int, SectorResult] = {}
    for si in sorted(sectors):
        out[si] = _sector_homology(data, sectors[si], expect_structure,
                                   margin, data.spinc_keys[si])
    return out


# ---------------------------------------------------------------------------
# Lattice homology driver
# ---------------------------------------------------------------------------


def support_data(lat: Lattice, support: Support) -> ComplexData:
    """Generators = all support cells; boundary with dangling mod-U terms
    at the buffer level dropped (quotient complex below the window)."""
    n = lat.n
    s = lat.scale
    ad = lat.absdet
    cutoff = support.cutoff
    nm = 1 << n
    popvec = np.array([m.bit_count() for m in range(nm)], dtype=np.int64)
    gens: list[tuple[int, int]] = []
    gr: list[int] = []
    delta: list[int] = []
    spinc: list[int] = []
    rows = len(support.ks)
    for row in range(rows):
        grrow = 8 * ad * support.g[row].astype(np.int64) \
            + s * popvec + support.ck[row]
        for mask in np.nonzero(grrow >= cutoff)[0]:
            mask = int(mask)
            gens.append((row, mask))
            gr.append(int(grrow[mask]))
            delta.append(mask.bit_count())
            spinc.append(support.srep[row])
    genpos = {gm: i for i, gm in enumerate(gens)}
    twistrow: dict[tuple[int, int], Optional[int]] = {}
    bnds: list[list[tuple[int, int]]] = []
    for idx, (row, mask) in enumerate(gens):
        k = support.ks[row]
        grow = support.g[row]
        gm = int(grow[mask])
        terms: list[tuple[int, int]] = []
        for v in range(n):
            bit = 1 << v
            if not mask & bit:
                continue
            m2 = mask ^ bit
            a = int(grow[m2]) - gm
            buffer_src = gr[idx] < cutoff + s
            tgt = genpos.get((row, m2))
            if tgt is None:
                if not (buffer_src and a == 0):
                    raise MathError("missing boundary target above the buffer")
            else:
                terms.append((tgt, a))
            if (row, v) in twistrow:
                tr = twistrow[(row, v)]
            else:
                tr = twistrow[(row, v)] = support.kidx.get(lat.twist(k, v))
            if tr is None:
                if not buffer_src:
                    raise MathError("missing twisted row above the buffer")
                continue
            b = (k[v] + lat.diag[v]) // 2 + int(support.g[tr, m2]) - gm
            tgt2 = genpos.get((tr, m2))
            if tgt2 is None:
                if not (buffer_src and b == 0):
                    raise MathError("missing twisted target above the buffer")
            else:
                terms.append((tgt2, b))
        bnds.append(terms)
    data = ComplexData(scale=s, gr=gr, delta=delta, spinc=spinc,
                       boundary=bnds, spinc_keys=lat.reps,
                       honest_floor=support.q_min_scaled, labels=gens)
    data.validate()
    return data


# ---------------------------------------------------------------------------
# Packed pipeline for large supports
# ---------------------------------------------------------------------------
#
# Graphs with six or more vertices produce windows with millions of cells;
# per-cell Python objects do not fit in memory and per-piece rank
# computations do not fit in time.  The packed pipeline keeps the complex
# in flat numpy arrays and shrinks it with rounds of simultaneous
# unit-pivot cancellations before handing the (small) residue to the
# generic engine.  Cancelling a basis pair (x, y) with d[y <- x] = U^0
# is a change of F2[U]-basis, so the residue is chain homotopy
# equivalent to the input and every grading-level invariant the engine
# reads is unchanged.


@dataclass
class PackedComplex:
    """A free F2[U]-complex as flat arrays.

    ``edge_dst``/``edge_src`` hold one boundary monomial per entry; the
    U-exponent is determined by the gradings, ``e = (gr[dst] - gr[src]
    + s) / 2s``, because the complex is graded.  ``labels`` are
    ``(support row, vertex mask)`` pairs, one per cell.
    """

    scale: int
    gr: np.ndarray          # int32 [cells]
    delta: np.ndarray       # int16 [cells]
    spinc: np.ndarray       # int32 [cells]
    edge_dst: np.ndarray    # int32 [entries]
    edge_src: np.ndarray    # int32 [entries]
    spinc_keys: tuple
    honest_floor: Optional[int]
    label_rows: np.ndarray  # int32 [cells]
    label_masks: np.ndarray  # int32 [cells]
    support_cells: int = 0


def _parity_cancel(dst: np.ndarray, src: np.ndarray, ncells: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Drop (dst, src) pairs occurring an even number of times (F2)."""
    if not len(dst):
        return dst.astype(np.int32), src.astype(np.int32)
    key = dst.astype(np.int64) * ncells + src.astype(np.int64)
    uniq, counts = np.unique(key, return_counts=True)
    keep = uniq[counts % 2 == 1]
    return (keep // ncells).astype(np.int32), \
        (keep % ncells).astype(np.int32)


def support_packed(lat: Lattice, support: Support) -> PackedComplex:
    """Same complex as :func:`support_data`, built as flat arrays."""
    n = lat.n
    s = lat.scale
    ad = lat.absdet
    cutoff = support.cutoff
    nm = 1 << n
    rows = len(support.ks)
    popvec = np.array([m.bit_count() for m in range(nm)], dtype=np.int32)
    gtab = support.g
    if 8 * ad * int(np.abs(gtab).max(initial=0)) + s * n \
            + max(map(abs, support.ck), default=0) >= 2 ** 31:
        raise MathError("grading table exceeds 32-bit range")
    grall = (8 * ad * gtab + s * popvec[None, :]
             + np.array(support.ck, dtype=np.int32)[:, None])
    keep = grall >= cutoff
    idmat = np.full((rows, nm), -1, dtype=np.int32)
    ncells = int(keep.sum())
    idmat[keep] = np.arange(ncells, dtype=np.int32)
    cell_rows, cell_masks = np.nonzero(keep)
    cell_rows = cell_rows.astype(np.int32)
    cell_masks = cell_masks.astype(np.int32)
    gr = grall[keep]
    del grall, keep
    delta = popvec[cell_masks].astype(np.int16)
    spinc = np.array(support.srep, dtype=np.int32)[cell_rows]
    karr = np.array(support.ks, dtype=np.int64).reshape(rows, n)
    trow = np.full((rows, n), -1, dtype=np.int32)
    kidx = support.kidx
    for r, k in enumerate(support.ks):
        for v in range(n):
            trow[r, v] = kidx.get(lat.twist(k, v), -1)
    buffer_src_all = gr < cutoff + s
    dst_parts: list[np.ndarray] = []
    src_parts: list[np.ndarray] = []
    for v in range(n):
        bit = 1 << v
        sel = np.nonzero(cell_masks & bit)[0].astype(np.int32)
        if not len(sel):
            continue
        rsel = cell_rows[sel]
        m2 = cell_masks[sel] ^ bit
        gsrc = gtab[rsel, cell_masks[sel]].astype(np.int64)
        buf = buffer_src_all[sel]
        # untwisted term, exponent a
        a = gtab[rsel, m2] - gsrc
        tgt = idmat[rsel, m2]
        dangling = tgt < 0
        if np.any(dangling & ~(buf & (a == 0))):
            raise MathError("missing boundary target above the buffer")
        ok = ~dangling
        dst_parts.append(tgt[ok])
        src_parts.append(sel[ok])
        # twisted term, exponent b
        tr = trow[rsel, v]
        has_row = tr >= 0
        if np.any(~has_row & ~buf):
            raise MathError("missing twisted row above the buffer")
        b = (karr[rsel, v] + lat.diag[v]) // 2 + gtab[tr, m2] - gsrc
        tgt2 = np.where(has_row, idmat[tr, m2], -1)
        dangling2 = has_row & (tgt2 < 0)
        if np.any(dangling2 & ~(buf & (b == 0))):
            raise MathError("missing twisted target above the buffer")
        ok2 = has_row & (tgt2 >= 0)
        dst_parts.append(tgt2[ok2])
        src_parts.append(sel[ok2])
    del idmat, trow, buffer_src_all
    if dst_parts:
        edge_dst = np.concatenate(dst_parts)
        edge_src = np.concatenate(src_parts)
        del dst_parts, src_parts
    else:
        edge_dst = np.zeros(0, dtype=np.int32)
        edge_src = np.zeros(0, dtype=np.int32)
    exps = gr[edge_dst] - gr[edge_src] + s
    if np.any(exps % (2 * s)) or np.any(exps < 0):
        raise MathError("boundary entry violates the grading")
    if np.any(delta[edge_dst] != delta[edge_src] - 1):
        raise MathError("boundary entry does not drop delta by one")
    return PackedComplex(s, gr, delta, spinc, edge_dst, edge_src,
                         lat.reps, support.q_min_scaled,
                         cell_rows.astype(np.int32),
                         cell_masks.astype(np.int32),
                         support_cells=ncells)


def packed_d_squared_check(pc: PackedComplex) -> None:
    """Verify d . d = 0 on the trustworthy columns of a packed complex.

    In a window-truncated complex the buffer level's exponent-zero
    terms were dropped, so d . d can fail to vanish on columns whose
    boundary reaches the buffer; columns two or more levels above the
    window floor never do, and there the compositions must cancel over
    F2 exactly.  Complete complexes are checked everywhere.
    """
    ncells = len(pc.gr)
    if not len(pc.edge_dst):
        return
    if pc.honest_floor is None:
        col_ok = np.ones(ncells, dtype=bool)
    else:
        col_ok = pc.gr >= pc.honest_floor + pc.scale
    by_src = np.argsort(pc.edge_src, kind="stable")
    by_dst = np.argsort(pc.edge_dst, kind="stable")
    src_sorted = pc.edge_src[by_src]
    dst_sorted = pc.edge_dst[by_dst]
    out_start = np.searchsorted(src_sorted, np.arange(ncells + 1))
    in_start = np.searchsorted(dst_sorted, np.arange(ncells + 1))
    paths_dst: list[np.ndarray] = []
    paths_src: list[np.ndarray] = []
    for mid in range(ncells):
        o0, o1 = out_start[mid], out_start[mid + 1]
        i0, i1 = in_start[mid], in_start[mid + 1]
        if o0 == o1 or i0 == i1:
            continue
        outs = pc.edge_dst[by_src[o0:o1]]
        ins = pc.edge_src[by_dst[i0:i1]]
        ins = ins[col_ok[ins]]
        if not len(ins):
            continue
        paths_dst.append(np.repeat(outs, len(ins)))
        paths_src.append(np.tile(ins, len(outs)))
    if paths_dst:
        d2_dst, d2_src = _parity_cancel(np.concatenate(paths_dst),
                                        np.concatenate(paths_src),
                                        ncells)
        if len(d2_dst):
            raise MathError("differential does not square to zero")


# Largest detour fill-in generated in one reduction round; pivots past
# the cap wait for a later round, keeping peak memory flat.
_FILL_CAP = 12_000_000


def morse_reduce(pc: PackedComplex, max_rounds: int = 400,
                 fill_budget: int = 24) -> PackedComplex:
    """Shrink a packed complex by cancelling U^0 unit pivots in rounds.

    Each round picks a set of unit entries d[y_i <- x_i] whose 2k
    cells are pairwise distinct and such that no entry of any exponent
    runs from a pivot column x_i into a different pivot's row y_j.
    Under those two conditions cancelling them simultaneously equals
    cancelling them one at a time, and the combined detour fill-in is
    a sparse product per pivot, (targets of x_i) x (sources of y_i).

    In a window-truncated complex the buffer level's columns are
    incomplete (their dangling terms were dropped), so buffer cells are
    never used as pivot sources; every detour value is then an entry of
    the untruncated complex, and the residue is the same truncation of
    an honestly cancelled complex, with the identical window floor.
    """
    s = pc.scale
    ncells = len(pc.gr)
    gr = pc.gr
    dst, src = pc.edge_dst, pc.edge_src
    alive = np.ones(ncells, dtype=bool)
    if pc.honest_floor is None:
        pivotable = np.ones(ncells, dtype=bool)
    else:
        pivotable = gr >= pc.honest_floor
    budget = fill_budget * max(len(dst), 1) + (1 << 20)
    spent = 0
    for _round in range(max_rounds):
        if not len(dst):
            break
        unit = (gr[dst] == gr[src] - s) & pivotable[src]
        if not np.any(unit):
            break
        au_dst = dst[unit]
        au_src = src[unit]
        # prefer pivots with small fill: order unit entries by the
        # product of the endpoint degrees
        outdeg = np.bincount(src, minlength=ncells)
        indeg = np.bincount(dst, minlength=ncells)
        score = (outdeg[au_src] - 1) * (indeg[au_dst] - 1)
        order = np.argsort(score, kind="stable")
        u_dst, u_src = au_dst[order], au_src[order]
        # greedy matching: first entry per source, then per target;
        # positions in the score-sorted list double as priority ranks
        first = np.unique(u_src, return_index=True)[1]
        u_dst, u_src, rank = u_dst[first], u_src[first], first
        first = np.unique(u_dst, return_index=True)[1]
        py, px, rank = u_dst[first], u_src[first], rank[first]
        # a cell may not serve as one pivot's source and another's
        # target in the same round (cancelling either invalidates the
        # other); conflicts y_i = x_j chain into grading-descending
        # paths, so accepting alternate pivots from each head resolves
        # them without emptying a chain
        pix = np.full(ncells, -1, dtype=np.int32)
        pix[px] = np.arange(len(px))
        nxt = pix[py]
        has_pred = np.zeros(len(px), dtype=bool)
        has_pred[nxt[nxt >= 0]] = True
        state = np.zeros(len(px), dtype=np.int8)
        frontier = np.nonzero(~has_pred)[0]
        accept = True
        while len(frontier):
            state[frontier] = 1 if accept else 2
            step = nxt[frontier]
            frontier = step[step >= 0]
            accept = not accept
        if np.any(state == 0):
            raise MathError("pivot conflict chains did not resolve")
        keep = state == 1
        px, py, rank = px[keep], py[keep], rank[keep]
        # interference scan: an entry of any exponent from a pivot
        # column into a different pivot's row would feed second-order
        # detours, so of each such pair the worse-ranked pivot is
        # dropped; the best-ranked pivot always survives
        pix = np.full(ncells, -1, dtype=np.int32)
        piy = np.full(ncells, -1, dtype=np.int32)
        pix[px] = np.arange(len(px))
        piy[py] = np.arange(len(py))
        i = pix[src]  # pivot index by column
        j = piy[dst]  # pivot index by row
        cross = (i >= 0) & (j >= 0) & (i != j)
        ii, jj = i[cross], j[cross]
        kill = np.zeros(len(px), dtype=bool)
        kill[np.where(rank[ii] > rank[jj], ii, jj)] = True
        px, py, rank = px[~kill], py[~kill], rank[~kill]
        # bound this round's fill-in to keep peak memory flat: take the
        # best-ranked pivots whose estimated fill fits the cap and
        # leave the rest for later rounds
        est = (outdeg[px] - 1) * (indeg[py] - 1)
        ordr = np.argsort(rank, kind="stable")
        allow = np.cumsum(est[ordr]) <= _FILL_CAP
        if not np.any(allow):
            raise MathError("a single pivot's fill-in exceeds the "
                            "memory cap; the window cannot be reduced")
        sel = np.zeros(len(px), dtype=bool)
        sel[ordr[allow]] = True
        px, py = px[sel], py[sel]
        # detour fill: for pivot i, (targets of x_i) x (sources of y_i),
        # both with the pivot pair itself excluded
        pebble = np.full(ncells, -1, dtype=np.int32)
        pebble[px] = np.arange(len(px))
        col_of = pebble[src]
        col_sel = np.nonzero((col_of >= 0) & (dst != py[col_of]))[0]
        pebble2 = np.full(ncells, -1, dtype=np.int32)
        pebble2[py] = np.arange(len(px))
        row_of = pebble2[dst]
        row_sel = np.nonzero((row_of >= 0) & (src != px[row_of]))[0]
        col_sel = col_sel[np.argsort(col_of[col_sel], kind="stable")]
        row_sel = row_sel[np.argsort(row_of[row_sel], kind="stable")]
        col_cnt = np.bincount(col_of[col_sel], minlength=len(px))
        row_cnt = np.bincount(row_of[row_sel], minlength=len(px))
        pair_cnt = col_cnt * row_cnt
        total = int(pair_cnt.sum())
        spent += total
        if spent > budget:
            raise MathError("reduction fill-in exceeded its budget; "
                            "the window is too large to reduce")
        if total:
            col_start = np.concatenate(([0], np.cumsum(col_cnt)))
            row_start = np.concatenate(([0], np.cumsum(row_cnt)))
            pivot_rep = np.repeat(np.arange(len(px)), pair_cnt)
            within = np.arange(total) - np.repeat(
                np.concatenate(([0], np.cumsum(pair_cnt)))[:-1], pair_cnt)
            fill_dst = dst[col_sel[col_start[pivot_rep]
                                   + within // np.maximum(
                                       row_cnt[pivot_rep], 1)]]
            fill_src = src[row_sel[row_start[pivot_rep]
                                   + within % np.maximum(
                                       row_cnt[pivot_rep], 1)]]
        else:
            fill_dst = np.zeros(0, dtype=np.int32)
            fill_src = np.zeros(0, dtype=np.int32)
        alive[px] = False
        alive[py] = False
        # fills whose endpoint dies this round correspond to entries
        # deleted together with the cancelled cell
        fill_ok = alive[fill_dst] & alive[fill_src]
        keep_edge = alive[dst] & alive[src]
        dst = np.concatenate((dst[keep_edge], fill_dst[fill_ok]))
        src = np.concatenate((src[keep_edge], fill_src[fill_ok]))
        dst, src = _parity_cancel(dst, src, ncells)
    else:
        raise MathError("reduction did not terminate within its rounds")
    # compact the residue; a sub-floor cell without incident edges can
    # never influence a differential, and its own levels are below
    # every certified read, so it is dropped outright
    if pc.honest_floor is not None:
        incident = np.zeros(ncells, dtype=bool)
        incident[dst] = True
        incident[src] = True
        alive &= incident | (gr >= pc.honest_floor)
    new_id = np.full(ncells, -1, dtype=np.int32)
    kept = np.nonzero(alive)[0]
    new_id[kept] = np.arange(len(kept))
    return PackedComplex(s, gr[kept], pc.delta[kept], pc.spinc[kept],
                         new_id[dst], new_id[src], pc.spinc_keys,
                         pc.honest_floor, pc.label_rows[kept],
                         pc.label_masks[kept],
                         support_cells=pc.support_cells or ncells)


def packed_to_data(pc: PackedComplex) -> ComplexData:
    """Materialise a (small) packed complex for the generic engine."""
    s = pc.scale
    ncells = len(pc.gr)
    exps = (pc.gr[pc.edge_dst] - pc.gr[pc.edge_src] + s) // (2 * s)
    boundary: list[list[tuple[int, int]]] = [[] for _ in range(ncells)]
    for d, sr, e in zip(pc.edge_dst.tolist(), pc.edge_src.tolist(),
                        exps.tolist()):
        boundary[sr].append((d, e))
    data = ComplexData(
        scale=s,
        gr=pc.gr.tolist(),
        delta=pc.delta.astype(np.int64).tolist(),
        spinc=pc.spinc.astype(np.int64).tolist(),
        boundary=boundary,
        spinc_keys=pc.spinc_keys,
        honest_floor=pc.honest_floor,
        labels=list(zip(pc.label_rows.tolist(), pc.label_masks.tolist())))
    data.validate()
    return data


# Supports above this many cells go through the packed reduction;
# smaller ones take the direct per-cell path.
_PACKED_MIN_CELLS = 20_000


def _support_size(lat: Lattice, support: Support) -> int:
    """Number of cells at or above the support's cutoff."""
    if not len(support.ks):
        return 0
    nm = 1 << lat.n
    count = 0
    popvec = np.array([m.bit_count() for m in range(nm)], dtype=np.int32)
    for lo in range(0, len(support.ks), 65536):
        grall = (8 * lat.absdet * support.g[lo:lo + 65536]
                 + lat.scale * popvec[None, :]
                 + np.array(support.ck[lo:lo + 65536],
                            dtype=np.int32)[:, None])
        count += int((grall >= support.cutoff).sum())
    return count
# Full quadratic d^2 = 0 verification is skipped above this many cells
# (the reduced residue is still verified exactly by the engine).
_D2_CHECK_MAX_CELLS = 400_000


def reduced_support_data(lat: Lattice, support: Support) -> ComplexData:
    """Support complex, reduced to its unit-pivot-free residue."""
    pc = support_packed(lat, support)
    if len(pc.gr) <= _D2_CHECK_MAX_CELLS:
        packed_d_squared_check(pc)
    return packed_to_data(morse_reduce(pc))


@dataclass
class HomologyResult:
    """Homology of a lattice (or finite) complex in all flavours.

    ``module`` is the full minus-flavour module; ``hat`` the mod-U
    homology dimensions per sector; ``inf`` the rank after inverting U;
    ``meta`` per-sector certificates (q0, window floor used, top).
    """

    flavor: str
    module: GradedModule
    hat: dict[tuple, dict[tuple[Rat, int], int]]
    inf: dict[tuple, int]
    meta: dict[tuple, dict]
    _data: Optional[ComplexData] = field(default=None, repr=False)
    _sectors: Optional[dict] = field(default=None, repr=False)
    _lat: Optional[Lattice] = field(default=None, repr=False)

    def payload(self):
        if self.flavor == "minus":
            return self.module
        if self.flavor == "reduced":
            return self.module.reduced()
        if self.flavor == "hat":
            return self.hat
        if self.flavor == "inf":
            return self.inf
        raise ValueError(f"unknown flavour {self.flavor!r}")

    def d_invariant(self, spinc=None) -> Rat:
        if spinc is None and len(self.inf) == 1:
            spinc = next(iter(self.inf))
        return self.module.d_invariant(spinc)

    def restrict(self, spinc: tuple) -> "HomologyResult":
        return HomologyResult(
            self.flavor, self.module.restrict(spinc),
            {spinc: self.hat.get(spinc, {})},
            {spinc: self.inf.get(spinc, 0)},
            {spinc: self.meta.get(spinc, {})},
            self._data, self._sectors, self._lat)


_FLAVORS = ("minus", "hat", "reduced", "inf")


def _assemble_result(flavor: str, data: ComplexData,
                     sectors: dict[int, SectorResult],
                     lat: Optional[Lattice] = None) -> HomologyResult:
    towers = []
    torsions = []
    hat: dict[tuple, dict] = {}
    inf: dict[tuple, int] = {}
    meta: dict[tuple, dict] = {}
    for si, sec in sectors.items():
        key = data.spinc_keys[si]
        s = sec.scale
        towers.extend((key, d, Fraction(t, s)) for (d, t) in sec.towers)
        torsions.extend((key, d, Fraction(t, s), o)
                        for (d, t, o) in sec.torsions)
        hat[key] = {(Fraction(q, s), d): dim
                    for (q, d), dim in sorted(sec.hat.items())}
        inf[key] = sec.inf_rank
        meta[key] = {
            "q0": None if sec.q0 is None else Fraction(sec.q0, s),
            "top": None if sec.top is None else Fraction(sec.top, s),
            "read_bottom": (None if sec.read_bottom is None
                            else Fraction(sec.read_bottom, s)),
            "window_floor": (None if data.honest_floor is None
                             else Fraction(data.honest_floor, s)),
            "generators": sum(1 for x in data.spinc if x == si),
        }
    module = GradedModule.build(towers, torsions)
    return HomologyResult(flavor, module, hat, inf, meta,
                          _data=data, _sectors=sectors, _lat=lat)


def homology(g: FramedForest, spinc=None, flavor: str = "minus",
             q_floor=None, margin: int = 6) -> HomologyResult:
    """Lattice homology of a fully framed negative-definite forest.

    Flavours: ``minus`` (module over F2[U]), ``hat`` (mod-U homology
    dimensions), ``reduced`` (the torsion part), ``inf`` (rank after
    inverting U).  All four are computed from one certified run; the
    flavour only selects :meth:`HomologyResult.payload`.

    ``q_floor`` seeds the truncation window (in Maslov units); the
    window deepens automatically until the certificates hold.
    """
    if flavor not in _FLAVORS:
        raise ValueError(f"unknown flavour {flavor!r}; pick from {_FLAVORS}")
    lat = Lattice.of(g)
    s = lat.scale
    if lat.n == 0:
        sec = SectorResult((), s, 0, 0, -2 * s, [(0, 0)], [], {(0, 0): 1})
        data = ComplexData(s, [0], [0], [0], [[]], ((),), None, [((), 0)])
        result = _assemble_result(flavor, data, {0: sec}, lat)
        return result if spinc is None else result.restrict(())
    if q_floor is not None:
        qmin = math.ceil(Fraction(q_floor) * s)
    else:
        qmin = (5 * lat.n * s) // 4 - 8 * s
    step = 6 * s
    sectors = None
    data = None
    for _ in range(64):
        support = build_support(lat, qmin)
        if _support_size(lat, support) >= _PACKED_MIN_CELLS:
            data = reduced_support_data(lat, support)
        else:
            data = support_data(lat, support)
        if data.gr and len(set(data.spinc)) == len(lat.reps):
            try:
                sectors = homology_of_data(data, expect_structure=True,
                                           margin=margin)
                break
            except WindowTooShallow as e:
                if e.q0_seen is not None:
                    # the top of the tower is known, so aim just deep
                    # enough for its margin instead of blind doubling
                    qmin = min(qmin - s, e.q0_seen - (margin + 4) * s)
                else:
                    qmin -= step
        else:
            qmin -= step
        step *= 2
    if sectors is None:
        raise MathError("window deepening did not converge")
    result = _assemble_result(flavor, data, sectors, lat)
    if spinc is not None:
        result = result.restrict(lat.canonical(lat.check_char(spinc)))
    return result


def enumerate_support(g: FramedForest, s, q_min) -> list[Cell]:
    """All cells in the sector of ``s`` with Maslov grading >= q_min.

    Certified complete: the candidate characteristic vectors are drawn
    from an ellipsoid that provably contains every vector whose cells
    can reach the cutoff.
    """
    lat = Lattice.of(g)
    if lat.n == 0:
        return [((), frozenset())] if Fraction(q_min) <= 0 else []
    rep = lat.canonical(lat.check_char(s))
    q_scaled = math.ceil(Fraction(q_min) * lat.scale)
    support = build_support(lat, q_scaled)
    out = []
    for row, k in enumerate(support.ks):
        if lat.reps[support.srep[row]] != rep:
            continue
        for mask in range(1 << lat.n):
            grv = support.gr0(row, mask)
            if grv >= q_scaled:
                out.append((-grv, k, mask))
    out.sort()
    return [(k, lat.names_of(mask)) for (_g, k, mask) in out]


# ---------------------------------------------------------------------------
# Finite complexes, tensor products, SNF cross-check
# ---------------------------------------------------------------------------


@dataclass
class FiniteComplex:
    """A finite free F2[U]-complex with Maslov/delta/sector gradings.

    ``boundary[i]`` lists ``(target index, U-exponent)``;
    ``honest_floor`` (Maslov units) marks where the generator list stops
    being complete (None for a complete complex).
    """

    maslov: tuple
    delta: tuple[int, ...]
    spinc: tuple
    boundary: tuple
    labels: tuple
    honest_floor: Optional[Rat] = None

    def __len__(self) -> int:
        return len(self.maslov)

    def shift(self, maslov_by=0, delta_by: int = 0) -> "FiniteComplex":
        return FiniteComplex(
            tuple(m + maslov_by for m in self.maslov),
            tuple(d + delta_by for d in self.delta),
            self.spinc, self.boundary, self.labels,
            None if self.honest_floor is None
            else self.honest_floor + maslov_by)


def finite_complex(g: FramedForest, q_min, spinc=None) -> FiniteComplex:
    """The truncated lattice complex above ``q_min`` as explicit data."""
    lat = Lattice.of(g)
    if lat.n == 0:
        return FiniteComplex((Rat(0),), (0,), ((),), ((),),
                             (((), frozenset()),), None)
    q_scaled = math.ceil(Fraction(q_min) * lat.scale)
    support = build_support(lat, q_scaled)
    data = support_data(lat, support)
    keep = None
    if spinc is not None:
        rep = lat.canonical(lat.check_char(spinc))
        keep = lat.rep_index[rep]
    idx_map: dict[int, int] = {}
    sel = [i for i in range(len(data.gr))
           if keep is None or data.spinc[i] == keep]
    for new, old in enumerate(sel):
        idx_map[old] = new
    return FiniteComplex(
        tuple(Fraction(data.gr[i], lat.scale) for i in sel),
        tuple(data.delta[i] for i in sel),
        tuple(lat.reps[data.spinc[i]] for i in sel),
        tuple(tuple((idx_map[t], e) for (t, e) in data.boundary[i])
              for i in sel),
        tuple((support.ks[row], lat.names_of(mask))
              for (row, mask) in (data.labels[i] for i in sel)),
        Fraction(q_scaled, lat.scale))


def tensor_complex(c1: FiniteComplex, c2: FiniteComplex,
                   spinc_combine: Optional[Callable] = None
                   ) -> FiniteComplex:
    """Tensor product over F2[U]; gradings add, the differential obeys
    the Leibniz rule."""
    if spinc_combine is None:
        spinc_combine = lambda a, b: (a, b)  # noqa: E731
    n2 = len(c2)
    maslov = []
    delta = []
    spinc = []
    labels = []
    bnd: list[tuple] = []
    for i in range(len(c1)):
        for j in range(n2):
            maslov.append(c1.maslov[i] + c2.maslov[j])
            delta.append(c1.delta[i] + c2.delta[j])
            spinc.append(spinc_combine(c1.spinc[i], c2.spinc[j]))
            labels.append((c1.labels[i], c2.labels[j]))
            terms = [(t * n2 + j, e) for (t, e) in c1.boundary[i]]
            terms += [(i * n2 + t, e) for (t, e) in c2.boundary[j]]
            bnd.append(tuple(terms))
    floor = None
    if c1.honest_floor is not None or c2.honest_floor is not None:
        f1 = c1.honest_floor
        f2 = c2.honest_floor
        cands = []
        if f1 is not None:
            cands.append(f1 + max(c2.maslov))
        if f2 is not None:
            cands.append(f2 + max(c1.maslov))
        floor = max(cands)
    return FiniteComplex(tuple(maslov), tuple(delta), tuple(spinc),
                         tuple(bnd), tuple(labels), floor)


def complex_homology(fc: FiniteComplex, expect_structure: bool = True,
                     margin: int = 6) -> HomologyResult:
    """Homology of an explicit finite complex, same certificates as
    :func:`homology`.  Raises :class:`WindowTooShallow` if a truncated
    complex's window cannot certify the answer."""
    if not len(fc):
        return HomologyResult("minus", GradedModule((), ()), {}, {}, {})
    denom = 1
    for m in fc.maslov:
        denom = denom * Fraction(m).denominator // math.gcd(
            denom, Fraction(m).denominator)
    s = denom
    keys = sorted(set(fc.spinc), key=repr)
    kidx = {k: i for i, k in enumerate(keys)}
    floor = None
    if fc.honest_floor is not None:
        floor = math.ceil(Fraction(fc.honest_floor) * s)
    data = ComplexData(
        scale=s,
        gr=[int(Fraction(m) * s) for m in fc.maslov],
        delta=list(fc.delta),
        spinc=[kidx[x] for x in fc.spinc],
        boundary=[list(t) for t in fc.boundary],
        spinc_keys=tuple(keys),
        honest_floor=floor,
        labels=list(fc.labels))
    data.validate()
    sectors = homology_of_data(data, expect_structure=expect_structure,
                               margin=margin)
    return _assemble_result("minus", data, sectors)


def snf_crosscheck(result: HomologyResult) -> None:
    """Re-derive the module of ``result`` by Smith normal form over F2[U]
    and compare, sector by sector, above the certified window bottom.

    This is a fully independent pipeline (kernel bases and invariant
    factors of U-polynomial matrices) against the graded-piece engine.
    For a truncated lattice complex an honest *subcomplex* is built
    first: all cells above the window floor, closed under the boundary
    (each boundary step shrinks the vertex set, so the closure stops
    within n extra grading levels); generator-dropping alone would not
    square to zero over F2[U].
    """
    data = result._data
    sectors = result._sectors
    if data is None or sectors is None:
        raise ValueError("result carries no complex data to cross-check")
    if data.honest_floor is None:
        sub = data
    else:
        lat = result._lat
        if lat is None:
            raise ValueError("truncated non-lattice data cannot be re-closed")
        s = data.scale
        # Graded pieces of the closed subcomplex agree with the full
        # complex at and above the seed floor, and the comparison filter
        # sits two levels higher, so this is as shallow as soundness
        # allows; it keeps the rebuilt subcomplex small.
        seed_floor = {si: sec.read_bottom - 2 * s
                      for si, sec in sectors.items()
                      if sec.read_bottom is not None}
        if not seed_floor:
            raise ValueError("no certified sectors to cross-check")
        deep = build_support(lat, min(seed_floor.values()) - (lat.n + 1) * s)
        full = support_data(lat, deep)
        seed = [i for i in range(len(full.gr))
                if full.spinc[i] in seed_floor
                and full.gr[i] >= seed_floor[full.spinc[i]]]
        included = set(seed)
        stack = list(seed)
        while stack:
            i = stack.pop()
            for (t, _e) in full.boundary[i]:
                if t not in included:
                    included.add(t)
                    stack.append(t)
        keep = sorted(included)
        idx = {old: new for new, old in enumerate(keep)}
        sub = ComplexData(
            scale=s,
            gr=[full.gr[i] for i in keep],
            delta=[full.delta[i] for i in keep],
            spinc=[full.spinc[i] for i in keep],
            boundary=[[(idx[t], e) for (t, e) in full.boundary[i]]
                      for i in keep],
            spinc_keys=full.spinc_keys,
            honest_floor=data.honest_floor)
    by_sector: dict[int, list[int]] = defaultdict(list)
    for i, si in enumerate(sub.spinc):
        by_sector[si].append(i)
    for si, sec in sectors.items():
        gens = by_sector[si]
        if sec.read_bottom is None:
            continue
        s = sec.scale
        bottom = Fraction(sec.read_bottom, s)
        # Split into connected components of the boundary relation: each
        # is a direct summand, and Smith reduction is cubic, so many
        # small blocks beat one big one.
        parent = {i: i for i in gens}

        def find(x: int) -> int:
            root = x
            while parent[root] != root:
                root = parent[root]
            while parent[x] != root:
                parent[x], x = root, parent[x]
            return root

        for i in gens:
            for (t, _e) in sub.boundary[i]:
                parent[find(t)] = find(i)
        comps: dict[int, list[int]] = defaultdict(list)
        for i in gens:
            comps[find(i)].append(i)
        snf_free: list[tuple[int, Fraction]] = []
        snf_tors: list[tuple[int, Fraction, int]] = []
        for comp in comps.values():
            max_d = max(sub.delta[i] for i in comp)
            basis: dict[int, list[int]] = defaultdict(list)
            for i in comp:
                basis[sub.delta[i]].append(i)
            pos = {d: {gi: p for p, gi in enumerate(lst)}
                   for d, lst in basis.items()}
            bmats = []
            for d in range(max_d + 1):
                src = basis.get(d + 1, [])
                tgt = basis.get(d, [])
                mat = UMatrix(len(tgt), len(src))
                for c, gi in enumerate(src):
                    for (t, e) in sub.boundary[gi]:
                        mat.add_to(pos[d][t], c, UPoly.monomial(e))
                bmats.append(mat)
            gradings = [[Fraction(sub.gr[i], s) for i in basis.get(d, [])]
                        for d in range(max_d + 2)]
            summaries = module_from_complex(bmats, gradings)
            snf_free.extend(
                (d, m) for d, summ in enumerate(summaries)
                for m in summ.free if m >= bottom)
            snf_tors.extend(
                (d, m, o) for d, summ in enumerate(summaries)
                for (o, m) in summ.torsion if m >= bottom)
        snf_towers = sorted(snf_free)
        snf_torsions = sorted(snf_tors)
        eng_towers = sorted((d, Fraction(t, s)) for (d, t) in sec.towers)
        eng_torsions = sorted((d, Fraction(t, s), o)
                              for (d, t, o) in sec.torsions)
        if snf_towers != eng_towers or snf_torsions != eng_torsions:
            raise MathError(
                f"sector {sec.key}: SNF cross-check mismatch\n"
                f"  SNF     towers={snf_towers} torsions={snf_torsions}\n"
                f"  engine  towers={eng_towers} torsions={eng_torsions}")


# ---------------------------------------------------------------------------
# Box-truncated homology of the bar (U-forgotten) complex
# ---------------------------------------------------------------------------


def _f2_rank(columns: list[int]) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for v in columns:
        while v:
            b = v.bit_length() - 1
            if b in pivots:
                v ^= pivots[b]
            else:
                pivots[b] = v
                rank += 1
                break
    return rank


def bar_homology_box(g: FramedForest, s=None, box=None) -> dict:
    """F2 homology of the bar (U = 1) complex over a box of translates.

    ``box`` maps each vertex name to an inclusive (lo, hi) interval in
    characteristic units: for a sector representative ``rep`` the kept
    lattice points are the translates ``rep + 2*sum(y_v . v)`` whose
    multipliers satisfy ``lo_v <= rep(v) + 2*y_v <= hi_v``, and a cube is
    kept when it fits in that block of points coordinate by coordinate.
    A solid block is contractible, so a nonempty region must produce
    exactly one dimension in delta-grading 0 — but the dimensions are
    *computed* (F2 ranks of the restricted boundary), not assumed.

    Returns ``{delta: dim}`` (zero dimensions omitted) for the sector of
    ``s``, or a dict keyed by sector representative when ``s`` is None.
    """
    lat = Lattice.of(g)
    if box is None:
        raise ValueError("a coordinate box is required")
    if lat.n == 0:
        return {0: 1} if s is not None else {(): {0: 1}}
    lo = [0] * lat.n
    hi = [0] * lat.n
    for v in g.framed:
        if v not in box:
            raise ValueError(f"box is missing vertex {v!r}")
        a, b = box[v]
        i = g.vertex_index(v)
        lo[i], hi[i] = int(a), int(b)
        if lo[i] > hi[i]:
            raise ValueError(f"empty range for vertex {v!r}")
    reps = [lat.canonical(lat.check_char(s))] if s is not None else \
        list(lat.reps)
    n = lat.n
    out: dict = {}
    for rep in reps:
        p = [math.ceil(Fraction(lo[u] - rep[u], 2)) for u in range(n)]
        q = [math.floor(Fraction(hi[u] - rep[u], 2)) for u in range(n)]
        if any(pu > qu for pu, qu in zip(p, q)):
            out[rep] = {}
            continue
        cells: dict[int, list[tuple[tuple[int, ...], int]]] = \
            defaultdict(list)
        cpos: dict[tuple[tuple[int, ...], int], int] = {}
        for y in itertools.product(*(range(p[j], q[j] + 1)
                                     for j in range(n))):
            free = sum(1 << j for j in range(n) if y[j] + 1 <= q[j])
            mask = free
            while True:
                d = mask.bit_count()
                cpos[(y, mask)] = len(cells[d])
                cells[d].append((y, mask))
                if mask == 0:
                    break
                mask = (mask - 1) & free
        ranks: dict[int, int] = {}
        for d in range(1, n + 1):
            cols = []
            for (y, mask) in cells.get(d, []):
                v = 0
                mm = mask
                while mm:
                    b = (mm & -mm).bit_length() - 1
                    mm &= mm - 1
                    m2 = mask ^ (1 << b)
                    v ^= 1 << cpos[(y, m2)]
                    y2 = tuple(yj + (1 if j == b else 0)
                               for j, yj in enumerate(y))
                    v ^= 1 << cpos[(y2, m2)]
                cols.append(v)
            ranks[d] = _f2_rank(cols)
        dims: dict[int, int] = {}
        for d in range(n + 1):
            dim = (len(cells.get(d, ())) - ranks.get(d, 0)
                   - ranks.get(d + 1, 0))
            if dim < 0:
                raise MathError("negative homology dimension in box complex")
            if dim:
                dims[d] = dim
        out[rep] = dims
    if s is not None:
        return out[reps[0]]
    return out
