"""Exact linear algebra over the mod-2 polynomial ring F2[U].

This module provides the algebraic substrate for the lattice-complex
machinery: polynomials over the field with two elements in a single
variable U, sparse matrices of such polynomials, Smith normal form over
the principal ideal domain F2[U] with a full record of the row/column
operations, homology of finite free chain complexes, mod-2 linear algebra
on bitmask-encoded vectors, and the `GradedModule` value type in which
every homology computation in this package reports its answer.

Conventions
-----------
* A polynomial is a set of exponents: ``{0, 3}`` encodes ``1 + U^3``.
  Addition is symmetric difference.  Laurent exponents (negative) are
  permitted by the container; routines that require honest polynomials
  assert nonnegativity.
* Rational numbers are `fractions.Fraction`, aliased ``Rat``.
* Mod-2 vectors are Python ints used as bitmasks; a linear map is the
  list of images of the basis vectors.
* Maslov gradings follow the convention that multiplication by U lowers
  the grading by 2.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

Rat = Fraction

SpincKey = Optional[tuple]


class MathError(AssertionError):
    """A verified mathematical invariant failed (bug or bad certificate)."""


class StructureError(MathError):
    """Homology does not have the guaranteed tower/torsion shape."""


def rat_str(x: Union[int, Fraction]) -> str:
    """Serialise a rational as ``"p"`` or ``"p/q"`` (canonical, q > 0)."""
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def str_rat(s: str) -> Fraction:
    """Inverse of :func:`rat_str`."""
    return Fraction(s)


# ---------------------------------------------------------------------------
# Polynomials over F2
# ---------------------------------------------------------------------------


class UPoly:
    """A polynomial (or Laurent polynomial) in U with mod-2 coefficients.

    Stored as a frozenset of exponents with coefficient 1.  The zero
    polynomial is the empty set.
    """

    __slots__ = ("exps",)

    def __init__(self, exps: Iterable[int] = ()):
        self.exps = frozenset(exps)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "UPoly":
        return cls()

    @classmethod
    def one(cls) -> "UPoly":
        return cls((0,))

    @classmethod
    def monomial(cls, e: int) -> "UPoly":
        return cls((e,))

    # -- structure ---------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.exps)

    def is_zero(self) -> bool:
        return not self.exps

    def is_one(self) -> bool:
        return self.exps == frozenset((0,))

    def is_monomial(self) -> bool:
        return len(self.exps) == 1

    @property
    def degree(self) -> int:
        """Largest exponent.  Raises on the zero polynomial."""
        if not self.exps:
            raise ValueError("zero polynomial has no degree")
        return max(self.exps)

    @property
    def low(self) -> int:
        """Smallest exponent.  Raises on the zero polynomial."""
        if not self.exps:
            raise ValueError("zero polynomial has no valuation")
        return min(self.exps)

    def monomial_exponent(self) -> int:
        if len(self.exps) != 1:
            raise ValueError(f"not a monomial: {self}")
        return next(iter(self.exps))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "UPoly") -> "UPoly":
        return UPoly(self.exps ^ other.exps)

    def __mul__(self, other: "UPoly") -> "UPoly":
        acc: set[int] = set()
        for a in self.exps:
            for b in other.exps:
                acc ^= {a + b}
        return UPoly(acc)

    def shift(self, e: int) -> "UPoly":
        """Multiply by the monomial U^e."""
        return UPoly(x + e for x in self.exps)

    def __divmod__(self, other: "UPoly") -> tuple["UPoly", "UPoly"]:
        """Long division: self = q * other + r with deg r < deg other.

        Requires ``other`` nonzero with nonnegative exponents, and the
        dividend to be an honest polynomial as well.
        """
        if not other:
            raise ZeroDivisionError("division by the zero polynomial")
        if self.exps and min(self.exps) < 0 or min(other.exps) < 0:
            raise ValueError("Laurent division is not defined here")
        d = other.degree
        rem = set(self.exps)
        quo: set[int] = set()
        while rem and max(rem) >= d:
            s = max(rem) - d
            quo ^= {s}
            for b in other.exps:
                rem ^= {b + s}
        return UPoly(quo), UPoly(rem)

    def __mod__(self, other: "UPoly") -> "UPoly":
        return divmod(self, other)[1]

    def divides(self, other: "UPoly") -> bool:
        return not other or divmod(other, self)[1].is_zero()

    # -- bookkeeping ---------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, UPoly) and self.exps == other.exps

    def __hash__(self) -> int:
        return hash(self.exps)

    def __repr__(self) -> str:
        if not self.exps:
            return "0"
        parts = []
        for e in sorted(self.exps, reverse=True):
            if e == 0:
                parts.append("1")
            elif e == 1:
                parts.append("U")
            else:
                parts.append(f"U^{e}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# Sparse matrices over F2[U]
# ---------------------------------------------------------------------------


class UMatrix:
    """A sparse matrix with `UPoly` entries.

    Maps column vectors of length ``ncols`` to column vectors of length
    ``nrows``; composition is matrix multiplication.
    """

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, nrows: int, ncols: int,
                 entries: Optional[dict[tuple[int, int], UPoly]] = None):
        self.nrows = nrows
        self.ncols = ncols
        self.entries: dict[tuple[int, int], UPoly] = {}
        if entries:
            for (r, c), p in entries.items():
                self.set_(r, c, p)

    @classmethod
    def identity(cls, n: int) -> "UMatrix":
        m = cls(n, n)
        for i in range(n):
            m.entries[(i, i)] = UPoly.one()
        return m

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Iterable[int] | None]]) -> "UMatrix":
        """Build from a dense list of rows; each entry is an exponent
        iterable (e.g. ``{0}`` for 1, ``{2}`` for U^2) or None for zero."""
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        m = cls(nrows, ncols)
        for r, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            for c, e in enumerate(row):
                if e is not None:
                    m.set_(r, c, UPoly(e))
        return m

    def get(self, r: int, c: int) -> UPoly:
        return self.entries.get((r, c), UPoly.zero())

    def set_(self, r: int, c: int, p: UPoly) -> None:
        if not (0 <= r < self.nrows and 0 <= c < self.ncols):
            raise IndexError((r, c))
        if p:
            self.entries[(r, c)] = p
        else:
            self.entries.pop((r, c), None)

    def add_to(self, r: int, c: int, p: UPoly) -> None:
        self.set_(r, c, self.get(r, c) + p)

    def copy(self) -> "UMatrix":
        m = UMatrix(self.nrows, self.ncols)
        m.entries = dict(self.entries)
        return m

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, UMatrix) and self.nrows == other.nrows
                and self.ncols == other.ncols and self.entries == other.entries)

    def __hash__(self):  # pragma: no cover - mutable, not hashable
        raise TypeError("UMatrix is not hashable")

    def __matmul__(self, other: "UMatrix") -> "UMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        out = UMatrix(self.nrows, other.ncols)
        by_row: dict[int, list[tuple[int, UPoly]]] = {}
        for (r, c), p in other.entries.items():
            by_row.setdefault(r, []).append((c, p))
        for (r, k), p in self.entries.items():
            for c, q in by_row.get(k, ()):
                out.add_to(r, c, p * q)
        return out

    def __add__(self, other: "UMatrix") -> "UMatrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch")
        out = self.copy()
        for (r, c), p in other.entries.items():
            out.add_to(r, c, p)
        return out

    def transpose(self) -> "UMatrix":
        out = UMatrix(self.ncols, self.nrows)
        out.entries = {(c, r): p for (r, c), p in self.entries.items()}
        return out

    def column(self, c: int) -> dict[int, UPoly]:
        return {r: p for (r, cc), p in self.entries.items() if cc == c}

    def __repr__(self) -> str:
        rows = []
        for r in range(self.nrows):
            rows.append("[" + ", ".join(repr(self.get(r, c))
                                        for c in range(self.ncols)) + "]")
        return "UMatrix(\n " + "\n ".join(rows) + "\n)"

    # -- elementary operations (in place) -----------------------------------

    def row_swap(self, i: int, j: int) -> None:
        if i == j:
            return
        for c in range(self.ncols):
            a, b = self.get(i, c), self.get(j, c)
            self.set_(i, c, b)
            self.set_(j, c, a)

    def row_add(self, i: int, j: int, p: UPoly) -> None:
        """row_i += p * row_j (i != j)."""
        if i == j:
            raise ValueError("row_add onto itself")
        for (r, c), q in list(self.entries.items()):
            if r == j:
                self.add_to(i, c, p * q)

    def col_swap(self, i: int, j: int) -> None:
        if i == j:
            return
        for r in range(self.nrows):
            a, b = self.get(r, i), self.get(r, j)
            self.set_(r, i, b)
            self.set_(r, j, a)

    def col_add(self, i: int, j: int, p: UPoly) -> None:
        """col_i += p * col_j (i != j)."""
        if i == j:
            raise ValueError("col_add onto itself")
        for (r, c), q in list(self.entries.items()):
            if c == j:
                self.add_to(r, i, p * q)

    def apply_op(self, op: tuple, *, rows: bool) -> None:
        kind = op[0]
        if kind == "swap":
            (self.row_swap if rows else self.col_swap)(op[1], op[2])
        elif kind == "add":
            (self.row_add if rows else self.col_add)(op[1], op[2], op[3])
        else:  # pragma: no cover - defensive
            raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Smith normal form over F2[U]
# ---------------------------------------------------------------------------


@dataclass
class SmithForm:
    """Result of :func:`smith_normal_form`.

    ``d = (row ops, in order) @ m @ (col ops, in order)`` with every
    operation elementary and self-inverse over F2.  ``rinv`` and ``cmat``
    are the accumulated transforms with ``m = rinv @ d @ cmat^{-1}``; in
    particular ``ker m = cmat . ker d`` and column ``p`` of ``rinv`` is the
    target-side basis vector sitting over diagonal position ``p``.
    """

    d: UMatrix
    row_ops: list[tuple]
    col_ops: list[tuple]
    rinv: UMatrix
    cmat: UMatrix

    @property
    def diagonal(self) -> list[UPoly]:
        n = min(self.d.nrows, self.d.ncols)
        return [self.d.get(i, i) for i in range(n)]

    @property
    def rank(self) -> int:
        return sum(1 for p in self.diagonal if p)

    def reconstruct(self) -> UMatrix:
        """Replay the recorded operations to recover the input matrix."""
        m = self.d.copy()
        for op in reversed(self.row_ops):
            m.apply_op(op, rows=True)
        for op in reversed(self.col_ops):
            m.apply_op(op, rows=False)
        return m


def _min_degree_entry(m: UMatrix, t: int):
    """Minimal-degree nonzero entry with r,c >= t, ties by (r, c)."""
    best = None
    for (r, c), p in m.entries.items():
        if r < t or c < t:
            continue
        key = (p.degree, r, c)
        if best is None or key < best:
            best = key
    return best  # (deg, r, c) or None


def smith_normal_form(m: UMatrix) -> SmithForm:
    """Smith normal form over the Euclidean domain F2[U].

    Deterministic: the pivot is always the entry of minimal degree in the
    remaining submatrix, ties broken by smallest (row, column).  The
    returned diagonal satisfies d_i | d_{i+1}; the only unit of F2[U] is 1
    so no normalisation step is needed.
    """
    d = m.copy()
    row_ops: list[tuple] = []
    col_ops: list[tuple] = []
    rinv = UMatrix.identity(m.nrows)
    cmat = UMatrix.identity(m.ncols)

    def do_row(op: tuple) -> None:
        d.apply_op(op, rows=True)
        row_ops.append(op)
        # rinv tracks the inverse transform: right-multiply by the op.
        if op[0] == "swap":
            rinv.col_swap(op[1], op[2])
        else:
            _, i, j, p = op
            rinv.col_add(j, i, p)

    def do_col(op: tuple) -> None:
        d.apply_op(op, rows=False)
        col_ops.append(op)
        if op[0] == "swap":
            cmat.col_swap(op[1], op[2])
        else:
            _, i, j, p = op
            cmat.col_add(i, j, p)

    t = 0
    limit = min(m.nrows, m.ncols)
    while t < limit:
        found = _min_degree_entry(d, t)
        if found is None:
            break
        _, r, c = found
        if r != t:
            do_row(("swap", t, r))
        if c != t:
            do_col(("swap", t, c))

        while True:
            pivot = d.get(t, t)
            # Reduce the pivot column, then the pivot row.
            for r in range(d.nrows):
                if r == t:
                    continue
                e = d.get(r, t)
                if e:
                    q, _rem = divmod(e, pivot)
                    if q:
                        do_row(("add", r, t, q))
            for c in range(d.ncols):
                if c == t:
                    continue
                e = d.get(t, c)
                if e:
                    q, _rem = divmod(e, pivot)
                    if q:
                        do_col(("add", c, t, q))
            # If any remainder survives it has smaller degree than the
            # pivot: swap it in and repeat.
            leftovers = [(p.degree, r, c)
                         for (r, c), p in d.entries.items()
                         if (r == t) != (c == t) and (r >= t and c >= t)]
            if leftovers:
                _, r, c = min(leftovers)
                if r != t:
                    do_row(("swap", t, r))
                if c != t:
                    do_col(("swap", t, c))
                continue
            # Pivot cross is clear.  Enforce divisibility of the rest.
            pivot = d.get(t, t)
            bad = None
            for (r, c), p in sorted(d.entries.items()):
                if r > t and c > t and not pivot.divides(p):
                    bad = (r, c)
                    break
            if bad is None:
                break
            do_row(("add", t, bad[0], UPoly.one()))
        t += 1

    return SmithForm(d, row_ops, col_ops, rinv, cmat)


def kernel_basis(m: UMatrix) -> list[dict[int, UPoly]]:
    """A basis (as sparse column dicts) of ker(m) over F2[U]."""
    sf = smith_normal_form(m)
    out = []
    for p in range(m.ncols):
        diag = sf.d.get(p, p) if p < m.nrows else UPoly.zero()
        if not diag:
            out.append(sf.cmat.column(p))
    return out


# ---------------------------------------------------------------------------
# Homology of finite free F2[U] chain complexes (Smith route)
# ---------------------------------------------------------------------------


@dataclass
class HomologySummary:
    """Homology of one chain group: free tops and torsion (order, top).

    ``free`` lists the Maslov gradings of the free-summand generators and
    ``torsion`` lists ``(order, grading)`` for summands F2[U]/(U^order);
    gradings are None when the complex was not supplied with gradings.
    """

    free: list[Optional[Rat]]
    torsion: list[tuple[int, Optional[Rat]]]


def _vector_grading(col: dict[int, UPoly],
                    basis_gradings: Sequence[Rat]) -> Rat:
    """Grading of a homogeneous vector; asserts homogeneity."""
    grades = set()
    for r, p in col.items():
        for e in p.exps:
            grades.add(basis_gradings[r] - 2 * e)
    if len(grades) != 1:
        raise ValueError(f"vector is not homogeneous: gradings {sorted(grades)}")
    return grades.pop()


def _combine_columns(basis: list[dict[int, UPoly]],
                     coeffs: dict[int, UPoly]) -> dict[int, UPoly]:
    acc: dict[int, UPoly] = {}
    for j, p in coeffs.items():
        for r, q in basis[j].items():
            s = acc.get(r, UPoly.zero()) + p * q
            if s:
                acc[r] = s
            else:
                acc.pop(r, None)
    return acc


def simplify_complex(
    boundaries: Sequence[UMatrix],
    gradings: Optional[Sequence[Sequence[Rat]]] = None,
) -> tuple[list[UMatrix], Optional[list[list[Rat]]]]:
    """Shrink a chain complex by cancelling unit (U^0) matrix entries.

    A unit entry d_k[y, x] = 1 lets the generator pair (x, y) be removed
    after rerouting every broken composite through the pair:
    d'[r, c] = d[r, c] + d[r, x] * d[y, c].  This is the standard
    Gaussian/Morse cancellation and preserves the graded homotopy type,
    so the homology (with gradings) is unchanged while the matrices
    handed to Smith reduction become dramatically smaller.

    Returns new ``(boundaries, gradings)`` of the same shape contract as
    :func:`module_from_complex`.  Verifies d. d = 0 sparsely first, since
    cancellation assumes a complex.
    """
    if not boundaries:
        raise ValueError("need at least one boundary map")
    dims = [boundaries[0].nrows] + [b.ncols for b in boundaries]
    for k, b in enumerate(boundaries):
        if b.nrows != dims[k]:
            raise ValueError(f"boundary {k} has {b.nrows} rows, expected {dims[k]}")
    if gradings is not None and [len(g) for g in gradings] != dims:
        raise ValueError("gradings shape does not match chain groups")
    nmats = len(boundaries)
    cols: list[dict[int, dict[int, UPoly]]] = []
    rows: list[dict[int, dict[int, UPoly]]] = []
    for b in boundaries:
        ck: dict[int, dict[int, UPoly]] = defaultdict(dict)
        rk: dict[int, dict[int, UPoly]] = defaultdict(dict)
        for (r, c), p in b.entries.items():
            if p:
                ck[c][r] = p
                rk[r][c] = p
        cols.append(dict(ck))
        rows.append(dict(rk))
    # Sparse d.d = 0 check (the dense matrix product is itself cubic).
    for k in range(nmats - 1):
        for c, col in cols[k + 1].items():
            acc: dict[int, UPoly] = {}
            for mid, p in col.items():
                for r2, q in cols[k].get(mid, {}).items():
                    s = acc.get(r2, UPoly.zero()) + p * q
                    if s:
                        acc[r2] = s
                    else:
                        acc.pop(r2, None)
            if acc:
                raise ValueError(f"d_{k+1} o d_{k+2} != 0: not a chain complex")
    alive: list[set[int]] = [set(range(n)) for n in dims]
    heap: list[tuple[int, int, int, int]] = []
    for k in range(nmats):
        for c, col in cols[k].items():
            for r, p in col.items():
                if p.is_one():
                    fill = (len(col) - 1) * (len(rows[k][r]) - 1)
                    heap.append((fill, k, r, c))
    heapq.heapify(heap)
    while heap:
        fill, k, y, x = heapq.heappop(heap)
        colx = cols[k].get(x)
        if colx is None or y not in colx or not colx[y].is_one():
            continue
        rowy = rows[k][y]
        cur = (len(colx) - 1) * (len(rowy) - 1)
        if cur > fill:
            heapq.heappush(heap, (cur, k, y, x))
            continue
        del colx[y]
        del rowy[x]
        # Reroute through the cancelled pair within level k.
        for c, pc in rowy.items():
            colc = cols[k][c]
            for r, qr in colx.items():
                s = colc.get(r, UPoly.zero()) + qr * pc
                if s:
                    colc[r] = s
                    rows[k][r][c] = s
                    if s.is_one():
                        heapq.heappush(
                            heap,
                            ((len(colc) - 1) * (len(rows[k][r]) - 1), k, r, c))
                else:
                    colc.pop(r, None)
                    rows[k][r].pop(c, None)
        for c in rowy:
            cols[k][c].pop(y, None)
        for r in colx:
            rows[k][r].pop(x, None)
        del cols[k][x]
        del rows[k][y]
        # x disappears from group k+1: drop entries of d_{k+1} into it.
        if k + 1 < nmats:
            for c2 in rows[k + 1].pop(x, {}):
                cols[k + 1][c2].pop(x, None)
        # y disappears from group k: drop its outgoing d_{k-1} column.
        if k >= 1:
            for r2 in cols[k - 1].pop(y, {}):
                rows[k - 1][r2].pop(y, None)
        alive[k + 1].discard(x)
        alive[k].discard(y)
    index = [sorted(a) for a in alive]
    lookup = [{g: i for i, g in enumerate(ix)} for ix in index]
    out_b: list[UMatrix] = []
    for k in range(nmats):
        m = UMatrix(len(index[k]), len(index[k + 1]))
        for c, col in cols[k].items():
            for r, p in col.items():
                m.set_(lookup[k][r], lookup[k + 1][c], p)
        out_b.append(m)
    out_g = None
    if gradings is not None:
        out_g = [[gradings[k][g] for g in index[k]] for k in range(len(dims))]
    return out_b, out_g


def module_from_complex(
    boundaries: Sequence[UMatrix],
    gradings: Optional[Sequence[Sequence[Rat]]] = None,
    presimplify: bool = True,
) -> list[HomologySummary]:
    """Homology of a finite free chain complex over F2[U].

    ``boundaries[k]`` is the map C_{k+1} -> C_k; the complex is
    C_0 <- C_1 <- ... <- C_L.  Returns one :class:`HomologySummary` per
    chain group.  Torsion summands must be powers of U — any other
    invariant factor raises ``ValueError`` naming the offending factor
    (this can only happen for non-homogeneous input).

    When ``gradings`` is supplied (``gradings[k][i]`` = Maslov grading of
    the i-th basis vector of C_k, with U of degree -2), each free and
    torsion summand is reported with the grading of its generator and all
    transforms are checked to be grading-homogeneous.

    ``presimplify`` routes through :func:`simplify_complex` first; the
    result is identical, but Smith reduction then runs on the cancelled
    residue instead of the full complex.
    """
    if not boundaries:
        raise ValueError("need at least one boundary map")
    if presimplify:
        boundaries, gradings = simplify_complex(boundaries, gradings)
    dims = [boundaries[0].nrows] + [b.ncols for b in boundaries]
    for k, b in enumerate(boundaries):
        if b.nrows != dims[k]:
            raise ValueError(f"boundary {k} has {b.nrows} rows, expected {dims[k]}")
    if not presimplify:
        for k in range(len(boundaries) - 1):
            if not (boundaries[k] @ boundaries[k + 1]).is_zero():
                raise ValueError(f"d_{k+1} o d_{k+2} != 0: not a chain complex")
    if gradings is not None and [len(g) for g in gradings] != dims:
        raise ValueError("gradings shape does not match chain groups")

    out: list[HomologySummary] = []
    for k in range(len(dims)):
        nk = dims[k]
        d_out = boundaries[k - 1] if k >= 1 else UMatrix(1 if False else 0, nk)
        d_in = boundaries[k] if k < len(boundaries) else UMatrix(nk, 0)

        if k >= 1:
            zcols = kernel_basis(d_out)
        else:
            zcols = [{i: UPoly.one()} for i in range(nk)]
        z = len(zcols)
        zmat = UMatrix(nk, z)
        for j, col in enumerate(zcols):
            for r, p in col.items():
                zmat.set_(r, j, p)

        # Express the incoming boundaries in the kernel basis.  The kernel
        # is a saturated free summand, so its Smith form is an identity
        # block and the division below is exact.
        sfz = smith_normal_form(zmat)
        for i in range(z):
            if not sfz.d.get(i, i).is_one():
                raise AssertionError("kernel basis is not saturated")
        rhs = d_in.copy()
        for op in sfz.row_ops:
            rhs.apply_op(op, rows=True)
        x = UMatrix(z, d_in.ncols)
        for (r, c), p in rhs.entries.items():
            if r >= z:
                raise AssertionError("boundary leaves the kernel: not a complex")
            x.set_(r, c, p)
        # Undo the column mixing of the kernel matrix: zmat @ (cmat x') = rhs'
        # with zmat = rinv d cmat^{-1}; solving gives x in the *original*
        # kernel-basis coordinates via cmat.
        xk = sfz.cmat @ x

        sfx = smith_normal_form(xk)
        free: list[Optional[Rat]] = []
        torsion: list[tuple[int, Optional[Rat]]] = []

        def gen_grading(p: int) -> Optional[Rat]:
            if gradings is None:
                return None
            col = sfx.rinv.column(p)
            vec = _combine_columns(zcols, col)
            return _vector_grading(vec, gradings[k])

        for p in range(z):
            diag = sfx.d.get(p, p) if p < min(z, xk.ncols) else UPoly.zero()
            if not diag:
                free.append(gen_grading(p))
            elif diag.is_one():
                continue
            elif diag.is_monomial():
                torsion.append((diag.monomial_exponent(), gen_grading(p)))
            else:
                raise ValueError(
                    f"torsion is not a power of U: invariant factor {diag!r}")
        out.append(HomologySummary(free=free, torsion=torsion))
    return out


# ---------------------------------------------------------------------------
# Mod-2 linear algebra on bitmask vectors
# ---------------------------------------------------------------------------


class F2Map:
    """A linear map F2^a -> F2^b; ``images[i]`` is the image of e_i as a
    bitmask over the target basis."""

    __slots__ = ("dim_from", "dim_to", "images")

    def __init__(self, dim_from: int, dim_to: int,
                 images: Optional[Sequence[int]] = None):
        self.dim_from = dim_from
        self.dim_to = dim_to
        self.images = list(images) if images is not None else [0] * dim_from
        if len(self.images) != dim_from:
            raise ValueError("wrong number of images")

    @classmethod
    def identity(cls, n: int) -> "F2Map":
        return cls(n, n, [1 << i for i in range(n)])

    def __call__(self, v: int) -> int:
        out = 0
        x = v
        while x:
            i = (x & -x).bit_length() - 1
            out ^= self.images[i]
            x &= x - 1
        return out

    def compose(self, other: "F2Map") -> "F2Map":
        """self o other."""
        if other.dim_to != self.dim_from:
            raise ValueError("shape mismatch")
        return F2Map(other.dim_from, self.dim_to,
                     [self(v) for v in other.images])

    def rank(self) -> int:
        pivots: dict[int, int] = {}
        for v in self.images:
            v = _reduce_by(v, pivots)
            if v:
                pivots[v.bit_length() - 1] = v
        return len(pivots)


def _reduce_by(v: int, pivots: dict[int, int]) -> int:
    while v:
        b = v.bit_length() - 1
        row = pivots.get(b)
        if row is None:
            return v
        v ^= row
    return 0


class QuotientSpace:
    """The quotient (cycles)/(boundaries) of subspaces of F2^n.

    Built from a spanning set of boundary vectors and a spanning set of
    cycle vectors; exposes the dimension, homogeneous representative
    vectors for a basis, and reduction of arbitrary cycles to coordinates
    in that basis.
    """

    def __init__(self, boundary_vectors: Iterable[int],
                 cycle_vectors: Iterable[int]):
        self._bpiv: dict[int, int] = {}
        for v in boundary_vectors:
            v = _reduce_by(v, self._bpiv)
            if v:
                self._bpiv[v.bit_length() - 1] = v
        self._hpiv: dict[int, tuple[int, int]] = {}  # bit -> (vector, index)
        self.basis: list[int] = []
        for v in cycle_vectors:
            r = self.reduce_vector(v)[0]
            if r:
                self._hpiv[r.bit_length() - 1] = (r, len(self.basis))
                self.basis.append(r)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def reduce_vector(self, v: int) -> tuple[int, int]:
        """Reduce v modulo boundaries and earlier basis vectors.

        Returns ``(remainder, coords)``: if remainder is 0 the class of v
        is ``coords`` (bitmask over ``self.basis``); a nonzero remainder
        means v is not in the span (new homology class).
        """
        coords = 0
        while v:
            b = v.bit_length() - 1
            if b in self._bpiv:
                v ^= self._bpiv[b]
            elif b in self._hpiv:
                row, idx = self._hpiv[b]
                v ^= row
                coords ^= 1 << idx
            else:
                return v, coords
        return 0, coords

    def coords(self, v: int) -> int:
        rem, coords = self.reduce_vector(v)
        if rem:
            raise ValueError("vector does not lie in the homology span")
        return coords


def graded_piece_homology(d_in: F2Map, d_out: F2Map) -> QuotientSpace:
    """Homology ker(d_out)/im(d_in) of one graded piece over F2.

    ``d_in``: the differential arriving into this piece; ``d_out``: the
    differential leaving it.  Representatives are asserted to be cycles.
    """
    if d_in.dim_to != d_out.dim_from:
        raise ValueError("graded piece dimensions disagree")
    n = d_out.dim_from
    # Kernel of d_out by elimination with combination tracking.
    pivots: dict[int, tuple[int, int]] = {}  # bit -> (image, combo)
    kernel: list[int] = []
    for i in range(n):
        img = d_out.images[i]
        combo = 1 << i
        while img:
            b = img.bit_length() - 1
            if b in pivots:
                pi, pc = pivots[b]
                img ^= pi
                combo ^= pc
            else:
                pivots[b] = (img, combo)
                combo = 0
                break
        if combo:
            kernel.append(combo)
    q = QuotientSpace(d_in.images, kernel)
    for v in q.basis:
        if d_out(v) != 0:
            raise AssertionError("homology representative is not a cycle")
    return q


# ---------------------------------------------------------------------------
# Barcode extraction for towers of F2 spaces linked by U
# ---------------------------------------------------------------------------


def barcode_intervals(
    dims: dict[int, int],
    rank_fn: Callable[[int, int], int],
    top: int,
    bottom: int,
    step: int = 2,
) -> tuple[list[int], list[tuple[int, int]]]:
    """Interval decomposition of a persistence chain of F2 spaces.

    ``dims[q]`` is the dimension at grading q (missing = 0) for q in
    ``range(top, bottom - 1, -step)``; ``rank_fn(t, b)`` is the rank of
    the composite structure map from grading t down to grading b
    (``rank_fn(t, t) = dims[t]``).  Returns ``(alive, finite)`` where
    ``alive`` lists the top gradings of intervals still alive at
    ``bottom``, and ``finite`` lists ``(b, t)`` intervals contained in
    the open part of the window (b > bottom).
    """

    def r(t: int, b: int) -> int:
        if t > top:
            return 0
        if b > t:
            raise ValueError("bad rank query")
        return rank_fn(t, b)

    alive: list[int] = []
    finite: list[tuple[int, int]] = []
    for t in range(top, bottom - 1, -step):
        a = r(t, bottom) - r(t + step, bottom)
        alive.extend([t] * a)
        for b in range(t, bottom, -step):
            cnt = (r(t, b) - r(t + step, b)
                   - (r(t, b - step) - r(t + step, b - step)))
            if cnt < 0:
                raise AssertionError("negative interval count")
            finite.extend([(b, t)] * cnt)
    # Consistency: every dimension is accounted for.
    for q in range(top, bottom - 1, -step):
        total = sum(1 for t in alive if t >= q)
        total += sum(1 for (b, t) in finite if b <= q <= t)
        if total != dims.get(q, 0):
            raise AssertionError(
                f"barcode does not account for dim at grading {q}")
    return alive, finite


# ---------------------------------------------------------------------------
# Graded modules over F2[U]
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Tower:
    """A free summand F2[U], generated in Maslov grading ``maslov``."""

    spinc: SpincKey
    delta: Optional[int]
    maslov: Rat


@dataclass(frozen=True, order=True)
class Torsion:
    """A summand F2[U]/(U^order), generator in grading ``maslov``."""

    spinc: SpincKey
    delta: Optional[int]
    maslov: Rat
    order: int


@dataclass(frozen=True)
class GradedModule:
    """A finitely generated graded module over F2[U].

    The structure-theorem shape of every homology this package computes:
    a direct sum of free towers and U-power torsion summands, each tagged
    with Maslov grading, delta grading, and spin-c sector.
    """

    towers: tuple[Tower, ...]
    torsions: tuple[Torsion, ...]

    @classmethod
    def build(cls, towers: Iterable[tuple], torsions: Iterable[tuple]
              ) -> "GradedModule":
        """towers: (spinc, delta, maslov); torsions: (spinc, delta, maslov,
        order)."""
        tw = tuple(sorted(Tower(s, d, Rat(m)) for (s, d, m) in towers))
        to = tuple(sorted(Torsion(s, d, Rat(m), o)
                          for (s, d, m, o) in torsions))
        return cls(tw, to)

    def restrict(self, spinc: SpincKey) -> "GradedModule":
        return GradedModule(
            tuple(t for t in self.towers if t.spinc == spinc),
            tuple(t for t in self.torsions if t.spinc == spinc))

    @property
    def spincs(self) -> list:
        seen = []
        for t in list(self.towers) + list(self.torsions):
            if t.spinc not in seen:
                seen.append(t.spinc)
        return sorted(seen, key=lambda s: (s is None, s))

    def reduced(self) -> "GradedModule":
        """The U-torsion part (the reduced flavour)."""
        return GradedModule((), self.torsions)

    def inf_rank(self) -> int:
        """Rank over F2[U, U^{-1}] after inverting U."""
        return len(self.towers)

    def d_invariant(self, spinc: SpincKey = None) -> Rat:
        cands = [t.maslov for t in self.towers
                 if t.spinc == spinc and (t.delta in (0, None))]
        if len(cands) != 1:
            raise ValueError(
                f"expected one tower in spin-c sector {spinc}, got {cands}")
        return cands[0]

    def total_torsion_rank(self) -> int:
        return sum(t.order for t in self.torsions)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, GradedModule)
                and sorted(self.towers) == sorted(other.towers)
                and sorted(self.torsions) == sorted(other.torsions))

    def merge(self, other: "GradedModule") -> "GradedModule":
        return GradedModule(
            tuple(sorted(self.towers + other.towers)),
            tuple(sorted(self.torsions + other.torsions)))

    def to_json(self) -> dict:
        return {
            "towers": [
                {"spinc": list(t.spinc) if t.spinc is not None else None,
                 "delta": t.delta,
                 "maslov": rat_str(t.maslov)}
                for t in self.towers],
            "torsions": [
                {"spinc": t.spinc if t.spinc is None else list(t.spinc),
                 "delta": t.delta,
                 "maslov": rat_str(t.maslov),
                 "order": t.order}
                for t in self.torsions],
        }

    def describe(self) -> str:
        lines = []
        for s in self.spincs:
            part = self.restrict(s)
            lines.append(f"spin-c {s}:")
            for t in part.towers:
                lines.append(f"  tower  maslov={t.maslov} delta={t.delta}")
            for t in part.torsions:
                lines.append(
                    f"  U^{t.order}-torsion  maslov={t.maslov} delta={t.delta}")
        return "\n".join(lines) if lines else "(zero module)"
