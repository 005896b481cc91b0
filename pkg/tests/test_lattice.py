"""Unit tests for the lattice complex: weights, boundaries, homology.

Every numeric identity is checked against an independent oracle computed
here from the intersection form (quadratic-form arithmetic, brute-force
subset minima, box enumerations), never against the engine's own tables.
"""

import itertools
import math
import random
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lathom.lattice
from lathom.algebra import GradedModule, MathError
from lathom.lattice import (
    FiniteComplex,
    HomologyResult,
    WindowTooShallow,
    ab_exponents,
    bar_boundary,
    bar_homology_box,
    boundary,
    cell_spinc,
    complex_homology,
    enumerate_support,
    finite_complex,
    hat_boundary,
    homology,
    j_involution,
    k_square,
    maslov_gr,
    min_weight_g,
    snf_crosscheck,
    tensor_complex,
    weight_f,
)
from lathom.plumbing import (
    FramedForest,
    SpincStructures,
    bareiss_det,
    chain_of_blowdowns,
    fraction_inverse,
    linear_chain,
    random_negdef_tree,
    single_vertex,
    torus_knot_sum_family,
    trefoil_marked,
)

V1 = single_vertex(-1)
RP3 = single_vertex(-2)
CHAIN23 = linear_chain((-2, -3))
TREF_BG = trefoil_marked().background()
TREF7 = trefoil_marked().with_framing(-7)
EMPTY = FramedForest((), {}, (), None)


# ---------------------------------------------------------------------------
# Independent oracles from the intersection form
# ---------------------------------------------------------------------------


def _indices(g):
    return {v: i for i, v in enumerate(g.vertices)}


def quad_form(mat, x):
    n = len(x)
    return sum(x[i] * mat[i][j] * x[j] for i in range(n) for j in range(n))


def f_oracle(g, k, verts):
    """(k(I) + I.I) / 2 straight from the intersection matrix."""
    mat = g.intersection_matrix()
    idx = _indices(g)
    x = [0] * len(k)
    for v in verts:
        x[idx[v]] = 1
    total = sum(k[idx[v]] for v in verts) + quad_form(mat, x)
    assert total % 2 == 0
    return total // 2


def g_oracle(g, k, verts):
    verts = tuple(verts)
    return min(f_oracle(g, k, sub)
               for r in range(len(verts) + 1)
               for sub in itertools.combinations(verts, r))


def twist_oracle(g, k, v):
    mat = g.intersection_matrix()
    i = _indices(g)[v]
    return tuple(kk + 2 * mat[i][j] for j, kk in enumerate(k))


def ksq_oracle(g, k):
    return quad_form(fraction_inverse(g.intersection_matrix()), k)


def gr_oracle(g, j, cell):
    k, verts = cell
    n = len(g.vertices)
    return (Fraction(ksq_oracle(g, k) + n, 4)
            + 2 * g_oracle(g, k, verts) + len(tuple(verts)) - 2 * j)


def random_char(rng, g, width=4):
    return tuple(g.framings[v] + 2 * rng.randrange(-width, width + 1)
                 for v in g.vertices)


def random_cell(rng, g, width=4):
    k = random_char(rng, g, width)
    verts = tuple(v for v in g.vertices if rng.random() < 0.6)
    return k, verts


def module_shape(mod: GradedModule):
    return (sorted((t.spinc, t.delta, t.maslov) for t in mod.towers),
            sorted((t.spinc, t.delta, t.maslov, t.order)
                   for t in mod.torsions))


def result_snapshot(res: HomologyResult):
    return (module_shape(res.module),
            {k: dict(v) for k, v in res.hat.items()},
            dict(res.inf))


def d_oracle_lspace(g):
    """Per-sector max of (K^2 + n)/4 over the characteristic coset.

    Independent of the cell machinery: pure lattice maximisation over a
    box certified by a Gershgorin bound.  Any k beating a value m has
    -k.A^{-1}.k <= n - 4m, and since -A^{-1} has smallest eigenvalue at
    least 1/max_i(sum_j |A_ij|), such k lives in an explicit sup-norm
    ball; a box covering that ball proves the scan found every maximum.
    """
    mat = g.intersection_matrix()
    n = len(g.vertices)
    base = tuple(g.framings[v] for v in g.vertices)

    def scan(radius):
        best: dict[tuple, Fraction] = {}
        for z in itertools.product(range(-radius, radius + 1), repeat=n):
            k = tuple(base[i] + 2 * z[i] for i in range(n))
            val = Fraction(ksq_oracle(g, k) + n, 4)
            rep = cell_spinc(g, k)
            if val > best.get(rep, -Fraction(10 ** 9)):
                best[rep] = val
        return best

    best = scan(4)
    maxrow = max(sum(abs(x) for x in row) for row in mat)
    slack = n - 4 * min(best.values())
    kbound = math.isqrt(math.ceil(slack * maxrow)) + 1
    need = max((kbound + abs(b) + 1) // 2 for b in base)
    if need > 4:
        best = scan(need)
    return best


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


class TestWeights:
    def test_empty_subset_weighs_nothing(self):
        assert weight_f(V1, (3,), ()) == 0
        assert weight_f(TREF_BG, (-1, 0, 1), ()) == 0

    def test_worked_examples(self):
        assert weight_f(V1, (3,), ("v1",)) == 1
        assert weight_f(TREF_BG, (-1, 0, 1), ("v2", "v3")) == -2
        assert weight_f(TREF_BG, (-1, 0, 1), ("v1", "v2", "v3")) == -1

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(0, 255))
    def test_matches_quadratic_form(self, seed, submask):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k = random_char(rng, g)
        verts = tuple(v for i, v in enumerate(g.vertices)
                      if submask >> i & 1)
        assert weight_f(g, k, verts) == f_oracle(g, k, verts)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_reflection_identity(self, seed):
        # f[k, I] - f[-k - 2 sum_{u in E} u*, E - I] = f[k, E]
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k = random_char(rng, g)
        E = tuple(v for v in g.vertices if rng.random() < 0.7)
        kt = k
        for v in E:
            kt = twist_oracle(g, kt, v)
        neg = tuple(-c for c in kt)
        for r in range(len(E) + 1):
            for I in itertools.combinations(E, r):
                comp = tuple(v for v in E if v not in I)
                assert weight_f(g, k, I) - weight_f(g, neg, comp) \
                    == weight_f(g, k, E)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_square_difference_form(self, seed):
        # f[k, I] = ((k + 2 sum_{v in I} v*)^2 - k^2) / 8
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k, I = random_cell(rng, g)
        shifted = k
        for v in I:
            shifted = twist_oracle(g, shifted, v)
        assert weight_f(g, k, I) \
            == (k_square(g, shifted) - k_square(g, k)) / 8

    def test_rejects_non_characteristic(self):
        with pytest.raises(ValueError):
            weight_f(V1, (2,), ())
        with pytest.raises(ValueError):
            weight_f(V1, (1, 1), ())


class TestMinWeight:
    def test_empty_vertex_set(self):
        assert min_weight_g(V1, ((5,), ())) == 0
        assert min_weight_g(CHAIN23, ((-2, -3), ())) == 0

    def test_worked_examples(self):
        assert min_weight_g(V1, ((-1,), ("v1",))) == -1
        assert min_weight_g(TREF_BG, ((-1, 0, 1), ("v1", "v2", "v3"))) == -2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_matches_brute_minimum(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k, verts = random_cell(rng, g)
        assert min_weight_g(g, (k, verts)) == g_oracle(g, k, verts)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_monotone_under_inclusion(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k, verts = random_cell(rng, g)
        for v in verts:
            smaller = tuple(u for u in verts if u != v)
            assert min_weight_g(g, (k, smaller)) \
                >= min_weight_g(g, (k, verts))


# ---------------------------------------------------------------------------
# Boundary operator and U-exponents
# ---------------------------------------------------------------------------


class TestExponents:
    def test_single_vertex_closed_form(self):
        # on the (-1)-vertex, K = 2n+1 gives (a, b) = (max(0,-n), max(0,n))
        for n in range(-4, 5):
            cell = ((2 * n + 1,), ("v1",))
            assert ab_exponents(V1, cell, "v1") == (max(0, -n), max(0, n))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_matches_weight_differences(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k, verts = random_cell(rng, g)
        mat = g.intersection_matrix()
        idx = _indices(g)
        for v in verts:
            rest = tuple(u for u in verts if u != v)
            a, b = ab_exponents(g, (k, verts), v)
            gv = g_oracle(g, k, verts)
            assert a == g_oracle(g, k, rest) - gv
            i = idx[v]
            assert b == g_oracle(g, twist_oracle(g, k, v), rest) - gv \
                + (k[i] + mat[i][i]) // 2
            assert a >= 0 and b >= 0


class TestBoundary:
    def test_empty_cell_has_no_boundary(self):
        assert boundary(V1, ((1,), ())) == []
        assert boundary(TREF_BG, ((-1, 0, 1), ())) == []

    def test_four_term_chain_collapses(self):
        # the boundary of this 4-chain cancels down to two terms
        x = [((1, 0, 1), ("v1",)),
             ((-1, 2, 3), ("v3",)),
             ((1, 2, -3), ("v1",)),
             ((-1, 4, -1), ("v2",))]
        acc: dict = defaultdict(int)
        for cell in x:
            for e, (k2, verts2) in boundary(TREF_BG, cell):
                acc[(e, k2, verts2)] ^= 1
        surviving = sorted(key for key, c in acc.items() if c)
        assert surviving == [(0, (1, 0, 1), frozenset()),
                             (1, (1, 0, -1), frozenset())]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_squares_to_zero(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=2, n_max=4)
        cell = random_cell(rng, g)
        acc: dict = defaultdict(int)
        for e1, c1 in boundary(g, cell):
            for e2, c2 in boundary(g, c1):
                acc[(e1 + e2, c2[0], c2[1])] ^= 1
        assert not any(acc.values())

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_terms_drop_maslov_by_one(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        cell = random_cell(rng, g)
        top = maslov_gr(g, 0, cell)
        for e, c2 in boundary(g, cell):
            assert maslov_gr(g, e, c2) == top - 1
            assert len(c2[1]) == len(tuple(cell[1])) - 1

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_hat_and_bar_projections(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        cell = random_cell(rng, g)
        full = boundary(g, cell)
        assert hat_boundary(g, cell) == [t for t in full if t[0] == 0]
        # bar: strip exponents from the raw expansion, then cancel mod 2
        k, verts = cell
        acc: dict = defaultdict(int)
        for v in verts:
            rest = frozenset(u for u in verts if u != v)
            acc[(k, rest)] ^= 1
            acc[(twist_oracle(g, k, v), rest)] ^= 1
        key_fn = lambda t: (t[0], sorted(t[1]))  # noqa: E731
        expected = sorted(((key[0], key[1]) for key, c in acc.items() if c),
                          key=key_fn)
        got = sorted(bar_boundary(g, cell), key=key_fn)
        assert got == expected


class TestGradings:
    def test_empty_cell_grading(self):
        assert maslov_gr(V1, 0, ((1,), ())) == 0
        assert maslov_gr(V1, 0, ((3,), ())) == -2
        assert maslov_gr(RP3, 0, ((0,), ())) == Fraction(1, 4)
        assert maslov_gr(RP3, 0, ((-2,), ())) == Fraction(-1, 4)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(0, 5))
    def test_matches_oracle(self, seed, j):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        cell = random_cell(rng, g)
        assert maslov_gr(g, j, cell) == gr_oracle(g, j, cell)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_k_square_inverse_form(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k = random_char(rng, g)
        val = k_square(g, k)
        assert val == ksq_oracle(g, k)
        assert val <= 0 or not any(k)
        det = bareiss_det(g.intersection_matrix())
        assert (Fraction(val) * 4 * abs(det)).denominator == 1


class TestInvolution:
    def test_empty_cell_negates(self):
        assert j_involution(V1, ((5,), ())) == ((-5,), frozenset())
        assert j_involution(CHAIN23, ((2, 1), ())) == ((-2, -1), frozenset())

    def test_single_vertex_fixed_point(self):
        assert j_involution(V1, ((1,), ("v1",))) == ((1,), frozenset({"v1"}))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_involution_properties(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        cell = random_cell(rng, g)
        k, verts = cell
        jk, jverts = j_involution(g, cell)
        # reflection: twist k once around every cell vertex, then negate
        expect = k
        for v in verts:
            expect = twist_oracle(g, expect, v)
        assert (jk, jverts) == (tuple(-c for c in expect), frozenset(verts))
        # involutive, grading-preserving, boundary-equivariant
        assert j_involution(g, (jk, jverts)) == (k, frozenset(verts))
        assert maslov_gr(g, 0, (jk, jverts)) == maslov_gr(g, 0, cell)
        key_fn = lambda t: (t[0], t[1][0], sorted(t[1][1]))  # noqa: E731
        lhs = sorted(((e, j_involution(g, c2))
                      for e, c2 in boundary(g, cell)), key=key_fn)
        rhs = sorted(boundary(g, (jk, jverts)), key=key_fn)
        assert lhs == rhs


class TestSpincSectors:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_twist_invariance(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=4)
        k = random_char(rng, g)
        rep = cell_spinc(g, k)
        assert cell_spinc(g, rep) == rep
        for v in g.vertices:
            assert cell_spinc(g, twist_oracle(g, k, v)) == rep

    def test_sector_count_is_determinant(self):
        for g in (V1, RP3, CHAIN23, TREF7):
            det = abs(bareiss_det(g.intersection_matrix()))
            reps = {cell_spinc(g, k) for k in SpincStructures(g).enumerate()}
            assert len(reps) == det


# ---------------------------------------------------------------------------
# Support enumeration
# ---------------------------------------------------------------------------


class TestEnumerateSupport:
    def test_single_vertex_shallow(self):
        assert enumerate_support(V1, (-1,), 2) == []
        assert enumerate_support(V1, (-1,), 1) == [((1,), frozenset({"v1"}))]
        assert enumerate_support(V1, (-1,), 0) == [
            ((1,), frozenset({"v1"})),
            ((-1,), frozenset()),
            ((1,), frozenset()),
        ]

    def test_single_vertex_vs_brute_scan(self):
        got = set(enumerate_support(V1, (-1,), -6))
        brute = set()
        for k in range(-51, 52, 2):
            for verts in ((), ("v1",)):
                if gr_oracle(V1, 0, ((k,), verts)) >= -6:
                    brute.add(((k,), frozenset(verts)))
        assert got == brute

    def test_marked_background_contains_seed(self):
        cells = enumerate_support(TREF_BG, (-1, 0, 1), -10)
        assert ((-1, 0, 1), frozenset()) in cells
        assert len(cells) == len(set(cells)) == 869

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_two_vertex_vs_brute_scan(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=2, n_max=2)
        base = tuple(g.framings[v] for v in g.vertices)
        rep = cell_spinc(g, base)
        got = set((k, fs) for k, fs in enumerate_support(g, base, -4))
        brute = set()
        subsets = [()] + [  # all vertex subsets
            c for r in range(1, 3)
            for c in itertools.combinations(g.vertices, r)]
        for z1 in range(-24, 25):
            for z2 in range(-24, 25):
                k = (base[0] + 2 * z1, base[1] + 2 * z2)
                if cell_spinc(g, k) != rep:
                    continue
                for verts in subsets:
                    if gr_oracle(g, 0, (k, verts)) >= -4:
                        brute.add((k, frozenset(verts)))
        assert got == brute


# ---------------------------------------------------------------------------
# Homology of fixtures
# ---------------------------------------------------------------------------


class TestHomologyFixtures:
    def test_single_minus_one_is_s3(self):
        res = homology(V1)
        assert result_snapshot(res) == (
            ([((-1,), 0, Fraction(0))], []),
            {(-1,): {(Fraction(0), 0): 1}},
            {(-1,): 1},
        )
        assert res.d_invariant() == 0

    def test_blowdown_chains_are_s3(self):
        for k in range(5):
            res = homology(chain_of_blowdowns(k))
            assert module_shape(res.module)[1] == []
            assert [(t.delta, t.maslov) for t in res.module.towers] \
                == [(0, Fraction(0))]
            assert res.d_invariant() == 0

    def test_real_projective_space(self):
        res = homology(RP3)
        assert result_snapshot(res) == (
            ([((-4,), 0, Fraction(1, 4)), ((-2,), 0, Fraction(-1, 4))], []),
            {(-4,): {(Fraction(1, 4), 0): 1},
             (-2,): {(Fraction(-1, 4), 0): 1}},
            {(-4,): 1, (-2,): 1},
        )
        assert res.restrict((-4,)).d_invariant() == Fraction(1, 4)
        assert res.restrict((-2,)).d_invariant() == Fraction(-1, 4)

    def test_lens_space_five_three(self):
        res = homology(CHAIN23)
        assert module_shape(res.module)[1] == []
        ds = {t.spinc: t.maslov for t in res.module.towers}
        assert ds == {(-2, -11): Fraction(-2, 5), (-2, -9): Fraction(0),
                      (-2, -7): Fraction(-2, 5), (-2, -5): Fraction(2, 5),
                      (-2, -3): Fraction(2, 5)}

    def test_lens_spaces_match_char_maximum(self):
        for g in (single_vertex(-3), single_vertex(-5), CHAIN23,
                  linear_chain((-2, -2, -2)), linear_chain((-3, -2))):
            res = homology(g)
            assert not res.module.torsions
            got = {t.spinc: t.maslov for t in res.module.towers}
            assert got == d_oracle_lspace(g)

    def test_brieskorn_two_three_seven(self):
        res = homology(TREF7)
        key = (-1, -2, -3, -7)
        assert result_snapshot(res) == (
            ([(key, 0, Fraction(0))], [(key, 0, Fraction(0), 1)]),
            {key: {(Fraction(-1), 1): 1, (Fraction(0), 0): 2}},
            {key: 1},
        )
        assert res.d_invariant() == 0

    def test_empty_forest_is_s3(self):
        res = homology(EMPTY)
        assert result_snapshot(res) == (
            ([((), 0, Fraction(0))], []),
            {(): {(Fraction(0), 0): 1}},
            {(): 1},
        )
        assert res.d_invariant() == 0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            homology(single_vertex(1))
        with pytest.raises(ValueError):
            homology(trefoil_marked())  # unframed distinguished vertex
        with pytest.raises(ValueError):
            homology(V1, flavor="plus")
        with pytest.raises(ValueError):
            homology(V1, spinc=(2,))

    def test_flavors_share_one_run(self):
        full = homology(TREF7)
        assert homology(TREF7, flavor="hat").payload() == full.hat
        assert homology(TREF7, flavor="inf").payload() == full.inf
        red = homology(TREF7, flavor="reduced").payload()
        assert not red.towers
        assert module_shape(red)[1] == module_shape(full.module)[1]

    def test_window_floor_does_not_matter(self):
        deep = homology(RP3, q_floor=-14)
        assert result_snapshot(deep) == result_snapshot(homology(RP3))

    def test_spinc_restriction(self):
        res = homology(RP3, spinc=(0,))
        assert list(res.hat) == [(-4,)]
        assert res.d_invariant() == Fraction(1, 4)

    def test_certificate_metadata(self):
        res = homology(CHAIN23)
        for key, m in res.meta.items():
            assert m["read_bottom"] == m["q0"] - 2
            assert m["window_floor"] <= m["q0"] - 6
            assert m["top"] >= m["q0"]
            assert m["generators"] > 0


class TestHomologyProperties:
    @settings(max_examples=12, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_structure_and_hat_dimensions(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=2, n_max=4)
        res = homology(g)
        det = abs(bareiss_det(g.intersection_matrix()))
        assert len(res.hat) == det
        towers = defaultdict(int)
        torsions = defaultdict(int)
        for t in res.module.towers:
            towers[t.spinc] += 1
        for t in res.module.torsions:
            torsions[t.spinc] += 1
        for key, hat in res.hat.items():
            # one U-tower per sector, with delta 0
            assert towers[key] == 1
            assert res.inf[key] == 1
            # mod-U homology counts the tower once, each torsion twice
            assert sum(hat.values()) == 1 + 2 * torsions[key]

    @settings(max_examples=8, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_d_invariant_is_tower_top(self, seed):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=2, n_max=4)
        res = homology(g)
        tops = {t.spinc: t.maslov for t in res.module.towers
                if t.delta == 0}
        for key in res.hat:
            assert res.restrict(key).d_invariant() == tops[key]


class TestSnfCrosscheck:
    def test_independent_pipeline_agrees(self):
        for g in (V1, RP3, CHAIN23, chain_of_blowdowns(1)):
            snf_crosscheck(homology(g))

    def test_rejects_bare_results(self):
        res = HomologyResult("minus", GradedModule((), ()), {}, {}, {})
        with pytest.raises(ValueError):
            snf_crosscheck(res)


# ---------------------------------------------------------------------------
# Packed pipeline
# ---------------------------------------------------------------------------


class TestPackedPipeline:
    def _packed_equals_direct(self, g):
        lat = lathom.lattice.Lattice.of(g)
        qmin = -10 * lat.scale
        support = lathom.lattice.build_support(lat, qmin)
        data = lathom.lattice.support_data(lat, support)
        pc = lathom.lattice.support_packed(lat, support)
        assert list(pc.gr) == data.gr
        assert list(pc.delta) == data.delta
        assert list(pc.spinc) == data.spinc
        assert [(r, m) for r, m in zip(pc.label_rows, pc.label_masks)] \
            == data.labels
        got = sorted(zip(pc.edge_src.tolist(), pc.edge_dst.tolist()))
        want = sorted((i, t) for i, terms in enumerate(data.boundary)
                      for (t, _e) in terms)
        assert got == want
        lathom.lattice.packed_d_squared_check(pc)
        red = lathom.lattice.morse_reduce(pc)
        assert len(red.gr) < len(pc.gr)
        reduced = lathom.lattice.packed_to_data(red)
        a = lathom.lattice.homology_of_data(data)
        b = lathom.lattice.homology_of_data(reduced)
        for si, sec in a.items():
            other = b[reduced.spinc_keys.index(data.spinc_keys[si])]
            assert sorted(sec.towers) == sorted(other.towers)
            assert sorted(sec.torsions) == sorted(other.torsions)
            assert sec.hat == other.hat

    def test_fixtures(self):
        for g in (V1, RP3, CHAIN23, TREF7):
            self._packed_equals_direct(g)

    @settings(max_examples=6, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_random_trees(self, seed):
        rng = random.Random(seed)
        self._packed_equals_direct(random_negdef_tree(rng, n_min=2, n_max=4))

    def test_engine_path_toggle(self, monkeypatch):
        baseline = result_snapshot(homology(TREF7))
        monkeypatch.setattr(lathom.lattice, "_PACKED_MIN_CELLS", 0)
        assert result_snapshot(homology(TREF7)) == baseline


# ---------------------------------------------------------------------------
# Bar-flavour homology over boxes
# ---------------------------------------------------------------------------


class TestBarBoxes:
    def test_solid_blocks_are_connected(self):
        assert bar_homology_box(V1, (-1,), {"v1": (-7, 7)}) == {0: 1}
        assert bar_homology_box(RP3, (0,), {"v1": (-6, 6)}) == {0: 1}
        both = bar_homology_box(RP3, box={"v1": (-6, 6)})
        assert both == {(-4,): {0: 1}, (-2,): {0: 1}}

    def test_nested_boxes_stay_contractible(self):
        for width in (2, 4, 8):
            box = {v: (-width, width) for v in CHAIN23.vertices}
            for rep, dims in bar_homology_box(CHAIN23, box=box).items():
                assert dims == {0: 1}

    def test_empty_forest(self):
        assert bar_homology_box(EMPTY, (), {}) == {0: 1}
        assert bar_homology_box(EMPTY, box={}) == {(): {0: 1}}

    def test_block_missing_the_sector(self):
        # an interval that contains no representative translate
        assert bar_homology_box(V1, (-1,), {"v1": (0, 0)}) == {}

    def test_rejects_bad_boxes(self):
        with pytest.raises(ValueError):
            bar_homology_box(V1, (-1,))
        with pytest.raises(ValueError):
            bar_homology_box(V1, (-1,), {})
        with pytest.raises(ValueError):
            bar_homology_box(V1, (-1,), {"v1": (3, -3)})

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(1, 4))
    def test_random_blocks(self, seed, width):
        rng = random.Random(seed)
        g = random_negdef_tree(rng, n_min=1, n_max=3)
        box = {v: (-width, width) for v in g.vertices}
        for rep, dims in bar_homology_box(g, box=box).items():
            assert dims == {0: 1} or dims == {}


# ---------------------------------------------------------------------------
# Finite complexes and tensor products
# ---------------------------------------------------------------------------


class TestFiniteComplexes:
    def test_single_vertex_truncation(self):
        fc = finite_complex(V1, -8)
        assert fc.honest_floor == -8
        assert all(m >= -8 for m in fc.maslov)
        res = complex_homology(fc)
        assert module_shape(res.module) == ([(((-1,)), 0, Fraction(0))], [])

    def test_matches_lattice_homology(self):
        for g in (RP3, CHAIN23):
            res = complex_homology(finite_complex(g, -12))
            assert module_shape(res.module) \
                == module_shape(homology(g).module)

    def test_shallow_truncation_is_refused(self):
        with pytest.raises(WindowTooShallow):
            complex_homology(finite_complex(V1, -2))

    def test_sector_restriction(self):
        fc = finite_complex(RP3, -12, spinc=(0,))
        assert set(fc.spinc) == {(-4,)}
        res = complex_homology(fc)
        assert [t.maslov for t in res.module.towers] == [Fraction(1, 4)]

    def test_tensor_additivity_of_d(self):
        f1 = finite_complex(RP3, -12)
        f2 = finite_complex(V1, -12)
        res = complex_homology(tensor_complex(f1, f2))
        d1 = {t.spinc: t.maslov for t in homology(RP3).module.towers}
        d2 = {t.spinc: t.maslov for t in homology(V1).module.towers}
        got = {t.spinc: t.maslov for t in res.module.towers}
        assert got == {(a, b): d1[a] + d2[b] for a in d1 for b in d2}

    def test_tensor_square_of_lens_space(self):
        f1 = finite_complex(RP3, -12)
        res = complex_homology(tensor_complex(f1, f1))
        d1 = {t.spinc: t.maslov for t in homology(RP3).module.towers}
        got = {t.spinc: t.maslov for t in res.module.towers}
        assert got == {(a, b): d1[a] + d1[b] for a in d1 for b in d1}
        assert not res.module.torsions

    def test_shift(self):
        fc = finite_complex(V1, -6).shift(maslov_by=Fraction(3, 2),
                                          delta_by=2)
        assert min(fc.delta) >= 2
        res = complex_homology(finite_complex(V1, -6))
        shifted = complex_homology(fc, expect_structure=False)
        assert [(t.delta, t.maslov - Fraction(3, 2))
                for t in shifted.module.towers] \
            == [(t.delta + 2, t.maslov) for t in res.module.towers]
