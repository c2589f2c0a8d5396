import itertools
from fractions import Fraction

import pytest

from kisinhn.errors import (
    BudgetExceeded,
    DetConstraintInfeasible,
    LengthMismatch,
    NotDominating,
)
from kisinhn.fields import context
from kisinhn.hn import etale_rank, hn_polygon_normalized
from kisinhn.literals import parse_series
from kisinhn.modules import EtalePhiModule, tate_twist
from kisinhn.smatrix import SeriesMatrix, hermite, lattice_key, val_det
from kisinhn.variety import (
    HodgeType,
    component_invariant,
    det_constraint_valuation,
    enumerate_candidate_polygons,
    enumerate_points,
    hn_over_hodge_check,
    hodge_dominance,
    prec_order,
    semicontinuity_sets,
    stratify,
)

PREC = 16
F2 = context(2, 1)
F3 = context(3, 1)


def M(ctx, rows, prec=PREC):
    return SeriesMatrix(ctx, [[parse_series(t, ctx, prec) for t in r] for r in rows])


def module(ctx, a_rows, e=1):
    return EtalePhiModule(ctx, e, len(a_rows), M(ctx, a_rows))


def lat_key(lat, shift, upto=12):
    # common u-power shift makes g integral; equal shifts preserve equality
    return lattice_key(hermite(lat.g.shift(shift)), upto)


def unit_slopes(poly, n):
    return tuple(poly.evaluate(Fraction(d + 1)) - poly.evaluate(Fraction(d))
                 for d in range(n))


def dominates(p_high, p_low, n):
    return all(p_high.evaluate(Fraction(d)) >= p_low.evaluate(Fraction(d))
               for d in range(n + 1))


class TestHodgeType:
    def test_validation(self):
        assert HodgeType((0, 1)).entries == (0, 1)
        assert HodgeType([-1, 0, 1]).n == 3
        with pytest.raises(ValueError):
            HodgeType((1, 0))
        with pytest.raises(ValueError):
            HodgeType(())

    def test_partial_sums_and_polygon(self):
        nu = HodgeType((0, 0, 1))
        assert [nu.partial_sum(d) for d in range(4)] == [0, 0, 0, 1]
        assert nu.total == 1
        assert nu.polygon().vertices == ((0, 0), (2, 0), (3, 1))
        with pytest.raises(ValueError):
            nu.partial_sum(4)


class TestOrders:
    def test_dominance_examples(self):
        assert hodge_dominance((0, 1), (0, 1))
        assert hodge_dominance((0, 0, 0), (-1, 0, 1))
        assert not hodge_dominance((-1, 0, 1), (0, 0, 0))
        # unequal totals never compare
        assert not hodge_dominance((0, 1), (0, 0))
        assert not hodge_dominance((0, 0), (0, 1))

    def test_prec_examples(self):
        assert prec_order((0, 0, 0), (-1, 0, 1))
        assert prec_order((Fraction(1, 2), Fraction(1, 2)), (0, 1))
        assert not prec_order((0, 1), (Fraction(1, 2), Fraction(1, 2)))
        # input order does not matter
        assert prec_order((1, 0), (0, 1))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            hodge_dominance((0, 1), (0, 0, 1))
        with pytest.raises(LengthMismatch):
            prec_order((0,), (0, 0))

    def test_dominance_implies_prec(self):
        vecs = [v for v in itertools.product(range(-2, 3), repeat=3)
                if all(a <= b for a, b in zip(v, v[1:]))]
        checked = 0
        for a, b in itertools.product(vecs, repeat=2):
            if hodge_dominance(a, b):
                assert prec_order(a, b)
                checked += 1
        assert checked > 50


class TestDetConstraint:
    def test_valuations(self):
        m2 = module(F2, [["1", "0"], ["0", "1"]])
        assert det_constraint_valuation(m2, (0, 1)) == 1
        assert det_constraint_valuation(m2, (0, 0)) == 0
        assert det_constraint_valuation(m2, (-1, 2)) == 1
        m3 = module(F3, [["1", "0"], ["0", "1"]])
        assert det_constraint_valuation(m3, (-1, 1)) == 0
        with pytest.raises(DetConstraintInfeasible):
            det_constraint_valuation(m3, (0, 1))
        with pytest.raises(LengthMismatch):
            det_constraint_valuation(m2, (0, 0, 1))

    def test_infeasible_enumeration_is_tagged_empty(self):
        m3 = module(F3, [["1", "0"], ["0", "1"]])
        enum = enumerate_points(m3, (0, 1))
        assert enum.points == []
        assert enum.completeness_flag == "det-infeasible"
        assert enum.window is None
        assert enum.det_valuation is None
        assert stratify(enum) == {}
        assert hn_over_hodge_check(enum)


@pytest.fixture(scope="module")
def three_points():
    m = module(F2, [["1", "0"], ["0", "1"]])
    enum = enumerate_points(m, (0, 1))
    stratify(enum)
    return m, enum


class TestThreePointExample:
    def test_counts_and_flags(self, three_points):
        m, enum = three_points
        assert enum.window == 2
        assert enum.det_valuation == 1
        assert len(enum.points) == 3
        assert enum.completeness_flag == "certified"

    def test_points_are_the_colength_one_sublattices(self, three_points):
        m, enum = three_points
        expected = {
            lat_key(m.lattice(M(F2, [["1", "0"], ["0", "u"]])), 2),
            lat_key(m.lattice(M(F2, [["u", "0"], ["0", "1"]])), 2),
            lat_key(m.lattice(M(F2, [["1", "u"], ["1", "0"]])), 2),
        }
        keys = {lat_key(lat, 2) for lat in enum.points}
        assert len(keys) == 3
        assert keys == expected

    def test_det_constraint_and_divisors(self, three_points):
        _, enum = three_points
        for lat, dvec in zip(enum.points, enum.hermite_divisors):
            assert val_det(lat.g) == 1
            assert lat.hodge_divisors == [0, 1]
            assert sum(dvec) == 5
        assert sorted(enum.hermite_divisors) == [(2, 3), (2, 3), (3, 2)]

    def test_single_stratum_with_split_polygon(self, three_points):
        _, enum = three_points
        assert len(enum.strata) == 1
        poly = next(iter(enum.strata))
        assert poly.vertices == ((0, 0), (1, 0), (2, 1))
        # divisors realize nu exactly and the module splits: polygon = P_nu
        assert poly == HodgeType((0, 1)).polygon()
        assert sorted(enum.strata[poly]) == [0, 1, 2]

    def test_contact_invariants_and_domination(self, three_points):
        _, enum = three_points
        assert all(enum.invariants_J[i] == frozenset({1}) for i in range(3))
        assert hn_over_hodge_check(enum)

    def test_realized_polygons_are_candidates(self, three_points):
        _, enum = three_points
        cands = enumerate_candidate_polygons((0, 1))
        by_poly = {c.polygon: c.contact for c in cands}
        for poly, idxs in enum.strata.items():
            assert poly in by_poly
            assert all(enum.invariants_J[i] == by_poly[poly] for i in idxs)

    def test_exterior_power_contact_agrees(self, three_points):
        # d in J iff the d-th wedge, twisted so the Hodge value is slope 0,
        # has an etale piece: an independent route to the contact set
        _, enum = three_points
        nu = enum.nu
        for i, lat in enumerate(enum.points):
            twisted = tate_twist(lat, -nu.partial_sum(1))
            poly = hn_polygon_normalized(twisted)
            contact = poly.slopes()[0] == 0
            assert contact == (1 in enum.invariants_J[i])
            if twisted.is_effective():
                assert (etale_rank(twisted) > 0) == contact

    def test_semicontinuity_sets_nest(self, three_points):
        _, enum = three_points
        recorded = semicontinuity_sets(enum)
        assert len(recorded) == 2
        by_contact = {c.contact: members for c, members in recorded}
        assert by_contact[frozenset({1})] == frozenset({0, 1, 2})
        assert by_contact[frozenset()] == frozenset()
        for (c1, s1), (c2, s2) in itertools.product(recorded, repeat=2):
            if dominates(c2.polygon, c1.polygon, enum.nu.n):
                assert s2 <= s1

    def test_small_window_finds_points_but_is_not_certified(self, three_points):
        m, enum = three_points
        small = enumerate_points(m, (0, 1), window=1)
        assert len(small.points) == 3
        assert small.completeness_flag == "window-limited"
        assert {lat_key(l, 1) for l in small.points} == \
            {lat_key(l, 1) for l in enum.points}

    def test_larger_window_adds_nothing(self, three_points):
        m, enum = three_points
        big = enumerate_points(m, (0, 1), window=3)
        assert len(big.points) == 3
        assert big.completeness_flag == "certified"
        assert {lat_key(l, 3) for l in big.points} == \
            {lat_key(l, 3) for l in enum.points}


class TestEtaleHodgeType:
    def test_integral_frobenius_gives_standard_point(self):
        m = module(F2, [["1", "0"], ["0", "1"]])
        enum = enumerate_points(m, (0, 0))
        assert len(enum.points) == 1
        assert enum.completeness_flag == "certified"
        assert enum.points[0].hodge_divisors == [0, 0]
        std = m.lattice(M(F2, [["1", "0"], ["0", "1"]]))
        assert lat_key(enum.points[0], enum.window) == lat_key(std, enum.window)

    def test_shifted_presentation_still_one_point(self):
        # diag(u, 1/u) is the standard etale module in a skewed basis when
        # p = 2: the unique unimodular-Frobenius lattice is <e1/u, u e2>
        m = module(F2, [["u", "0"], ["0", "u^-1"]])
        enum = enumerate_points(m, (0, 0))
        assert len(enum.points) == 1
        assert enum.completeness_flag == "certified"
        expected = m.lattice(M(F2, [["u^-1", "0"], ["0", "u"]]))
        assert lat_key(enum.points[0], enum.window) == \
            lat_key(expected, enum.window)

    def test_no_etale_lattice_when_p_is_odd(self):
        # for p = 3 the diagonal degrees 2a+1 and 2b-1 are odd, so no
        # lattice has unimodular Frobenius
        m = module(F3, [["u", "0"], ["0", "u^-1"]])
        enum = enumerate_points(m, (0, 0))
        assert enum.points == []
        assert enum.det_valuation == 0
        assert enum.completeness_flag == "certified"


class TestSemistableModule:
    def test_all_points_semistable(self):
        m = module(F2, [["0", "1"], ["u", "0"]])
        enum = enumerate_points(m, (0, 1))
        assert enum.det_valuation == 0
        assert len(enum.points) >= 1
        std = m.lattice(M(F2, [["1", "0"], ["0", "1"]]))
        keys = {lat_key(lat, enum.window) for lat in enum.points}
        assert len(keys) == len(enum.points)
        assert lat_key(std, enum.window) in keys
        stratify(enum)
        assert len(enum.strata) == 1
        poly = next(iter(enum.strata))
        assert poly.is_single_segment()
        assert unit_slopes(poly, 2) == (Fraction(1, 2), Fraction(1, 2))
        assert all(j == frozenset() for j in enum.invariants_J.values())
        assert hn_over_hodge_check(enum)
        for lat in enum.points:
            assert val_det(lat.g) == 0
            assert lat.hodge_divisors == [0, 1]
            assert etale_rank(lat) == 0

    def test_realized_within_candidates(self):
        m = module(F2, [["0", "1"], ["u", "0"]])
        enum = enumerate_points(m, (0, 1))
        stratify(enum)
        cands = {c.polygon: c.contact for c in enumerate_candidate_polygons((0, 1))}
        for poly in enum.strata:
            assert cands[poly] == frozenset()


class TestRamifiedScaling:
    def test_e2_polygon_scaled_but_contact_unchanged(self):
        m = module(F2, [["1", "0"], ["0", "1"]], e=2)
        enum = enumerate_points(m, (0, 1))
        assert len(enum.points) == 3
        stratify(enum)
        poly = next(iter(enum.strata))
        assert poly.vertices == ((0, 0), (1, 0), (2, Fraction(1, 2)))
        assert all(j == frozenset({1}) for j in enum.invariants_J.values())
        assert hn_over_hodge_check(enum)


class TestExtension:
    def test_point_count_over_quadratic_extension(self):
        m = module(F2, [["1", "0"], ["0", "1"]])
        enum = enumerate_points(m, (0, 1), ext=2)
        assert enum.module.ctx.q == 4
        # colength-1 sublattices of the standard lattice over F4: q + 1
        assert len(enum.points) == 5
        assert enum.completeness_flag == "certified"
        stratify(enum)
        assert all(j == frozenset({1}) for j in enum.invariants_J.values())
        assert hn_over_hodge_check(enum)


class TestWindowEdges:
    def test_budget_guard(self):
        m = module(F2, [["1", "0"], ["0", "1"]])
        with pytest.raises(BudgetExceeded):
            enumerate_points(m, (0, 1), window=2, budget=10)

    def test_negative_window_rejected(self):
        m = module(F2, [["1", "0"], ["0", "1"]])
        with pytest.raises(ValueError):
            enumerate_points(m, (0, 1), window=-1)

    def test_zero_window_boundary_is_not_certified(self):
        m = module(F2, [["1", "0"], ["0", "1"]])
        enum = enumerate_points(m, (0, 0), window=0)
        assert len(enum.points) == 1
        assert enum.completeness_flag == "window-limited"

    def test_unreachable_colength_is_window_limited(self):
        m = module(F2, [["1", "0"], ["0", "1"]])
        enum = enumerate_points(m, (0, 3), window=0)
        assert enum.points == []
        assert enum.det_valuation == 3
        assert enum.completeness_flag == "window-limited"


def oracle_candidates(nu):
    """Independent candidate-polygon enumeration over subsets of box points.

    Integer-only arithmetic: convexity via cross products, domination and
    contact via cross-multiplied interpolation.  Returns a dict mapping the
    vertex tuple to the contact set.
    """
    entries = tuple(nu)
    n = len(entries)
    total = sum(entries)
    psums = [sum(entries[:d]) for d in range(n + 1)]
    box = [(x, y) for x in range(1, n)
           for y in range(psums[x], (x * total) // n + 1)]
    found = {}
    for size in range(len(box) + 1):
        for pts in itertools.combinations(box, size):
            xs = [p[0] for p in pts]
            if len(set(xs)) != len(xs):
                continue
            verts = [(0, 0)] + sorted(pts) + [(n, total)]
            # strict convexity at every interior vertex
            ok = True
            for (x0, y0), (x1, y1), (x2, y2) in zip(verts, verts[1:], verts[2:]):
                if (y1 - y0) * (x2 - x1) >= (y2 - y1) * (x1 - x0):
                    ok = False
                    break
            if not ok:
                continue
            # slope range [a_1, a_n]
            (x0, y0), (x1, y1) = verts[0], verts[1]
            if y1 - y0 < entries[0] * (x1 - x0):
                continue
            (x0, y0), (x1, y1) = verts[-2], verts[-1]
            if y1 - y0 > entries[-1] * (x1 - x0):
                continue
            # domination and contact at integer abscissas
            contact = set()
            for d in range(1, n):
                seg = max(i for i, v in enumerate(verts) if v[0] <= d)
                if verts[seg][0] == d:
                    val_num, val_den = verts[seg][1], 1
                else:
                    (x0, y0), (x1, y1) = verts[seg], verts[seg + 1]
                    val_num = y0 * (x1 - x0) + (y1 - y0) * (d - x0)
                    val_den = x1 - x0
                if val_num < psums[d] * val_den:
                    ok = False
                    break
                if val_num == psums[d] * val_den:
                    contact.add(d)
            if ok:
                found[tuple(verts)] = frozenset(contact)
    return found


class TestCandidatePolygons:
    def test_nu_001(self):
        cands = enumerate_candidate_polygons((0, 0, 1))
        assert len(cands) == 3
        table = {unit_slopes(c.polygon, 3): c.contact for c in cands}
        third = Fraction(1, 3)
        half = Fraction(1, 2)
        assert table == {
            (third, third, third): frozenset(),
            (0, half, half): frozenset({1}),
            (0, 0, 1): frozenset({1, 2}),
        }

    def test_nu_m101(self):
        cands = enumerate_candidate_polygons((-1, 0, 1))
        assert len(cands) == 4
        table = {unit_slopes(c.polygon, 3): c.contact for c in cands}
        half = Fraction(1, 2)
        assert table == {
            (0, 0, 0): frozenset(),
            (-1, half, half): frozenset({1}),
            (-half, -half, 1): frozenset({2}),
            (-1, 0, 1): frozenset({1, 2}),
        }

    def test_flat_nu(self):
        for n in (2, 3, 4):
            cands = enumerate_candidate_polygons((0,) * n)
            assert len(cands) == 1
            assert cands[0].polygon.is_single_segment()
            assert cands[0].contact == frozenset(range(1, n))

    def test_nu_01(self):
        cands = enumerate_candidate_polygons((0, 1))
        assert {c.contact for c in cands} == {frozenset(), frozenset({1})}

    def test_n4_matches_independent_oracle(self):
        nu = (-1, 0, 0, 1)
        cands = enumerate_candidate_polygons(nu)
        expected = oracle_candidates(nu)
        got = {tuple((int(x), int(y)) for x, y in c.polygon.vertices): c.contact
               for c in cands}
        assert got == expected
        assert len(cands) == 7

    def test_full_contact_only_for_hodge_polygon(self):
        nu = HodgeType((-1, 0, 0, 1))
        full = frozenset({1, 2, 3})
        for c in enumerate_candidate_polygons(nu):
            assert (c.contact == full) == (c.polygon == nu.polygon())

    def test_component_invariant_errors(self):
        from kisinhn.hn import Polygon
        nu = HodgeType((0, 1))
        below = Polygon([(0, 0), (Fraction(1), Fraction(-1)), (2, 1)])
        with pytest.raises(NotDominating):
            component_invariant(below, nu)
        wrong_end = Polygon([(0, 0), (2, 2)])
        with pytest.raises(NotDominating):
            component_invariant(wrong_end, nu)
        wrong_span = Polygon([(0, 0), (3, 1)])
        with pytest.raises(NotDominating):
            component_invariant(wrong_span, nu)
