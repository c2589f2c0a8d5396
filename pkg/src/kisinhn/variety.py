"""Lattice sets with bounded Hodge type, their slope strata, and contact invariants.

Given a rank-n module over F_q((u)) with semilinear operator and a weakly
increasing integer vector nu = (a_1 <= ... <= a_n), this module enumerates the
lattices L whose operator matrix B_L has elementary divisor vector dominated
by nu, i.e. lies on or above the partial-sum polygon P_nu with equal endpoint.

Enumeration works inside a symmetric window u^W L0 <= L <= u^{-W} L0.  The
shifted lattice M = u^W L sits between u^{2W} L0 and L0 and has a unique
lower-triangular Hermite basis: diagonal u^{d_i} with 0 <= d_i <= 2W, entry
(i, j) for i > j a polynomial reduced mod u^{d_i}.  The determinant identity
val det B_L = val det A + (p - 1) val det g pins val det g to a single integer
D; when (sum nu - val det A) is not divisible by p - 1 no lattice can satisfy
the Hodge bound and the enumeration is empty for that structural reason.
Fixing D fixes the colength sum d_1 + ... + d_n = n W + D, so the fan-out is
finite and every candidate already has the correct determinant valuation.

Points are stratified by their normalized slope polygon, and each point gets
the contact set J of its stratum: the interior integer abscissas where the
e-scaled slope polygon touches P_nu.  Candidate polygon enumeration lists
every convex integral-breakpoint polygon that could appear over a given nu,
labelled by the same contact sets.
"""

import itertools
from fractions import Fraction

from .errors import (
    BudgetExceeded,
    DetConstraintInfeasible,
    LengthMismatch,
    NotDominating,
)
from .hn import Polygon, hn_polygon_normalized
from .modules import base_change
from .series import LaurentSeries
from .smatrix import SeriesMatrix

DEFAULT_POINT_BUDGET = 200_000


class HodgeType:
    """A weakly increasing integer vector nu = (a_1 <= ... <= a_n)."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        entries = tuple(int(a) for a in entries)
        if not entries:
            raise ValueError("Hodge type must be nonempty")
        if any(a > b for a, b in zip(entries, entries[1:])):
            raise ValueError(f"Hodge type entries must be weakly increasing: {entries}")
        self.entries = entries

    @property
    def n(self):
        return len(self.entries)

    @property
    def total(self):
        return sum(self.entries)

    def partial_sum(self, d):
        """Value of the partial-sum polygon P_nu at an integer 0 <= d <= n."""
        if not 0 <= d <= self.n:
            raise ValueError(f"abscissa {d} outside [0, {self.n}]")
        return sum(self.entries[:d])

    def polygon(self):
        """P_nu as a convex polygon (collinear interior points dropped)."""
        return Polygon.from_cloud(
            [(d, self.partial_sum(d)) for d in range(self.n + 1)])

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other):
        return isinstance(other, HodgeType) and self.entries == other.entries

    def __hash__(self):
        return hash(("HodgeType", self.entries))

    def __repr__(self):
        return f"HodgeType{self.entries}"


def _as_hodge(nu):
    return nu if isinstance(nu, HodgeType) else HodgeType(nu)


def hodge_dominance(nu_prime, nu):
    """True when nu' <= nu: equal totals and partial sums of nu' >= those of nu.

    Both arguments are weakly increasing integer vectors of the same length;
    the partial-sum polygon of nu' then lies on or above that of nu with the
    same endpoint.
    """
    a = tuple(nu_prime)
    b = tuple(nu)
    if len(a) != len(b):
        raise LengthMismatch(f"cannot compare lengths {len(a)} and {len(b)}")
    ps_a = ps_b = 0
    for x, y in zip(a, b):
        ps_a += x
        ps_b += y
        if ps_a < ps_b:
            return False
    return ps_a == ps_b


def prec_order(lam_prime, lam):
    """Dominance order on unordered rational multisets of equal length.

    Sorts both vectors ascending, then requires every partial sum of the
    first to be >= the matching partial sum of the second, with equal totals.
    """
    a = sorted(Fraction(x) for x in lam_prime)
    b = sorted(Fraction(x) for x in lam)
    if len(a) != len(b):
        raise LengthMismatch(f"cannot compare lengths {len(a)} and {len(b)}")
    ps_a = ps_b = Fraction(0)
    for x, y in zip(a, b):
        ps_a += x
        ps_b += y
        if ps_a < ps_b:
            return False
    return ps_a == ps_b


class VarietyEnumeration:
    """Result of a windowed lattice enumeration.

    Fields:
      module            the ambient module the lattices live in
      nu                HodgeType bound
      window            the window W actually used (None when det-infeasible)
      points            list of KisinLattice, deterministic order
      hermite_divisors  per-point diagonal exponents of the Hermite basis of u^W L
      strata            dict normalized slope Polygon -> sorted point indices
                        (filled by stratify)
      invariants_J      dict point index -> frozenset contact invariant
                        (filled by stratify)
      completeness_flag 'certified' when no boundary-touching lattice passed
                        the Hodge filter, 'window-limited' otherwise,
                        'det-infeasible' for the structurally empty case
      det_valuation     the forced val det g, or None when infeasible
    """

    __slots__ = ("module", "nu", "window", "points", "hermite_divisors",
                 "strata", "invariants_J", "completeness_flag",
                 "det_valuation", "_polygons")

    def __init__(self, module, nu, window, points, hermite_divisors,
                 completeness_flag, det_valuation):
        self.module = module
        self.nu = nu
        self.window = window
        self.points = points
        self.hermite_divisors = hermite_divisors
        self.strata = None
        self.invariants_J = None
        self.completeness_flag = completeness_flag
        self.det_valuation = det_valuation
        self._polygons = None

    def __repr__(self):
        return (f"VarietyEnumeration(nu={self.nu!r}, window={self.window}, "
                f"points={len(self.points)}, flag={self.completeness_flag!r})")


def det_constraint_valuation(m, nu):
    """The forced valuation D of det g for lattices with Hodge type <= nu.

    From B_L = g^{-1} A phi(g) and phi multiplying u-valuations by p:
    val det B_L = val det A + (p - 1) val det g.  Dominance forces
    val det B_L = sum(nu), so D = (sum nu - val det A) / (p - 1) must be an
    integer; raises DetConstraintInfeasible otherwise.
    """
    nu = _as_hodge(nu)
    if nu.n != m.n:
        raise LengthMismatch(f"Hodge type length {nu.n} != module rank {m.n}")
    p = m.ctx.p
    num = nu.total - m.val_det_A
    if num % (p - 1):
        raise DetConstraintInfeasible(
            f"(sum(nu) - val det A) = {num} not divisible by p - 1 = {p - 1}")
    return num // (p - 1)


def default_window(m, nu):
    """Window heuristic: Hodge spread plus the valuation spread of A, plus 1."""
    nu = _as_hodge(nu)
    spread = 0
    for row in m.A.rows:
        for entry in row:
            v = entry.valuation()
            if v is not None:
                spread = max(spread, abs(v))
    return max(abs(nu.entries[0]), abs(nu.entries[-1])) + spread + 1


def _hermite_count(q, dvec):
    """Number of Hermite matrices with the given diagonal exponents."""
    return q ** sum(d * i for i, d in enumerate(dvec))


def _hermite_matrices(ctx, dvec, prec):
    """All lower-triangular Hermite bases with diagonal u^{d_i}, lex order.

    Entry (i, j) for i > j runs over polynomials reduced mod u^{d_i}; the
    coefficient tuples iterate lexicographically so output order is stable.
    """
    n = len(dvec)
    slots = [(i, j) for i in range(n) for j in range(i) if dvec[i] > 0]
    widths = [dvec[i] for i, _ in slots]
    zero = LaurentSeries.zero(ctx, prec)
    diag = [LaurentSeries.monomial(ctx, 1, d, prec) for d in dvec]
    for codes in itertools.product(*(itertools.product(range(ctx.q), repeat=w)
                                     for w in widths)):
        rows = [[zero] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = diag[i]
        for (i, j), cs in zip(slots, codes):
            rows[i][j] = LaurentSeries.from_terms(
                ctx, [(t, c) for t, c in enumerate(cs)], prec)
        yield SeriesMatrix(ctx, rows)


def enumerate_points(m, nu, window=None, ext=1, budget=DEFAULT_POINT_BUDGET):
    """Enumerate lattices in m with Hodge type dominated by nu.

    Scans Hermite bases of u^W L with every diagonal exponent in [0, 2W] and
    colength sum n W + D fixed by the determinant constraint, keeping the
    lattices whose elementary divisor vector is dominated by nu.  Every
    lattice between u^W L0 and u^{-W} L0 has such a basis, so the scan
    covers the symmetric window (plus a thin fringe of lattices just outside
    it, which are equally valid points).  Each lattice appears exactly once:
    the Hermite basis is canonical.  ext > 1 first extends coefficients to
    F_{q^ext} by unramified base change.

    The result is certified complete when no lattice touching the window
    boundary (some Hermite exponent at 0 or 2W) passes the Hodge filter;
    enlarging the window cannot then add points with the same determinant.
    """
    nu = _as_hodge(nu)
    if ext > 1:
        m = base_change(m, "unramified", ext)
    try:
        det_val = det_constraint_valuation(m, nu)
    except DetConstraintInfeasible:
        return VarietyEnumeration(m, nu, None, [], [], "det-infeasible", None)
    w = default_window(m, nu) if window is None else int(window)
    if w < 0:
        raise ValueError("window must be nonnegative")
    ctx = m.ctx
    n = m.n
    cap = 2 * w
    colength = n * w + det_val
    if colength < 0 or colength > n * cap:
        return VarietyEnumeration(m, nu, w, [], [], "window-limited", det_val)
    dvecs = [d for d in itertools.product(range(cap + 1), repeat=n)
             if sum(d) == colength]
    total = sum(_hermite_count(ctx.q, d) for d in dvecs)
    if total > budget:
        raise BudgetExceeded(
            f"window {w} spans {total} lattices, budget {budget}")
    # Entries are exact polynomials; generous precision survives the shift
    # by -W and the Smith reduction of g^{-1} A phi(g).
    prec = m.prec + cap + 1
    points = []
    divisors = []
    boundary_hit = False
    for dvec in dvecs:
        on_boundary = min(dvec) == 0 or max(dvec) == cap
        for h in _hermite_matrices(ctx, dvec, prec):
            g = h.shift(-w)
            # The least elementary divisor of B is its least entry valuation;
            # candidates certainly below a_1 cannot be dominated, and skipping
            # them avoids Smith reductions whose precision decays with the
            # distance from the window center.
            b = g.inverse() @ m.A @ g.frobenius()
            if any(not entry.is_zero and entry.val < nu.entries[0]
                   for row in b.rows for entry in row):
                continue
            lat = m.lattice(g)
            if hodge_dominance(lat.hodge_divisors, nu):
                points.append(lat)
                divisors.append(dvec)
                if on_boundary:
                    boundary_hit = True
    flag = "window-limited" if boundary_hit else "certified"
    return VarietyEnumeration(m, nu, w, points, divisors, flag, det_val)


def component_invariant(polygon, nu, scale=1):
    """Contact set J of a slope polygon against P_nu.

    Requires scale * polygon to lie on or above P_nu at every integer
    abscissa with equal endpoints (NotDominating otherwise); returns the
    frozenset of interior integers d where the two polygons touch.

    Contact is indexed by the abscissa d.  Because the polygons share
    endpoints, agreement of the bottom-d partial sums at d is the same as
    agreement of the top-(n - d) partial sums at n - d, so the set J carries
    the same information as the complementary-index convention that tests
    the top slopes; only the labelling differs.
    """
    nu = _as_hodge(nu)
    n = nu.n
    end_x, end_y = polygon.endpoint
    if end_x != n:
        raise NotDominating(f"polygon spans {end_x} ranks, expected {n}")
    if scale * end_y != nu.total:
        raise NotDominating(
            f"endpoint {scale * end_y} differs from sum(nu) = {nu.total}")
    contact = []
    for d in range(1, n):
        diff = scale * polygon.evaluate(Fraction(d)) - nu.partial_sum(d)
        if diff < 0:
            raise NotDominating(f"polygon falls below P_nu at x = {d}")
        if diff == 0:
            contact.append(d)
    return frozenset(contact)


def stratify(enum):
    """Group points by normalized slope polygon; fill per-point contact sets.

    Returns the strata dict (Polygon -> sorted point indices) and caches it
    together with invariants_J on the enumeration.  Idempotent.
    """
    if enum.strata is None:
        strata = {}
        invariants = {}
        polygons = []
        for idx, lat in enumerate(enum.points):
            poly = hn_polygon_normalized(lat)
            polygons.append(poly)
            strata.setdefault(poly, []).append(idx)
            invariants[idx] = component_invariant(poly, enum.nu, scale=lat.e)
        enum.strata = strata
        enum.invariants_J = invariants
        enum._polygons = polygons
    return enum.strata


def hn_over_hodge_check(enum):
    """Verify every point's e-scaled slope polygon dominates P_nu exactly.

    Checks all integer abscissas (both polygons break only at integers) and
    endpoint equality.  True when every point passes.
    """
    stratify(enum)
    nu = enum.nu
    n = nu.n
    for lat, poly in zip(enum.points, enum._polygons):
        e = lat.e
        end_x, end_y = poly.endpoint
        if end_x != n or e * end_y != nu.total:
            return False
        for d in range(n + 1):
            if e * poly.evaluate(Fraction(d)) < nu.partial_sum(d):
                return False
    return True


def semicontinuity_sets(enum, candidates=None):
    """Per candidate polygon, the point indices lying weakly above it.

    For each candidate P0 this records { i : e * polygon(point_i) >= P0 at
    every integer abscissa }.  The >= relation makes these sets nest: when
    one candidate dominates another, its set is contained in the other's.
    Returns a list of (CandidatePolygon, frozenset) pairs aligned with
    candidates (enumerated from enum.nu when not supplied).
    """
    stratify(enum)
    if candidates is None:
        candidates = enumerate_candidate_polygons(enum.nu)
    n = enum.nu.n
    out = []
    for cand in candidates:
        members = frozenset(
            i for i, (lat, poly) in enumerate(zip(enum.points, enum._polygons))
            if all(lat.e * poly.evaluate(Fraction(d))
                   >= cand.polygon.evaluate(Fraction(d))
                   for d in range(n + 1)))
        out.append((cand, members))
    return out


class CandidatePolygon:
    """A convex polygon that could arise as a slope stratum, with its contact set."""

    __slots__ = ("polygon", "contact")

    def __init__(self, polygon, contact):
        self.polygon = polygon
        self.contact = frozenset(contact)

    def __eq__(self, other):
        return (isinstance(other, CandidatePolygon)
                and self.polygon == other.polygon
                and self.contact == other.contact)

    def __hash__(self):
        return hash((self.polygon, self.contact))

    def __repr__(self):
        return f"CandidatePolygon({self.polygon!r}, J={sorted(self.contact)})"


def enumerate_candidate_polygons(nu):
    """All convex polygons with integer breakpoints dominating P_nu.

    A candidate runs from (0, 0) to (n, sum(nu)), has integer breakpoints,
    strictly increasing slopes between consecutive breakpoints, stays on or
    above P_nu at every integer abscissa, and keeps slopes within
    [a_1, a_n].  The slope-range restriction mirrors the bound satisfied by
    slope polygons of lattices with Hodge type <= nu; realized strata are
    checked against it downstream.  Each candidate is labelled with its
    contact set J; results are sorted by breakpoint list.
    """
    nu = _as_hodge(nu)
    n = nu.n
    total = nu.total
    lo_slope = Fraction(nu.entries[0])
    hi_slope = Fraction(nu.entries[-1])
    choices = []
    for x in range(1, n):
        lo = nu.partial_sum(x)
        hi = (x * total) // n
        choices.append([None] + [(x, y) for y in range(lo, hi + 1)])
    out = []
    for combo in itertools.product(*choices):
        verts = [(Fraction(0), Fraction(0))]
        verts += [(Fraction(x), Fraction(y)) for v in combo if v is not None
                  for x, y in (v,)]
        verts.append((Fraction(n), Fraction(total)))
        slopes = [(y2 - y1) / (x2 - x1)
                  for (x1, y1), (x2, y2) in zip(verts, verts[1:])]
        if any(s2 <= s1 for s1, s2 in zip(slopes, slopes[1:])):
            continue
        if slopes[0] < lo_slope or slopes[-1] > hi_slope:
            continue
        poly = Polygon(verts)
        try:
            contact = component_invariant(poly, nu)
        except NotDominating:
            continue
        out.append(CandidatePolygon(poly, contact))
    out.sort(key=lambda c: c.polygon.vertices)
    return out
