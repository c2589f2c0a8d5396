"""Slope theory for p-torsion Kisin lattices.

Every phi-stable subspace V of the generic fibre cuts out a strict
subobject span(V) cap M of a lattice M, giving a cloud of points
(rank, degree) in the plane.  The lower convex hull of the cloud is the
slope polygon; its vertices are achieved by a unique increasing chain of
strict subobjects, the canonical filtration.  A lattice is semi-stable
when the polygon is a single segment, i.e. no strict subobject has slope
below the total slope.

Degrees here are the intrinsic ones (valuations divided by the
ramification index e).  The unnormalized polygon rescales both axes by
r = [F_q : F_p]; the normalized one does not.

Morphism spaces are computed exactly: a lattice map F satisfies
F.B1 = B2.phi(F), so F is a fixed point of the contraction
T(F) = B2.phi(F).B1^{-1}, and truncating at the contraction window gives
a finite F_q-linear system whose kernel is in bijection with the true
integral fixed points.
"""

import random
from fractions import Fraction
from typing import NamedTuple, Optional

from . import fqlinalg
from .errors import (
    AmbiguousMaximizer,
    FiltrationWitnessNotNested,
    InsufficientPrecision,
    NonConvergence,
    NotEffective,
)
from .modules import (
    EtalePhiModule,
    KisinLattice,
    lattice_to_file,
    strict_subobject,
    sub_quotient,
    tensor,
)
from .series import LaurentSeries
from .smatrix import SeriesMatrix, solve_columns
from .subobjects import PhiStableSubspace, enumerate_phi_stable_subspaces


class CloudPoint(NamedTuple):
    rank: int
    degree: Fraction
    witness: Optional[PhiStableSubspace]


class FiltrationStep(NamedTuple):
    rank: int
    degree: Fraction
    slope: Fraction
    basis: SeriesMatrix
    lattice: KisinLattice


class Polygon:
    """Convex chain from (0, 0) with strictly increasing slopes.

    vertices is the tuple of breakpoints as exact (Fraction, Fraction)
    pairs; collinear intermediate points are never vertices.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        vs = [(Fraction(x), Fraction(y)) for x, y in vertices]
        if not vs or vs[0] != (0, 0):
            raise ValueError("polygon must start at (0, 0)")
        slopes = []
        for (x0, y0), (x1, y1) in zip(vs, vs[1:]):
            if x1 <= x0:
                raise ValueError("polygon x-coordinates must increase")
            slopes.append(Fraction(y1 - y0, x1 - x0))
        if any(s1 <= s0 for s0, s1 in zip(slopes, slopes[1:])):
            raise ValueError("polygon slopes must strictly increase")
        self.vertices = tuple(vs)

    @classmethod
    def from_cloud(cls, points):
        """Lower convex hull of (x, y) points including (0, 0)."""
        best = {}
        for x, y in points:
            x, y = Fraction(x), Fraction(y)
            if x not in best or y < best[x]:
                best[x] = y
        pts = sorted(best.items())
        hull = []
        for pt in pts:
            while len(hull) >= 2:
                (ox, oy), (ax, ay) = hull[-2], hull[-1]
                if (ax - ox) * (pt[1] - oy) - (ay - oy) * (pt[0] - ox) <= 0:
                    hull.pop()
                else:
                    break
            hull.append(pt)
        return cls(hull)

    @property
    def endpoint(self):
        return self.vertices[-1]

    def slopes(self):
        return [Fraction(y1 - y0, x1 - x0)
                for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:])]

    def segments(self):
        return list(zip(self.vertices, self.vertices[1:]))

    def is_single_segment(self):
        return len(self.vertices) == 2

    def evaluate(self, x):
        x = Fraction(x)
        if not 0 <= x <= self.endpoint[0]:
            raise ValueError(f"x = {x} outside polygon range")
        for (x0, y0), (x1, y1) in self.segments():
            if x <= x1:
                return y0 + Fraction(y1 - y0, x1 - x0) * (x - x0)
        return self.endpoint[1]

    def scaled(self, fx, fy):
        return Polygon([(x * fx, y * fy) for x, y in self.vertices])

    def __eq__(self, other):
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        pts = ", ".join(f"({x}, {y})" for x, y in self.vertices)
        return f"Polygon([{pts}])"


def subobject_cloud(l, opts=None):
    """Every (rank, degree) pair of a strict subobject of l, with witness.

    Includes (0, 0) and the full lattice; one point per phi-stable
    subspace, so coincident pairs appear with multiplicity.
    """
    n = l.rank
    ambient = EtalePhiModule(l.ctx, l.e, n, l.B)
    points = [CloudPoint(0, Fraction(0), None)]
    for d in range(1, n):
        for s in enumerate_phi_stable_subspaces(ambient, d, opts):
            sub = strict_subobject(l, s.basis)
            points.append(CloudPoint(d, sub.degree(), s))
    points.append(CloudPoint(n, l.degree(), None))
    return points


def hn_polygon_normalized(l, opts=None, cloud=None):
    """Lower hull of the subobject cloud: x = rank, y = intrinsic degree."""
    cloud = cloud if cloud is not None else subobject_cloud(l, opts)
    return Polygon.from_cloud([(p.rank, p.degree) for p in cloud])


def hn_polygon(l, opts=None, cloud=None):
    """The slope polygon with both axes rescaled by r = [F_q : F_p]."""
    r = l.ctx.r
    return hn_polygon_normalized(l, opts, cloud).scaled(r, r)


def hn_filtration(l, opts=None, cloud=None):
    """The canonical chain of strict subobjects at the polygon vertices.

    Returns FiltrationStep entries in increasing rank, ending with the
    full lattice; the zero step is omitted.  A vertex carried by two
    distinct subspaces contradicts uniqueness of the filtration and
    raises AmbiguousMaximizer; a chain that fails to nest raises
    FiltrationWitnessNotNested.
    """
    cloud = cloud if cloud is not None else subobject_cloud(l, opts)
    poly = hn_polygon_normalized(l, cloud=cloud)
    n = l.rank
    steps = []
    for x, y in poly.vertices[1:]:
        rank = int(x)
        if rank == n:
            basis = SeriesMatrix.identity(l.ctx, n, l.B.min_prec())
            steps.append(FiltrationStep(n, l.degree(), l.slope(), basis, l))
            continue
        witnesses = [p.witness for p in cloud
                     if p.rank == rank and p.degree == y]
        if len(witnesses) > 1:
            raise AmbiguousMaximizer(
                f"{len(witnesses)} distinct subobjects at polygon vertex "
                f"({x}, {y})")
        w = witnesses[0]
        sub = strict_subobject(l, w.basis)
        steps.append(FiltrationStep(rank, sub.degree(), sub.slope(),
                                    w.basis, sub))
    for prev, cur in zip(steps, steps[1:]):
        for j in range(prev.basis.ncols):
            if solve_columns(cur.basis, prev.basis.column(j)) is None:
                raise FiltrationWitnessNotNested(
                    f"step of rank {prev.rank} is not contained in the "
                    f"step of rank {cur.rank}")
    return steps


def hn_graded_pieces(l, filtration=None, opts=None):
    """Successive quotients of the canonical filtration, as lattices."""
    steps = filtration if filtration is not None else hn_filtration(l, opts)
    pieces = []
    prev = None
    for step in steps:
        if prev is None:
            pieces.append(step.lattice)
        else:
            cols = []
            for j in range(prev.basis.ncols):
                coeffs = solve_columns(step.basis, prev.basis.column(j))
                if coeffs is None:
                    raise FiltrationWitnessNotNested(
                        "filtration steps do not nest")
                cols.append(coeffs)
            inner = SeriesMatrix.from_columns(l.ctx, cols)
            _, quot = sub_quotient(step.lattice, inner)
            pieces.append(quot)
        prev = step
    return pieces


def is_semistable(l, opts=None, cloud=None):
    """No strict subobject of slope below the total slope."""
    return hn_polygon_normalized(l, opts, cloud).is_single_segment()


def etale_rank(l, opts=None, cloud=None):
    """Rank of the maximal unramified-etale subobject of an effective lattice.

    Equals the length of the initial slope-zero segment of the normalized
    polygon (zero when the least slope is positive).
    """
    if not l.is_effective():
        raise NotEffective(
            "etale rank is defined for effective lattices only")
    poly = hn_polygon_normalized(l, opts, cloud)
    (x0, y0), (x1, y1) = poly.segments()[0]
    if y1 == y0:
        return int(x1)
    return 0


# ----------------------------------------------------------------- morphisms

def hom_space(l1, l2, max_iters=64):
    """F_q-basis of the module of lattice maps l1 -> l2.

    A map is an integral matrix F with F.B1 = B2.phi(F); equivalently a
    fixed point of T(F) = B2.phi(F).B1^{-1}.  Truncating at the window
    L > c/(p-1), with c the valuation drop of one application of T,
    reduces the fixed-point equation to a finite F_q-linear system;
    equations at negative exponents enforce integrality.  Window
    solutions lift to exact fixed points by iterating T.
    """
    if l1.ctx is not l2.ctx or l1.e != l2.e:
        raise ValueError("lattices live over different base rings")
    ctx = l1.ctx
    p = ctx.p
    B1, B2 = l1.B, l2.B
    B1i = B1.inverse()
    v2 = B2.min_valuation() or 0
    v1 = B1i.min_valuation() or 0
    c = max(0, -v2) + max(0, -v1)
    L = c // (p - 1) + 1
    lo = min(0, v2 + v1)
    n1, n2 = l1.rank, l2.rank

    outer = {}
    for i2 in range(n2):
        col = B2.column(i2)
        for j1 in range(n1):
            row = B1i.row(j1)
            outer[i2, j1] = [[col[a] * row[b] for b in range(n1)]
                             for a in range(n2)]

    unknowns = [(i2, j1, k) for i2 in range(n2) for j1 in range(n1)
                for k in range(L)]
    col_of = {u: idx for idx, u in enumerate(unknowns)}
    rows = []
    for a in range(n2):
        for b in range(n1):
            for t in range(lo, L):
                row = [0] * len(unknowns)
                for i2 in range(n2):
                    for j1 in range(n1):
                        s = outer[i2, j1][a][b]
                        for k in range(L):
                            val = s.coefficient(t - p * k)
                            if val:
                                row[col_of[i2, j1, k]] = val
                if t >= 0:
                    idx = col_of[a, b, t]
                    row[idx] = ctx.sub(row[idx], 1)
                if any(row):
                    rows.append(row)
    if rows:
        kernel = fqlinalg.kernel(ctx, rows)
    else:
        kernel = [[1 if i == j else 0 for i in range(len(unknowns))]
                  for j in range(len(unknowns))]

    prec_cap = min(B2.min_prec(), B1i.min_prec())
    target = prec_cap - c - 2
    if target <= L:
        raise InsufficientPrecision(
            f"morphism refinement needs precision above {L}, module "
            f"supports {target}")
    basis = []
    for vec in kernel:
        entries = [[LaurentSeries.from_terms(
            ctx,
            [(k, vec[col_of[i2, j1, k]]) for k in range(L)],
            prec_cap)
            for j1 in range(n1)] for i2 in range(n2)]
        F = SeriesMatrix(ctx, entries)
        for _ in range(max_iters):
            F2 = B2 @ F.frobenius() @ B1i
            if F2.agrees(F, target):
                break
            F = F2
        else:
            raise NonConvergence(
                f"morphism lift did not stabilise in {max_iters} steps")
        if (F.min_valuation() or 0) < 0:
            raise InsufficientPrecision(
                "lifted morphism is not integral; precision too low")
        if not (F @ B1).agrees(B2 @ F.frobenius(), target):
            raise NonConvergence("lifted morphism fails the defining relation")
        basis.append(F.truncate(target))
    return basis


# ---------------------------------------------------------------- experiment

class TensorExperimentReport:
    """Outcome of a semi-stability experiment on tensor products."""

    __slots__ = ("trials", "records", "failures")

    def __init__(self, trials, records, failures):
        self.trials = trials
        self.records = records
        self.failures = failures

    @property
    def ok(self):
        return not self.failures


def tensor_theorem_experiment(sampler, trials, seed=0, opts=None):
    """Check multiplicativity of semi-stability on sampled pairs.

    sampler(rng) must return a pair of semi-stable lattices over a common
    base.  For each pair the product is formed and tested for
    semi-stability and slope additivity; every violation is recorded with
    the serialized inputs, so a nonempty failures list is a reproducible
    counterexample.
    """
    rng = random.Random(seed)
    records = []
    failures = []
    for index in range(trials):
        l1, l2 = sampler(rng)
        cloud1 = subobject_cloud(l1, opts)
        cloud2 = subobject_cloud(l2, opts)
        if not (is_semistable(l1, cloud=cloud1)
                and is_semistable(l2, cloud=cloud2)):
            raise ValueError(
                f"sampler produced a non-semi-stable lattice at trial {index}")
        t = tensor(l1, l2)
        cloud_t = subobject_cloud(t, opts)
        stable = is_semistable(t, cloud=cloud_t)
        additive = t.slope() == l1.slope() + l2.slope()
        record = {
            "index": index,
            "slope_left": l1.slope(),
            "slope_right": l2.slope(),
            "slope_tensor": t.slope(),
            "semistable": stable,
            "slope_additive": additive,
        }
        records.append(record)
        if not (stable and additive):
            failures.append(dict(record,
                                 left=lattice_to_file(l1),
                                 right=lattice_to_file(l2)))
    return TensorExperimentReport(trials, records, failures)
