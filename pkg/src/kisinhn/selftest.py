"""Self-contained property suite behind the `selftest` subcommand.

Every check is deterministic for a fixed seed: per-check RNGs are derived
from the global seed and the check name, no timing or environment data is
recorded, and the report is emitted as sorted JSON lines, so two runs with
the same seed produce byte-identical output.
"""

import json
import random
from fractions import Fraction

from .errors import InsufficientPrecision
from .fields import context
from .filtered import alt_degree_bound_check
from .hn import (
    hn_filtration,
    hn_graded_pieces,
    hn_polygon_normalized,
    hom_space,
    is_semistable,
    subobject_cloud,
    tensor_theorem_experiment,
)
from .kempf import STABLE, kempf_filtration, kempf_grid_oracle
from .literals import parse_series
from .modules import (
    EtalePhiModule,
    KisinLattice,
    base_change,
    lattice_from_file,
    lattice_to_file,
)
from .series import LaurentSeries
from .smatrix import SeriesMatrix, val_det
from .subobjects import enumerate_phi_stable_subspaces
from .variety import enumerate_candidate_polygons, enumerate_points, stratify

DEFAULT_SEED = 20260819
PREC = 20


# ---------------------------------------------------------------- samplers

def _mat(ctx, rows, prec=PREC):
    return SeriesMatrix(ctx, [[parse_series(t, ctx, prec) for t in r]
                              for r in rows])


def _lattice(ctx, a_rows, e=1, prec=PREC):
    amb = EtalePhiModule(ctx, e, len(a_rows), _mat(ctx, a_rows, prec))
    return KisinLattice(amb)


def _random_unimodular(rng, ctx, n, prec=PREC):
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            coeffs = {k: rng.randrange(ctx.q) for k in range(1, 4)}
            tail = LaurentSeries.from_terms(ctx, coeffs.items(), prec)
            if i == j:
                unit = LaurentSeries.monomial(ctx, rng.randrange(1, ctx.q), 0, prec)
                row.append(unit + tail)
            else:
                row.append(tail)
        rows.append(row)
    return SeriesMatrix(ctx, rows)


def _random_module(rng, ctx, n, e=1, height=2, prec=PREC):
    diag = [[LaurentSeries.monomial(ctx, 1, rng.randrange(0, height + 1), prec)
             if i == j else LaurentSeries.zero(ctx, prec)
             for j in range(n)] for i in range(n)]
    a = _random_unimodular(rng, ctx, n, prec) @ SeriesMatrix(ctx, diag) \
        @ _random_unimodular(rng, ctx, n, prec)
    return EtalePhiModule(ctx, e, n, a)


def _semistable_pool(rng, ctx, count, prec=PREC):
    pool = []
    while len(pool) < count:
        if rng.random() < 0.3:
            s = rng.randrange(0, 3)
            pool.append(_lattice(ctx, [[f"u^{s}"]], prec=prec))
            continue
        lat = KisinLattice(_random_module(rng, ctx, 2, height=1, prec=prec))
        if is_semistable(lat):
            pool.append(lat)
    return pool


# ------------------------------------------------------------------ checks

def _check_twist_slopes(rng):
    cases = 0
    for q in (2, 3, 4):
        ctx = context(2 if q != 3 else 3, 2 if q == 4 else 1)
        for e in (1, 2):
            for s in range(-2, 4):
                lat = _lattice(ctx, [[f"u^{s * e}" if s * e else "1"]], e=e)
                if lat.slope() != s:
                    return False, f"twist slope {s} wrong for q={q}, e={e}"
                cases += 1
    return True, f"{cases} unit-rank twists have exact slope"


def _check_degree_axioms(rng):
    ctx2, ctx3 = context(2), context(3)
    for i in range(40):
        ctx = ctx2 if i % 2 else ctx3
        e = 1 + (i % 2)
        m = _random_module(rng, ctx, 2 + (i % 2), e=e)
        lat = KisinLattice(m)
        if lat.degree() != Fraction(val_det(lat.B), e):
            return False, "degree disagrees with determinant valuation"
        t = 1 + (i % 2)
        shifted = KisinLattice(m, lat.g.shift(t))
        defect = Fraction(m.n * t * (ctx.p - 1), e)
        if shifted.degree() != lat.degree() + defect:
            return False, f"defect formula failed at t={t}"
    for i in range(10):
        a = rng.randrange(0, 3)
        b = rng.randrange(0, 3)
        block = _lattice(ctx2, [[f"u^{a}", "0"], ["0", f"u^{b}"]])
        top = _lattice(ctx2, [[f"u^{a}"]])
        bot = _lattice(ctx2, [[f"u^{b}"]])
        if block.degree() != top.degree() + bot.degree():
            return False, "split additivity failed"
    return True, "40 determinant identities, 40 defects, 10 splits exact"


def _check_hn_hull(rng):
    ctx = context(2)
    fixtures = [
        ([["1", "0"], ["0", "u"]], (Fraction(0), Fraction(1))),
        ([["0", "u"], ["1", "0"]], (Fraction(1, 2),)),
        ([["u", "1"], ["0", "u"]], None),
    ]
    for rows, expected in fixtures:
        lat = _lattice(ctx, rows)
        cloud = subobject_cloud(lat)
        poly = hn_polygon_normalized(lat, cloud=cloud)
        for point in cloud:
            if Fraction(point.degree) < poly.evaluate(Fraction(point.rank)):
                return False, "cloud point below hull"
        if poly.endpoint != (lat.rank, lat.degree()):
            return False, "hull endpoint mismatch"
        steps = hn_filtration(lat, cloud=cloud)
        for piece in hn_graded_pieces(lat, steps):
            if not is_semistable(piece):
                return False, "graded piece not semistable"
        slopes = tuple(poly.slopes())
        if expected is not None and slopes != expected:
            return False, f"unexpected slopes {slopes}"
    return True, "3 modules: hulls, endpoints, semistable gradeds"


def _check_tensor(rng):
    ctx = context(2)
    pool = _semistable_pool(random.Random(rng.random()), ctx, 8, prec=36)

    def sampler(r):
        return r.choice(pool), r.choice(pool)

    report = tensor_theorem_experiment(sampler, trials=6, seed=rng.randrange(10 ** 6))
    if not report.ok:
        return False, f"{len(report.failures)} tensor counterexamples"
    return True, f"{report.trials} products semistable with additive slope"


def _check_filtration_bound(rng):
    ctx = context(2)
    checked = 0
    for _ in range(12):
        m = _random_module(rng, ctx, 2)
        lat = KisinLattice(m)
        m0 = _random_unimodular(rng, ctx, 2)
        for sub in enumerate_phi_stable_subspaces(lat.parent, 1):
            lhs, rhs, holds = alt_degree_bound_check(lat, sub, m0)
            if not holds:
                return False, f"bound violated: {lhs} < {rhs}"
            checked += 1
    split = _lattice(ctx, [["1", "0"], ["0", "u"]])
    e2 = SeriesMatrix(ctx, [[parse_series("0", ctx, PREC)],
                            [parse_series("1", ctx, PREC)]])
    for a, b in ((0, 0), (1, -1), (2, 3)):
        diag = _mat(ctx, [[f"u^{a}" if a else "1", "0"],
                          ["0", f"u^{b}" if b else "1"]])
        lhs, rhs, holds = alt_degree_bound_check(split, e2, diag)
        if not (holds and lhs == rhs):
            return False, "split case not an equality"
    return True, f"{checked} bounds hold; 3 split equalities"


def _check_kempf(rng):
    ctx = context(2)
    agree = 0
    for rows in ([[1, 0, 0, 0]], [[0, 1, 0, 0]], [[1, 1, 0, 1]],
                 [[1, 0, 0, 1]], [[0, 1, 1, 0]],
                 [[1, 0, 0, 0], [0, 1, 0, 0]],
                 [[1, 0, 0, 0], [0, 1, 1, 0]]):
        res = kempf_filtration(ctx, rows, 2, 2)
        vsq, pairs = kempf_grid_oracle(ctx, rows, 2, 2, width=4)
        if res is STABLE:
            if vsq is not None:
                return False, f"engine stable, grid found {vsq}"
        else:
            if vsq != res.value_sq or res.pair not in pairs:
                return False, "engine/grid maximizer mismatch"
            if res.pair.filt_m.degree() != 0 or res.pair.filt_n.degree() != 0:
                return False, "maximizer not mean-zero"
        agree += 1
    return True, f"{agree} subspaces agree with the grid oracle"


def _check_hom_vanishing(rng):
    ctx = context(2)
    unit = _lattice(ctx, [["1"]])
    twist = _lattice(ctx, [["u"]])
    if hom_space(unit, twist):
        return False, "Hom into higher slope is nonzero"
    for s in (0, 1, 2):
        ends = hom_space(_lattice(ctx, [[f"u^{s}" if s else "1"]]),
                         _lattice(ctx, [[f"u^{s}" if s else "1"]]))
        if len(ends) != 1:
            return False, f"End of a twist has dimension {len(ends)}"
    pairs = 0
    for _ in range(5):
        a = rng.randrange(0, 2)
        b = a + 1 + rng.randrange(0, 2)
        if hom_space(_lattice(ctx, [[f"u^{a}" if a else "1"]]),
                     _lattice(ctx, [[f"u^{b}"]])):
            return False, "slope-separated Hom is nonzero"
        pairs += 1
    return True, f"unit/twist Hom zero; End one-dimensional; {pairs} pairs"


def _check_base_change(rng):
    ctx = context(2)
    for rows in ([["1", "0"], ["0", "u"]], [["0", "u"], ["1", "0"]]):
        lat = _lattice(ctx, rows)
        up = base_change(lat, "unramified", 2)
        if hn_polygon_normalized(up) != hn_polygon_normalized(lat):
            return False, "normalized polygon moved under unramified change"
    lat3 = _lattice(context(3), [["1", "0"], ["0", "u"]])
    tame = base_change(lat3, "tame", 2)
    if tame.degree() != lat3.degree():
        return False, "degree moved under tame change"
    return True, "unramified polygons and tame degrees invariant"


def _check_variety(rng):
    ctx = context(2)
    m = EtalePhiModule(ctx, 1, 2, SeriesMatrix.identity(ctx, 2, PREC))
    enum = enumerate_points(m, (0, 1))
    if len(enum.points) != 3 or enum.completeness_flag != "certified":
        return False, f"expected 3 certified points, got {enum!r}"
    if any(val_det(lat.g) != 1 for lat in enum.points):
        return False, "determinant constraint violated"
    stratify(enum)
    if set(enum.invariants_J.values()) != {frozenset({1})}:
        return False, "contact invariants wrong"
    m3 = EtalePhiModule(context(3), 1, 2,
                        SeriesMatrix.identity(context(3), 2, PREC))
    enum3 = enumerate_points(m3, (0, 1))
    if enum3.points or enum3.completeness_flag != "det-infeasible":
        return False, "p=3 case not reported det-infeasible"
    return True, "3 certified points; odd-p case det-infeasible"


def _check_figures(rng):
    counts = {(0, 0, 1): 3, (-1, 0, 1): 4, (0, 0): 1}
    for nu, want in counts.items():
        cands = enumerate_candidate_polygons(nu)
        if len(cands) != want:
            return False, f"{len(cands)} candidates for nu={nu}, want {want}"
        if len({c.contact for c in cands}) != want:
            return False, f"contact classes collide for nu={nu}"
    return True, "candidate counts 3/4/1 with distinct contact classes"


def _check_precision_surfaced(rng):
    ctx = context(2)
    try:
        EtalePhiModule(ctx, 1, 1,
                       SeriesMatrix(ctx, [[parse_series("u", ctx, 1)]]))
    except InsufficientPrecision:
        return True, "uncertifiable Frobenius raises, not silently accepted"
    return False, "tiny precision slipped through"


def _check_round_trip(rng):
    ctx = context(2)
    lat = _lattice(ctx, [["u + u^2", "1"], ["0", "u"]])
    text = lattice_to_file(lat)
    again = lattice_to_file(lattice_from_file(text))
    if text != again:
        return False, "serialize(parse(file)) changed the file"
    return True, "module file round-trip is idempotent"


CHECKS = (
    ("twist-slopes", _check_twist_slopes),
    ("degree-axioms", _check_degree_axioms),
    ("hn-hull", _check_hn_hull),
    ("tensor-semistability", _check_tensor),
    ("filtration-bound", _check_filtration_bound),
    ("kempf-grid", _check_kempf),
    ("hom-vanishing", _check_hom_vanishing),
    ("base-change", _check_base_change),
    ("variety-points", _check_variety),
    ("figure-counts", _check_figures),
    ("precision-surfaced", _check_precision_surfaced),
    ("round-trip", _check_round_trip),
)


def run_selftest(seed=DEFAULT_SEED):
    """Run every check; returns (all_ok, report_text).

    The report is one JSON object per line (sorted keys) plus a summary
    line; it contains no timing or environment data, so identical seeds
    give identical bytes.
    """
    lines = []
    failed = 0
    for name, fn in CHECKS:
        rng = random.Random(f"{seed}:{name}")
        try:
            ok, detail = fn(rng)
        except Exception as err:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(err).__name__}: {err}"
        failed += 0 if ok else 1
        lines.append(json.dumps({"check": name, "detail": detail, "ok": ok},
                                sort_keys=True))
    lines.append(json.dumps(
        {"checks": len(CHECKS), "failed": failed, "ok": failed == 0,
         "seed": seed}, sort_keys=True))
    return failed == 0, "\n".join(lines) + "\n"
