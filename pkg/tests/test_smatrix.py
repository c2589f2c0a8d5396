import random

import pytest

from kisinhn.errors import InsufficientPrecision, SingularMatrix
from kisinhn.fields import context
from kisinhn.literals import parse_series
from kisinhn.series import LaurentSeries
from kisinhn.smatrix import (
    SeriesMatrix,
    hermite,
    kernel_field,
    lattice_intersect,
    lattice_key,
    lattice_relative_position,
    saturate,
    saturated_frame,
    smith_normal_form,
    solve_columns,
    unimodular_completion,
    val_det,
)

PREC = 24


def S(ctx, text, prec=PREC):
    return parse_series(text, ctx, prec)


def M(ctx, rows, prec=PREC):
    return SeriesMatrix(ctx, [[S(ctx, t, prec) for t in r] for r in rows])


def random_series(rng, ctx, min_exp, max_exp, prec=PREC, nonzero=False):
    while True:
        coeffs = {e: rng.randrange(ctx.q) for e in range(min_exp, max_exp + 1)}
        s = LaurentSeries.from_terms(ctx, coeffs.items(), prec)
        if not nonzero or not s.is_zero:
            return s


def random_matrix(rng, ctx, nr, nc, min_exp=0, max_exp=4, prec=PREC):
    return SeriesMatrix(ctx, [[random_series(rng, ctx, min_exp, max_exp, prec)
                               for _ in range(nc)] for _ in range(nr)])


def random_invertible(rng, ctx, n, prec=PREC):
    """I plus u-positive noise, scaled by random unit diagonal: certified unit det."""
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            tail = random_series(rng, ctx, 1, 4, prec)
            if i == j:
                unit = LaurentSeries.monomial(ctx, rng.randrange(1, ctx.q), 0, prec)
                row.append(unit + tail)
            else:
                row.append(tail)
        rows.append(row)
    return SeriesMatrix(ctx, rows)


def apply_random_column_ops(rng, m, steps=8):
    """Right-multiply by random elementary unimodular ops (same column span)."""
    cols = [list(c) for c in m.columns()]
    k = len(cols)
    ctx = m.ctx
    for _ in range(steps):
        kind = rng.randrange(3)
        if kind == 0 and k > 1:
            i, j = rng.sample(range(k), 2)
            cols[i], cols[j] = cols[j], cols[i]
        elif kind == 1:
            i = rng.randrange(k)
            unit = LaurentSeries.monomial(ctx, rng.randrange(1, ctx.q), 0, PREC)
            cols[i] = [a * unit for a in cols[i]]
        elif k > 1:
            i, j = rng.sample(range(k), 2)
            f = random_series(rng, ctx, 0, 3)
            cols[i] = [a + f * b for a, b in zip(cols[i], cols[j])]
    return SeriesMatrix.from_columns(ctx, cols)


# ------------------------------------------------------------- Smith form

@pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (2, 2), (5, 1)])
@pytest.mark.parametrize("shape", [(2, 2), (3, 3), (2, 3), (3, 2)])
def test_smith_round_trip(p, r, shape):
    ctx = context(p, r)
    rng = random.Random(1000 * p + 10 * r + shape[0] + 7 * shape[1])
    for trial in range(6):
        m = random_matrix(rng, ctx, *shape)
        try:
            form = smith_normal_form(m)
        except InsufficientPrecision:
            continue
        prod = form.u_left @ m @ form.v_right
        bound = prod.min_prec()
        for i in range(shape[0]):
            for j in range(shape[1]):
                expect = (LaurentSeries.monomial(ctx, 1, form.divisors[i], PREC)
                          if i == j and i < len(form.divisors)
                          else LaurentSeries.zero(ctx, PREC))
                assert prod.rows[i][j].agrees(expect, upto=min(bound, PREC))
        assert form.divisors == sorted(form.divisors)
        ident_l = form.u_left @ form.u_left_inv
        ident_r = form.v_right @ form.v_right_inv
        eye_l = SeriesMatrix.identity(ctx, shape[0], PREC)
        eye_r = SeriesMatrix.identity(ctx, shape[1], PREC)
        assert ident_l.agrees(eye_l, upto=min(ident_l.min_prec(), PREC))
        assert ident_r.agrees(eye_r, upto=min(ident_r.min_prec(), PREC))


def test_smith_unpacks_as_triple():
    ctx = context(2)
    m = M(ctx, [["u", "1"], ["0", "u^2"]])
    u_left, divisors, v_right = smith_normal_form(m)
    assert divisors == [0, 3]
    prod = u_left @ m @ v_right
    assert prod.rows[0][0].terms() == [(0, 1)]
    assert prod.rows[1][1].terms() == [(3, 1)]
    assert prod.rows[0][1].is_zero and prod.rows[1][0].is_zero


def test_smith_zero_matrix():
    ctx = context(3)
    z = SeriesMatrix.zeros(ctx, 2, 2, 5)
    with pytest.raises(InsufficientPrecision):
        smith_normal_form(z)
    form = smith_normal_form(z, assume_zero=True)
    assert form.divisors == []


def test_smith_precision_guard():
    ctx = context(2)
    rows = [[S(ctx, "u^2"), LaurentSeries.zero(ctx, 1)],
            [LaurentSeries.zero(ctx, 1), S(ctx, "u")]]
    m = SeriesMatrix(ctx, rows)
    with pytest.raises(InsufficientPrecision):
        smith_normal_form(m)
    form = smith_normal_form(m, assume_zero=True)
    assert form.divisors == [1, 2]


def test_val_det_hand_values():
    ctx = context(2)
    assert val_det(M(ctx, [["u^2", "0"], ["0", "u^3"]])) == 5
    assert val_det(M(ctx, [["u", "1"], ["0", "u"]])) == 2
    assert val_det(M(ctx, [["0", "u"], ["1", "0"]])) == 1
    assert val_det(M(ctx, [["1+u", "u^3"], ["u^-1", "u^2"]])) == 3


@pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (2, 2)])
def test_val_det_multiplicative(p, r):
    ctx = context(p, r)
    rng = random.Random(51 + p + r)
    for trial in range(5):
        a = random_matrix(rng, ctx, 3, 3, min_exp=-1, max_exp=3)
        b = random_matrix(rng, ctx, 3, 3, min_exp=0, max_exp=3)
        try:
            va, vb = val_det(a), val_det(b)
        except (InsufficientPrecision, SingularMatrix):
            continue
        assert val_det(a @ b) == va + vb


def test_relative_position_hand_values():
    ctx = context(2)
    eye = SeriesMatrix.identity(ctx, 2, PREC)
    assert lattice_relative_position(eye, M(ctx, [["1", "0"], ["0", "u"]])) == [0, 1]
    assert lattice_relative_position(M(ctx, [["u^-1", "0"], ["0", "1"]]), eye) == [0, 1]
    assert lattice_relative_position(eye, M(ctx, [["u^2", "0"], ["0", "u^2"]])) == [2, 2]


def test_relative_position_basis_independent():
    ctx = context(3)
    rng = random.Random(7)
    a = M(ctx, [["1", "0"], ["0", "u^2"]])
    b = M(ctx, [["u", "0"], ["0", "u^-1"]])
    base = lattice_relative_position(a, b)
    assert base == [-3, 1]
    for _ in range(4):
        ga = random_invertible(rng, ctx, 2)
        gb = random_invertible(rng, ctx, 2)
        assert lattice_relative_position(a @ ga, b @ gb) == base


# ------------------------------------------------------------ Hermite form

def test_hermite_shape_and_example():
    ctx = context(2)
    hf = hermite(M(ctx, [["u"], ["1"]]))
    assert hf.pivots == [(0, 1)]
    assert hf.matrix.rows[0][0].terms() == [(1, 1)]
    assert hf.matrix.rows[1][0].terms() == [(0, 1)]


def test_hermite_reduces_earlier_columns():
    ctx = context(2)
    # second pivot at row 1 with degree 2: first column entry there drops mod u^2
    m = M(ctx, [["1", "0"], ["1+u^2+u^3", "u^2"]])
    hf = hermite(m)
    assert hf.pivots == [(0, 0), (1, 2)]
    assert hf.matrix.rows[1][0].terms() == [(0, 1)]
    assert hf.matrix.rows[0][1].is_zero


def test_hermite_canonical_under_recombination():
    rng = random.Random(23)
    for p, r in [(2, 1), (3, 1), (2, 2)]:
        ctx = context(p, r)
        for trial in range(6):
            m = random_matrix(rng, ctx, 3, 2, min_exp=0, max_exp=3)
            try:
                hf = hermite(m)
            except (InsufficientPrecision, SingularMatrix):
                continue
            other = apply_random_column_ops(rng, m)
            hf2 = hermite(other)
            assert hf.pivots == hf2.pivots
            assert lattice_key(hf, 12) == lattice_key(hf2, 12)
            rows = hf.pivot_rows
            assert rows == sorted(rows) and len(set(rows)) == len(rows)
            for idx, (ri, di) in enumerate(hf.pivots):
                assert hf.matrix.rows[ri][idx].terms() == [(di, 1)]
                for jdx in range(idx):
                    entry = hf.matrix.rows[ri][jdx]
                    assert all(e < di for e, _ in entry.terms())
                for jdx in range(idx + 1, len(hf.pivots)):
                    assert hf.matrix.rows[ri][jdx].is_zero


def test_hermite_precision_guard_within_row():
    ctx = context(2)
    rows = [[LaurentSeries.zero(ctx, 0), S(ctx, "u^2")],
            [S(ctx, "1"), S(ctx, "0")]]
    with pytest.raises(InsufficientPrecision):
        hermite(SeriesMatrix(ctx, rows))


def test_hermite_dependent_columns():
    ctx = context(2)
    m = M(ctx, [["1", "1"], ["u", "u"]])
    with pytest.raises((SingularMatrix, InsufficientPrecision)):
        hermite(m)


# ------------------------------------------------- saturation and frames

def test_saturated_frame_example():
    ctx = context(2)
    w, pivot_rows = saturated_frame(M(ctx, [["u"], ["1"]]))
    assert pivot_rows == [1]
    assert w.rows[1][0].terms() == [(0, 1)]
    assert w.rows[0][0].terms() == [(1, 1)]


def test_saturated_frame_identity_block():
    rng = random.Random(77)
    ctx = context(3)
    for trial in range(5):
        # saturated by construction: unit block on top of noise
        top = SeriesMatrix.identity(ctx, 2, PREC)
        noise = random_matrix(rng, ctx, 2, 2, min_exp=0, max_exp=3)
        m = SeriesMatrix(ctx, list(top.rows) + list(noise.rows))
        shuffled = apply_random_column_ops(rng, m)
        w, pivot_rows = saturated_frame(shuffled)
        assert pivot_rows == [0, 1]
        for i, r in enumerate(pivot_rows):
            for j in range(2):
                entry = w.rows[r][j]
                if i == j:
                    assert entry.terms() == [(0, 1)]
                else:
                    assert entry.is_zero


def test_saturated_frame_rejects_unsaturated():
    ctx = context(2)
    with pytest.raises(SingularMatrix):
        saturated_frame(M(ctx, [["u"], ["u^2"]]))


def test_saturate_hand_values():
    ctx = context(2)
    assert saturate(M(ctx, [["u"], ["0"]])).rows[0][0].terms() == [(0, 1)]
    got = saturate(M(ctx, [["u"], ["u^2"]]))
    assert got.rows[0][0].terms() == [(0, 1)]
    assert got.rows[1][0].terms() == [(1, 1)]
    kept = saturate(M(ctx, [["u"], ["1"]]))
    assert lattice_key(hermite(kept), 12) == lattice_key(hermite(M(ctx, [["u"], ["1"]])), 12)


def test_saturate_full_rank_gives_standard_lattice():
    ctx = context(3)
    got = saturate(M(ctx, [["u", "0"], ["u^2", "u^3"]]))
    eye = SeriesMatrix.identity(ctx, 2, PREC)
    assert lattice_key(hermite(got), 10) == lattice_key(hermite(eye), 10)


def test_saturate_idempotent_on_random_spans():
    rng = random.Random(40)
    ctx = context(2)
    for trial in range(6):
        m = random_matrix(rng, ctx, 3, 2, min_exp=0, max_exp=3)
        try:
            s1 = saturate(m)
        except (SingularMatrix, InsufficientPrecision):
            continue
        s2 = saturate(s1)
        assert lattice_key(hermite(s1), 10) == lattice_key(hermite(s2), 10)


def test_unimodular_completion():
    ctx = context(2)
    m = M(ctx, [["u"], ["1"]])
    p = unimodular_completion(m)
    assert p.ncols == 2 and val_det(p) == 0
    assert [e.terms() for e in p.column(0)] == [[(1, 1)], [(0, 1)]]


# ------------------------------------------------------ field-level solves

def test_kernel_field():
    ctx = context(2)
    m = M(ctx, [["1", "u"], ["u", "u^2"]])
    kern = kernel_field(m, assume_zero=True)
    assert len(kern) == 1
    image = m @ SeriesMatrix.from_columns(ctx, kern)
    assert image.is_zero()


def test_kernel_field_trivial():
    ctx = context(2)
    assert kernel_field(M(ctx, [["1", "0"], ["0", "u"]])) == []


def test_solve_columns():
    ctx = context(3)
    m = M(ctx, [["1", "u"], ["u", "1"]])
    v = [S(ctx, "1+u^2"), S(ctx, "2*u")]
    x = solve_columns(m, v)
    recon = m @ SeriesMatrix.from_columns(ctx, [x])
    assert recon.rows[0][0].agrees(v[0]) and recon.rows[1][0].agrees(v[1])


def test_solve_columns_inconsistent():
    ctx = context(2)
    m = M(ctx, [["1"], ["u"]])
    v = [S(ctx, "0"), S(ctx, "1")]
    assert solve_columns(m, v) is None


def test_inverse_round_trip():
    rng = random.Random(99)
    for p, r in [(2, 1), (3, 1), (2, 2)]:
        ctx = context(p, r)
        m = random_invertible(rng, ctx, 3)
        prod = m @ m.inverse()
        eye = SeriesMatrix.identity(ctx, 3, PREC)
        assert prod.agrees(eye, upto=min(prod.min_prec(), PREC))


# --------------------------------------------------- lattice intersection

def test_intersect_full_full():
    ctx = context(2)
    a = M(ctx, [["1", "0"], ["0", "u"]])
    b = M(ctx, [["u", "0"], ["0", "1"]])
    got = lattice_intersect(2, a, b)
    want = hermite(M(ctx, [["u", "0"], ["0", "u"]])).matrix
    assert lattice_key(hermite(got), 10) == lattice_key(hermite(want), 10)


def test_intersect_mixed_rank_example():
    ctx = context(2)
    a = M(ctx, [["1", "0"], ["1", "u"]])          # columns e1+e2, u*e2
    b = M(ctx, [["1"], ["0"]])                     # span(e1)
    got = lattice_intersect(2, a, b)
    assert got.ncols == 1
    assert got.column(0)[0].terms() == [(1, 1)]
    assert got.column(0)[1].is_zero


def test_intersect_transverse_lines_is_zero():
    ctx = context(2)
    a = M(ctx, [["1"], ["0"]])
    b = M(ctx, [["1"], ["1"]])
    assert lattice_intersect(2, a, b) is None


def test_intersect_commutes_and_members_lie_in_both():
    rng = random.Random(5)
    ctx = context(3)
    for trial in range(5):
        a = random_matrix(rng, ctx, 3, 2, min_exp=0, max_exp=2)
        b = random_matrix(rng, ctx, 3, 2, min_exp=0, max_exp=2)
        try:
            ab = lattice_intersect(3, a, b)
            ba = lattice_intersect(3, b, a)
        except (SingularMatrix, InsufficientPrecision):
            continue
        if ab is None:
            assert ba is None
            continue
        assert lattice_key(hermite(ab), 8) == lattice_key(hermite(ba), 8)
        for col in ab.columns():
            xa = solve_columns(a, col)
            xb = solve_columns(b, col)
            assert xa is not None and xb is not None
            for s in xa + xb:
                assert s.is_zero or s.val >= 0
        again = lattice_intersect(3, ab, ab)
        assert lattice_key(hermite(again), 8) == lattice_key(hermite(ab), 8)


def test_intersect_idempotent_full():
    ctx = context(2)
    a = M(ctx, [["1", "u^2"], ["0", "u"]])
    got = lattice_intersect(2, a, a)
    assert lattice_key(hermite(got), 10) == lattice_key(hermite(a), 10)
