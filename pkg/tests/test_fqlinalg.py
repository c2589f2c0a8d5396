import random

import pytest

from kisinhn import fqlinalg as fl
from kisinhn.fields import context


def random_matrix(ctx, rng, nr, nc):
    return [[rng.randrange(ctx.q) for _ in range(nc)] for _ in range(nr)]


@pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (2, 2), (5, 1)])
def test_rref_idempotent_and_pivot_structure(p, r):
    ctx = context(p, r)
    rng = random.Random(7)
    for _ in range(20):
        m = random_matrix(ctx, rng, 4, 6)
        red, pivots = fl.rref(ctx, m)
        again, pivots2 = fl.rref(ctx, red)
        assert red == again and pivots == pivots2
        for i, c in enumerate(pivots):
            assert red[i][c] == 1
            for k in range(len(red)):
                if k != i:
                    assert red[k][c] == 0


@pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (2, 2)])
def test_kernel_vectors_annihilate_and_count(p, r):
    ctx = context(p, r)
    rng = random.Random(11)
    for _ in range(25):
        m = random_matrix(ctx, rng, 3, 5)
        ker = fl.kernel(ctx, m)
        assert len(ker) == 5 - fl.rank(ctx, m)
        for v in ker:
            assert all(x == 0 for x in fl.mat_vec(ctx, m, v))
        if len(ker) > 1:
            assert fl.rank(ctx, ker) == len(ker)


def test_kernel_bitpacked_matches_generic():
    ctx = context(2)
    rng = random.Random(3)
    for _ in range(30):
        m = random_matrix(ctx, rng, 4, 7)
        fast = fl.kernel(ctx, m)
        generic = fl._kernel_from_rref(ctx, *fl.rref(ctx, m), 7)
        assert sorted(fast) == sorted(generic)


@pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (2, 2)])
def test_solve_affine_roundtrip_and_inconsistency(p, r):
    ctx = context(p, r)
    rng = random.Random(5)
    hits = misses = 0
    for _ in range(40):
        a = random_matrix(ctx, rng, 4, 3)
        b = [rng.randrange(ctx.q) for _ in range(4)]
        sol = fl.solve_affine(ctx, a, b)
        if sol is None:
            # verify by brute force over a random sample of the domain
            for _ in range(50):
                x = [rng.randrange(ctx.q) for _ in range(3)]
                assert fl.mat_vec(ctx, a, x) != b
            misses += 1
        else:
            x0, ker = sol
            assert fl.mat_vec(ctx, a, x0) == b
            for v in ker:
                shifted = [ctx.add(s, t) for s, t in zip(x0, v)]
                assert fl.mat_vec(ctx, a, shifted) == b
            hits += 1
    assert hits and misses


def test_mat_mul_identity_and_associativity():
    ctx = context(3)
    rng = random.Random(9)
    a = random_matrix(ctx, rng, 3, 4)
    b = random_matrix(ctx, rng, 4, 2)
    c = random_matrix(ctx, rng, 2, 5)
    assert fl.mat_mul(ctx, fl.eye(3), a) == a
    assert fl.mat_mul(ctx, fl.mat_mul(ctx, a, b), c) == fl.mat_mul(
        ctx, a, fl.mat_mul(ctx, b, c)
    )
