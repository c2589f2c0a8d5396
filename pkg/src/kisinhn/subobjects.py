"""Enumeration of phi-stable subspaces of a p-torsion etale phi-module.

A rank-d subobject of the generic fibre is the same as a d-dimensional
subspace V of F_q((u))^n stable under x -> A.phi(x).  Each V is recorded by
the canonical echelon basis of its lattice V cap F_q[[u]]^n.

Two enumeration strategies are provided.

``hensel`` (default) solves the stability equation coefficient by
coefficient in frame coordinates.  A subspace whose mod-u reduction has a
unit minor at rows R has a unique basis W with identity block at rows R and
an unknown block X at the complementary rows R'; stability of the span
reads

    G(X) = A[R',R] + A[R',R'].phi(X) - X.(A[R,R] + A[R,R'].phi(X)) = 0.

The u^0 coefficient is a finite sweep.  For m >= 1 the u^m coefficient is
linear in the level-m unknown x_m with a fixed matrix
Lambda_0 = A_0[R,R] + A_0[R,R'].x_0, so each branch either extends
uniquely, splits q^s ways per row (s = corank of Lambda_0), or dies on an
inconsistent level.  Two distinct stable subspaces differ in frame
coordinates by eps with (p-1).val(eps) <= delta (multiply the difference
of their stability equations by the adjugate of the induced block), delta
being the determinant valuation of the (twisted-integral) matrix, so a
branch surviving to level K > delta/(p-1) sits in the contraction basin
of at most one stable subspace.  With T(S) = saturate(A.phi(S)), iterating
T from the truncated frame until the canonical key stabilises through the
target precision converges exactly to that subspace; branches that never
stabilise are discarded with a log record.

``seeds`` iterates T directly from every frame truncated at a seed
precision N0 > c/(p-1) (c the contraction constant of the pair (A, A^-1)),
keeping the seeds whose canonical keys stabilise.  Slower and simpler; kept
as an independent cross-check.  A seed caught in a cycle never stabilises
and is discarded with a log record, so divergence shows up as documented
missing output rather than an exception.
"""

import itertools
import logging
import math

from . import fqlinalg
from .errors import (
    BudgetExceeded,
    InsufficientPrecision,
    NonConvergence,
    SeedPrecisionTooSmall,
    SingularMatrix,
)
from .series import LaurentSeries
from .smatrix import (
    HermiteForm,
    SeriesMatrix,
    hermite,
    lattice_key,
    saturate,
    val_det,
)

log = logging.getLogger(__name__)


class EnumerationOptions:
    """Tuning knobs for subspace enumeration.

    seed_precision / target_precision default to bounds computed from the
    module (contraction constant, determinant valuation, stated precision);
    max_iters bounds fixed-point refinement loops; max_nodes bounds the
    total work of a single enumeration.
    """

    __slots__ = ("method", "seed_precision", "target_precision", "max_iters",
                 "max_nodes")

    def __init__(self, method="hensel", seed_precision=None,
                 target_precision=None, max_iters=64, max_nodes=2_000_000):
        if method not in ("hensel", "seeds"):
            raise ValueError(f"unknown enumeration method {method!r}")
        self.method = method
        self.seed_precision = seed_precision
        self.target_precision = target_precision
        self.max_iters = max_iters
        self.max_nodes = max_nodes


class PhiStableSubspace:
    """A phi-stable subspace, held as the canonical basis of its saturation.

    basis is an n x dim SeriesMatrix in column echelon form whose entries
    are verified through u^verified_prec; key is the hashable canonical
    form used for deduplication and ordering.
    """

    __slots__ = ("dim", "basis", "pivot_rows", "verified_prec", "key")

    def __init__(self, dim, basis, pivot_rows, verified_prec, key):
        self.dim = dim
        self.basis = basis
        self.pivot_rows = pivot_rows
        self.verified_prec = verified_prec
        self.key = key

    def __repr__(self):
        return (f"PhiStableSubspace(dim={self.dim}, "
                f"pivot_rows={self.pivot_rows}, prec={self.verified_prec})")


def _effective_shift(m):
    """Smallest s >= 0 with u^(s.e) A integral, and the shifted matrix."""
    minval = m.A.min_valuation()
    if minval is None or minval >= 0:
        return 0, m.A
    s = -(minval // m.e)
    return s, m.A.shift(s * m.e)


def _certificate_level(delta, p):
    """Smallest branch depth that pins at most one stable subspace per
    residual cell: distinct stable subspaces separate by level
    delta/(p-1), and exceeding that depth also places the truncated frame
    inside the contraction basin ((p-1).K > delta)."""
    return delta // (p - 1) + 2


def _all_code_matrices(q, nr, nc):
    for flat in itertools.product(range(q), repeat=nr * nc):
        yield [list(flat[i * nc:(i + 1) * nc]) for i in range(nr)]


def _codes_sub(a0, rows, cols):
    return [[a0[i][j] for j in cols] for i in rows]


def _level0_residual(ctx, a_BbR, a_BB, a_RR, a_RRb, x):
    t = fqlinalg.mat_sub(
        ctx,
        fqlinalg.mat_mul(ctx, a_BB, x),
        fqlinalg.mat_mul(ctx, x, a_RR),
    )
    t = fqlinalg.mat_sub(
        ctx, t, fqlinalg.mat_mul(ctx, x, fqlinalg.mat_mul(ctx, a_RRb, x)))
    return [[ctx.add(p, q) for p, q in zip(ra, rt)]
            for ra, rt in zip(a_BbR, t)]


def _levels_matrix(ctx, levels, nr, nc, prec):
    """SeriesMatrix whose (i, j) entry is sum_m levels[m][i][j] u^m."""
    rows = []
    for i in range(nr):
        row = []
        for j in range(nc):
            row.append(LaurentSeries.from_terms(
                ctx, [(m, lv[i][j]) for m, lv in enumerate(levels)], prec))
        rows.append(row)
    return SeriesMatrix(ctx, rows)


def _frame(ctx, n, R, Rbar, x_matrix, prec):
    """n x d basis with identity block at rows R and x_matrix at rows Rbar."""
    d = len(R)
    zero = LaurentSeries.zero(ctx, prec)
    one = LaurentSeries.one(ctx, prec)
    rows = [[zero] * d for _ in range(n)]
    for j, r in enumerate(R):
        rows[r] = [one if k == j else zero for k in range(d)]
    for bi, r in enumerate(Rbar):
        rows[r] = list(x_matrix.rows[bi])
    return SeriesMatrix(ctx, rows)


def _in_cell(m, R, Rbar, X, depth):
    """span(m) + u^depth.O^n == span(frame(X)) + u^depth.O^n.

    The frame cell {V : V_Rbar = X.V_R mod u^depth} and span(m) + u^depth
    both have colength depth.(n-d), so the one-directional inclusion
    tested here (column c lies in the cell iff c_Rbar = X.c_R mod u^depth)
    is equality of the augmented lattices.  Unlike comparing canonical
    keys, this pins frame coordinates with no distortion from pivot
    degrees."""
    for j in range(m.ncols):
        col_R = [m.rows[r][j] for r in R]
        for bi, rb in enumerate(Rbar):
            diff = m.rows[rb][j]
            for k, c in enumerate(col_R):
                diff = diff - X.rows[bi][k] * c
            if not diff.is_zero and diff.val < depth:
                return False
    return True


def _refine_to_target(A, S, target, max_iters, cell=None):
    """Iterate T(S) = saturate(A.phi(S)) until the canonical key is stable
    through u^target; returns the stable HermiteForm.

    cell: optional (R, Rbar, X, depth) frame cell; abort (returning None)
    as soon as an iterate leaves it.  Stable subspaces in distinct cells
    are distinct, so a start that is the truncation of a stable subspace
    through u^depth has every iterate inside its cell and the guard never
    fires; an orbit that stays in the cell has consecutive iterates
    u^depth-close, which forces convergence when (p-1).depth > delta.  The
    guard thus cuts off exactly the wandering orbits."""
    h = hermite(S)
    for _ in range(max_iters):
        S2 = saturate(A @ S.frobenius())
        h2 = hermite(S2)
        if (h.matrix.min_prec() >= target and h2.matrix.min_prec() >= target
                and lattice_key(h2, target) == lattice_key(h, target)):
            return h2
        if cell is not None and not _in_cell(h2.matrix, *cell):
            return None
        S, h = S2, h2
    raise NonConvergence(
        f"fixed-point refinement did not stabilise within {max_iters} "
        f"iterations at precision {target}")


def _canonical_subspace(hf, target):
    basis = hf.matrix.truncate(target)
    canon = HermiteForm(basis, list(hf.pivots))
    return PhiStableSubspace(basis.ncols, basis, tuple(canon.pivot_rows),
                             target, lattice_key(canon, target))


def enumerate_phi_stable_subspaces(m, d, opts=None):
    """All d-dimensional phi-stable subspaces of the generic fibre of m.

    Returns a deterministically ordered list of PhiStableSubspace.  d must
    lie in 1..n; the zero subspace is trivial and left to callers.
    """
    opts = opts or EnumerationOptions()
    n = m.n
    if not 1 <= d <= n:
        raise ValueError(f"subspace dimension {d} out of range 1..{n}")
    if d == n:
        prec = m.A.min_prec()
        hf = hermite(SeriesMatrix.identity(m.ctx, n, prec))
        return [_canonical_subspace(hf, prec)]
    if opts.method == "seeds":
        return _enumerate_seeds(m, d, opts)
    return _enumerate_hensel(m, d, opts)


def _enumerate_hensel(m, d, opts):
    ctx = m.ctx
    n, p = m.n, ctx.p
    s, A = _effective_shift(m)
    delta = m.val_det_A + n * s * m.e
    P_A = A.min_prec()
    K = _certificate_level(delta, p)
    cap = P_A - delta - 2
    target = opts.target_precision if opts.target_precision is not None else cap
    target = max(target, K)
    if target > cap:
        raise InsufficientPrecision(
            f"enumeration needs basis precision {target} but the module "
            f"supports at most {cap} (matrix precision {P_A}, determinant "
            f"valuation {delta}); raise the module precision")

    a0 = A.reduction_mod_u()
    # level k of the residual closure only reads coefficients below u^K and
    # the certificate only needs a margin of delta digits over the cell, so
    # branching arithmetic runs on truncations of the working precision
    w = K + delta + 3
    A_w = A.truncate(w) if w < P_A else None
    found = {}
    nodes = 0
    for R in itertools.combinations(range(n), d):
        Rbar = tuple(i for i in range(n) if i not in R)
        a_RR = _codes_sub(a0, R, R)
        a_RRb = _codes_sub(a0, R, Rbar)
        a_BbR = _codes_sub(a0, Rbar, R)
        a_BB = _codes_sub(a0, Rbar, Rbar)
        A_RR = A.submatrix(R, R).truncate(K + 1)
        A_RRb = A.submatrix(R, Rbar).truncate(K + 1)
        A_BbR = A.submatrix(Rbar, R).truncate(K + 1)
        A_BB = A.submatrix(Rbar, Rbar).truncate(K + 1)

        def residual(levels):
            X = _levels_matrix(ctx, levels, n - d, d, K + 1)
            phiX = X.frobenius()
            return (A_BbR + A_BB @ phiX - X @ A_RR - X @ (A_RRb @ phiX))

        stack = []
        for x0 in _all_code_matrices(ctx.q, n - d, d):
            nodes += 1
            g0 = _level0_residual(ctx, a_BbR, a_BB, a_RR, a_RRb, x0)
            if any(any(row) for row in g0):
                continue
            stack.append([x0])
        # kernel of Lambda_0^T is shared by every row equation of a branch
        stack.reverse()
        while stack:
            if nodes > opts.max_nodes:
                raise BudgetExceeded(
                    f"subspace enumeration exceeded {opts.max_nodes} nodes")
            levels = stack.pop()
            lvl = len(levels)
            if lvl >= K:
                nodes += 1
                sub = _certify(ctx, A, A_w, w, n, R, Rbar, levels, K, target,
                               opts.max_iters, P_A)
                if sub is not None:
                    found.setdefault(sub.key, sub)
                continue
            nodes += 1
            G = residual(levels)
            g_lvl = [[G.rows[i][j].coefficient(lvl) for j in range(d)]
                     for i in range(n - d)]
            lam0_t = fqlinalg.transpose(
                _level0_residual_lambda(ctx, a_RR, a_RRb, levels[0]))
            row_sols = []
            dead = False
            for i in range(n - d):
                sol = fqlinalg.solve_affine(ctx, lam0_t, g_lvl[i])
                if sol is None:
                    dead = True
                    break
                x_part, ker = sol
                sols = []
                for coeffs in itertools.product(range(ctx.q), repeat=len(ker)):
                    v = list(x_part)
                    for c, kv in zip(coeffs, ker):
                        if c:
                            v = [ctx.add(a, ctx.mul(c, b))
                                 for a, b in zip(v, kv)]
                    sols.append(v)
                row_sols.append(sols)
            if dead:
                continue
            children = [list(rows) for rows in itertools.product(*row_sols)]
            for child in reversed(children):
                stack.append(levels + [child])
    return [found[k] for k in sorted(found)]


def _level0_residual_lambda(ctx, a_RR, a_RRb, x0):
    t = fqlinalg.mat_mul(ctx, a_RRb, x0)
    return [[ctx.add(a, b) for a, b in zip(ra, rt)]
            for ra, rt in zip(a_RR, t)]


def _certify(ctx, A, A_w, w, n, R, Rbar, levels, K, target, max_iters, P_A):
    """Complete a surviving branch prefix to an exact stable subspace.

    A prefix reaching level K agrees with any stable subspace of its
    residual cell through u^(K-1), and the cell holds at most one: the
    frame difference eps of two stable subspaces satisfies
    (p-1).val(eps) <= delta, so they separate before level K.  One
    T-step then moves the frame strictly closer to that subspace
    ((p-1).K > delta), hence iterating to a stable canonical key
    converges exactly to it.  Prefixes whose iteration never stabilises
    are not truncations of a stable subspace and are dropped.  Comparing
    the frame with its image at level K instead would be wrong: the
    canonical key of a basis with pivot degree d > 0 only pins the frame
    through u^(K-1-d), so that test rejects subspaces sitting u-adically
    close to a coordinate hyperplane.

    Spurious prefixes vastly outnumber stable subspaces, so wanderers are
    weeded out first: one unsaturated image A.phi(W) spans the same
    subspace as T(W) and a true prefix keeps it inside the cell (the
    induced block is integral and the truncation error enters through
    u^(pK)), so a cell miss is already fatal.  Survivors then iterate at a
    working precision just deep enough for the cell guard and a key stable
    through u^K (each saturation costs at most delta digits); only
    branches stable there rerun at full precision.
    """
    X = _levels_matrix(ctx, levels, n - len(R), len(R), P_A)
    cell = (R, Rbar, X, K)
    try:
        if A_w is not None:
            Ww = _frame(ctx, n, R, Rbar, X.truncate(w), w)
            if not _in_cell(A_w @ Ww.frobenius(), R, Rbar, X, K):
                return None
            if _refine_to_target(A_w, Ww, K, max_iters, cell) is None:
                return None
        W = _frame(ctx, n, R, Rbar, X, P_A)
        h = _refine_to_target(A, W, target, max_iters, cell=cell)
    except NonConvergence:
        log.info("discarding non-stabilising branch: rows %s, prefix depth %d",
                 R, len(levels))
        return None
    except InsufficientPrecision:
        log.info("discarding branch losing precision under iteration: "
                 "rows %s, prefix depth %d", R, len(levels))
        return None
    if h is None:
        return None
    return _canonical_subspace(h, target)


def _enumerate_seeds(m, d, opts):
    ctx = m.ctx
    n, p, q = m.n, ctx.p, ctx.q
    A = m.A
    s, A_eff = _effective_shift(m)
    delta = m.val_det_A + n * s * m.e
    c = max(0, -(A.min_valuation() or 0), -(m.A_inv.min_valuation() or 0))
    N0 = opts.seed_precision
    if N0 is None:
        N0 = c // (p - 1) + 3
    if N0 * (p - 1) <= c:
        raise SeedPrecisionTooSmall(
            f"seed precision {N0} does not exceed c/(p-1) = {c}/{p - 1}; "
            "the iteration would not gain precision")
    target = max(opts.target_precision or 0, 4 * N0,
                 _certificate_level(delta, p))
    P_A = A.min_prec()
    if target > P_A - c - 2:
        raise InsufficientPrecision(
            f"seed iteration targets precision {target} but the module "
            f"supports at most {P_A - c - 2}; raise the module precision")

    n_seeds = math.comb(n, d) * q ** ((n - d) * d * N0)
    if n_seeds > opts.max_nodes:
        raise BudgetExceeded(
            f"{n_seeds} seeds exceed the budget of {opts.max_nodes}")

    found = {}
    for R in itertools.combinations(range(n), d):
        Rbar = tuple(i for i in range(n) if i not in R)
        for flat in itertools.product(
                itertools.product(range(q), repeat=N0),
                repeat=(n - d) * d):
            X = SeriesMatrix(ctx, [
                [LaurentSeries.from_terms(
                    ctx,
                    enumerate(flat[i * d + j]),
                    N0)
                 for j in range(d)]
                for i in range(n - d)])
            S = _frame(ctx, n, R, Rbar, X, N0)
            result = _iterate_seed(ctx, A, S, target, opts.max_iters)
            if result is None:
                log.info(
                    "discarding divergent seed: rows %s, block %s "
                    "(no stable key through u^%d within %d iterations)",
                    R, flat, target, opts.max_iters)
                continue
            sub = _canonical_subspace(result, target)
            found.setdefault(sub.key, sub)
    return [found[k] for k in sorted(found)]


def _iterate_seed(ctx, A, S, target, max_iters):
    h = None
    for _ in range(max_iters):
        try:
            S2 = saturate(A @ S.frobenius())
            h2 = hermite(S2)
        except InsufficientPrecision:
            return None
        if (h is not None and h.matrix.min_prec() >= target
                and h2.matrix.min_prec() >= target
                and lattice_key(h2, target) == lattice_key(h, target)):
            return h2
        S, h = S2, h2
    return None
