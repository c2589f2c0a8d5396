"""Instability of subspaces of a tensor product of F_q vector spaces.

Setting: M, N are F_q vector spaces and S a nonzero subspace of M (x) N in
Kronecker coordinates ((s, t) -> s * dim N + t).  A filtration pair alpha
assigns an increasing rational filtration to each factor; it induces one on
the product (weights add) and the instability of S along alpha is

    f(S, alpha) = (mu_alpha(M (x) N) - mu_alpha(S)) / |alpha|

with |alpha|^2 = sum_i i^2 dim gr^i M + sum_j j^2 dim gr^j N.  S is
semi-stable when f <= 0 for every nontrivial pair, and otherwise a unique
maximizing pair exists up to positive scaling.

Every filtration pair refines to a pair of complete flags with weakly
increasing weight vectors, so the search space is: for each complete-flag
pair, the product of the two isotonic weight cones.  Writing S in the flag
cell basis, deg_alpha(S) = max over admissible cell sets I (the s-subsets
with nonvanishing minor, i.e. the bases of the column matroid of S) of the
summed cell weights, so the numerator of f is min_I <g_I, x>: a concave
piecewise-linear function of the weight vector x.  Maximizing over the cone
C therefore has an exact convex dual: with C* the polar cone (per factor:
prefix sums >= 0, total zero),

    max_{x in C, |x|<=1} min_I <g_I, x>  =  dist(conv{g_I}, C*),

so per flag pair the subspace is semi-stable iff conv{g_I} meets C*
(a rational linear feasibility problem, decided by an exact phase-I
simplex), and otherwise the optimum x* is the nearest point to the origin
of the polyhedron conv{g_I} - C*.  Candidates for x* are exact projections
of the origin onto affine hulls of faces of that polyhedron (a gradient
subset plus a subset of the simplicial generators e_j - e_{j+1} of C*),
and a candidate x is certified optimal by the exact conditions

    x in C, x != 0, <g_I, x> >= |x|^2 for every admissible I with
    equality for some I, and some convex combination g_lam over the
    equality set has g_lam - x in C*,

which prove max f = |x| with maximizer x; the last condition is again a
rational feasibility problem.  Faces are enumerated exhaustively when few
gradients exist and prioritized by a short Frank-Wolfe run otherwise;
certification is always exact, so any hit is a proof.
"""

import itertools
import math
from fractions import Fraction

from .errors import (
    AmbiguousMaximizer,
    DimensionMismatch,
    NonConvergence,
    NotUnstable,
    ScaleTooLarge,
)
from .filtered import FilteredSpace, FiltrationPair, mu_filtered
from .fqlinalg import inverse as fq_inverse, kernel, mat_mul
from .fqlinalg import rank as fq_rank, rref, transpose

DEFAULT_BUDGET = 1_000_000

MAX_FACTOR_DIM = 4
MAX_Q = 4


# ------------------------------------------------------------------ results

class KempfResult:
    """Canonical destabilizing pair: primitive integer weights, mean zero on
    each factor, with value_sq = f(S, pair)^2 > 0 carried exactly."""

    __slots__ = ("pair", "value_sq")

    def __init__(self, pair: FiltrationPair, value_sq: Fraction):
        self.pair = pair
        self.value_sq = value_sq

    @property
    def weights_m(self):
        return list(self.pair.filt_m.weights)

    @property
    def weights_n(self):
        return list(self.pair.filt_n.weights)

    def __repr__(self):
        return (f"KempfResult(value_sq={self.value_sq}, "
                f"weights_m={self.weights_m}, weights_n={self.weights_n})")


class _StableMarker:
    __slots__ = ()

    def __repr__(self):
        return "Stable"


STABLE = _StableMarker()


# -------------------------------------------------------------------- flags

def flag_count(q, dim):
    """Number of complete flags of F_q^dim (product of q-integers)."""
    total = 1
    for j in range(1, dim + 1):
        total *= (q ** j - 1) // (q - 1)
    return total


def enumerate_complete_flags(ctx, dim):
    """All complete flags of F_q^dim as adapted bases (tuples of vectors).

    Deterministic: vectors are scanned in lexicographic code order; each
    chain step is kept once, keyed by the canonical row form of the
    subspace chain it extends.
    """
    vectors = [v for v in itertools.product(range(ctx.q), repeat=dim)
               if any(v)]
    chains = [((), ())]
    for level in range(dim):
        grown = []
        seen = set()
        for key, basis in chains:
            rows = [list(b) for b in basis]
            for v in vectors:
                if fq_rank(ctx, rows + [list(v)]) != level + 1:
                    continue
                red, _ = rref(ctx, rows + [list(v)])
                skey = key + (tuple(tuple(r) for r in red),)
                if skey in seen:
                    continue
                seen.add(skey)
                grown.append((skey, basis + (v,)))
        chains = grown
    return [basis for _, basis in chains]


# --------------------------------------------------------- per-flag lattice

def _subspace_rows(ctx, s_rows, ambient):
    rows = [list(r) for r in s_rows]
    if not rows:
        raise DimensionMismatch("subspace must be nonzero")
    if any(len(r) != ambient for r in rows):
        raise DimensionMismatch(f"subspace vectors must have length {ambient}")
    red, _ = rref(ctx, rows)
    rows = [r for r in red if any(r)]
    if not rows:
        raise DimensionMismatch("subspace must be nonzero")
    return rows


def _cell_data(ctx, rows, basis_m, basis_n):
    """Admissible cell sets of S in the flag cell basis.

    Returns [(cells, cnt_m, cnt_n)]: cells is an s-subset of the Kronecker
    grid with nonvanishing minor (a column-matroid basis of S), cnt_* the
    per-factor multiplicities of its cells.
    """
    m, n = len(basis_m), len(basis_n)
    kron = [[ctx.mul(a[s], b[t]) for s in range(m) for t in range(n)]
            for a in basis_m for b in basis_n]
    coords = mat_mul(ctx, rows, fq_inverse(ctx, kron))
    s = len(rows)
    out = []
    for cells in itertools.combinations(range(m * n), s):
        sub = [[row[c] for c in cells] for row in coords]
        if fq_rank(ctx, sub) != s:
            continue
        cnt_m, cnt_n = [0] * m, [0] * n
        for c in cells:
            cnt_m[c // n] += 1
            cnt_n[c % n] += 1
        out.append((cells, cnt_m, cnt_n))
    return out

def _gradients(admissible, m, n, s):
    """Numerator gradients g_I of f on the weight space Q^m x Q^n."""
    grads = []
    for _, cnt_m, cnt_n in admissible:
        gm = [Fraction(1, m) - Fraction(c, s) for c in cnt_m]
        gn = [Fraction(1, n) - Fraction(c, s) for c in cnt_n]
        grads.append(tuple(gm + gn))
    return grads


# ------------------------------------------------------- exact LP (phase I)

def _phase_one_feasible(a_rows, b):
    """Exact phase-I simplex: is {x >= 0 : A x = b} nonempty?  Needs b >= 0."""
    m = len(a_rows)
    n = len(a_rows[0])
    rows = [[Fraction(x) for x in a_rows[i]]
            + [Fraction(1 if j == i else 0) for j in range(m)]
            + [Fraction(b[i])] for i in range(m)]
    basis = list(range(n, n + m))
    while True:
        active = [i for i in range(m) if basis[i] >= n]
        if not active:
            return True
        reduced = [sum(rows[i][j] for i in active) for j in range(n)]
        value = sum(rows[i][-1] for i in active)
        if value == 0:
            return True
        enter = next((j for j in range(n)
                      if j not in basis and reduced[j] > 0), None)
        if enter is None:
            return False
        pivot, ratio = None, None
        for i in range(m):
            if rows[i][enter] > 0:
                r = rows[i][-1] / rows[i][enter]
                if ratio is None or r < ratio or (r == ratio
                                                  and basis[i] < basis[pivot]):
                    pivot, ratio = i, r
        if pivot is None:
            return False
        f = rows[pivot][enter]
        rows[pivot] = [x / f for x in rows[pivot]]
        for i in range(m):
            if i != pivot and rows[i][enter] != 0:
                g = rows[i][enter]
                rows[i] = [x - g * y for x, y in zip(rows[i], rows[pivot])]
        basis[pivot] = enter


def _flag_lp_feasible(grads, m, n):
    """conv{gradients} meets the polar cone (all proper prefix sums >= 0)."""
    k = len(grads)
    r = (m - 1) + (n - 1)
    if r == 0:
        return True        # both factors are lines: no nontrivial direction
    a_rows = []
    for j in range(m - 1):
        pref = [sum(g[: j + 1], Fraction(0)) for g in grads]
        a_rows.append(pref + [Fraction(-1 if t == j else 0) for t in range(r)])
    for j in range(n - 1):
        pref = [sum(g[m: m + j + 1], Fraction(0)) for g in grads]
        a_rows.append(pref + [Fraction(-1 if t == m - 1 + j else 0)
                              for t in range(r)])
    a_rows.append([Fraction(1)] * k + [Fraction(0)] * r)
    b = [Fraction(0)] * r + [Fraction(1)]
    return _phase_one_feasible(a_rows, b)


# ------------------------------------------------- exact per-flag optimum

def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _rays(m, n):
    """Simplicial generators e_j - e_{j+1} of the polar cone, per factor."""
    dim = m + n
    rays = []
    for base, size in ((0, m), (m, n)):
        for j in range(size - 1):
            v = [Fraction(0)] * dim
            v[base + j] = Fraction(1)
            v[base + j + 1] = Fraction(-1)
            rays.append(v)
    return rays


def _solve_linear(a_rows, b):
    """One exact solution of A x = b over Q, or None if inconsistent."""
    m = len(a_rows)
    n = len(a_rows[0])
    aug = [[Fraction(x) for x in a_rows[i]] + [Fraction(b[i])]
           for i in range(m)]
    piv_cols, r = [], 0
    for c in range(n):
        p = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        f = aug[r][c]
        aug[r] = [x / f for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                g = aug[i][c]
                aug[i] = [x - g * y for x, y in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    if any(aug[i][n] != 0 for i in range(r, m)):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(piv_cols):
        x[c] = aug[i][n]
    return x


def _face_projection(grads, joint, tight, rays):
    """Projection of the origin onto the affine hull of {g_a : a in joint}
    minus the cone spanned by the rays in `tight`.  Unique even when the
    normal equations are underdetermined."""
    g0 = grads[joint[0]]
    dim = len(g0)
    dirs = [[grads[a][i] - g0[i] for i in range(dim)] for a in joint[1:]]
    dirs += [[-rays[t][i] for i in range(dim)] for t in tight]
    if not dirs:
        return list(g0)
    a_rows = [[_dot(d1, d2) for d2 in dirs] for d1 in dirs]
    b = [-_dot(d, g0) for d in dirs]
    sol = _solve_linear(a_rows, b)
    if sol is None:
        return None
    y = list(g0)
    for c, d in zip(sol, dirs):
        if c != 0:
            y = [yi + c * di for yi, di in zip(y, d)]
    return y


def _lambda_exists(grads, eq, x, m, n):
    """Is some convex combination of {g_a : a in eq} equal to x plus a
    polar-cone element?  (Orthogonality <g_lam - x, x> = 0 is automatic on
    the equality set.)  Exact feasibility check."""
    r = (m - 1) + (n - 1)
    if r == 0:
        return True
    k = len(eq)
    a_rows = []
    b = []
    for base, j in [(0, j) for j in range(m - 1)] + [(m, j)
                                                     for j in range(n - 1)]:
        row = [-sum(grads[a][base: base + j + 1], Fraction(0)) for a in eq]
        row += [Fraction(1 if t == len(b) else 0) for t in range(r)]
        a_rows.append(row)
        b.append(-sum(x[base: base + j + 1], Fraction(0)))
    a_rows.append([Fraction(1)] * k + [Fraction(0)] * r)
    b.append(Fraction(1))
    return _phase_one_feasible(a_rows, b)


def _certify(grads, x, m, n):
    """Exact optimality check of a candidate direction; returns |x|^2 when x
    maximizes min_I <g_I, .> over the unit ball of the cone, else None."""
    if x is None:
        return None
    vsq = _dot(x, x)
    if vsq == 0:
        return None
    if any(x[i] > x[i + 1] for i in range(m - 1)):
        return None
    if any(x[i] > x[i + 1] for i in range(m, m + n - 1)):
        return None
    eq = []
    for idx, g in enumerate(grads):
        d = _dot(g, x)
        if d < vsq:
            return None
        if d == vsq:
            eq.append(idx)
    if not eq:
        return None
    if not _lambda_exists(grads, eq, x, m, n):
        return None
    return vsq


def _frank_wolfe_guide(grads, m, iters=400):
    """Float minimization of |P_C(g_lam)|^2 over the simplex; returns the
    final lam as floats for support/pattern extraction."""
    k = len(grads)
    gf = [[float(x) for x in g] for g in grads]
    lam = [1.0 / k] * k
    dim = len(gf[0])
    for it in range(iters):
        g_lam = [sum(lam[a] * gf[a][j] for a in range(k)) for j in range(dim)]
        x = _pav_float(g_lam[:m]) + _pav_float(g_lam[m:])
        scores = [sum(x[j] * gf[a][j] for j in range(dim)) for a in range(k)]
        i_star = min(range(k), key=lambda a: (scores[a], a))
        t = 2.0 / (it + 2.0)
        lam = [(1.0 - t) * l for l in lam]
        lam[i_star] += t
    return lam


def _pav_float(values):
    blocks = []
    for v in values:
        s, c = v, 1
        while blocks and blocks[-1][0] / blocks[-1][1] >= s / c - 1e-15:
            ps, pc = blocks.pop()
            s, c = s + ps, c + pc
        blocks.append((s, c))
    out = []
    for s, c in blocks:
        out.extend([s / c] * c)
    return out


def _flag_optimum(grads, m, n):
    """Certified max of min_I <g_I, x>/|x| over the cone, given that the LP
    declared the flag unstable (so the optimum is positive).

    Scans face candidates (gradient subset, ray subset) smallest first and
    returns on the first certificate; certificates are self-validating, so
    the first hit is the maximum.
    """
    k = len(grads)
    rays = _rays(m, n)
    max_support = min(k, (m - 1) + (n - 1) + 1)
    ray_subsets = [ts for t in range(len(rays) + 1)
                   for ts in itertools.combinations(range(len(rays)), t)]

    def attempt(joints):
        for joint in joints:
            for tight in ray_subsets:
                y = _face_projection(grads, joint, tight, rays)
                vsq = _certify(grads, y, m, n)
                if vsq is not None:
                    return vsq, y
        return None

    if k <= 12:
        got = attempt(joint for size in range(1, max_support + 1)
                      for joint in itertools.combinations(range(k), size))
        if got is not None:
            return got
        raise NonConvergence("instability optimum not certified (exhaustive)")
    lam = _frank_wolfe_guide(grads, m)
    order = sorted(range(k), key=lambda a: (-lam[a], a))
    support = order[: min(k, 10)]
    got = attempt(tuple(sorted(joint))
                  for size in range(1, min(max_support, len(support)) + 1)
                  for joint in itertools.combinations(support, size))
    if got is not None:
        return got
    raise NonConvergence("instability optimum not certified (guided search)")


# ------------------------------------------------------------- public API

def _validate_scale(ctx, dim_m, dim_n, s, budget, grid=None):
    if not (1 <= dim_m <= MAX_FACTOR_DIM and 1 <= dim_n <= MAX_FACTOR_DIM):
        raise ScaleTooLarge(f"factor dimensions up to {MAX_FACTOR_DIM} supported")
    if ctx.q > MAX_Q:
        raise ScaleTooLarge(f"coefficient fields up to q={MAX_Q} supported")
    pairs = flag_count(ctx.q, dim_m) * flag_count(ctx.q, dim_n)
    work = pairs * (math.comb(dim_m * dim_n, s) if grid is None
                    else grid[0] * grid[1])
    if work > budget:
        raise ScaleTooLarge(f"{work} flag-pair evaluations exceed the budget "
                            f"of {budget}")


def _canonical_pair(ctx, basis_m, basis_n, x, m):
    """Primitive-integral rescaling of the weight vector, as a pair."""
    den = 1
    for w in x:
        den = den * w.denominator // math.gcd(den, w.denominator)
    ints = [int(w * den) for w in x]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    ints = [v // g for v in ints]
    fm = FilteredSpace(ctx, [list(v) for v in basis_m],
                       [Fraction(w) for w in ints[:m]])
    fn = FilteredSpace(ctx, [list(v) for v in basis_n],
                       [Fraction(w) for w in ints[m:]])
    return FiltrationPair(fm, fn)


def instability_sq(s_rows, alpha: FiltrationPair):
    """Signed square of f(S, alpha): sign(h) * h^2 / |alpha|^2 with
    h = mu_alpha(M (x) N) - mu_alpha(S).  Invariant under positive scaling
    of alpha; positive iff alpha destabilizes S."""
    nsq = alpha.norm_sq
    if nsq == 0:
        raise ValueError("instability along a trivial filtration pair")
    t = alpha.tensor_space()
    rows = _subspace_rows(t.ctx, s_rows, t.dim)
    h = t.degree() / t.dim - mu_filtered(rows, t)
    v = h * h / nsq
    return v if h >= 0 else -v


def is_semistable_subspace(ctx, s_rows, dim_m, dim_n, budget=DEFAULT_BUDGET):
    """Exact semi-stability of S <= F_q^dim_m (x) F_q^dim_n: no filtration
    pair satisfies mu_alpha(S) < mu_alpha(M (x) N)."""
    rows = _subspace_rows(ctx, s_rows, dim_m * dim_n)
    _validate_scale(ctx, dim_m, dim_n, len(rows), budget)
    for basis_m in enumerate_complete_flags(ctx, dim_m):
        for basis_n in enumerate_complete_flags(ctx, dim_n):
            adm = _cell_data(ctx, rows, basis_m, basis_n)
            grads = _gradients(adm, dim_m, dim_n, len(rows))
            if not _flag_lp_feasible(grads, dim_m, dim_n):
                return False
    return True


def kempf_filtration(ctx, s_rows, dim_m, dim_n, require_unstable=False,
                     budget=DEFAULT_BUDGET):
    """Maximizer of f(S, .) over nontrivial filtration pairs.

    Returns a KempfResult with the canonical primitive-integral pair and
    the exact square of the maximum, or STABLE when f <= 0 everywhere
    (raised to NotUnstable when require_unstable is set).  Distinct
    filtration pairs tying for the maximum raise AmbiguousMaximizer.
    """
    rows = _subspace_rows(ctx, s_rows, dim_m * dim_n)
    s = len(rows)
    _validate_scale(ctx, dim_m, dim_n, s, budget)
    best_vsq = None
    best_pairs = {}
    for basis_m in enumerate_complete_flags(ctx, dim_m):
        for basis_n in enumerate_complete_flags(ctx, dim_n):
            adm = _cell_data(ctx, rows, basis_m, basis_n)
            grads = _gradients(adm, dim_m, dim_n, s)
            if _flag_lp_feasible(grads, dim_m, dim_n):
                continue
            vsq, x = _flag_optimum(grads, dim_m, dim_n)
            if best_vsq is not None and vsq < best_vsq:
                continue
            pair = _canonical_pair(ctx, basis_m, basis_n, x, dim_m)
            if best_vsq is None or vsq > best_vsq:
                best_vsq = vsq
                best_pairs = {pair.canonical_key(): pair}
            else:
                best_pairs.setdefault(pair.canonical_key(), pair)
    if best_vsq is None:
        if require_unstable:
            raise NotUnstable("subspace is semi-stable")
        return STABLE
    if len(best_pairs) > 1:
        raise AmbiguousMaximizer(
            f"{len(best_pairs)} distinct filtration pairs attain the maximum")
    (pair,) = best_pairs.values()
    return KempfResult(pair, best_vsq)


# -------------------------------------------------------------- semisimplify

def _intersection(ctx, a_rows, b_rows):
    """Basis of rowspace(a) /\\ rowspace(b)."""
    if not a_rows or not b_rows:
        return []
    perp = kernel(ctx, b_rows)
    if not perp:
        return [list(r) for r in a_rows]
    mat = mat_mul(ctx, a_rows, transpose(perp))
    coeffs = kernel(ctx, transpose(mat))
    return [mat_mul(ctx, [c], a_rows)[0] for c in coeffs]


def kempf_semisimplify(s_rows, alpha: FiltrationPair):
    """Replace S by the direct sum of its alpha-graded pieces, embedded in
    M (x) N through the splitting carried by alpha's adapted bases.

    The output has the same dimension; alpha-homogeneous subspaces (in
    particular any S when alpha is trivial) are returned unchanged, in
    canonical row form.
    """
    t = alpha.tensor_space()
    ctx = t.ctx
    rows = _subspace_rows(ctx, s_rows, t.dim)
    binv = fq_inverse(ctx, [list(v) for v in t.vectors])
    out = []
    prev = []
    for w in t.jump_indices():
        inter = _intersection(ctx, rows, t.step(w))
        cur = [list(r) for r in prev]
        for v in inter:
            if fq_rank(ctx, cur + [v]) != len(cur) + 1:
                continue
            cur.append(v)
            coords = mat_mul(ctx, [v], binv)[0]
            proj = [0] * t.dim
            for j, c in enumerate(coords):
                if c and t.weights[j] == w:
                    vec = t.vectors[j]
                    proj = [ctx.add(p, ctx.mul(c, y))
                            for p, y in zip(proj, vec)]
            out.append(proj)
        prev = inter
    red, _ = rref(ctx, out)
    red = [r for r in red if any(r)]
    if len(red) != len(rows):
        raise DimensionMismatch("graded embedding lost dimensions")
    return red


# --------------------------------------------------------------- grid oracle

def kempf_grid_oracle(ctx, s_rows, dim_m, dim_n, width=6,
                      budget=DEFAULT_BUDGET):
    """Exhaustive reference maximization over integer weight grids.

    Scans every flag pair with weakly increasing integer weights drawn from
    [-width, width] on each factor (anchored at -width: f is invariant
    under per-factor shifts, so each shift class is scanned once), keeping
    the best positive instability.  Returns (value_sq, pairs): the exact
    square of the best f found with the list of canonical primitive pairs
    attaining it, or (None, []) when no grid point destabilizes.
    """
    rows = _subspace_rows(ctx, s_rows, dim_m * dim_n)
    s = len(rows)
    tuples_m = [(-width,) + rest for rest in
                itertools.combinations_with_replacement(
                    range(-width, width + 1), dim_m - 1)]
    tuples_n = [(-width,) + rest for rest in
                itertools.combinations_with_replacement(
                    range(-width, width + 1), dim_n - 1)]
    _validate_scale(ctx, dim_m, dim_n, s, budget,
                    grid=(len(tuples_m), len(tuples_n)))
    mn = dim_m * dim_n
    best_vsq = None
    best_pairs = {}

    def centered_norm_sq(w, d):
        tot = sum(w)
        return Fraction(d * sum(x * x for x in w) - tot * tot, d)

    norms_m = [centered_norm_sq(w, dim_m) for w in tuples_m]
    norms_n = [centered_norm_sq(w, dim_n) for w in tuples_n]
    for basis_m in enumerate_complete_flags(ctx, dim_m):
        for basis_n in enumerate_complete_flags(ctx, dim_n):
            adm = _cell_data(ctx, rows, basis_m, basis_n)
            cnts = [(cm, cn) for _, cm, cn in adm]
            part_m = [[sum(c * x for c, x in zip(cm, w)) for cm, _ in cnts]
                      for w in tuples_m]
            part_n = [[sum(c * x for c, x in zip(cn, w)) for _, cn in cnts]
                      for w in tuples_n]
            for im, wm in enumerate(tuples_m):
                am = part_m[im]
                sm = sum(wm)
                for jn, wn in enumerate(tuples_n):
                    nsq = norms_m[im] + norms_n[jn]
                    if nsq == 0:
                        continue
                    top = max(a + b for a, b in zip(am, part_n[jn]))
                    h_scaled = s * (dim_n * sm + dim_m * sum(wn)) - mn * top
                    if h_scaled <= 0:
                        continue
                    vsq = Fraction(h_scaled * h_scaled,
                                   (mn * s) ** 2) / nsq
                    if best_vsq is not None and vsq < best_vsq:
                        continue
                    mean_m = Fraction(sm, dim_m)
                    mean_n = Fraction(sum(wn), dim_n)
                    x = ([Fraction(v) - mean_m for v in wm]
                         + [Fraction(v) - mean_n for v in wn])
                    pair = _canonical_pair(ctx, basis_m, basis_n, x, dim_m)
                    if best_vsq is None or vsq > best_vsq:
                        best_vsq = vsq
                        best_pairs = {pair.canonical_key(): pair}
                    else:
                        best_pairs.setdefault(pair.canonical_key(), pair)
    return best_vsq, [best_pairs[k] for k in sorted(best_pairs)]
