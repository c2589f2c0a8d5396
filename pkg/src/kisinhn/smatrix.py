"""Matrices over F_q((u)) and the lattice toolkit built on them.

Everything here is exact in the sense of series.py: nonzero normalized
entries have exact valuations, so pivot choices, Smith divisors, Hermite
pivot degrees and saturations are certified values, not approximations.
Whenever a pivot decision would depend on an entry that is merely zero at
its stated precision, the operation raises InsufficientPrecision (or, where
a caller explicitly opts in with assume_zero, treats it as an exact zero).

Forms computed here:

  smith_normal_form(m): u_left * m * v_right = diag(u^d_i), divisors
      ascending; transforms and their inverses are unimodular over F_q[[u]].

  hermite(m): canonical column form of the column span over F_q[[u]]:
      pivot rows strictly increasing, pivot entries exactly u^d with d
      minimal in their row, entries of earlier columns at later pivot rows
      reduced mod u^d, entries at earlier pivot rows exactly zero.  One form
      per sublattice, so it doubles as the dedup key.

  saturated_frame(m): for a saturated sublattice, the unique basis with an
      identity block at the mod-u reduction's pivot rows; these are the
      coordinates the subspace enumeration solves in.
"""

from .errors import InsufficientPrecision, NonSquare, SingularMatrix
from .series import LaurentSeries


class SeriesMatrix:
    __slots__ = ("ctx", "rows", "nrows", "ncols")

    def __init__(self, ctx, rows):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("matrix must be nonempty")
        nc = len(rows[0])
        for r in rows:
            if len(r) != nc:
                raise ValueError("ragged matrix")
            for s in r:
                if s.ctx is not ctx:
                    raise ValueError("mixed field contexts")
        self.ctx = ctx
        self.rows = rows
        self.nrows = len(rows)
        self.ncols = nc

    # ------------------------------------------------------- constructors
    @classmethod
    def identity(cls, ctx, n, prec):
        one = LaurentSeries.one(ctx, prec)
        zero = LaurentSeries.zero(ctx, prec)
        return cls(ctx, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, ctx, nrows, ncols, prec):
        zero = LaurentSeries.zero(ctx, prec)
        return cls(ctx, [[zero] * ncols for _ in range(nrows)])

    @classmethod
    def diagonal_powers(cls, ctx, exponents, prec):
        """diag(u^e) for a list of exponents."""
        n = len(exponents)
        zero = LaurentSeries.zero(ctx, prec)
        return cls(ctx, [[LaurentSeries.monomial(ctx, 1, exponents[i], prec) if i == j else zero
                          for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, ctx, cols):
        return cls(ctx, [[col[i] for col in cols] for i in range(len(cols[0]))])

    @classmethod
    def from_codes(cls, ctx, code_rows, prec):
        """Constant matrix from integer F_q codes."""
        return cls(ctx, [[LaurentSeries.monomial(ctx, c, 0, prec) if c else LaurentSeries.zero(ctx, prec)
                          for c in row] for row in code_rows])

    # ------------------------------------------------------------- access
    def row(self, i):
        return self.rows[i]

    def column(self, j):
        return [self.rows[i][j] for i in range(self.nrows)]

    def columns(self):
        return [self.column(j) for j in range(self.ncols)]

    def submatrix(self, row_idx, col_idx):
        return SeriesMatrix(self.ctx, [[self.rows[i][j] for j in col_idx] for i in row_idx])

    def hstack(self, other):
        return SeriesMatrix(self.ctx, [list(a) + list(b) for a, b in zip(self.rows, other.rows)])

    # --------------------------------------------------------- arithmetic
    def __add__(self, other):
        return SeriesMatrix(self.ctx, [[a + b for a, b in zip(ra, rb)]
                                       for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return SeriesMatrix(self.ctx, [[a - b for a, b in zip(ra, rb)]
                                       for ra, rb in zip(self.rows, other.rows)])

    def __neg__(self):
        return SeriesMatrix(self.ctx, [[-a for a in r] for r in self.rows])

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch: {self.ncols} vs {other.nrows}")
        out = []
        ocols = other.columns()
        for i in range(self.nrows):
            row = self.rows[i]
            out_row = []
            for col in ocols:
                acc = None
                for a, b in zip(row, col):
                    term = a * b
                    acc = term if acc is None else acc + term
                out_row.append(acc)
            out.append(out_row)
        return SeriesMatrix(self.ctx, out)

    def map_entries(self, f):
        return SeriesMatrix(self.ctx, [[f(a) for a in r] for r in self.rows])

    def scale_series(self, s):
        return self.map_entries(lambda a: a * s)

    def shift(self, k):
        return self.map_entries(lambda a: a.shift(k))

    def frobenius(self):
        return self.map_entries(lambda a: a.frobenius())

    def substitute_power(self, m):
        return self.map_entries(lambda a: a.substitute_power(m))

    def map_coefficients(self, table, new_ctx):
        return SeriesMatrix(new_ctx, [[a.map_coefficients(table, new_ctx) for a in r]
                                      for r in self.rows])

    def truncate(self, prec):
        return self.map_entries(lambda a: a.truncate(prec))

    def transpose(self):
        return SeriesMatrix(self.ctx, [[self.rows[i][j] for i in range(self.nrows)]
                                       for j in range(self.ncols)])

    # ----------------------------------------------------------- queries
    def min_valuation(self):
        """Least exact valuation over entries; None if all are zero-at-precision."""
        vals = [a.val for r in self.rows for a in r if not a.is_zero]
        return min(vals) if vals else None

    def min_prec(self):
        return min(a.prec for r in self.rows for a in r)

    def is_zero(self):
        return all(a.is_zero for r in self.rows for a in r)

    def agrees(self, other, upto=None):
        return all(a.agrees(b, upto) for ra, rb in zip(self.rows, other.rows)
                   for a, b in zip(ra, rb))

    def reduction_mod_u(self):
        """Entrywise coefficient of u^0, as integer codes; entries must be integral."""
        out = []
        for r in self.rows:
            row = []
            for a in r:
                if not a.is_zero and a.val < 0:
                    raise ValueError("matrix is not integral; no reduction mod u")
                row.append(a.coefficient(0))
            out.append(row)
        return out

    def det(self):
        if self.nrows != self.ncols:
            raise NonSquare("determinant of a non-square matrix")
        n = self.nrows
        if n == 1:
            return self.rows[0][0]
        # cofactor expansion along the first row; desk-scale n only
        acc = None
        for j in range(n):
            a = self.rows[0][j]
            minor = self.submatrix(range(1, n), [c for c in range(n) if c != j])
            term = a * minor.det()
            if j % 2:
                term = -term
            acc = term if acc is None else acc + term
        return acc

    def inverse(self):
        if self.nrows != self.ncols:
            raise NonSquare("inverse of a non-square matrix")
        n = self.nrows
        work = [list(r) for r in self.rows]
        prec = self.min_prec()
        aug = [[LaurentSeries.one(self.ctx, prec) if i == j else LaurentSeries.zero(self.ctx, prec)
                for j in range(n)] for i in range(n)]
        for c in range(n):
            pivot_row, pivot_val = None, None
            for i in range(c, n):
                v = work[i][c].valuation()
                if v is not None and (pivot_val is None or v < pivot_val):
                    pivot_row, pivot_val = i, v
            if pivot_row is None:
                raise InsufficientPrecision(
                    "cannot certify an invertible pivot; matrix may be singular")
            work[c], work[pivot_row] = work[pivot_row], work[c]
            aug[c], aug[pivot_row] = aug[pivot_row], aug[c]
            inv_p = work[c][c].inverse()
            work[c] = [a * inv_p for a in work[c]]
            aug[c] = [a * inv_p for a in aug[c]]
            for i in range(n):
                if i == c:
                    continue
                f = work[i][c]
                if f.is_zero:
                    continue
                work[i] = [a - f * b for a, b in zip(work[i], work[c])]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[c])]
        return SeriesMatrix(self.ctx, aug)

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return self.ctx is other.ctx and self.rows == other.rows

    def __hash__(self):
        return hash((id(self.ctx), self.rows))

    def __repr__(self):
        from .literals import format_matrix
        return f"SeriesMatrix({format_matrix(self.rows)})"


def frobenius_substitute(s):
    """phi on series: u -> u^p, coefficients untouched."""
    return s.frobenius()


# ------------------------------------------------------------- Smith form

class SmithForm:
    """u_left * m * v_right = diag(u^divisors); unpacks as the documented triple."""

    def __init__(self, u_left, divisors, v_right, u_left_inv, v_right_inv):
        self.u_left = u_left
        self.divisors = divisors
        self.v_right = v_right
        self.u_left_inv = u_left_inv
        self.v_right_inv = v_right_inv

    def __iter__(self):
        return iter((self.u_left, self.divisors, self.v_right))


def smith_normal_form(m: SeriesMatrix, assume_zero: bool = False) -> SmithForm:
    """Smith form over F_q[[u]] with min-valuation pivoting (ties row-major).

    Raises InsufficientPrecision when a zero-at-precision entry could hide a
    smaller pivot or a further divisor; assume_zero treats such entries as
    exact zeros instead.
    """
    ctx = m.ctx
    nr, nc = m.nrows, m.ncols
    prec = m.min_prec()
    work = [list(r) for r in m.rows]
    U = [list(r) for r in SeriesMatrix.identity(ctx, nr, prec).rows]
    Ui = [list(r) for r in SeriesMatrix.identity(ctx, nr, prec).rows]
    V = [list(r) for r in SeriesMatrix.identity(ctx, nc, prec).rows]
    Vi = [list(r) for r in SeriesMatrix.identity(ctx, nc, prec).rows]
    divisors = []
    for t in range(min(nr, nc)):
        pivot = None     # (val, i, j), row-major ties
        unknown = None   # least precision among zero-at-precision entries
        for i in range(t, nr):
            for j in range(t, nc):
                a = work[i][j]
                if a.is_zero:
                    unknown = a.prec if unknown is None else min(unknown, a.prec)
                elif pivot is None or a.val < pivot[0]:
                    pivot = (a.val, i, j)
        if pivot is None:
            if unknown is not None and not assume_zero:
                raise InsufficientPrecision(
                    f"remaining block is zero at precision {unknown}; "
                    "pass assume_zero=True to accept it as exact zero")
            break
        if unknown is not None and unknown < pivot[0] and not assume_zero:
            raise InsufficientPrecision(
                f"pivot valuation {pivot[0]} cannot be certified minimal: "
                f"an entry is only known to vanish mod u^{unknown}")
        d, pi, pj = pivot
        if pi != t:
            work[t], work[pi] = work[pi], work[t]
            U[t], U[pi] = U[pi], U[t]
            for r in Ui:
                r[t], r[pi] = r[pi], r[t]
        if pj != t:
            for r in work:
                r[t], r[pj] = r[pj], r[t]
            for r in V:
                r[t], r[pj] = r[pj], r[t]
            Vi[t], Vi[pj] = Vi[pj], Vi[t]
        divisors.append(d)
        # normalize the pivot column so the pivot becomes exactly u^d
        unit = work[t][t].shift(-d)            # valuation-0 unit
        unit_inv = unit.inverse()
        for i in range(nr):
            work[i][t] = work[i][t] * unit_inv
        for i in range(nc):
            V[i][t] = V[i][t] * unit_inv
            Vi[t][i] = Vi[t][i] * unit
        work[t][t] = LaurentSeries.monomial(ctx, 1, d, work[t][t].prec)
        # clear the pivot column with row operations (factors are exact shifts);
        # a zero-at-precision factor is honestly propagated unless assume_zero
        # promotes it to an exact zero
        for i in range(t + 1, nr):
            e = work[i][t]
            if e.is_zero and assume_zero:
                continue
            f = e.shift(-d)
            for j in range(t + 1, nc):
                work[i][j] = work[i][j] - f * work[t][j]
            work[i][t] = e - f * work[t][t]   # structurally zero, honest precision
            for j in range(nr):
                U[i][j] = U[i][j] - f * U[t][j]
                Ui[j][t] = Ui[j][t] + f * Ui[j][i]
        # clear the pivot row with column operations
        for j in range(t + 1, nc):
            e = work[t][j]
            if e.is_zero and assume_zero:
                continue
            f = e.shift(-d)
            for i in range(t + 1, nr):
                work[i][j] = work[i][j] - f * work[i][t]
            work[t][j] = e - f * work[t][t]   # structurally zero, honest precision
            for i in range(nc):
                V[i][j] = V[i][j] - f * V[i][t]
                Vi[t][i] = Vi[t][i] + f * Vi[j][i]
    return SmithForm(SeriesMatrix(ctx, U), divisors, SeriesMatrix(ctx, V),
                     SeriesMatrix(ctx, Ui), SeriesMatrix(ctx, Vi))


def val_det(m: SeriesMatrix) -> int:
    """Valuation of det(m): sum of Smith divisors (certified exact)."""
    if m.nrows != m.ncols:
        raise NonSquare("val_det of a non-square matrix")
    form = smith_normal_form(m)
    if len(form.divisors) != m.nrows:
        raise SingularMatrix("matrix has no certified full-rank Smith form")
    return sum(form.divisors)


def lattice_relative_position(a: SeriesMatrix, b: SeriesMatrix):
    """Elementary divisors of a^{-1} b, ascending: in a suitable basis f of a,
    b is spanned by u^{d_i} f_i."""
    if a.nrows != a.ncols or b.nrows != b.ncols or a.nrows != b.nrows:
        raise NonSquare("relative position needs two full lattices of equal rank")
    rel = a.inverse() @ b
    form = smith_normal_form(rel)
    if len(form.divisors) != a.nrows:
        raise SingularMatrix("relative position of a degenerate pair")
    return form.divisors


# ----------------------------------------------------------- Hermite form

class HermiteForm:
    """Canonical column form: matrix (n x k), pivots [(row, degree)] by column."""

    def __init__(self, matrix, pivots):
        self.matrix = matrix
        self.pivots = pivots

    @property
    def pivot_rows(self):
        return [r for r, _ in self.pivots]

    @property
    def pivot_degrees(self):
        return [d for _, d in self.pivots]


def hermite(m: SeriesMatrix, assume_zero: bool = False) -> HermiteForm:
    """Column Hermite form over F_q[[u]] (see module docstring for the shape).

    Columns that vanish at precision are dropped only with assume_zero;
    otherwise they raise, since a hidden tail would change the lattice.
    Entries that vanish at precision are taken at face value when choosing
    pivot rows (the form canonicalizes the lattice as represented); within
    a chosen row, a pivot degree that cannot be certified minimal raises.
    """
    ctx = m.ctx
    n = m.nrows
    active = [list(c) for c in m.columns()]
    placed = []   # (pivot_row, degree, column)
    for row in range(n):
        if not active:
            break
        pivot_j, pivot_val, unknown = None, None, None
        for j, col in enumerate(active):
            a = col[row]
            if a.is_zero:
                unknown = a.prec if unknown is None else min(unknown, a.prec)
            elif pivot_val is None or a.val < pivot_val:
                pivot_j, pivot_val = j, a.val
        if pivot_j is None:
            continue
        if unknown is not None and unknown < pivot_val and not assume_zero:
            raise InsufficientPrecision(
                f"pivot degree {pivot_val} in row {row} cannot be certified: "
                f"another entry is only zero mod u^{unknown}")
        col = active.pop(pivot_j)
        d = pivot_val
        unit_inv = col[row].shift(-d).inverse()
        col = [a * unit_inv for a in col]
        col[row] = LaurentSeries.monomial(ctx, 1, d, col[row].prec)
        for other in active:
            e = other[row]
            if e.is_zero:
                continue
            f = e.shift(-d)   # integral since d is minimal in this row
            for i in range(n):
                other[i] = other[i] - f * col[i]
        placed.append((row, d, col))
    for col in active:
        if any(not a.is_zero for a in col):
            raise SingularMatrix("columns are dependent over F_q((u))")
        if not assume_zero:
            raise InsufficientPrecision(
                "a column is zero at precision; pass assume_zero=True to drop it")
    if not placed:
        raise SingularMatrix("empty Hermite form")
    # back-reduction: entries of earlier columns at later pivot rows, top down;
    # ripples only move to lower pivot rows, so one pass per column suffices
    for idx, (r_i, d_i, col_i) in enumerate(placed):
        for jdx in range(idx):
            col_j = placed[jdx][2]
            _, hi = col_j[r_i].split_at(d_i)
            if hi.is_zero:
                continue
            for i in range(n):
                col_j[i] = col_j[i] - hi * col_i[i]
    pivots = [(r, d) for r, d, _ in placed]
    matrix = SeriesMatrix.from_columns(ctx, [c for _, _, c in placed])
    return HermiteForm(matrix, pivots)


def saturated_frame(m: SeriesMatrix):
    """Canonical basis of a saturated sublattice: identity block at pivot rows.

    Returns (W, pivot_rows) with W[pivot_rows] == I exactly.  Raises
    SingularMatrix if the reduction mod u has rank below the column count
    (columns dependent, or the span is not saturated).
    """
    ctx = m.ctx
    n, k = m.nrows, m.ncols
    cols = [list(c) for c in m.columns()]
    active = list(range(k))
    placed = []   # column indices in pivot order
    pivot_rows = []
    for row in range(n):
        if not active:
            break
        found = None
        for j in active:
            a = cols[j][row]
            if not a.is_zero and a.val == 0:
                found = j
                break
        if found is None:
            continue
        active.remove(found)
        col = cols[found]
        inv = col[row].inverse()
        col = [a * inv for a in col]
        col[row] = LaurentSeries.one(ctx, col[row].prec)
        cols[found] = col
        for j in active + placed:
            e = cols[j][row]
            if e.is_zero:
                continue
            cols[j] = [a - e * b for a, b in zip(cols[j], col)]
        placed.append(found)
        pivot_rows.append(row)
    if len(placed) < k:
        raise SingularMatrix(
            "columns do not span a saturated sublattice (reduction rank deficit)")
    W = SeriesMatrix.from_columns(ctx, [cols[j] for j in placed])
    return W, pivot_rows


def series_key(s, upto):
    """Hashable snapshot of a series mod u^upto (window-normalized)."""
    return tuple((e, c) for e, c in s.terms() if e < upto)


def lattice_key(hf: HermiteForm, upto):
    """Hashable dedup key for a sublattice from its Hermite form.

    Two bases of the same sublattice produce the same key whenever their
    Hermite forms are known mod u^upto; precision bookkeeping differences
    do not leak into the key.
    """
    entries = tuple(series_key(e, upto) for row in hf.matrix.rows for e in row)
    return (tuple(hf.pivots), entries)


def saturate(m: SeriesMatrix) -> SeriesMatrix:
    """Hermite basis of span_F(columns) intersected with the standard lattice."""
    shift = m.min_valuation()
    if shift is None:
        raise SingularMatrix("cannot saturate a zero matrix")
    work = m.shift(-shift) if shift < 0 else m
    form = smith_normal_form(work)
    if len(form.divisors) < m.ncols:
        raise SingularMatrix("columns are dependent; saturation undefined")
    basis = form.u_left_inv.submatrix(range(m.nrows), range(m.ncols))
    return hermite(basis).matrix


def unimodular_completion(m: SeriesMatrix) -> SeriesMatrix:
    """Extend a saturated n x d basis to a basis of the full standard lattice.

    Returns P in GL_n(O) whose first d columns are m's columns; the rest are
    standard basis vectors at the non-pivot rows.
    """
    _, pivot_rows = saturated_frame(m)
    ctx = m.ctx
    n = m.nrows
    prec = m.min_prec()
    cols = m.columns()
    for i in range(n):
        if i not in pivot_rows:
            cols.append([LaurentSeries.one(ctx, prec) if j == i else LaurentSeries.zero(ctx, prec)
                         for j in range(n)])
    return SeriesMatrix.from_columns(ctx, cols)


# -------------------------------------------------- field linear algebra

def kernel_field(m: SeriesMatrix, assume_zero: bool = False):
    """Basis of the right kernel of m over F_q((u)), as lists of series.

    Pivots are certified nonzero; whether a residual row is zero is only
    known at stated precision, so the kernel of an ambiguous matrix needs
    assume_zero (results are then certified at stated precision).
    """
    nr, nc = m.nrows, m.ncols
    work = [list(r) for r in m.rows]
    pivot_of_col = {}
    used_rows = set()
    for j in range(nc):
        pick, pick_val, unknown = None, None, None
        for i in range(nr):
            if i in used_rows:
                continue
            a = work[i][j]
            if a.is_zero:
                unknown = a.prec if unknown is None else min(unknown, a.prec)
            elif pick_val is None or a.val < pick_val:
                pick, pick_val = i, a.val
        if pick is None:
            if unknown is not None and not assume_zero:
                raise InsufficientPrecision(
                    f"column {j}: free column cannot be certified (zero mod u^{unknown})")
            continue
        inv = work[pick][j].inverse()
        work[pick] = [a * inv for a in work[pick]]
        for i in range(nr):
            if i == pick:
                continue
            f = work[i][j]
            if f.is_zero:
                continue
            work[i] = [a - f * b for a, b in zip(work[i], work[pick])]
        pivot_of_col[j] = pick
        used_rows.add(pick)
    ctx = m.ctx
    prec = m.min_prec()
    basis = []
    for j in range(nc):
        if j in pivot_of_col:
            continue
        vec = [LaurentSeries.zero(ctx, prec)] * nc
        vec[j] = LaurentSeries.one(ctx, prec)
        for jc, ir in pivot_of_col.items():
            vec[jc] = -work[ir][j]
        basis.append(vec)
    return basis


def solve_columns(m: SeriesMatrix, v):
    """Solve m x = v over F_q((u)) for a matrix with independent columns.

    Returns the coefficient list, or None when the system is inconsistent at
    the stated precision (residual rows that vanish at precision count as
    solved).
    """
    aug = m.hstack(SeriesMatrix(m.ctx, [[s] for s in v]))
    work = [list(r) for r in aug.rows]
    nr, nc = aug.nrows, m.ncols
    pivot_of_col = {}
    used = set()
    for j in range(nc):
        pick, pick_val = None, None
        for i in range(nr):
            if i in used:
                continue
            a = work[i][j]
            if not a.is_zero and (pick_val is None or a.val < pick_val):
                pick, pick_val = i, a.val
        if pick is None:
            raise SingularMatrix("solve_columns requires independent columns")
        inv = work[pick][j].inverse()
        work[pick] = [a * inv for a in work[pick]]
        for i in range(nr):
            if i == pick:
                continue
            f = work[i][j]
            if f.is_zero:
                continue
            work[i] = [a - f * b for a, b in zip(work[i], work[pick])]
        pivot_of_col[j] = pick
        used.add(pick)
    for i in range(nr):
        if i not in used and not work[i][nc].is_zero:
            return None
    x = [None] * nc
    for j, i in pivot_of_col.items():
        x[j] = work[i][nc]
    return x


def lattice_intersect(n: int, a: SeriesMatrix, b: SeriesMatrix):
    """Hermite basis of (O-span of a's columns) intersect (O-span of b's).

    Both spans live in F_q((u))^n.  Returns None when the intersection is
    the zero module.  Two full lattices intersect exactly via relative
    position; the mixed-rank case goes through a field kernel plus
    saturation and is certified at the stated precision.
    """
    if a.nrows != n or b.nrows != n:
        raise ValueError("ambient rank mismatch")
    d1, d2 = a.ncols, b.ncols
    if d1 == n and d2 == n:
        rel = a.inverse() @ b
        form = smith_normal_form(rel)
        if len(form.divisors) != n:
            raise SingularMatrix("degenerate lattice pair")
        f = a @ form.u_left_inv
        cols = [[entry.shift(max(d, 0)) for entry in f.column(i)]
                for i, d in enumerate(form.divisors)]
        return hermite(SeriesMatrix.from_columns(a.ctx, cols)).matrix
    stacked = a.hstack(b.map_entries(lambda s: -s))
    kern = kernel_field(stacked, assume_zero=True)
    if not kern:
        return None
    ker_o = saturate(SeriesMatrix.from_columns(a.ctx, kern))
    x_part = ker_o.submatrix(range(d1), range(ker_o.ncols))
    gens = a @ x_part
    return hermite(gens).matrix
