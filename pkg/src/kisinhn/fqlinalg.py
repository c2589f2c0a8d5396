"""Dense exact linear algebra over F_q on integer-coded entries.

Matrices are lists of rows; entries are the integer element codes of an
FqContext.  Everything is Gauss-Jordan at desk scale; the q = 2 path packs
rows into Python ints (bit j = column j) for the callers that grind through
thousands of small solves.
"""


def zeros(nr, nc):
    return [[0] * nc for _ in range(nr)]


def eye(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(ctx, a, b):
    nr, inner, nc = len(a), len(b), len(b[0])
    out = zeros(nr, nc)
    for i in range(nr):
        row = a[i]
        for k in range(inner):
            f = row[k]
            if not f:
                continue
            bk = b[k]
            oi = out[i]
            for j in range(nc):
                if bk[j]:
                    oi[j] = ctx.add(oi[j], ctx.mul(f, bk[j]))
    return out


def mat_vec(ctx, a, v):
    out = []
    for row in a:
        acc = 0
        for x, y in zip(row, v):
            if x and y:
                acc = ctx.add(acc, ctx.mul(x, y))
        out.append(acc)
    return out


def mat_sub(ctx, a, b):
    return [[ctx.sub(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def transpose(a):
    return [list(col) for col in zip(*a)]


def rref(ctx, rows):
    """Reduced row echelon form: (new_rows, pivot_column_list)."""
    m = [list(r) for r in rows]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    pivots = []
    r = 0
    for c in range(nc):
        pr = next((i for i in range(r, nr) if m[i][c]), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = ctx.inv(m[r][c])
        if inv != 1 or m[r][c] != 1:
            m[r] = [ctx.mul(inv, x) for x in m[r]]
        for i in range(nr):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [ctx.sub(x, ctx.mul(f, y)) for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nr:
            break
    return m, pivots


def rank(ctx, rows):
    return len(rref(ctx, rows)[1])


def _rref_bits(rows, nc):
    rows = list(rows)
    pivots = []
    r = 0
    for c in range(nc):
        mask = 1 << c
        pr = next((i for i in range(r, len(rows)) if rows[i] & mask), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        piv_row = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & mask:
                rows[i] ^= piv_row
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def pack_bits(row):
    acc = 0
    for j, x in enumerate(row):
        if x:
            acc |= 1 << j
    return acc


def _kernel_from_rref(ctx, m, pivots, nc):
    pivot_of = {c: i for i, c in enumerate(pivots)}
    basis = []
    for c in range(nc):
        if c in pivot_of:
            continue
        v = [0] * nc
        v[c] = 1
        for pc, pr in pivot_of.items():
            v[pc] = ctx.neg(m[pr][c])
        basis.append(v)
    return basis


def kernel(ctx, rows):
    """Basis of the right kernel {v : rows . v = 0}."""
    nc = len(rows[0]) if rows else 0
    if not rows or nc == 0:
        return []
    if ctx.q == 2:
        bit_rows, pivots = _rref_bits([pack_bits(r) for r in rows], nc)
        pivot_of = {c: i for i, c in enumerate(pivots)}
        basis = []
        for c in range(nc):
            if c in pivot_of:
                continue
            v = [0] * nc
            v[c] = 1
            for pc, pr in pivot_of.items():
                v[pc] = (bit_rows[pr] >> c) & 1
            basis.append(v)
        return basis
    m, pivots = rref(ctx, rows)
    return _kernel_from_rref(ctx, m, pivots, nc)


def solve_affine(ctx, a, b):
    """All solutions of a . x = b: (particular, kernel_basis), or None."""
    nc = len(a[0])
    aug = [list(r) + [y] for r, y in zip(a, b)]
    m, pivots = rref(ctx, aug)
    if nc in pivots:
        return None
    x0 = [0] * nc
    for i, c in enumerate(pivots):
        x0[c] = m[i][nc]
    return x0, kernel(ctx, a)


def inverse(ctx, rows):
    """Inverse of a square matrix; raises ValueError when singular."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("inverse of a non-square matrix")
    aug = [list(r) + [1 if i == j else 0 for j in range(n)]
           for i, r in enumerate(rows)]
    m, pivots = rref(ctx, aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular over F_q")
    return [r[n:] for r in m[:n]]
