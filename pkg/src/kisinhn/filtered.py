"""Rational-indexed filtrations on finite F_q-vector spaces.

A filtered space is an increasing, exhaustive filtration V^i of F_q^dim by
rational indices i, with finitely many jumps.  Internally a filtration is
held as a weighted basis: a basis b_1..b_dim of the ambient space together
with weakly increasing rational weights w_1 <= ... <= w_dim, so that
V^i = span{b_j : w_j <= i}.  Every finite filtration admits such an adapted
basis, and the weighted form composes cleanly under tensor product: the
tensor filtration (M (x) N)^l = sum_{i+j=l} M^i (x) N^j is adapted to the
Kronecker basis b_s (x) c_t with weights w_s + v_t.

Degrees follow the increasing convention: deg(S) = sum_i i * dim gr^i S
where S carries the induced filtration S^i = S /\ V^i and
gr^i = S^i / S^{<i}.  Subspaces of large weight have large degree.

The lattice half of the module compares a pair of full u-lattices M, L in
the same ambient space: the filtration of the reduction M/uM by the images
of M /\ u^{-i} L has jumps at the relative position exponents of the pair,
and its total degree is their sum.  `alt_degree_bound_check` evaluates both
sides of the degree bound that controls a phi-stable subspace's degree by
filtration data of an auxiliary lattice: with L0 the image lattice of M0
under the semilinear map,

    deg(S /\ M)  >=  (1/e) * (deg_{L0}(Sbar0) + (p-1) * deg_M(Sbar0))

where Sbar0 is the reduction mod u of S /\ M0 inside M0/uM0 and both
right-hand degrees use the induced lattice filtrations.
"""

from fractions import Fraction

from .errors import DimensionMismatch
from .fqlinalg import rank as fq_rank, rref
from .smatrix import (SeriesMatrix, lattice_relative_position,
                      smith_normal_form, saturate)
from .modules import strict_subobject


def _as_rows(vectors):
    return [list(v) for v in vectors]


def _rref_key(ctx, rows):
    """Canonical tuple for the row space of `rows` (tuple of reduced rows)."""
    red, _ = rref(ctx, _as_rows(rows))
    return tuple(tuple(r) for r in red if any(r))


class FilteredSpace:
    """Increasing exhaustive filtration of F_q^dim, held as a weighted basis.

    vectors: a basis of the ambient space (list of code vectors);
    weights: matching Fractions, stored sorted ascending (stable).
    V^i = span of the vectors with weight <= i.
    """

    __slots__ = ("ctx", "dim", "vectors", "weights")

    def __init__(self, ctx, vectors, weights):
        if len(vectors) != len(weights):
            raise DimensionMismatch("one weight per basis vector")
        dim = len(vectors)
        if dim == 0:
            raise DimensionMismatch("filtered space must have positive dimension")
        if any(len(v) != dim for v in vectors):
            raise DimensionMismatch("weighted basis must be square")
        if fq_rank(ctx, _as_rows(vectors)) != dim:
            raise DimensionMismatch("weighted vectors do not form a basis")
        order = sorted(range(dim), key=lambda j: weights[j])
        self.ctx = ctx
        self.dim = dim
        self.vectors = [tuple(vectors[j]) for j in order]
        self.weights = [Fraction(weights[j]) for j in order]

    @classmethod
    def trivial(cls, ctx, dim, index=0):
        """Single jump: everything sits at the given index."""
        basis = [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]
        return cls(ctx, basis, [Fraction(index)] * dim)

    @classmethod
    def from_jumps(cls, ctx, dim, jumps):
        """Build from a list of (index, basis rows of V^index), increasing and
        cumulative; the last subspace must be the full space."""
        if not jumps:
            raise DimensionMismatch("at least one filtration step required")
        vectors, weights = [], []
        current = []
        last_index = None
        for index, rows in jumps:
            index = Fraction(index)
            if last_index is not None and index <= last_index:
                raise DimensionMismatch("filtration indices must strictly increase")
            last_index = index
            for v in rows:
                if len(v) != dim:
                    raise DimensionMismatch("basis vector of wrong length")
                if fq_rank(ctx, current + [list(v)]) == len(current) + 1:
                    current = current + [list(v)]
                    vectors.append(list(v))
                    weights.append(index)
            if fq_rank(ctx, _as_rows(rows)) != len(
                    [w for w in weights if w <= index]):
                raise DimensionMismatch("filtration steps must be nested")
        if len(vectors) != dim:
            raise DimensionMismatch("filtration is not exhaustive")
        return cls(ctx, vectors, weights)

    # ------------------------------------------------------------- queries
    def jump_indices(self):
        out = []
        for w in self.weights:
            if not out or w != out[-1]:
                out.append(w)
        return out

    def step(self, index):
        """Basis rows of V^index (possibly empty)."""
        index = Fraction(index)
        return [list(v) for v, w in zip(self.vectors, self.weights) if w <= index]

    def graded_dims(self):
        """{index: dim gr^index} over the jump indices."""
        out = {}
        for w in self.weights:
            out[w] = out.get(w, 0) + 1
        return out

    def degree(self):
        """deg of the full space: sum of all weights."""
        return sum(self.weights, Fraction(0))

    def weight_moment(self, power=2):
        return sum(w ** power for w in self.weights)

    def is_trivial(self):
        """True when every weight is zero (the filtration carries no data)."""
        return all(w == 0 for w in self.weights)

    def shifted(self, c):
        return FilteredSpace(self.ctx, [list(v) for v in self.vectors],
                             [w + Fraction(c) for w in self.weights])

    def scaled(self, c):
        c = Fraction(c)
        if c <= 0:
            raise ValueError("filtration scaling must be positive")
        return FilteredSpace(self.ctx, [list(v) for v in self.vectors],
                             [w * c for w in self.weights])

    def canonical_key(self):
        """(index, rref rows of V^index) jump list; equal iff same filtration."""
        return tuple((w, _rref_key(self.ctx, self.step(w)))
                     for w in self.jump_indices())

    def subspace_degree(self, rows):
        """deg of the subspace spanned by `rows` under the induced filtration."""
        rows = _as_rows(rows)
        if any(len(v) != self.dim for v in rows):
            raise DimensionMismatch(
                f"subspace vectors must have length {self.dim}")
        s = fq_rank(self.ctx, rows)
        if s == 0:
            return Fraction(0)
        deg = Fraction(0)
        prev = 0
        for w in self.jump_indices():
            stepv = self.step(w)
            inter = s + len(stepv) - fq_rank(self.ctx, rows + stepv)
            deg += w * (inter - prev)
            prev = inter
        return deg

    def __eq__(self, other):
        if not isinstance(other, FilteredSpace):
            return NotImplemented
        return (self.ctx is other.ctx and self.dim == other.dim
                and self.canonical_key() == other.canonical_key())

    def __hash__(self):
        return hash((id(self.ctx), self.dim, self.canonical_key()))

    def __repr__(self):
        jumps = ", ".join(f"{w}:{len(self.step(w))}" for w in self.jump_indices())
        return f"FilteredSpace(dim={self.dim}, jumps=[{jumps}])"


class FiltrationPair:
    """A filtration on each tensor factor, inducing one on M (x) N.

    The pair's norm collects both factors: |alpha|^2 =
    sum_i i^2 dim gr^i M + sum_j j^2 dim gr^j N, carried exactly.
    """

    __slots__ = ("filt_m", "filt_n")

    def __init__(self, filt_m: FilteredSpace, filt_n: FilteredSpace):
        if filt_m.ctx is not filt_n.ctx:
            raise ValueError("filtration pair must share the coefficient field")
        self.filt_m = filt_m
        self.filt_n = filt_n

    @property
    def norm_sq(self):
        return self.filt_m.weight_moment(2) + self.filt_n.weight_moment(2)

    def is_trivial(self):
        return self.filt_m.is_trivial() and self.filt_n.is_trivial()

    def tensor_space(self):
        """Induced filtration on M (x) N in Kronecker coordinates
        ((s, t) -> s * dim N + t): weights add across the factors."""
        ctx = self.filt_m.ctx
        m, n = self.filt_m.dim, self.filt_n.dim
        vectors, weights = [], []
        for a, w in zip(self.filt_m.vectors, self.filt_m.weights):
            for b, v in zip(self.filt_n.vectors, self.filt_n.weights):
                vec = [0] * (m * n)
                for s in range(m):
                    if a[s] == 0:
                        continue
                    for t in range(n):
                        if b[t] == 0:
                            continue
                        vec[s * n + t] = ctx.mul(a[s], b[t])
                vectors.append(vec)
                weights.append(w + v)
        return FilteredSpace(ctx, vectors, weights)

    def scaled(self, c):
        return FiltrationPair(self.filt_m.scaled(c), self.filt_n.scaled(c))

    def canonical_key(self):
        return (self.filt_m.canonical_key(), self.filt_n.canonical_key())

    def __eq__(self, other):
        if not isinstance(other, FiltrationPair):
            return NotImplemented
        return self.filt_m == other.filt_m and self.filt_n == other.filt_n

    def __hash__(self):
        return hash((self.filt_m, self.filt_n))

    def __repr__(self):
        return f"FiltrationPair({self.filt_m!r}, {self.filt_n!r})"


# ----------------------------------------------------------- degree helpers

def deg_filtered(rows, alpha):
    """Degree of the subspace spanned by `rows` under `alpha`.

    alpha may be a FilteredSpace on the ambient space of the rows, or a
    FiltrationPair (then the rows live on the tensor product in Kronecker
    coordinates).  Exact rational output.
    """
    if isinstance(alpha, FiltrationPair):
        alpha = alpha.tensor_space()
    return alpha.subspace_degree(rows)


def mu_filtered(rows, alpha):
    """Slope deg/dim of a nonzero subspace under `alpha`."""
    if isinstance(alpha, FiltrationPair):
        alpha = alpha.tensor_space()
    s = fq_rank(alpha.ctx, _as_rows(rows))
    if s == 0:
        raise DimensionMismatch("slope of the zero subspace")
    return alpha.subspace_degree(rows) / s


# ------------------------------------------------- lattice-pair filtrations

def lattice_filtration_degree(mfk: SeriesMatrix, lfk: SeriesMatrix) -> int:
    """Total degree of M/uM filtered by the lattice L: the sum of the
    relative position exponents of (M, L).  When M contains L this is
    dim_k M/L; when they agree it is zero."""
    return sum(lattice_relative_position(mfk, lfk))


def induced_filtration(mfk: SeriesMatrix, lfk: SeriesMatrix) -> FilteredSpace:
    """Filtration of M/uM by the images of M /\\ u^{-i} L.

    Both lattices are given by full column bases in a common ambient space.
    In a basis f of M adapted to the pair (so u^{d_j} f_j spans L), the
    intersection M /\\ u^{-i} L is spanned by u^{max(d_j - i, 0)} f_j, whose
    image mod u is span{fbar_j : d_j <= i}: a weighted basis with weights
    the relative position exponents.
    """
    rel = mfk.inverse() @ lfk
    form = smith_normal_form(rel)
    if len(form.divisors) != mfk.nrows:
        raise DimensionMismatch("degenerate lattice pair")
    adapted = form.u_left_inv          # columns: M-basis adapted to the pair
    cols = adapted.reduction_mod_u()   # unimodular, so reduction is a basis
    vectors = [[cols[i][j] for i in range(adapted.nrows)]
               for j in range(adapted.ncols)]
    return FilteredSpace(mfk.ctx, vectors, [Fraction(d) for d in form.divisors])


def image_lattice(l, m0: SeriesMatrix) -> SeriesMatrix:
    """Column basis of the lattice generated by the semilinear image of the
    lattice spanned by m0's columns, in l's coordinates."""
    return l.B @ m0.frobenius()


def alt_degree_bound_check(l, subspace, m0: SeriesMatrix = None):
    """Evaluate both sides of the filtration lower bound for deg(S /\\ M).

    l: a Kisin lattice M with structure matrix B; subspace: a phi-stable
    subspace of the generic fibre (PhiStableSubspace or column basis);
    m0: an auxiliary full lattice in M-coordinates (default M itself).

    Returns (lhs, rhs, holds) with
      lhs = deg(S /\\ M), the strict subobject degree,
      rhs = (1/e) * (deg_{L0}(Sbar0) + (p-1) * deg_M(Sbar0)),
    where L0 = B phi(m0) is the image lattice of m0, Sbar0 the reduction
    mod u of S /\\ M0 in M0/uM0, and both degrees use the induced lattice
    filtrations on M0/uM0.  holds is the exact comparison lhs >= rhs.
    """
    basis = getattr(subspace, "basis", subspace)
    n = l.parent.n
    if m0 is None:
        m0 = SeriesMatrix.identity(l.ctx, n, l.B.min_prec())
    lhs = strict_subobject(l, basis).degree()

    l0 = image_lattice(l, m0)
    filt_l0 = induced_filtration(m0, l0)
    ident = SeriesMatrix.identity(l.ctx, n, l.B.min_prec())
    filt_m = induced_filtration(m0, ident)

    inside = saturate(m0.inverse() @ basis)   # S /\ M0 in M0-coordinates
    red = inside.reduction_mod_u()
    sbar = [[red[i][j] for i in range(inside.nrows)]
            for j in range(inside.ncols)]

    p = l.ctx.p
    rhs = (deg_filtered(sbar, filt_l0)
           + (p - 1) * deg_filtered(sbar, filt_m)) / Fraction(l.e)
    return lhs, rhs, lhs >= rhs
