"""p-torsion Kisin lattices and their ambient etale phi-modules.

An EtalePhiModule is F_q((u))^n with a semilinear Frobenius: phi acts on
series by u -> u^p (coefficients untouched) and on the module through an
invertible matrix A, v -> A.phi(v).  A KisinLattice is an F_q[[u]]-lattice
inside it, carried by a basis matrix g; in the lattice basis the Frobenius
matrix is B = g^{-1} A phi(g).

Numerical invariants follow one normalization throughout this package:
degree = (1/e) val_u det B, slope = degree / n.  The scaling by r = [F_q:F_p]
that turns these into length-style invariants happens at the polygon level
(hn_polygon), not here.
"""

import itertools
import math
from fractions import Fraction

from .errors import InsufficientPrecision, SingularMatrix, TameDegreeNotCoprime
from .fields import context, embedding
from .series import LaurentSeries
from .smatrix import (
    SeriesMatrix,
    saturate,
    smith_normal_form,
    solve_columns,
    unimodular_completion,
    val_det,
)


class EtalePhiModule:
    """F_q((u))^n with Frobenius v -> A.phi(v)."""

    __slots__ = ("ctx", "e", "n", "A", "prec", "val_det_A", "_A_inv")

    def __init__(self, ctx, e, n, A, prec=None):
        if e < 1:
            raise ValueError("ramification index e must be >= 1")
        if A.nrows != n or A.ncols != n:
            raise ValueError(f"A must be {n}x{n}, got {A.nrows}x{A.ncols}")
        if A.ctx is not ctx:
            raise ValueError("A has a different coefficient field")
        self.ctx = ctx
        self.e = e
        self.n = n
        self.A = A
        self.prec = A.min_prec() if prec is None else prec
        try:
            self.val_det_A = val_det(A)
        except (SingularMatrix, InsufficientPrecision) as err:
            raise type(err)(
                f"Frobenius matrix is not certifiably invertible: {err}") from err
        self._A_inv = None

    @property
    def A_inv(self):
        if self._A_inv is None:
            self._A_inv = self.A.inverse()
        return self._A_inv

    def lattice(self, g=None):
        return KisinLattice(self, g)

    def semilinear_change(self, g):
        """The same module presented in the basis g: A -> g^{-1} A phi(g)."""
        return EtalePhiModule(self.ctx, self.e, self.n,
                              g.inverse() @ self.A @ g.frobenius(), self.prec)

    def apply_phi(self, columns):
        """Frobenius on coordinate columns: W -> A.phi(W)."""
        return self.A @ columns.frobenius()

    def __repr__(self):
        return (f"EtalePhiModule(q={self.ctx.q}, e={self.e}, n={self.n}, "
                f"val_det_A={self.val_det_A})")


class RankDeg:
    __slots__ = ("rank", "deg")

    def __init__(self, rank, deg):
        self.rank = rank
        self.deg = Fraction(deg)

    @property
    def slope(self):
        if self.rank == 0:
            raise ZeroDivisionError("slope of the zero module")
        return self.deg / self.rank

    def __eq__(self, other):
        return (isinstance(other, RankDeg)
                and self.rank == other.rank and self.deg == other.deg)

    def __hash__(self):
        return hash((self.rank, self.deg))

    def __repr__(self):
        return f"RankDeg(rank={self.rank}, deg={self.deg})"


class KisinLattice:
    """Lattice g.O^n inside an etale phi-module; Frobenius matrix B = g^{-1} A phi(g)."""

    __slots__ = ("parent", "g", "B", "hodge_divisors", "height_window")

    def __init__(self, parent, g=None):
        self.parent = parent
        if g is None:
            g = SeriesMatrix.identity(parent.ctx, parent.n, parent.prec)
            B = parent.A
        else:
            if g.nrows != parent.n or g.ncols != parent.n:
                raise ValueError("lattice basis has the wrong shape")
            B = g.inverse() @ parent.A @ g.frobenius()
        self.g = g
        self.B = B
        form = smith_normal_form(B)
        if len(form.divisors) != parent.n:
            raise SingularMatrix("lattice Frobenius is not certifiably invertible")
        self.hodge_divisors = list(form.divisors)
        e = parent.e
        lo, hi = self.hodge_divisors[0], self.hodge_divisors[-1]
        self.height_window = (lo // e, -((-hi) // e))

    @property
    def ctx(self):
        return self.parent.ctx

    @property
    def e(self):
        return self.parent.e

    @property
    def rank(self):
        return self.parent.n

    def degree(self):
        return Fraction(sum(self.hodge_divisors), self.e)

    def slope(self):
        return self.degree() / self.rank

    def rank_deg(self):
        return RankDeg(self.rank, self.degree())

    def is_effective(self):
        return self.hodge_divisors[0] >= 0

    def is_etale(self):
        return self.hodge_divisors == [0] * self.rank

    def __repr__(self):
        return (f"KisinLattice(rank={self.rank}, deg={self.degree()}, "
                f"hodge={tuple(self.hodge_divisors)})")


# --------------------------------------------------------------- invariants

def degree(l: KisinLattice) -> Fraction:
    return l.degree()


def slope(l: KisinLattice) -> Fraction:
    return l.slope()


def hodge_divisors(l: KisinLattice):
    return list(l.hodge_divisors)


# -------------------------------------------------------------- Tate twists

def tate_twist(x, s: int):
    """Multiply the Frobenius by u^{s e}: degree shifts by s per rank unit."""
    if isinstance(x, EtalePhiModule):
        return EtalePhiModule(x.ctx, x.e, x.n, x.A.shift(s * x.e), x.prec)
    twisted = tate_twist(x.parent, s)
    return KisinLattice(twisted, x.g)


def effective_twist(l: KisinLattice):
    """(twisted lattice, s): the least s >= 0 making the lattice effective."""
    s = max(0, -(l.hodge_divisors[0] // l.e))
    return (tate_twist(l, s) if s else l), s


# ------------------------------------------------------ tensor constructions

def _kronecker(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    rows = []
    for i1 in range(a.nrows):
        for i2 in range(b.nrows):
            row = []
            for j1 in range(a.ncols):
                for j2 in range(b.ncols):
                    row.append(a.rows[i1][j1] * b.rows[i2][j2])
            rows.append(row)
    return SeriesMatrix(a.ctx, rows)


def _compound(m: SeriesMatrix, d: int) -> SeriesMatrix:
    """d-th compound matrix: minors indexed by lex-sorted d-subsets."""
    idx = list(itertools.combinations(range(m.nrows), d))
    rows = []
    for I in idx:
        row = []
        for J in idx:
            row.append(m.submatrix(I, J).det())
        rows.append(row)
    return SeriesMatrix(m.ctx, rows)


def tensor(l1: KisinLattice, l2: KisinLattice) -> KisinLattice:
    p1, p2 = l1.parent, l2.parent
    if p1.ctx is not p2.ctx or p1.e != p2.e:
        raise ValueError("tensor factors must share coefficient field and e")
    amb = EtalePhiModule(p1.ctx, p1.e, p1.n * p2.n, _kronecker(p1.A, p2.A))
    return KisinLattice(amb, _kronecker(l1.g, l2.g))


def dual(l: KisinLattice) -> KisinLattice:
    p = l.parent
    amb = EtalePhiModule(p.ctx, p.e, p.n, p.A.transpose().inverse())
    return KisinLattice(amb, l.g.transpose().inverse())


def exterior_power(l: KisinLattice, d: int) -> KisinLattice:
    p = l.parent
    if not 1 <= d <= p.n:
        raise ValueError("exterior power degree out of range")
    A_ext = _compound(p.A, d)
    amb = EtalePhiModule(p.ctx, p.e, A_ext.nrows, A_ext)
    return KisinLattice(amb, _compound(l.g, d))


# --------------------------------------------------------------- base change

def base_change(x, kind: str, mdeg: int):
    """Extend scalars: unramified (residue field F_{q^mdeg}) or tame (u = t^mdeg).

    Degree is invariant under both; tame scales e and all valuations by mdeg.
    """
    if mdeg < 1:
        raise ValueError("base change degree must be >= 1")
    if kind == "unramified":
        if isinstance(x, KisinLattice):
            amb = base_change(x.parent, kind, mdeg)
            table = embedding(x.parent.ctx, amb.ctx)
            return KisinLattice(amb, x.g.map_coefficients(table, amb.ctx))
        if mdeg == 1:
            return x
        new_ctx = context(x.ctx.p, x.ctx.r * mdeg)
        table = embedding(x.ctx, new_ctx)
        return EtalePhiModule(new_ctx, x.e, x.n,
                              x.A.map_coefficients(table, new_ctx), x.prec)
    if kind == "tame":
        p = x.ctx.p if isinstance(x, EtalePhiModule) else x.parent.ctx.p
        if math.gcd(mdeg, p) != 1:
            raise TameDegreeNotCoprime(
                f"tame degree {mdeg} is divisible by the residue characteristic {p}")
        if isinstance(x, KisinLattice):
            amb = base_change(x.parent, kind, mdeg)
            return KisinLattice(amb, x.g.substitute_power(mdeg))
        return EtalePhiModule(x.ctx, x.e * mdeg, x.n,
                              x.A.substitute_power(mdeg), x.prec * mdeg)
    raise ValueError(f"unknown base change kind: {kind!r}")


# ----------------------------------------------- strict subobjects/quotients

def strict_subobject(l: KisinLattice, subspace_basis: SeriesMatrix) -> KisinLattice:
    """The lattice (subspace intersect l) as a Kisin lattice of its own.

    subspace_basis: n x d columns in lattice coordinates spanning a phi-stable
    F_q((u))-subspace.  The intersection is the saturation of the column span
    inside O^n; its Frobenius matrix solves S X = B phi(S).
    """
    S = saturate(subspace_basis)
    image = l.B @ S.frobenius()
    cols = []
    for j in range(S.ncols):
        x = solve_columns(S, image.column(j))
        if x is None:
            raise ValueError("subspace is not phi-stable at the stated precision")
        cols.append(x)
    X = SeriesMatrix.from_columns(l.ctx, cols)
    return KisinLattice(EtalePhiModule(l.ctx, l.e, S.ncols, X))


def sub_quotient(l: KisinLattice, subspace_basis: SeriesMatrix):
    """(sub, quotient) lattices for a phi-stable subspace; degrees add exactly.

    The quotient Frobenius is the lower-right block of P^{-1} B phi(P) for a
    unimodular completion P of the saturated sub-basis; the lower-left block
    must vanish at precision (phi-stability), which is checked.
    """
    S = saturate(subspace_basis)
    d = S.ncols
    n = l.rank
    sub = strict_subobject(l, S)
    P = unimodular_completion(S)
    C = P.inverse() @ l.B @ P.frobenius()
    lower_left = C.submatrix(range(d, n), range(d))
    if not lower_left.is_zero():
        raise ValueError("subspace is not phi-stable: quotient block is nonzero")
    Y = C.submatrix(range(d, n), range(d, n))
    quot = KisinLattice(EtalePhiModule(l.ctx, l.e, n - d, Y))
    return sub, quot


# ------------------------------------------------------------------ file I/O

def lattice_from_file(text: str) -> KisinLattice:
    """Build a lattice from the key = value module format (g optional)."""
    from .literals import parse_module_file
    data = parse_module_file(text)
    ctx = data["ctx"]
    A = SeriesMatrix(ctx, data["A"])
    amb = EtalePhiModule(ctx, data["e"], data["n"], A, data["precision"])
    g = None
    if data["g"] is not None:
        g = SeriesMatrix(ctx, data["g"])
    return KisinLattice(amb, g)


def lattice_to_file(l: KisinLattice) -> str:
    from .literals import format_module_file
    g_rows = None
    eye = SeriesMatrix.identity(l.ctx, l.rank, l.parent.prec)
    if l.g.rows != eye.rows:
        g_rows = l.g.rows
    return format_module_file(l.ctx, l.e, l.rank, l.parent.prec,
                              l.parent.A.rows, g_rows)
