"""Truncated Laurent series over F_q with explicit absolute precision.

A series is known modulo u^prec: it stores its valuation val, the coefficient
window coeffs[i] = coefficient of u^(val+i) for val <= val+i < prec (integer
F_q codes), and prec itself.  Normalization keeps coeffs[0] nonzero, so the
valuation of a nonzero normalized series is exact, not a lower bound; the
only uncertain object is the zero-at-precision series (empty window,
val == prec), which means "indistinguishable from 0 modulo u^prec".

Precision algebra (absolute precision throughout):
  add/sub:    prec = min(prec1, prec2)
  mul:        prec = min(prec1 + val2, prec2 + val1)
  inverse:    prec - 2*val, valuation -val
  u -> u^m:   everything scales by m (exact; gaps are exact zeros)

Multiplication packs base-p digit sequences into lanes of a single big
integer when r == 1, so convolution rides on CPython's large-int multiply;
the lane width is chosen from an exact overflow bound.
"""

from .errors import InsufficientPrecision
from .fields import FqContext


def _mul_prime_coeffs(a, b, p, out_len):
    """First out_len coefficients of the product of digit tuples mod p."""
    la, lb = len(a), len(b)
    if la == 0 or lb == 0 or out_len <= 0:
        return ()
    bound = min(la, lb) * (p - 1) * (p - 1) + 1
    for width in (8, 16, 32, 64):
        if bound < (1 << width):
            break
    nbytes = width // 8
    pa = int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in a), "little")
    pb = int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in b), "little")
    prod = pa * pb
    n = min(out_len, la + lb - 1)
    raw = prod.to_bytes(max(1, (la + lb) * nbytes), "little")
    mask_out = []
    for i in range(n):
        lane = int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little")
        mask_out.append(lane % p)
    return tuple(mask_out)


def _mul_ext_coeffs(a, b, ctx, out_len):
    """Windowed convolution over F_{p^r}, r > 1, via lookup tables."""
    la, lb = len(a), len(b)
    if la == 0 or lb == 0 or out_len <= 0:
        return ()
    n = min(out_len, la + lb - 1)
    mul_t = ctx.mul_table
    add_t = ctx.add_table
    out = [0] * n
    for i, ai in enumerate(a):
        if ai == 0 or i >= n:
            continue
        row = mul_t[ai]
        jmax = min(lb, n - i)
        for j in range(jmax):
            bj = b[j]
            if bj:
                k = i + j
                out[k] = add_t[out[k]][row[bj]]
    return tuple(out)


class LaurentSeries:
    __slots__ = ("ctx", "val", "coeffs", "prec")

    def __init__(self, ctx: FqContext, val: int, coeffs, prec: int):
        # clip to the stated window, pad the known-zero tail
        window = prec - val
        if window <= 0:
            coeffs = []
        else:
            coeffs = list(coeffs[:window])
            coeffs.extend([0] * (window - len(coeffs)))
        # normalize: leading coefficient nonzero, or canonical zero
        lead = 0
        while lead < len(coeffs) and coeffs[lead] == 0:
            lead += 1
        if lead == len(coeffs):
            val, coeffs = prec, []
        else:
            val += lead
            coeffs = coeffs[lead:]
        self.ctx = ctx
        self.val = val
        self.coeffs = tuple(coeffs)
        self.prec = prec

    # constructors
    @classmethod
    def zero(cls, ctx, prec):
        return cls(ctx, prec, (), prec)

    @classmethod
    def one(cls, ctx, prec):
        return cls(ctx, 0, (1,), prec)

    @classmethod
    def monomial(cls, ctx, coeff, exp, prec):
        return cls(ctx, exp, (coeff,), prec)

    @classmethod
    def from_terms(cls, ctx, terms, prec):
        """terms: iterable of (exponent, code); exponents need not be sorted."""
        terms = [(e, c) for e, c in terms if c]
        for _, c in terms:
            if not 0 <= c < ctx.q:
                raise ValueError(f"coefficient code {c} out of range for q={ctx.q}")
        if not terms:
            return cls.zero(ctx, prec)
        v = min(e for e, _ in terms)
        window = [0] * (prec - v)
        for e, c in terms:
            if e < prec:
                window[e - v] = ctx.add(window[e - v], c)
        return cls(ctx, v, window, prec)

    # predicates and access
    @property
    def is_zero(self):
        """Zero at the stated precision."""
        return not self.coeffs

    def valuation(self):
        """Exact valuation, or None for a zero-at-precision series."""
        return None if self.is_zero else self.val

    def coefficient(self, e: int) -> int:
        if e >= self.prec:
            raise InsufficientPrecision(
                f"coefficient of u^{e} unknown at precision {self.prec}")
        if e < self.val:
            return 0
        return self.coeffs[e - self.val]

    def terms(self):
        """Known nonzero terms as a list of (exponent, code) pairs, ascending."""
        return [(self.val + i, c) for i, c in enumerate(self.coeffs) if c]

    # arithmetic
    def _check_ctx(self, other):
        if self.ctx is not other.ctx:
            raise ValueError("mixed field contexts")

    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        self._check_ctx(other)
        prec = min(self.prec, other.prec)
        v = min(self.val, other.val, prec)
        window = [0] * (prec - v)
        add = self.ctx.add
        for s in (self, other):
            for i, c in enumerate(s.coeffs):
                e = s.val + i
                if c and e < prec:
                    window[e - v] = add(window[e - v], c)
        return LaurentSeries(self.ctx, v, window, prec)

    def __neg__(self):
        neg = self.ctx.neg_table
        return LaurentSeries(self.ctx, self.val, [neg[c] for c in self.coeffs], self.prec)

    def __sub__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        self._check_ctx(other)
        ctx = self.ctx
        prec = min(self.prec + other.val, other.prec + self.val)
        if self.is_zero or other.is_zero:
            return LaurentSeries.zero(ctx, prec)
        v = self.val + other.val
        out_len = prec - v
        if ctx.r == 1:
            window = _mul_prime_coeffs(self.coeffs, other.coeffs, ctx.p, out_len)
        else:
            window = _mul_ext_coeffs(self.coeffs, other.coeffs, ctx, out_len)
        return LaurentSeries(ctx, v, window, prec)

    def scale(self, code: int):
        """Multiply by a field element (exact, precision preserved)."""
        if code == 0:
            return LaurentSeries.zero(self.ctx, self.prec)
        if code == 1:
            return self
        row = self.ctx.mul_table[code]
        return LaurentSeries(self.ctx, self.val, [row[c] for c in self.coeffs], self.prec)

    def shift(self, k: int):
        """Multiply by u^k (exact)."""
        if k == 0:
            return self
        return LaurentSeries(self.ctx, self.val + k, self.coeffs, self.prec + k)

    def inverse(self):
        if self.is_zero:
            raise InsufficientPrecision(
                f"cannot certify invertibility: zero at precision {self.prec}")
        ctx = self.ctx
        n = len(self.coeffs)  # relative precision
        c0_inv = ctx.inv(self.coeffs[0])
        out = [c0_inv]
        mul, add, neg = ctx.mul, ctx.add, ctx.neg
        for k in range(1, n):
            acc = 0
            kmax = min(k, n - 1)
            for i in range(1, kmax + 1):
                ai = self.coeffs[i]
                if ai:
                    acc = add(acc, mul(ai, out[k - i]))
            out.append(mul(neg(acc), c0_inv))
        return LaurentSeries(ctx, -self.val, out, self.prec - 2 * self.val)

    def __truediv__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self * other.inverse()

    def substitute_power(self, m: int):
        """Exact substitution u -> u^m (m >= 1); gaps are exact zeros."""
        if m == 1:
            return self
        if self.is_zero:
            return LaurentSeries.zero(self.ctx, m * self.prec)
        window = [0] * (m * (len(self.coeffs) - 1) + 1)
        for i, c in enumerate(self.coeffs):
            window[m * i] = c
        return LaurentSeries(self.ctx, m * self.val, window, m * self.prec)

    def frobenius(self, p=None):
        """phi(s): substitute u -> u^p; coefficients are not twisted."""
        return self.substitute_power(self.ctx.p if p is None else p)

    def truncate(self, new_prec: int):
        """Forget information: lower the absolute precision."""
        if new_prec >= self.prec:
            return self
        return LaurentSeries(self.ctx, self.val, self.coeffs, new_prec)

    def split_at(self, d: int):
        """(self mod u^d, self div u^d): exact splitting at exponent d."""
        lo = LaurentSeries(self.ctx, self.val, self.coeffs, min(d, self.prec))
        if d <= self.val:
            hi = LaurentSeries(self.ctx, self.val - d, self.coeffs, self.prec - d)
        else:
            skip = d - self.val
            hi = LaurentSeries(self.ctx, 0, self.coeffs[skip:], self.prec - d)
        return lo, hi

    def map_coefficients(self, table, new_ctx):
        """Apply a coefficient map (embedding table) into another context."""
        return LaurentSeries(new_ctx, self.val, [table[c] for c in self.coeffs], self.prec)

    # comparison
    def agrees(self, other, upto=None):
        """Equality modulo u^upto (default: the shared precision)."""
        self._check_ctx(other)
        bound = min(self.prec, other.prec)
        if upto is not None:
            if upto > bound:
                raise InsufficientPrecision(
                    f"cannot compare mod u^{upto} at precision {bound}")
            bound = upto
        d = self - other
        d = d.truncate(bound)
        return d.is_zero

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.ctx is other.ctx and self.val == other.val
                and self.coeffs == other.coeffs and self.prec == other.prec)

    def __hash__(self):
        return hash((id(self.ctx), self.val, self.coeffs, self.prec))

    def __repr__(self):
        from .literals import format_series
        return format_series(self)
