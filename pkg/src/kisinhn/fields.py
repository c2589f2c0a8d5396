"""Arithmetic in F_q = F_p[a]/(f), with elements encoded as integers.

An element sum c_i a^i (0 <= c_i < p) is stored as the integer sum c_i p^i, so
0 and 1 are the additive and multiplicative identities in both encodings.
A context precomputes full q x q addition and multiplication tables; all
element arithmetic after that is table lookup, which keeps the series kernels
free of per-element polynomial work.

The modulus f is the lexicographically least monic irreducible of degree r
over F_p, coefficients compared constant term first.  This makes contexts,
and everything derived from them, deterministic across runs.
"""

from functools import lru_cache

MAX_Q = 1024


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _poly_trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_trim(out)


def _poly_divmod(a, b, p):
    # b monic
    a = list(a)
    db, da = len(b) - 1, len(a) - 1
    q = [0] * max(0, da - db + 1)
    while len(a) - 1 >= db and any(a):
        da = len(a) - 1
        if a[-1] == 0:
            a.pop()
            continue
        coef = a[-1]
        q[da - db] = coef
        for i, bi in enumerate(b):
            a[da - db + i] = (a[da - db + i] - coef * bi) % p
        a.pop()
    return _poly_trim(q), _poly_trim(a)


def _monic_polys(deg, p):
    """All monic polynomials of the given degree, low coefficients first."""
    total = p ** deg
    for code in range(total):
        c = []
        x = code
        for _ in range(deg):
            c.append(x % p)
            x //= p
        yield c + [1]


def _is_irreducible(f, p):
    deg = len(f) - 1
    if deg == 1:
        return True
    if f[0] == 0:
        return False
    for d in range(1, deg // 2 + 1):
        for g in _monic_polys(d, p):
            _, rem = _poly_divmod(f, g, p)
            if not rem:
                return False
    return True


def _least_irreducible(p, r):
    if r == 1:
        return [0, 1]
    # lexicographic order, constant coefficient most significant
    best = None
    for f in _monic_polys(r, p):
        key = tuple(f[:-1])
        if best is not None and key >= best[0]:
            continue
        if _is_irreducible(f, p):
            best = (key, f)
    return best[1]


class FqContext:
    """Tables and encodings for one finite field F_{p^r}.

    Use the module-level context() factory, which caches per (p, r); contexts
    compare by identity and every object built on one keeps a reference to it.
    """

    def __init__(self, p: int, r: int):
        if not is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if r < 1:
            raise ValueError(f"extension degree r = {r} must be >= 1")
        q = p ** r
        if q > MAX_Q:
            raise ValueError(f"q = {q} exceeds supported table size {MAX_Q}")
        self.p = p
        self.r = r
        self.q = q
        self.modulus = tuple(_least_irreducible(p, r))
        self._build_tables()

    def _build_tables(self):
        p, r, q = self.p, self.r, self.q
        digits = [self.decode(x) for x in range(q)]
        add = [[0] * q for _ in range(q)]
        for x in range(q):
            dx = digits[x]
            for y in range(x, q):
                s = [(a + b) % p for a, b in zip(dx, digits[y])]
                v = self.encode(s)
                add[x][y] = v
                add[y][x] = v
        mul = [[0] * q for _ in range(q)]
        mod = list(self.modulus)
        for x in range(1, q):
            fx = _poly_trim(digits[x])
            for y in range(x, q):
                prod = _poly_mul(fx, _poly_trim(digits[y]), p)
                _, rem = _poly_divmod(prod, mod, p)
                rem = rem + [0] * (r - len(rem))
                v = self.encode(rem)
                mul[x][y] = v
                mul[y][x] = v
        self.add_table = add
        self.mul_table = mul
        self.neg_table = [self.encode([(-a) % p for a in digits[x]]) for x in range(q)]
        inv = [0] * q
        for x in range(1, q):
            for y in range(1, q):
                if mul[x][y] == 1:
                    inv[x] = y
                    break
        self.inv_table = inv

    # encoding helpers
    def decode(self, x: int):
        """Integer code -> list of r base-p digits, constant term first."""
        out = []
        for _ in range(self.r):
            out.append(x % self.p)
            x //= self.p
        return out

    def encode(self, digits) -> int:
        v = 0
        for d in reversed(list(digits)):
            v = v * self.p + d
        return v

    # element arithmetic on integer codes
    def add(self, x: int, y: int) -> int:
        return self.add_table[x][y]

    def sub(self, x: int, y: int) -> int:
        return self.add_table[x][self.neg_table[y]]

    def mul(self, x: int, y: int) -> int:
        return self.mul_table[x][y]

    def neg(self, x: int) -> int:
        return self.neg_table[x]

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("inverse of zero in F_q")
        return self.inv_table[x]

    def pow(self, x: int, n: int) -> int:
        if n < 0:
            x, n = self.inv(x), -n
        out = 1
        while n:
            if n & 1:
                out = self.mul_table[out][x]
            x = self.mul_table[x][x]
            n >>= 1
        return out

    def from_int(self, n: int) -> int:
        """Image of the rational integer n under F_p -> F_q."""
        return n % self.p

    def element(self, code: int) -> "FqElement":
        return FqElement(self, code)

    def elements(self):
        return range(self.q)

    def element_repr(self, x: int) -> str:
        """Pretty form as a polynomial in the generator a."""
        if x < self.p:
            return str(x)
        terms = []
        for i, c in enumerate(self.decode(x)):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                pow_s = "a" if i == 1 else f"a^{i}"
                terms.append(pow_s if c == 1 else f"{c}*{pow_s}")
        return " + ".join(reversed(terms))

    def __repr__(self):
        return f"FqContext(p={self.p}, r={self.r})"


class FqElement:
    """Thin wrapper over the integer encoding, for user-facing arithmetic."""

    __slots__ = ("ctx", "code")

    def __init__(self, ctx: FqContext, code: int):
        if not 0 <= code < ctx.q:
            raise ValueError(f"element code {code} out of range for q={ctx.q}")
        self.ctx = ctx
        self.code = code

    def _coerce(self, other):
        if isinstance(other, FqElement):
            if other.ctx is not self.ctx:
                raise ValueError("mixed field contexts")
            return other.code
        if isinstance(other, int):
            return other % self.ctx.p
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else FqElement(self.ctx, self.ctx.add(self.code, c))

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else FqElement(self.ctx, self.ctx.sub(self.code, c))

    def __rsub__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else FqElement(self.ctx, self.ctx.sub(c, self.code))

    def __mul__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else FqElement(self.ctx, self.ctx.mul(self.code, c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else FqElement(self.ctx, self.ctx.mul(self.code, self.ctx.inv(c)))

    def __neg__(self):
        return FqElement(self.ctx, self.ctx.neg(self.code))

    def __pow__(self, n):
        return FqElement(self.ctx, self.ctx.pow(self.code, n))

    def __eq__(self, other):
        if isinstance(other, FqElement):
            return self.ctx is other.ctx and self.code == other.code
        if isinstance(other, int):
            return self.code == other % self.ctx.p
        return NotImplemented

    def __hash__(self):
        return hash((id(self.ctx), self.code))

    def __bool__(self):
        return self.code != 0

    def __repr__(self):
        return self.ctx.element_repr(self.code)


@lru_cache(maxsize=None)
def context(p: int, r: int = 1) -> FqContext:
    """Shared context for F_{p^r}; cached so contexts compare by identity."""
    return FqContext(p, r)


def context_for_q(q: int) -> FqContext:
    """Context for F_q given a prime power q."""
    for p in range(2, q + 1):
        if q % p == 0:
            if not is_prime(p):
                break
            r = 0
            m = q
            while m % p == 0:
                m //= p
                r += 1
            if m != 1:
                break
            return context(p, r)
    raise ValueError(f"q = {q} is not a prime power")


def embedding(src: FqContext, dst: FqContext):
    """Field embedding F_q -> F_{q^m} as a lookup list over src codes.

    Requires src.p == dst.p and src.r | dst.r.  The generator of src is sent
    to the least root (in the integer encoding of dst) of src's modulus, which
    fixes one embedding deterministically.
    """
    if src.p != dst.p or dst.r % src.r != 0:
        raise ValueError(f"no embedding F_{src.q} -> F_{dst.q}")
    if src.r == dst.r and src is dst:
        return list(range(src.q))
    mod = src.modulus
    root = None
    for x in range(dst.q):
        acc = 0
        xpow = 1
        for c in mod:
            if c:
                acc = dst.add(acc, dst.mul(dst.from_int(c), xpow))
            xpow = dst.mul(xpow, x)
        if acc == 0:
            root = x
            break
    if root is None:
        raise ValueError("modulus has no root in the target field")
    powers = [1]
    for _ in range(1, src.r):
        powers.append(dst.mul(powers[-1], root))
    table = []
    for x in range(src.q):
        acc = 0
        for c, rp in zip(src.decode(x), powers):
            if c:
                acc = dst.add(acc, dst.mul(dst.from_int(c), rp))
        table.append(acc)
    return table
