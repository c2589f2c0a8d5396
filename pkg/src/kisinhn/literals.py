"""Laurent literal grammar and the module file format.

Literals look like `(a+1)*u^-1 + a*u^2 + 1`: terms joined by + or -, each a
'*'-product of integer constants, the field generator `a` (only when q > p),
the uniformizer `u`, and parenthesized subexpressions, any factor optionally
raised with ^ to an integer (negative exponents only on unit monomials, e.g.
u^-3).  The serializer emits one canonical form per series: terms in
ascending exponent, coefficients as reduced polynomials in a, parentheses
exactly around multi-term coefficients; parse(format(s)) == s.

Module files are `key = value` lines: p, q, e, n, precision, then A (and
optionally g) as a row-major matrix of literals, which may span lines until
brackets balance.  '#' starts a comment.
"""

from .errors import ParseError
from .fields import FqContext, context_for_q
from .series import LaurentSeries


# ---------------------------------------------------------------- tokenizer

def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("int", int(text[i:j])))
            i = j
        elif ch in "au":
            toks.append(("name", ch))
            i += 1
        elif ch in "+-*^()":
            toks.append((ch, ch))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r} in literal")
    toks.append(("end", None))
    return toks


class _Parser:
    """Recursive descent over tokens; values are {exponent: F_q code} dicts."""

    def __init__(self, toks, ctx):
        self.toks = toks
        self.pos = 0
        self.ctx = ctx

    def peek(self):
        return self.toks[self.pos][0]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise ParseError(f"expected {kind!r}, got {t[0]!r}")
        return t

    def parse_expr(self):
        sign = 1
        if self.peek() in "+-":
            sign = -1 if self.next()[0] == "-" else 1
        value = self._signed(self.parse_term(), sign)
        while self.peek() in "+-":
            sign = -1 if self.next()[0] == "-" else 1
            value = self._add(value, self._signed(self.parse_term(), sign))
        return value

    def parse_term(self):
        value = self.parse_factor()
        while self.peek() == "*":
            self.next()
            value = self._mul(value, self.parse_factor())
        return value

    def parse_factor(self):
        kind, payload = self.next()
        if kind == "int":
            value = {0: self.ctx.from_int(payload)}
        elif kind == "name" and payload == "a":
            if self.ctx.r == 1:
                raise ParseError("generator 'a' requires q > p")
            value = {0: self.ctx.encode([0, 1] + [0] * (self.ctx.r - 2))}
        elif kind == "name" and payload == "u":
            value = {1: 1}
        elif kind == "(":
            value = self.parse_expr()
            self.expect(")")
        else:
            raise ParseError(f"unexpected token {kind!r} in literal")
        if self.peek() == "^":
            self.next()
            neg = False
            if self.peek() == "-":
                self.next()
                neg = True
            exp = self.expect("int")[1]
            value = self._pow(value, -exp if neg else exp)
        return value

    # dict algebra
    def _clean(self, d):
        return {e: c for e, c in d.items() if c}

    def _signed(self, d, sign):
        if sign == 1:
            return d
        neg = self.ctx.neg
        return {e: neg(c) for e, c in d.items()}

    def _add(self, d1, d2):
        add = self.ctx.add
        out = dict(d1)
        for e, c in d2.items():
            out[e] = add(out.get(e, 0), c)
        return self._clean(out)

    def _mul(self, d1, d2):
        mul, add = self.ctx.mul, self.ctx.add
        out = {}
        for e1, c1 in d1.items():
            for e2, c2 in d2.items():
                e = e1 + e2
                out[e] = add(out.get(e, 0), mul(c1, c2))
        return self._clean(out)

    def _pow(self, d, n):
        if n < 0:
            if len(d) != 1:
                raise ParseError("negative exponent on a non-monomial")
            ((e, c),) = d.items()
            return self._pow({-e: self.ctx.inv(c)}, -n)
        out = {0: 1}
        for _ in range(n):
            out = self._mul(out, d)
        return out


def parse_series(text: str, ctx: FqContext, prec: int) -> LaurentSeries:
    """Parse one Laurent literal at the given absolute precision."""
    parser = _Parser(_tokenize(text), ctx)
    value = parser.parse_expr()
    if parser.peek() != "end":
        raise ParseError(f"trailing input in literal {text!r}")
    return LaurentSeries.from_terms(ctx, value.items(), prec)


# --------------------------------------------------------------- serializer

def _format_coeff(ctx, code):
    """(text, needs_parens_when_multiplied)"""
    digits = ctx.decode(code)
    terms = []
    for i in range(ctx.r - 1, -1, -1):
        c = digits[i]
        if c == 0:
            continue
        if i == 0:
            terms.append(str(c))
        else:
            s = "a" if i == 1 else f"a^{i}"
            terms.append(s if c == 1 else f"{c}*{s}")
    if not terms:
        return "0", False
    text = " + ".join(terms)
    return text, len(terms) > 1


def format_series(s: LaurentSeries) -> str:
    """Canonical literal: ascending exponents, reduced coefficients."""
    parts = []
    for e, c in s.terms():
        coeff, parens = _format_coeff(s.ctx, c)
        if e == 0:
            parts.append(f"({coeff})" if parens else coeff)
            continue
        upart = "u" if e == 1 else f"u^{e}"
        if c == 1:
            parts.append(upart)
        elif parens:
            parts.append(f"({coeff})*{upart}")
        else:
            parts.append(f"{coeff}*{upart}")
    return " + ".join(parts) if parts else "0"


def format_matrix(rows) -> str:
    inner = ", ".join("[" + ", ".join(format_series(s) for s in row) + "]" for row in rows)
    return f"[{inner}]"


def _split_top_level(text, sep=","):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced brackets in matrix literal")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ParseError("unbalanced brackets in matrix literal")
    parts.append("".join(cur))
    return parts


def parse_matrix(text: str, ctx: FqContext, prec: int):
    """Parse `[[lit, ...], ...]` into a list of lists of series."""
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ParseError("matrix literal must be bracketed")
    body = text[1:-1].strip()
    if not body:
        raise ParseError("empty matrix literal")
    rows = []
    for row_text in _split_top_level(body):
        row_text = row_text.strip()
        if not (row_text.startswith("[") and row_text.endswith("]")):
            raise ParseError(f"matrix row must be bracketed: {row_text!r}")
        entries = [parse_series(t, ctx, prec) for t in _split_top_level(row_text[1:-1])]
        rows.append(entries)
    if any(len(r) != len(rows[0]) for r in rows):
        raise ParseError("ragged matrix literal")
    return rows


# ------------------------------------------------------------- module files

REQUIRED_KEYS = ("p", "q", "e", "n", "precision", "A")


def parse_module_file(text: str) -> dict:
    """Parse the key = value module format.

    Returns {"ctx", "e", "n", "precision", "A", "g"} with A and g as lists of
    lists of LaurentSeries (g is None when absent).
    """
    raw = {}
    pending_key, pending_val = None, []

    def flush():
        nonlocal pending_key, pending_val
        if pending_key is not None:
            raw[pending_key] = " ".join(pending_val)
            pending_key, pending_val = None, []

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if pending_key is not None:
            pending_val.append(line.strip())
            joined = " ".join(pending_val)
            if joined.count("[") == joined.count("]"):
                flush()
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value")
        key, val = line.split("=", 1)
        key, val = key.strip(), val.strip()
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        if val.count("[") != val.count("]"):
            pending_key, pending_val = key, [val]
        else:
            raw[key] = val
    if pending_key is not None:
        raise ParseError(f"unterminated matrix value for key {pending_key!r}")

    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ParseError(f"missing required key {key!r}")
    ints = {}
    for key in ("p", "q", "e", "n", "precision"):
        try:
            ints[key] = int(raw[key])
        except ValueError:
            raise ParseError(f"key {key!r} must be an integer, got {raw[key]!r}") from None
    p, q, e, n, prec = (ints[k] for k in ("p", "q", "e", "n", "precision"))
    try:
        ctx = context_for_q(q)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if ctx.p != p:
        raise ParseError(f"q = {q} is not a power of p = {p}")
    if e < 1 or n < 1 or prec < 1:
        raise ParseError("e, n and precision must be positive")
    A = parse_matrix(raw["A"], ctx, prec)
    if len(A) != n or len(A[0]) != n:
        raise ParseError(f"A must be {n} x {n}")
    g = None
    if "g" in raw:
        g = parse_matrix(raw["g"], ctx, prec)
        if len(g) != n or len(g[0]) != n:
            raise ParseError(f"g must be {n} x {n}")
    known = set(REQUIRED_KEYS) | {"g"}
    extra = set(raw) - known
    if extra:
        raise ParseError(f"unknown keys: {sorted(extra)}")
    return {"ctx": ctx, "e": e, "n": n, "precision": prec, "A": A, "g": g}


def format_module_file(ctx, e, n, precision, A_rows, g_rows=None) -> str:
    lines = [
        f"p = {ctx.p}",
        f"q = {ctx.q}",
        f"e = {e}",
        f"n = {n}",
        f"precision = {precision}",
        f"A = {format_matrix(A_rows)}",
    ]
    if g_rows is not None:
        lines.append(f"g = {format_matrix(g_rows)}")
    return "\n".join(lines) + "\n"
