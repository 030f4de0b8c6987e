"""Residue fields F_q(T_1, ..., T_r): finite fields and rational function fields.

Polynomials are sparse dicts ``{exponent tuple: coefficient}`` with coefficients
encoded as integers in ``range(q)``; rational functions are kept in lowest terms
with a monic denominator (graded-lex leading term).
"""

from functools import reduce
from itertools import product
from operator import add as _iadd

from .errors import SwanPsiError


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def prime_power(q):
    """Return (p, k) with q == p**k, or raise ValueError."""
    for p in range(2, q + 1):
        if q % p == 0:
            if not _is_prime(p):
                break
            k, r = 0, q
            while r % p == 0:
                r //= p
                k += 1
            if r == 1:
                return p, k
            break
    raise ValueError(f"{q} is not a prime power")


class GF:
    """The finite field F_q via lookup tables.

    Elements are ints in range(q); for q = p**k they encode polynomials in a
    root of a fixed irreducible polynomial, digit i being the coefficient of x**i.
    The prime subfield is therefore {0, ..., p-1} with the obvious meaning.
    """

    MAX_Q = 1024

    def __init__(self, q):
        p, k = prime_power(q)
        if q > self.MAX_Q:
            raise ValueError(f"q={q} exceeds table limit {self.MAX_Q}")
        self.p, self.k, self.q = p, k, q
        if k == 1:
            self.add = [[(a + b) % p for b in range(q)] for a in range(q)]
            self.mul = [[(a * b) % p for b in range(q)] for a in range(q)]
        else:
            self._build_extension(p, k)
        self.neg = [next(b for b in range(q) if self.add[a][b] == 0) for a in range(q)]
        self.inv = [0] + [next(b for b in range(1, q) if self.mul[a][b] == 1) for a in range(1, q)]
        self.frob = [self.pow(a, p) for a in range(q)]
        self.root = [0] * q
        for a in range(q):
            self.root[self.frob[a]] = a

    def _build_extension(self, p, k):
        q = p**k

        def digits(a):
            return [(a // p**i) % p for i in range(k)]

        def encode(ds):
            return sum(d * p**i for i, d in enumerate(ds))

        modulus = None
        for tail in product(range(p), repeat=k):
            cand = list(tail) + [1]
            if tail[0] == 0:
                continue
            # irreducible iff no roots and no factor of lower degree; brute-force via
            # checking that x generates a field: the multiplicative order test below
            if self._poly_irreducible(cand, p):
                modulus = cand
                break
        self.modulus = modulus

        def mulpoly(a, b):
            da, db = digits(a), digits(b)
            prod = [0] * (2 * k - 1)
            for i, x in enumerate(da):
                if x:
                    for j, y in enumerate(db):
                        prod[i + j] = (prod[i + j] + x * y) % p
            for deg in range(2 * k - 2, k - 1, -1):
                c = prod[deg]
                if c:
                    for i in range(k + 1):
                        prod[deg - k + i] = (prod[deg - k + i] - c * modulus[i]) % p
            return encode(prod[:k])

        self.add = [[encode([(x + y) % p for x, y in zip(digits(a), digits(b))]) for b in range(q)]
                    for a in range(q)]
        self.mul = [[mulpoly(a, b) for b in range(q)] for a in range(q)]

    @staticmethod
    def _poly_irreducible(coeffs, p):
        deg = len(coeffs) - 1
        # trial division by all monic polynomials of degree 1..deg//2
        for d in range(1, deg // 2 + 1):
            for tail in product(range(p), repeat=d):
                div = list(tail) + [1]
                rem = list(coeffs)
                for top in range(deg, d - 1, -1):
                    c = rem[top]
                    if c:
                        for i in range(d + 1):
                            rem[top - d + i] = (rem[top - d + i] - c * div[i]) % p
                if not any(rem[:d]):
                    return False
        return True

    def pow(self, a, n):
        r = 1
        mul = self.mul
        while n:
            if n & 1:
                r = mul[r][a]
            a = mul[a][a]
            n >>= 1
        return r

    def from_int(self, n):
        return n % self.p

    def __repr__(self):
        return f"GF({self.q})"


# ---------------------------------------------------------------------------
# sparse polynomial helpers


def _order_key(e):
    return (sum(e), e)


def lead(a):
    return max(a, key=_order_key)


def padd(gf, a, b):
    if len(a) < len(b):
        a, b = b, a
    out = dict(a)
    add = gf.add
    for e, c in b.items():
        s = add[out.get(e, 0)][c]
        if s:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def pneg(gf, a):
    neg = gf.neg
    return {e: neg[c] for e, c in a.items()}


def psub(gf, a, b):
    return padd(gf, a, pneg(gf, b))


def pscale(gf, a, c, shift=None):
    if c == 0:
        return {}
    row = gf.mul[c]
    if shift is None:
        return {e: row[x] for e, x in a.items()}
    return {tuple(map(_iadd, e, shift)): row[x] for e, x in a.items()}


def pmul(gf, a, b):
    if len(a) == 1 and len(b) == 1:
        (ea, ca), = a.items()
        (eb, cb), = b.items()
        return {tuple(map(_iadd, ea, eb)): gf.mul[ca][cb]}
    out = {}
    mul, add = gf.mul, gf.add
    for ea, ca in a.items():
        row = mul[ca]
        for eb, cb in b.items():
            e = tuple(map(_iadd, ea, eb))
            s = add[out.get(e, 0)][row[cb]]
            if s:
                out[e] = s
            else:
                out.pop(e, None)
    return out


def ppow(gf, a, n, one):
    r = one
    while n:
        if n & 1:
            r = pmul(gf, r, a)
        n >>= 1
        if n:
            a = pmul(gf, a, a)
    return r


def pmonic(gf, a):
    if not a:
        return a
    c = a[lead(a)]
    if c == 1:
        return a
    return pscale(gf, a, gf.inv[c])


def pdivexact(gf, a, b):
    """Exact division a / b; raises ArithmeticError when b does not divide a."""
    if len(b) == 1:
        (eb, cb), = b.items()
        inv_lc = gf.inv[cb]
        q = {}
        for e, c in a.items():
            shift = tuple(x - y for x, y in zip(e, eb))
            if any(s < 0 for s in shift):
                raise ArithmeticError("inexact polynomial division")
            q[shift] = gf.mul[c][inv_lc]
        return q
    lb = lead(b)
    inv_lc = gf.inv[b[lb]]
    q = {}
    r = dict(a)
    while r:
        lr = lead(r)
        shift = tuple(x - y for x, y in zip(lr, lb))
        if any(s < 0 for s in shift):
            raise ArithmeticError("inexact polynomial division")
        c = gf.mul[r[lr]][inv_lc]
        q[shift] = c
        r = psub(gf, r, pscale(gf, b, c, shift))
    return q


def _vars_of(a):
    s = set()
    for e in a:
        for i, k in enumerate(e):
            if k:
                s.add(i)
    return s


def _deg_in(a, i):
    return max(e[i] for e in a)


def _coeffs_in(a, i):
    """Split a into {k: coefficient of x_i**k} with x_i removed from the keys."""
    out = {}
    for e, c in a.items():
        k = e[i]
        key = e[:i] + (0,) + e[i + 1:]
        out.setdefault(k, {})[key] = c
    return out


def _unit_monomial(r, i, k):
    e = [0] * r
    e[i] = k
    return tuple(e)


def _uni_gcd(gf, a, b, i):
    """Euclid for polynomials in the single variable x_i."""
    r = len(next(iter(a)))

    def divmod_uni(x, y):
        dy = _deg_in(y, i)
        ly = _unit_monomial(r, i, dy)
        inv = gf.inv[y[ly]]
        x = dict(x)
        while x:
            dx = _deg_in(x, i)
            if dx < dy:
                break
            lx = _unit_monomial(r, i, dx)
            c = gf.mul[x[lx]][inv]
            x = psub(gf, x, pscale(gf, y, c, _unit_monomial(r, i, dx - dy)))
        return x

    while b:
        a, b = b, divmod_uni(a, b)
    return pmonic(gf, a)


def pgcd(gf, a, b):
    """Monic gcd of two polynomials (recursive primitive remainder sequences)."""
    if not a:
        return pmonic(gf, b)
    if not b:
        return pmonic(gf, a)
    r = len(next(iter(a)))
    one = {(0,) * r: 1}
    if len(a) == 1 or len(b) == 1:
        # a monomial divides exactly the monomials below every term of the other side
        exps = list(a) + list(b)
        return {tuple(min(e[i] for e in exps) for i in range(r)): 1}
    va, vb = _vars_of(a), _vars_of(b)
    if not va or not vb:
        return one
    allv = va | vb
    if len(allv) == 1:
        return _uni_gcd(gf, a, b, next(iter(allv)))
    x = min(allv)
    if x not in va:
        return pgcd(gf, a, _content(gf, b, x))
    if x not in vb:
        return pgcd(gf, _content(gf, a, x), b)
    ca, cb = _content(gf, a, x), _content(gf, b, x)
    pa, pb = pdivexact(gf, a, ca), pdivexact(gf, b, cb)
    g = pgcd(gf, ca, cb)
    if _deg_in(pa, x) < _deg_in(pb, x):
        pa, pb = pb, pa
    while True:
        rem = _prem(gf, pa, pb, x)
        if not rem:
            break
        if _deg_in(rem, x) == 0:
            pb = one
            break
        pa, pb = pb, _primitive(gf, rem, x)
    return pmonic(gf, pmul(gf, g, _primitive(gf, pb, x)))


def _content(gf, a, i):
    return reduce(lambda g, c: pgcd(gf, g, c), _coeffs_in(a, i).values(), {})


def _primitive(gf, a, i):
    return pdivexact(gf, a, _content(gf, a, i))


def _prem(gf, a, b, i):
    r = len(next(iter(a)))
    db = _deg_in(b, i)
    lcb = _coeffs_in(b, i)[db]
    rem = a
    while rem and _deg_in(rem, i) >= db:
        dr = _deg_in(rem, i)
        lcr = _coeffs_in(rem, i)[dr]
        shifted = {tuple(map(_iadd, e, _unit_monomial(r, i, dr - db))): c for e, c in b.items()}
        rem = psub(gf, pmul(gf, lcb, rem), pmul(gf, lcr, shifted))
    return rem


# ---------------------------------------------------------------------------


class ResidueField:
    """F_q(T_1, ..., T_r); r = 0 gives the perfect field F_q."""

    def __init__(self, q, pbasis_vars=()):
        self.gf = GF(q)
        self.p, self.q = self.gf.p, q
        self.vars = tuple(pbasis_vars)
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("duplicate variable names")
        self.r = len(self.vars)
        self._zero_exp = (0,) * self.r
        self._one_poly = {self._zero_exp: 1}
        self.zero = RF(self, {}, self._one_poly)
        self.one = RF(self, self._one_poly, self._one_poly)

    @property
    def is_perfect(self):
        return self.r == 0

    def __eq__(self, other):
        return isinstance(other, ResidueField) and (self.q, self.vars) == (other.q, other.vars)

    def __hash__(self):
        return hash((self.q, self.vars))

    def __repr__(self):
        if not self.vars:
            return f"F_{self.q}"
        return f"F_{self.q}({', '.join(self.vars)})"

    def const(self, c):
        """Embed an int (reduced mod p) or a raw GF element code via ``gf_elem``."""
        c = self.gf.from_int(c)
        return RF(self, {self._zero_exp: c} if c else {}, self._one_poly)

    def gf_elem(self, c):
        return RF(self, {self._zero_exp: c} if c else {}, self._one_poly)

    def var(self, name, power=1):
        i = self.vars.index(name)
        return RF(self, {_unit_monomial(self.r, i, power): 1}, self._one_poly)

    def monomial(self, c, exps):
        """c * prod T_i**exps[i]; negative exponents allowed."""
        c = self.gf.from_int(c) if isinstance(c, int) else c
        if not c:
            return self.zero
        pos = tuple(max(k, 0) for k in exps)
        neg = tuple(max(-k, 0) for k in exps)
        return RF(self, {pos: c}, {neg: 1})

    def from_polys(self, num, den):
        return _make(self, num, den)

    def polynomials(self, max_degree):
        """All polynomials with total degree <= max_degree (single variable only)."""
        if self.r != 1:
            raise ValueError("polynomial enumeration needs exactly one variable")
        for coeffs in product(range(self.q), repeat=max_degree + 1):
            num = {(k,): c for k, c in enumerate(coeffs) if c}
            yield RF(self, num, self._one_poly)

    def extend(self, name):
        """Field with one more variable; returns (field, embedding)."""
        if name in self.vars:
            raise ValueError(f"variable {name} already present")
        big = ResidueField(self.q, self.vars + (name,))
        return big

    def coerce(self, x):
        """Map an element of a subfield (vars a prefix/subset by name) into self."""
        if x.F is self or x.F == self:
            return x if x.F is self else RF(self, x.n, x.d)
        idx = [self.vars.index(v) for v in x.F.vars]

        def remap(poly):
            out = {}
            for e, c in poly.items():
                ne = [0] * self.r
                for j, k in zip(idx, e):
                    ne[j] = k
                out[tuple(ne)] = c
            return out

        return RF(self, remap(x.n), remap(x.d))


def _make(F, num, den):
    """Build a normalized RF from arbitrary num/den polynomials."""
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return F.zero
    gf = F.gf
    if len(den) == 1 and den.get(F._zero_exp) is not None:
        c = den[F._zero_exp]
        if c != 1:
            num = pscale(gf, num, gf.inv[c])
        return RF(F, num, F._one_poly)
    g = pgcd(gf, num, den)
    if len(g) != 1 or F._zero_exp not in g:
        num = pdivexact(gf, num, g)
        den = pdivexact(gf, den, g)
    c = den[lead(den)]
    if c != 1:
        inv = gf.inv[c]
        num = pscale(gf, num, inv)
        den = pscale(gf, den, inv)
    return RF(F, num, den)


class RF:
    """Element of a ResidueField, immutable, in canonical lowest terms."""

    __slots__ = ("F", "n", "d", "_h")

    def __init__(self, F, num, den):
        self.F = F
        self.n = num
        self.d = den
        self._h = None

    # predicates -----------------------------------------------------------
    def __bool__(self):
        return bool(self.n)

    @property
    def is_poly(self):
        return self.d is self.F._one_poly or self.d == self.F._one_poly

    def is_constant(self):
        z = self.F._zero_exp
        return self.is_poly and (not self.n or (len(self.n) == 1 and z in self.n))

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.F.const(other)
        if not isinstance(other, RF):
            return NotImplemented
        return self.n == other.n and self.d == other.d

    def __hash__(self):
        if self._h is None:
            self._h = hash((frozenset(self.n.items()), frozenset(self.d.items())))
        return self._h

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, RF):
            return other
        if isinstance(other, int):
            return self.F.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        gf = self.F.gf
        if not other.n:
            return self
        if not self.n:
            return other
        if self.is_poly and other.is_poly:
            return RF(self.F, padd(gf, self.n, other.n), self.F._one_poly)
        if self.d == other.d:
            return _make(self.F, padd(gf, self.n, other.n), self.d)
        num = padd(gf, pmul(gf, self.n, other.d), pmul(gf, other.n, self.d))
        return _make(self.F, num, pmul(gf, self.d, other.d))

    __radd__ = __add__

    def __neg__(self):
        return RF(self.F, pneg(self.F.gf, self.n), self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        F, gf = self.F, self.F.gf
        if not self.n or not other.n:
            return F.zero
        if self.is_poly and other.is_poly:
            return RF(F, pmul(gf, self.n, other.n), F._one_poly)
        # cross-cancel before multiplying
        g1 = pgcd(gf, self.n, other.d)
        g2 = pgcd(gf, other.n, self.d)
        n1 = pdivexact(gf, self.n, g1) if len(g1) > 1 or F._zero_exp not in g1 else self.n
        d2 = pdivexact(gf, other.d, g1) if len(g1) > 1 or F._zero_exp not in g1 else other.d
        n2 = pdivexact(gf, other.n, g2) if len(g2) > 1 or F._zero_exp not in g2 else other.n
        d1 = pdivexact(gf, self.d, g2) if len(g2) > 1 or F._zero_exp not in g2 else self.d
        num, den = pmul(gf, n1, n2), pmul(gf, d1, d2)
        c = den[lead(den)]
        if c != 1:
            inv = gf.inv[c]
            num, den = pscale(gf, num, inv), pscale(gf, den, inv)
        return RF(F, num, den)

    __rmul__ = __mul__

    def inverse(self):
        if not self.n:
            raise ZeroDivisionError("inverse of zero in residue field")
        gf = self.F.gf
        num, den = self.d, self.n
        c = den[lead(den)]
        if c != 1:
            inv = gf.inv[c]
            num, den = pscale(gf, num, inv), pscale(gf, den, inv)
        if len(den) == 1 and self.F._zero_exp in den:
            den = self.F._one_poly
        return RF(self.F, num, den)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        gf = self.F.gf
        num = ppow(gf, self.n, k, self.F._one_poly)
        den = ppow(gf, self.d, k, self.F._one_poly)
        if self.is_poly:
            den = self.F._one_poly
        return RF(self.F, num, den)

    # characteristic-p structure ------------------------------------------
    def frobenius(self):
        gf = self.F.gf
        p = gf.p
        f = gf.frob

        def fr(poly):
            return {tuple(k * p for k in e): f[c] for e, c in poly.items()}

        return RF(self.F, fr(self.n), self.d if self.is_poly else fr(self.d))

    def is_pth_power(self):
        p = self.F.p
        return all(k % p == 0 for e in self.n for k in e) and all(k % p == 0 for e in self.d for k in e)

    def pth_root(self):
        if not self.is_pth_power():
            raise ValueError(f"{self} is not a p-th power")
        gf = self.F.gf
        p, root = gf.p, gf.root

        def rt(poly):
            return {tuple(k // p for k in e): root[c] for e, c in poly.items()}

        return RF(self.F, rt(self.n), self.d if self.is_poly else rt(self.d))

    def derivative(self, name):
        i = self.F.vars.index(name)
        gf = self.F.gf

        def dpoly(poly):
            out = {}
            for e, c in poly.items():
                k = e[i]
                if k % gf.p:
                    ne = e[:i] + (k - 1,) + e[i + 1:]
                    out[ne] = gf.add[out.get(ne, 0)][gf.mul[c][gf.from_int(k)]]
                    if not out[ne]:
                        del out[ne]
            return out

        if self.is_poly:
            return RF(self.F, dpoly(self.n), self.F._one_poly)
        num = psub(gf, pmul(gf, dpoly(self.n), self.d), pmul(gf, self.n, dpoly(self.d)))
        return _make(self.F, num, pmul(gf, self.d, self.d))

    def variables(self):
        vs = _vars_of(self.n) | _vars_of(self.d)
        return {self.F.vars[i] for i in vs}

    def degree(self):
        """Max total degree of numerator and denominator."""
        return max(sum(e) for e in list(self.n) + list(self.d)) if self.n else 0

    # display ---------------------------------------------------------------
    def __repr__(self):
        if not self.d or self.is_poly:
            return _fmt_poly(self.F, self.n)
        return f"({_fmt_poly(self.F, self.n)})/({_fmt_poly(self.F, self.d)})"


def _fmt_coeff(F, c):
    if F.gf.k == 1:
        return str(c)
    return f"g{c}"


def _fmt_poly(F, poly):
    if not poly:
        return "0"
    terms = []
    for e in sorted(poly, key=_order_key, reverse=True):
        c = poly[e]
        mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(F.vars, e) if k)
        if not mono:
            terms.append(_fmt_coeff(F, c))
        elif c == 1:
            terms.append(mono)
        else:
            terms.append(f"{_fmt_coeff(F, c)}*{mono}")
    return " + ".join(terms)


def poly_is_monic(F, poly):
    return not poly or poly[lead(poly)] == 1


class ResidueError(SwanPsiError):
    pass
