"""Towers of equal-characteristic local fields and exact element arithmetic.

Every level shares one residue field ``R = F_q(T_1, ..., T_r)`` holding all
variables introduced anywhere in the tower; each level records which of them
belong to its own residue field.  Two data representations are used:

* ``Series``: a truncated Laurent series in the level's uniformizer with
  coefficients in ``R``.  Used while no Artin-Schreier step has been taken.
* ``tuple``: coordinates ``(c_0, ..., c_{d-1})`` over a lower *defining* level
  ``B``, meaning ``sum c_i X^i`` where ``X^d = sum r_i X^i``.  Artin-Schreier
  steps (``X^p = X + f``) and tame steps above them (``X^e = pi_B``) use this.

Constant steps change no data: they only enlarge the allowed variables.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, inf

from . import expr as _expr
from .errors import (MalformedParams, MalformedStep, PrecisionExhausted, UnsupportedProbe,
                     UnsupportedTower, SwanPsiError)
from .residue import ResidueField, prime_power, _is_prime

RESERVED = {"u", "pi", "rho", "alpha"}
DEFAULT_PRECISION = 32
PRECISION_CAP = 2**12


def default_precision(max_pole):
    return 4 * max_pole + 16


def _ceil_div(a, b):
    return -((-a) // b)


# ---------------------------------------------------------------------------
# steps


@dataclass(frozen=True)
class TowerStep:
    kind: str  # "constant" | "tame" | "artin_schreier"
    var: str = None
    e: int = None
    f: object = None  # expression string, or callable(tower, level_index) -> FieldElement

    @classmethod
    def constant(cls, var):
        return cls("constant", var=var)

    @classmethod
    def tame(cls, e):
        return cls("tame", e=e)

    @classmethod
    def artin_schreier(cls, f):
        return cls("artin_schreier", f=f)

    def describe(self):
        if self.kind == "constant":
            return f"Constant({self.var})"
        if self.kind == "tame":
            return f"Tame({self.e})"
        return f"ArtinSchreier({self.f if isinstance(self.f, str) else '...'})"


Constant = TowerStep.constant
Tame = TowerStep.tame
ArtinSchreier = TowerStep.artin_schreier


# ---------------------------------------------------------------------------
# series data


class Series:
    """Laurent series sum terms[n] * pi^n + O(pi^prec); prec may be inf (exact)."""

    __slots__ = ("terms", "prec")

    def __init__(self, terms, prec=inf):
        self.terms = terms
        self.prec = prec

    def __eq__(self, other):
        return isinstance(other, Series) and self.prec == other.prec and self.terms == other.terms

    def __hash__(self):
        return hash((frozenset(self.terms.items()), self.prec))

    def __repr__(self):
        return f"Series({self.terms!r}, {self.prec})"


class Level:
    """Common interface; concrete classes below."""

    index = 0
    kind = "base"

    def __init__(self, tower, index, kind, e, E, vars_):
        self.tower = tower
        self.index = index
        self.kind = kind
        self.e = e  # ramification over the previous level
        self.E = E  # ramification over the base
        self.vars = tuple(vars_)
        self.p = tower.p
        self.R = tower.R
        self.lift_cache = {}

    def element(self, data):
        return FieldElement(self, data)

    def zero_el(self):
        return FieldElement(self, self.zero())

    def one_el(self):
        return FieldElement(self, self.one())

    def __repr__(self):
        return f"<level {self.index} {self.kind} e={self.e} E={self.E}>"


class SeriesLevel(Level):
    representation = "series"

    def __init__(self, tower, index, kind, e, E, vars_, pi_name):
        super().__init__(tower, index, kind, e, E, vars_)
        self.pi_name = pi_name
        self._zero = Series({}, inf)
        self._one = Series({0: self.R.one}, inf)

    # constructors ---------------------------------------------------------
    def zero(self):
        return self._zero

    def one(self):
        return self._one

    def from_rf(self, c):
        return Series({0: c} if c else {}, inf)

    def monomial(self, k, c=None):
        return Series({k: c if c is not None else self.R.one}, inf)

    def big_o(self, P):
        return Series({}, P)

    def is_exact_zero(self, a):
        return not a.terms and a.prec == inf

    def is_exact(self, a):
        return a.prec == inf

    def abs_prec(self, a):
        return a.prec

    # ring ops ---------------------------------------------------------------
    def add(self, a, b):
        prec = min(a.prec, b.prec)
        if not b.terms:
            t = a.terms if prec == a.prec else {k: c for k, c in a.terms.items() if k < prec}
            return Series(t, prec)
        if not a.terms:
            t = b.terms if prec == b.prec else {k: c for k, c in b.terms.items() if k < prec}
            return Series(t, prec)
        out = {k: c for k, c in a.terms.items() if k < prec}
        for k, c in b.terms.items():
            if k >= prec:
                continue
            if k in out:
                s = out[k] + c
                if s:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = c
        return Series(out, prec)

    def neg(self, a):
        return Series({k: -c for k, c in a.terms.items()}, a.prec)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def scale(self, c, a):
        if not c:
            return Series({}, inf)
        return Series({k: c * x for k, x in a.terms.items()}, a.prec)

    def shift(self, a, k):
        return Series({n + k: c for n, c in a.terms.items()}, a.prec + k)

    def mul(self, a, b):
        ta, tb = a.terms, b.terms
        va = min(ta) if ta else inf
        vb = min(tb) if tb else inf
        prec = min(va + b.prec, vb + a.prec, a.prec + b.prec)
        if not ta or not tb:
            return Series({}, prec)
        out = {}
        for i, x in ta.items():
            for j, y in tb.items():
                k = i + j
                if k >= prec:
                    continue
                z = x * y
                if k in out:
                    s = out[k] + z
                    if s:
                        out[k] = s
                    else:
                        del out[k]
                else:
                    out[k] = z
        return Series(out, prec)

    def frob(self, a):
        p = self.p
        return Series({k * p: c.frobenius() for k, c in a.terms.items()}, a.prec * p)

    def truncate(self, a, P):
        if P >= a.prec:
            return a
        return Series({k: c for k, c in a.terms.items() if k < P}, P)

    def val_bound(self, a):
        if a.terms:
            return min(a.terms), True
        return a.prec, a.prec == inf

    def lead(self, a):
        if not a.terms:
            if a.prec == inf:
                raise ZeroDivisionError("leading term of zero")
            raise PrecisionExhausted(f"no known nonzero coefficient below pi^{a.prec}")
        v = min(a.terms)
        return v, a.terms[v]

    def inv(self, a):
        v, c0 = self.lead(a)
        ic = c0.inverse()
        if len(a.terms) == 1 and a.prec == inf:
            return Series({-v: ic}, inf)
        R = self.tower.precision
        if a.prec != inf:
            R = min(R, a.prec - v)
        coeffs = [a.terms.get(v + j) for j in range(R)]
        b = [ic]
        for k in range(1, R):
            s = None
            for j in range(1, k + 1):
                cj = coeffs[j]
                if cj is None or not b[k - j]:
                    continue
                t = cj * b[k - j]
                s = t if s is None else s + t
            b.append(-(ic * s) if s is not None else self.R.zero)
        return Series({k - v: x for k, x in enumerate(b) if x}, R - v)

    def eq(self, a, b):
        return a == b

    def from_below(self, a):
        if self.kind == "constant":
            return a
        e = self.e
        return Series({k * e: c for k, c in a.terms.items()}, a.prec * e)

    def map_coeffs(self, a, fn):
        out = {}
        for k, c in a.terms.items():
            c2 = fn(c)
            if c2:
                out[k] = c2
        return Series(out, a.prec)

    def fmt(self, a):
        parts = []
        for k in sorted(a.terms):
            c = a.terms[k]
            cs = repr(c)
            if k == 0:
                parts.append(cs)
                continue
            mono = self.pi_name if k == 1 else f"{self.pi_name}^{k}"
            if cs == "1":
                parts.append(mono)
            elif len(c.n) == 1 and c.is_poly:
                parts.append(f"{cs}*{mono}")
            else:
                parts.append(f"({cs})*{mono}")
        if a.prec != inf:
            parts.append(f"O({self.pi_name}^{a.prec})")
        return " + ".join(parts) if parts else "0"


class VectorLevel(Level):
    """Simple extension of degree d over a defining level B: data = d coordinates in B."""

    representation = "vector"

    def __init__(self, tower, index, kind, e, E, vars_, base, d, rel, vx):
        super().__init__(tower, index, kind, e, E, vars_)
        self.base = base  # defining level B
        self.d = d
        self.rel = rel  # list of (i, B-data) with X^d = sum r_i X^i
        self.vx = vx  # v(X) in this level's units
        self.defn = self
        self._Xpow_p = None
        self._Xinv = None
        self.lift_cache = {}
        B = base
        self._zero = tuple(B.zero() for _ in range(d))
        self._one = (B.one(),) + tuple(B.zero() for _ in range(d - 1))

    def setup_uniformizer(self, ua, ub, z0, w0):
        self.ua, self.ub = ua, ub  # pi = X^ua * pi_B^ub
        self.z0, self.w0 = z0, w0  # residues of X / pi^vx and pi_B / pi^d

    # constructors -----------------------------------------------------------
    def zero(self):
        return self._zero

    def one(self):
        return self._one

    def from_rf(self, c):
        return (self.base.from_rf(c),) + self._zero[1:]

    def gen(self):
        B = self.base
        return tuple(B.one() if i == 1 else B.zero() for i in range(self.d)) if self.d > 1 else None

    def coord(self, i, c):
        return tuple(c if j == i else self.base.zero() for j in range(self.d))

    def monomial(self, k, c=None):
        d, vx = self.d, self.vx
        i = next(i for i in range(d) if (k - i * vx) % d == 0)
        j = (k - i * vx) // d
        return self.coord(i, self.base.monomial(j, c))

    def big_o(self, P):
        B = self.base
        return tuple(B.big_o(_ceil_div(P - i * self.vx, self.d)) for i in range(self.d))

    def is_exact_zero(self, a):
        B = self.base
        return all(B.is_exact_zero(c) for c in a)

    def is_exact(self, a):
        B = self.base
        return all(B.is_exact(c) for c in a)

    def abs_prec(self, a):
        B = self.base
        return min(self.d * B.abs_prec(c) + i * self.vx for i, c in enumerate(a))

    # ring ops ---------------------------------------------------------------
    def add(self, a, b):
        add = self.base.add
        return tuple(add(x, y) for x, y in zip(a, b))

    def neg(self, a):
        neg = self.base.neg
        return tuple(neg(x) for x in a)

    def sub(self, a, b):
        sub = self.base.sub
        return tuple(sub(x, y) for x, y in zip(a, b))

    def scale(self, c, a):
        sc = self.base.scale
        return tuple(sc(c, x) for x in a)

    def bmul(self, b, a):
        """Multiply by an element of the defining level."""
        mul = self.base.mul
        return tuple(mul(b, x) for x in a)

    def mul(self, a, b):
        B, d = self.base, self.d
        zero = B.is_exact_zero
        acc = [None] * (2 * d - 1)
        for i, x in enumerate(a):
            if zero(x):
                continue
            for j, y in enumerate(b):
                if zero(y):
                    continue
                z = B.mul(x, y)
                acc[i + j] = z if acc[i + j] is None else B.add(acc[i + j], z)
        for k in range(2 * d - 2, d - 1, -1):
            c = acc[k]
            if c is None:
                continue
            for i, r in self.rel:
                t = c if r is B.one() else B.mul(c, r)
                idx = k - d + i
                acc[idx] = t if acc[idx] is None else B.add(acc[idx], t)
        z = B.zero()
        return tuple(z if acc[i] is None else acc[i] for i in range(d))

    def _xp_powers(self):
        if self._Xpow_p is None:
            p, d = self.p, self.d
            X = self.gen()
            xp = self.one()
            for _ in range(p):
                xp = self.mul(xp, X)
            pows = [self.one()]
            for _ in range(1, d):
                pows.append(self.mul(pows[-1], xp))
            self._Xpow_p = pows
        return self._Xpow_p

    def frob(self, a):
        B = self.base
        pows = self._xp_powers()
        out = self.zero()
        for i, c in enumerate(a):
            if B.is_exact_zero(c):
                continue
            out = self.add(out, self.bmul(B.frob(c), pows[i]))
        return out

    def truncate(self, a, P):
        B, d, vx = self.base, self.d, self.vx
        return tuple(B.truncate(c, _ceil_div(P - i * vx, d)) for i, c in enumerate(a))

    def val_bound(self, a):
        B, d, vx = self.base, self.d, self.vx
        known = []
        bounds = []
        for i, c in enumerate(a):
            vb, cert = B.val_bound(c)
            if vb == inf:
                continue
            (known if cert else bounds).append(d * vb + i * vx)
        mk = min(known) if known else inf
        mb = min(bounds) if bounds else inf
        if mk < mb:
            assert len({k % d for k in known}) == len(known), "coordinate valuations collide mod d"
            return mk, True
        if mk == inf and mb == inf:
            return inf, True
        return min(mk, mb), False

    def lead(self, a):
        v, cert = self.val_bound(a)
        if not cert:
            raise PrecisionExhausted(f"leading term not certified at level {self.index}")
        if v == inf:
            raise ZeroDivisionError("leading term of zero")
        B, d, vx = self.base, self.d, self.vx
        for i, c in enumerate(a):
            vb, ok = B.val_bound(c)
            if ok and vb != inf and d * vb + i * vx == v:
                _, lr = B.lead(c)
                return v, lr * self.w0 ** vb * self.z0 ** i
        raise AssertionError("leading coordinate not found")

    def xinv(self):
        if self._Xinv is None:
            B, d = self.base, self.d
            r0 = dict(self.rel).get(0)
            num = list(self.zero())
            num[d - 1] = B.one()
            for i, r in self.rel:
                if i >= 1:
                    num[i - 1] = B.sub(num[i - 1], r)
            self._Xinv = self.bmul(B.inv(r0), tuple(num))
        return self._Xinv

    def _xinv_power(self, k):
        out = self.one()
        xi = self.xinv()
        for _ in range(k):
            out = self.mul(out, xi)
        return out

    def inv(self, a):
        v, _ = self.lead(a)
        B, d, vx = self.base, self.d, self.vx
        i0 = c = None
        for i, ci in enumerate(a):
            vb, ok = B.val_bound(ci)
            if ok and vb != inf and d * vb + i * vx == v:
                i0, c = i, ci
                break
        yinv = self.bmul(B.inv(c), self._xinv_power(i0))
        h = self.sub(self.mul(a, yinv), self.one())
        if self.is_exact_zero(h):
            return yinv
        R = self.tower.precision
        ap = self.abs_prec(a)
        if ap != inf:
            R = min(R, ap - v)
        mh = self.neg(h)
        s = self.one()
        for _ in range(R):
            s = self.truncate(self.add(self.one(), self.mul(mh, s)), R)
        return self.truncate(self.mul(yinv, s), R - v)

    def eq(self, a, b):
        return a == b

    def from_below(self, a):
        if self.kind == "constant":
            return a
        return (a,) + self._zero[1:]

    def map_coeffs(self, a, fn):
        mc = self.base.map_coeffs
        return tuple(mc(c, fn) for c in a)

    def fmt(self, a):
        B = self.base
        parts = []
        for i, c in enumerate(a):
            if B.is_exact_zero(c):
                continue
            s = B.fmt(c)
            if i == 0:
                parts.append(f"({s})" if "+" in s else s)
            else:
                xn = self.x_name if i == 1 else f"{self.x_name}^{i}"
                parts.append(f"({s})*{xn}")
        return " + ".join(parts) if parts else "0"


def _alias(parent, tower, index, vars_):
    """Constant step above a vector level: same data, larger residue field."""
    lvl = VectorLevel.__new__(VectorLevel)
    lvl.__dict__.update(parent.__dict__)
    lvl.index = index
    lvl.kind = "constant"
    lvl.e = 1
    lvl.vars = tuple(vars_)
    lvl.lift_cache = {}
    lvl.tower = tower
    return lvl


# ---------------------------------------------------------------------------
# elements


class FieldElement:
    """An element of one tower level.  Immutable."""

    __slots__ = ("level", "data")

    def __init__(self, level, data):
        self.level = level
        self.data = data

    @property
    def tower(self):
        return self.level.tower

    def _other(self, y):
        if isinstance(y, FieldElement):
            if y.level is not self.level:
                if y.level.tower is self.level.tower and y.level.index < self.level.index:
                    return y.embed(self.level.index).data
                raise ValueError("elements live at different levels")
            return y.data
        if isinstance(y, int):
            return self.level.from_rf(self.level.R.const(y))
        if hasattr(y, "F"):
            return self.level.from_rf(y)
        return NotImplemented

    def __add__(self, y):
        d = self._other(y)
        if d is NotImplemented:
            return d
        return FieldElement(self.level, self.level.add(self.data, d))

    __radd__ = __add__

    def __sub__(self, y):
        d = self._other(y)
        if d is NotImplemented:
            return d
        return FieldElement(self.level, self.level.sub(self.data, d))

    def __rsub__(self, y):
        return (-self) + y

    def __neg__(self):
        return FieldElement(self.level, self.level.neg(self.data))

    def __mul__(self, y):
        if isinstance(y, int) or hasattr(y, "F"):
            c = self.level.R.const(y) if isinstance(y, int) else y
            return FieldElement(self.level, self.level.scale(c, self.data))
        d = self._other(y)
        if d is NotImplemented:
            return d
        return FieldElement(self.level, self.level.mul(self.data, d))

    __rmul__ = __mul__

    def inverse(self):
        return FieldElement(self.level, self.level.inv(self.data))

    def __truediv__(self, y):
        if not isinstance(y, FieldElement):
            y = FieldElement(self.level, self._other(y))
        return self * y.inverse()

    def __rtruediv__(self, y):
        return self.inverse() * y

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        result = self.level.one()
        base = self.data
        mul = self.level.mul
        while k:
            if k & 1:
                result = mul(result, base)
            k >>= 1
            if k:
                base = mul(base, base)
        return FieldElement(self.level, result)

    def frobenius(self):
        return FieldElement(self.level, self.level.frob(self.data))

    def valuation(self):
        v, cert = self.level.val_bound(self.data)
        if not cert:
            raise PrecisionExhausted(f"valuation not certified (only v >= {v} known)")
        return v

    def val_bound(self):
        return self.level.val_bound(self.data)

    def leading_residue(self):
        return self.level.lead(self.data)[1]

    def lead(self):
        return self.level.lead(self.data)

    def is_zero(self):
        """True only for the exact zero element."""
        return self.level.is_exact_zero(self.data)

    def is_exact(self):
        return self.level.is_exact(self.data)

    def abs_prec(self):
        return self.level.abs_prec(self.data)

    def truncate(self, P):
        return FieldElement(self.level, self.level.truncate(self.data, P))

    def embed(self, to_level):
        tower = self.level.tower
        k = self.level.index
        if isinstance(to_level, Level):
            to_level = to_level.index
        if to_level < k:
            raise ValueError("can only embed upward")
        data = self.data
        for j in range(k + 1, to_level + 1):
            data = tower.levels[j].from_below(data)
        return FieldElement(tower.levels[to_level], data)

    def __eq__(self, other):
        if isinstance(other, int):
            other = FieldElement(self.level, self._other(other))
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.level.index == other.level.index and self.data == other.data

    def __hash__(self):
        return hash((self.level.index, self.data))

    def __repr__(self):
        return self.level.fmt(self.data)


# ---------------------------------------------------------------------------
# the tower


class LocalFieldTower:
    """A base field F_q(base_vars)((u)) plus a chain of constant/tame/AS steps."""

    def __init__(self, p, q=None, steps=(), precision=None, base_vars=(), base_name="u",
                 allow_trivial_tame=False):
        q = p if q is None else q
        if not isinstance(p, int) or not _is_prime(p):
            raise MalformedParams(f"p={p} is not prime")
        try:
            pp, _ = prime_power(q)
        except ValueError:
            raise MalformedParams(f"q={q} is not a prime power") from None
        if pp != p:
            raise MalformedParams(f"q={q} is not a power of p={p}")
        self.p, self.q = p, q
        self.base_vars = tuple(base_vars)
        self.base_name = base_name
        self.precision = precision or DEFAULT_PRECISION
        steps = [s if isinstance(s, TowerStep) else TowerStep(**s) for s in steps]
        allv = list(self.base_vars)
        for idx, s in enumerate(steps):
            if s.kind == "constant":
                if not isinstance(s.var, str) or not s.var.isidentifier():
                    raise MalformedStep(idx, f"bad variable name {s.var!r}")
                if s.var in RESERVED or s.var.startswith("alpha") or s.var in allv:
                    raise MalformedStep(idx, f"variable name {s.var!r} is reserved or repeated")
                allv.append(s.var)
        self.R = ResidueField(q, allv)
        self.steps = steps
        self.levels = []
        self.as_levels = []
        self.tame_levels = []
        self.uniformizer_ab = {}
        self._allow_trivial = allow_trivial_tame
        base = SeriesLevel(self, 0, "base", 1, 1, self.base_vars, base_name)
        self.levels.append(base)
        for idx, s in enumerate(steps):
            self._add_level(idx, s)

    # construction -------------------------------------------------------------
    def _add_level(self, idx, s):
        below = self.levels[-1]
        k = len(self.levels)
        p = self.p
        if s.kind == "constant":
            vars_ = below.vars + (s.var,)
            if below.representation == "series":
                lvl = SeriesLevel(self, k, "constant", 1, below.E, vars_, below.pi_name)
            else:
                lvl = _alias(below, self, k, vars_)
        elif s.kind == "tame":
            e = s.e
            if not isinstance(e, int) or isinstance(e, bool):
                raise MalformedStep(idx, f"tame index must be an integer, got {e!r}")
            if e < 1 or (e == 1 and not self._allow_trivial):
                raise MalformedStep(idx, f"tame index must be >= 2, got {e}")
            if gcd(e, p) != 1:
                raise MalformedStep(idx, f"tame index {e} is divisible by p={p}")
            name = f"rho{len(self.tame_levels) + 1}" if self.tame_levels else "rho"
            if below.representation == "series":
                lvl = SeriesLevel(self, k, "tame", e, below.E * e, below.vars, name)
            elif e == 1:
                lvl = _alias(below, self, k, below.vars)
            else:
                B = below
                rel = [(0, B.monomial(1))]
                lvl = VectorLevel(self, k, "tame", e, below.E * e, below.vars, B, e, rel, 1)
                lvl.setup_uniformizer(1, 0, self.R.one, self.R.one)
                lvl.x_name = name
                lvl.defkind = "tame"
            lvl.pi_name = name
            self.tame_levels.append(k)
        elif s.kind == "artin_schreier":
            f = self._resolve_f(idx, s.f, below)
            try:
                v = f.valuation()
            except PrecisionExhausted as exc:
                raise MalformedStep(idx, f"cannot certify v(f): {exc}") from None
            if v >= 0:
                raise MalformedStep(idx, f"v(f) = {v} must be negative")
            m = -v
            if m % p == 0:
                raise MalformedStep(idx, f"p={p} divides m={m}; reduce f first")
            bad = set()
            for c in _coefficients(f):
                bad |= c.variables() - set(below.vars)
            if bad:
                raise MalformedStep(idx, f"f uses variables {sorted(bad)} not in the residue field below")
            ua = next(a for a in range(p) if (1 + a * m) % p == 0)
            ub = (1 + ua * m) // p
            B = below
            rel = [(0, f.data), (1, B.one())]
            E = below.E * p
            lvl = VectorLevel(self, k, "artin_schreier", p, E, below.vars, B, p, rel, -m)
            lam = f.leading_residue()
            lvl.setup_uniformizer(ua, ub, lam ** ub, lam ** (-ua))
            lvl.f = f
            lvl.m = m
            lvl.defkind = "artin_schreier"
            n_as = len(self.as_levels) + 1
            lvl.x_name = "alpha" if n_as == 1 else f"alpha{n_as}"
            lvl.pi_name = f"pi{k}"
            self.as_levels.append(k)
            self.uniformizer_ab[k] = (ua, ub)
        else:
            raise MalformedStep(idx, f"unknown step kind {s.kind!r}")
        self.levels.append(lvl)

    def _resolve_f(self, idx, f, below):
        try:
            if isinstance(f, str):
                return self.parse(f, below.index)
            if isinstance(f, FieldElement):
                if f.level.tower is self:
                    return f
                return FieldElement(below, _coerce_data(below, f.level, f.data))
            if callable(f):
                x = f(self, below.index)
                return x if isinstance(x, FieldElement) else FieldElement(below, x)
        except MalformedStep:
            raise
        except SwanPsiError as exc:
            raise MalformedStep(idx, str(exc)) from None
        raise MalformedStep(idx, f"cannot interpret f={f!r}")

    # properties -----------------------------------------------------------------
    @property
    def top(self):
        return self.levels[-1]

    @property
    def e_total(self):
        return self.top.E

    def e_between(self, lo, hi):
        return self.levels[hi].E // self.levels[lo].E

    def residue_at(self, level):
        return ResidueField(self.q, self.levels[level].vars)

    def with_precision(self, N):
        t = LocalFieldTower(self.p, self.q, self.steps, N, self.base_vars, self.base_name,
                            self._allow_trivial)
        for k in ("probe_info", "twist_info"):
            if hasattr(self, k):
                setattr(t, k, getattr(self, k))
        return t

    def extend(self, *steps):
        return LocalFieldTower(self.p, self.q, list(self.steps) + list(steps), self.precision,
                               self.base_vars, self.base_name, self._allow_trivial)

    def describe(self):
        inner = ", ".join(s.describe() for s in self.steps)
        res = f"F_{self.q}({','.join(self.base_vars)})" if self.base_vars else f"F_{self.q}"
        return f"{res}(({self.base_name}))[{inner}]"

    def __repr__(self):
        return f"<LocalFieldTower {self.describe()} e={self.e_total}>"

    # elements -------------------------------------------------------------------------
    def _lvl(self, level):
        if level is None:
            return self.top
        if isinstance(level, Level):
            return level
        return self.levels[level]

    def zero(self, level=None):
        return self._lvl(level).zero_el()

    def one(self, level=None):
        return self._lvl(level).one_el()

    def const(self, c, level=None):
        lvl = self._lvl(level)
        if isinstance(c, int):
            c = self.R.const(c)
        return FieldElement(lvl, lvl.from_rf(c))

    def var(self, name, level=None):
        lvl = self._lvl(level)
        if name not in lvl.vars:
            raise KeyError(f"{name} is not a residue variable at level {lvl.index}")
        return FieldElement(lvl, lvl.from_rf(self.R.var(name)))

    def u(self, level=None):
        return FieldElement(self.levels[0], self.levels[0].monomial(1)).embed(self._lvl(level).index)

    def uniformizer(self, level=None):
        lvl = self._lvl(level)
        return FieldElement(lvl, lvl.monomial(1))

    def monomial(self, k, level=None, c=None):
        lvl = self._lvl(level)
        return FieldElement(lvl, lvl.monomial(k, c))

    def series(self, terms, level=None, prec=inf):
        """Element sum c * pi^n of a series level from {n: RF or int}."""
        lvl = self._lvl(level)
        if lvl.representation != "series":
            raise UnsupportedTower("series() needs a level without Artin-Schreier steps below")
        t = {}
        for n, c in terms.items():
            c = self.R.const(c) if isinstance(c, int) else c
            if c and n < prec:
                t[n] = c
        return FieldElement(lvl, Series(t, prec))

    def alpha(self, which=1, level=None):
        k = self.as_levels[which - 1]
        lvl = self.levels[k]
        return FieldElement(lvl, lvl.gen()).embed(self._lvl(level).index)

    def parse(self, text, level=None):
        lvl = self._lvl(level)
        node = _expr.parse(text)

        def resolve(name):
            return self._symbol(name, lvl)

        return _expr.evaluate(node, resolve, lambda n: self.const(n, lvl), text)

    def _symbol(self, name, lvl):
        k = lvl.index
        if name == "u" or name == self.base_name:
            return self.u(k)
        if name == "pi":
            return self.uniformizer(k)
        if name in lvl.vars:
            return self.var(name, k)
        as_below = [j for j in self.as_levels if j <= k]
        if name == "alpha" and as_below:
            return self.alpha(self.as_levels.index(as_below[-1]) + 1, k)
        if name.startswith("alpha") and name[5:].isdigit():
            n = int(name[5:])
            if 1 <= n <= len(as_below):
                return self.alpha(n, k)
            return None
        tame_below = [j for j in self.tame_levels if j <= k]
        if name == "rho" and tame_below:
            j = tame_below[-1]
            L = self.levels[j]
            data = L.gen() if L.representation == "vector" else L.monomial(1)
            return FieldElement(L, data).embed(k)
        return None


def build_tower(p, q=None, steps=(), precision=None, base_vars=()):
    return LocalFieldTower(p, q, steps, precision, base_vars)


def _coefficients(x):
    """All residue-field coefficients occurring in x (recursively)."""
    lvl = x.level
    out = []

    def walk(level, data):
        if level.representation == "series":
            out.extend(data.terms.values())
        else:
            for c in data:
                walk(level.base, c)

    walk(lvl, x.data)
    return out


def _coerce_data(new_level, old_level, data):
    R = new_level.R
    if new_level.representation == "series":
        return new_level.map_coeffs(data, R.coerce)
    return tuple(_coerce_data(new_level.base, old_level.base, c) for c in data)


def arith(x, y=None, op="add", k=None):
    """Functional front end: op in add, sub, mul, inv, pow, frobenius."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "inv":
        return x.inverse()
    if op == "pow":
        return x ** k
    if op == "frobenius":
        return x.frobenius()
    raise ValueError(f"unknown op {op}")


def valuation(x):
    return x.valuation()


def leading_residue(x):
    return x.leading_residue()


def embed(x, from_level, to_level):
    if x.level.index != (from_level.index if isinstance(from_level, Level) else from_level):
        raise ValueError("element is not at from_level")
    return x.embed(to_level)


# ---------------------------------------------------------------------------
# probes


class Transport:
    """A ring map between tower levels carrying elements across."""

    def __init__(self, fn, source, target, e):
        self.fn = fn
        self.source = source  # Level
        self.target = target  # Level
        self.e = e  # ramification index of target over source

    def __call__(self, x):
        if x.level.index != self.source.index or x.level.tower is not self.source.tower:
            if x.level.tower is self.source.tower and x.level.index < self.source.index:
                x = x.embed(self.source.index)
            else:
                raise ValueError("element is not at the transport's source level")
        return FieldElement(self.target, self.fn(x.data))


def _scaled_rf_map(src_R, dst_R, rules):
    """Map RF elements: variable name -> (new name, exponent factor)."""
    idx = []
    for name in src_R.vars:
        new, factor = rules.get(name, (name, 1))
        idx.append((dst_R.vars.index(new), factor))

    def remap(poly):
        out = {}
        r = dst_R.r
        for e, c in poly.items():
            ne = [0] * r
            for (j, fac), k in zip(idx, e):
                ne[j] += k * fac
            out[tuple(ne)] = c
        return out

    def fn(x):
        return dst_R.from_polys(remap(x.n), remap(x.d)) if not x.is_poly else \
            type(x)(dst_R, remap(x.n), dst_R._one_poly)

    return fn


def probe_extend(tower, kind, var=None, all_vars=False, new_names=None):
    """Finite-level perfection probe above the top level (which must be a series level).

    kind = ("pi_root", j): var -> var'^(p^j); with all_vars every variable is rooted.
    kind = ("shift_probe", i, j): rho^(p^i) = pi, var -> var'^(p^j) + rho and every other
        variable g -> g'^(p^j).
    Returns (new_tower, transport); the new tower is a single Laurent level.
    """
    top = tower.top
    if top.representation != "series":
        raise UnsupportedProbe("probes need a top level without Artin-Schreier steps below it")
    name = kind[0]
    p = tower.p
    vars_ = top.vars
    if var is None:
        if len(vars_) != 1 and not all_vars:
            raise UnsupportedProbe("specify which variable to probe")
        var = vars_[0] if vars_ else None
    if var not in vars_:
        raise UnsupportedProbe(f"{var!r} is not a residue variable of the top level")
    prime = new_names or {v: v + "'" for v in vars_}
    if name == "pi_root":
        j = kind[1]
        rooted = set(vars_) if all_vars else {var}
        new_vars = tuple(prime[v] if v in rooted else v for v in vars_)
        new = LocalFieldTower(p, tower.q, (), tower.precision, new_vars, tower.base_name)
        rules = {v: (prime[v] if v in rooted else v, p**j if v in rooted else 1) for v in tower.R.vars
                 if v in vars_}
        _check_vars(tower, vars_)
        rf = _scaled_rf_map(tower.R, new.R, rules)

        def fn(data):
            return Series({k: rf(c) for k, c in data.terms.items()}, data.prec)

        new.probe_info = {"kind": "pi_root", "j": j, "var": var, "e": 1}
        return new, Transport(fn, top, new.top, 1)
    if name == "shift_probe":
        i, j = kind[1], kind[2]
        if i < 1:
            raise UnsupportedProbe("shift_probe needs i >= 1")
        new_vars = tuple(prime[v] for v in vars_)
        new = LocalFieldTower(p, tower.q, (), tower.precision, new_vars, "rho")
        _check_vars(tower, vars_)
        fn = _shift_transport(tower, new, var, i, j, prime)
        new.probe_info = {"kind": "shift_probe", "i": i, "j": j, "var": var, "e": p**i}
        return new, Transport(fn, top, new.top, p**i)
    raise UnsupportedProbe(f"unknown probe {name!r}")


def _check_vars(tower, vars_):
    extra = set(tower.R.vars) - set(vars_)
    if extra:
        raise UnsupportedProbe(f"variables {sorted(extra)} are not in the top residue field")


def _shift_transport(tower, new, var, i, j, prime):
    """Transport for var -> S^(p^j) + rho, others -> g^(p^j), pi -> rho^(p^i)."""
    p = tower.p
    R, R2 = tower.R, new.R
    gf = R.gf
    P = p**j
    E = p**i
    vi = R.vars.index(var)
    idx2 = [R2.vars.index(prime[v]) for v in R.vars]
    zero2 = (0,) * R2.r

    def poly_to_rho_series(poly):
        """Polynomial in R's vars -> {k: polynomial over R2} (coefficient of rho^k)."""
        out = {}
        for e, c in poly.items():
            base = [0] * R2.r
            for t, (j2, k) in enumerate(zip(idx2, e)):
                if t != vi:
                    base[j2] += k * P
            a = e[vi]
            for k in range(a + 1):
                b = math.comb(a, k) % p
                if not b:
                    continue
                mono = list(base)
                mono[idx2[vi]] += (a - k) * P
                mono = tuple(mono)
                coef = gf.mul[c][gf.from_int(b)]
                d = out.setdefault(k, {})
                s = gf.add[d.get(mono, 0)][coef]
                if s:
                    d[mono] = s
                else:
                    d.pop(mono, None)
        return {k: R2.from_polys(v, R2._one_poly) for k, v in out.items() if v}

    def rf_to_series(x, horizon):
        """x in R -> dict {k: RF in R2} up to rho^horizon (exclusive); flag exactness."""
        num = poly_to_rho_series(x.n)
        if x.is_poly:
            return {k: c for k, c in num.items() if k < horizon}, True
        den = poly_to_rho_series(x.d)
        if set(den) == {0}:
            inv0 = den[0].inverse()
            return {k: c * inv0 for k, c in num.items() if k < horizon}, True
        inv0 = den[0].inverse()
        q = {}
        for k in range(horizon):
            s = num.get(k)
            for t in range(1, k + 1):
                if t in den and (k - t) in q:
                    term = den[t] * q[k - t]
                    s = -term if s is None else s - term
            if s:
                q[k] = s * inv0
        return q, False

    N = tower.precision

    def fn(data):
        terms = data.terms
        if not terms:
            return Series({}, data.prec * E)
        vmin = min(terms)
        target = data.prec * E if data.prec != inf else inf
        out = {}
        exact = True
        for n, c in terms.items():
            horizon = (target - n * E) if target != inf else (vmin + N) * E - n * E
            horizon = max(horizon, 0)
            ser, ex = rf_to_series(c, horizon)
            exact = exact and ex
            for k, y in ser.items():
                key = n * E + k
                if key in out:
                    s = out[key] + y
                    if s:
                        out[key] = s
                    else:
                        del out[key]
                else:
                    out[key] = y
        prec = target
        if target == inf and not exact:
            prec = (vmin + N) * E
            out = {k: v for k, v in out.items() if k < prec}
        return Series(out, prec)

    return fn


# ---------------------------------------------------------------------------
# tame twists


def tame_twist(tower, e_prime):
    """Base change along K' = K(u^(1/e')).

    Returns (twisted_tower, transports, e_top) where transports[k] maps level k of
    ``tower`` to level k of the twisted tower and e_top = e(L'/L) for the top levels.
    Tame steps must all sit below the first Artin-Schreier step.
    """
    if e_prime < 1 or gcd(e_prime, tower.p) != 1:
        raise MalformedParams(f"twist degree {e_prime} must be prime to p")
    seen_as = False
    for s in tower.steps:
        if s.kind == "artin_schreier":
            seen_as = True
        elif s.kind == "tame" and seen_as:
            raise UnsupportedTower("tame twists need all tame steps below the Artin-Schreier steps")
    # series-level scale factors r_k with pi_k = pi'_k^{r_k}
    E = [lvl.E for lvl in tower.levels]
    Ls = []
    for k, lvl in enumerate(tower.levels):
        if lvl.representation == "series":
            Ls.append(E[k] * e_prime // gcd(E[k], e_prime))
        else:
            Ls.append(None)
    new_steps = []
    transports = {}
    holder = {}

    def series_transport(k):
        r = Ls[k] // E[k]

        def fn(data):
            return Series({n * r: c for n, c in data.terms.items()}, data.prec * r)

        return fn

    def make_fn(k):
        lvl = tower.levels[k]
        if lvl.representation == "series":
            return series_transport(k)
        inner = make_fn(lvl.base.index)
        return lambda data: tuple(inner(c) for c in data)

    prev_L = e_prime
    for idx, s in enumerate(tower.steps):
        k = idx + 1
        if s.kind == "constant":
            new_steps.append(s)
        elif s.kind == "tame":
            new_steps.append(TowerStep("tame", e=Ls[k] // prev_L))
            prev_L = Ls[k]
        else:
            fk = make_fn(k - 1)
            f_old = tower.levels[k]
            fdata = f_old.f.data

            def f_builder(tw, below, fdata=fdata, fk=fk):
                return FieldElement(tw.levels[below], fk(fdata))

            new_steps.append(TowerStep("artin_schreier", f=f_builder))
    twisted = LocalFieldTower(tower.p, tower.q, new_steps, tower.precision, tower.base_vars,
                              tower.base_name, allow_trivial_tame=True)
    for k in range(len(tower.levels)):
        transports[k] = Transport(make_fn(k), tower.levels[k], twisted.levels[k],
                                  twisted.levels[k].E * e_prime // tower.levels[k].E)
    e_top = twisted.top.E * e_prime // tower.top.E
    twisted.twist_info = {"e_prime": e_prime, "e_top": e_top}
    return twisted, transports, e_top


def ramification_fraction(tower, lo, hi):
    return Fraction(tower.levels[hi].E, tower.levels[lo].E)
