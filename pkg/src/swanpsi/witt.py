"""Witt vectors of finite length over a tower level.

Components are stored in the written order ``(a_{s-1}, ..., a_0)``: entry ``j``
is the classical coordinate ``x_j`` and carries weight ``p^(s-1-j)`` in the
valuation ``min_j p^(s-1-j) v(x_j)``.
"""

import threading
from functools import reduce
from math import inf

import sympy

from .logdiff import LogForm, differential_of_element

_CACHE = {}
_LOCK = threading.Lock()


def _symbols(s):
    X = sympy.symbols(f"X0:{s}")
    Y = sympy.symbols(f"Y0:{s}")
    return X, Y


def ghost(p, xs, n):
    return sum(p**i * xs[i] ** (p ** (n - i)) for i in range(n + 1))


def integer_polynomials(p, s, op="add"):
    """S_n (or D_n for op='sub') over Z, as sympy expressions in X0.., Y0.."""
    X, Y = _symbols(s)
    sign = 1 if op == "add" else -1
    polys = []
    for n in range(s):
        acc = ghost(p, X, n) + sign * ghost(p, Y, n)
        for i in range(n):
            acc -= p**i * polys[i] ** (p ** (n - i))
        poly = sympy.Poly(sympy.expand(acc), *X, *Y, domain="ZZ")
        q, r = poly.div(sympy.Poly(p**n, *X, *Y, domain="ZZ"))
        if not r.is_zero:
            raise ArithmeticError("ghost recursion produced a non-integral polynomial")
        polys.append(q.as_expr())
    return polys


def polynomials_mod_p(p, s, op="add"):
    """Cached list of dicts {exponent tuple (X..., Y...): coefficient mod p}."""
    key = (p, s, op)
    if key in _CACHE:
        return _CACHE[key]
    with _LOCK:
        if key not in _CACHE:
            X, Y = _symbols(s)
            out = []
            for expr in integer_polynomials(p, s, op):
                poly = sympy.Poly(expr, *X, *Y, domain="ZZ")
                terms = {}
                for mono, c in poly.terms():
                    c = int(c) % p
                    if c:
                        terms[tuple(mono)] = c
                out.append(terms)
            _CACHE[key] = tuple(out)
    return _CACHE[key]


def ghost_identity_holds(p, s, op="add"):
    """Check w_n(S(X, Y)) = w_n(X) +/- w_n(Y) over Z for every n < s."""
    X, Y = _symbols(s)
    polys = integer_polynomials(p, s, op)
    sign = 1 if op == "add" else -1
    for n in range(s):
        lhs = sympy.expand(ghost(p, polys, n))
        rhs = sympy.expand(ghost(p, X, n) + sign * ghost(p, Y, n))
        if sympy.expand(lhs - rhs) != 0:
            return False
    return True


class WittVector:
    """A length-s Witt vector with components at one tower level."""

    __slots__ = ("components",)

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise ValueError("Witt vectors need length >= 1")
        lvl = comps[0].level
        if any(c.level is not lvl for c in comps):
            raise ValueError("all components must live at the same level")
        self.components = comps

    @classmethod
    def from_element(cls, a, s=1):
        """(0, ..., 0, a): the Teichmuller-free image of a in the last slot."""
        z = a.level.zero_el()
        return cls([z] * (s - 1) + [a])

    @classmethod
    def zero(cls, level, s):
        return cls([level.zero_el()] * s)

    @property
    def length(self):
        return len(self.components)

    @property
    def level(self):
        return self.components[0].level

    @property
    def p(self):
        return self.level.p

    def __add__(self, other):
        return witt_add(self, other)

    def __sub__(self, other):
        return witt_sub(self, other)

    def __neg__(self):
        return witt_sub(WittVector.zero(self.level, self.length), self)

    def frobenius(self):
        return WittVector([c.frobenius() for c in self.components])

    def valuation(self):
        return witt_valuation(self)

    def is_zero(self):
        return all(c.is_zero() for c in self.components)

    def truncate(self, P):
        """Keep each component modulo the precision needed for filtration level P."""
        s, p = self.length, self.p
        out = []
        for j, c in enumerate(self.components):
            w = p ** (s - 1 - j)
            out.append(c.truncate(-((-P) // w)))
        return WittVector(out)

    def __eq__(self, other):
        return isinstance(other, WittVector) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "(" + ", ".join(repr(c) for c in self.components) + ")"


def _eval(terms, xs, ys, level):
    vals = list(xs) + list(ys)
    cache = {}

    def power(i, k):
        key = (i, k)
        if key not in cache:
            cache[key] = vals[i] ** k
        return cache[key]

    acc = level.zero_el()
    for mono, c in terms.items():
        t = None
        for i, k in enumerate(mono):
            if k and not vals[i].is_zero():
                f = power(i, k)
                t = f if t is None else t * f
            elif k:
                t = level.zero_el()
                break
        if t is None:
            t = level.one_el()
        if t.is_zero():
            continue
        acc = acc + t * c
    return acc


def _combine(x, y, op):
    if x.length != y.length:
        raise ValueError("Witt vectors of different lengths")
    if x.level is not y.level:
        raise ValueError("Witt vectors at different levels")
    s, p = x.length, x.p
    if s == 1:
        a, b = x.components[0], y.components[0]
        return WittVector([a + b if op == "add" else a - b])
    polys = polynomials_mod_p(p, s, op)
    return WittVector([_eval(t, x.components, y.components, x.level) for t in polys])


def witt_add(x, y):
    return _combine(x, y, "add")


def witt_sub(x, y):
    return _combine(x, y, "sub")


def frobenius_minus_one(b):
    return witt_sub(b.frobenius(), b)


def witt_valuation(a):
    s, p = a.length, a.p
    vals = []
    for j, c in enumerate(a.components):
        if c.is_zero():
            continue
        vals.append(p ** (s - 1 - j) * c.valuation())
    return min(vals) if vals else inf


def d_map(a):
    """sum_j x_j^(p^(s-1-j) - 1) dx_j as a LogForm."""
    s, p = a.length, a.p
    forms = []
    for j, c in enumerate(a.components):
        if c.is_zero():
            continue
        w = p ** (s - 1 - j)
        forms.append(differential_of_element(c).scale(c ** (w - 1)))
    if not forms:
        return LogForm.zero(a.level)
    return reduce(lambda f, g: f + g, forms)
