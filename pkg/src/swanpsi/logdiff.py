"""Log differential forms a*dlog(pi) + sum_T b_T*dT over a tower level."""

from fractions import Fraction
from math import inf

from .errors import NotPerfect, PrecisionExhausted, ZeroDifferential
from .tower import FieldElement, Series


class LogForm:
    """Form over one level in the basis {dlog pi_level, dT for residue variables T}."""

    __slots__ = ("level", "pi_coeff", "var_coeffs")

    def __init__(self, level, pi_coeff, var_coeffs=None):
        self.level = level
        self.pi_coeff = pi_coeff
        self.var_coeffs = {k: v for k, v in (var_coeffs or {}).items() if not v.is_zero()}

    @classmethod
    def zero(cls, level):
        return cls(level, level.zero_el(), {})

    @classmethod
    def dlog_pi(cls, level):
        return cls(level, level.one_el(), {})

    def coefficients(self):
        yield "dlog pi", self.pi_coeff
        for name in sorted(self.var_coeffs):
            yield "d" + name, self.var_coeffs[name]

    def is_zero(self):
        return self.pi_coeff.is_zero() and not self.var_coeffs

    def __add__(self, other):
        vc = dict(self.var_coeffs)
        for k, v in other.var_coeffs.items():
            vc[k] = vc[k] + v if k in vc else v
        return LogForm(self.level, self.pi_coeff + other.pi_coeff, vc)

    def __neg__(self):
        return LogForm(self.level, -self.pi_coeff, {k: -v for k, v in self.var_coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, x):
        """Multiply by a field element (or int / residue scalar)."""
        return LogForm(self.level, self.pi_coeff * x, {k: v * x for k, v in self.var_coeffs.items()})

    __mul__ = scale
    __rmul__ = scale

    def truncate(self, P):
        return LogForm(self.level, self.pi_coeff.truncate(P),
                       {k: v.truncate(P) for k, v in self.var_coeffs.items()})

    def v_log(self):
        return v_log(self)

    def lift(self, to_level):
        return lift_form(self, to_level)

    def __repr__(self):
        parts = []
        for name, c in self.coefficients():
            if not c.is_zero():
                parts.append(f"({c})*{name}")
        return " + ".join(parts) if parts else "0"


def v_log(form):
    """Minimum coefficient valuation; raises PrecisionExhausted if not certified."""
    known, bounds = [], []
    for _, c in form.coefficients():
        v, cert = c.val_bound()
        if v == inf:
            continue
        (known if cert else bounds).append(v)
    mk = min(known) if known else inf
    mb = min(bounds) if bounds else inf
    if mk < mb or (mk == inf and mb == inf):
        return mk
    raise PrecisionExhausted(f"v_log not certified (only >= {min(mk, mb)} known)")


# ---------------------------------------------------------------------------
# lifting along one step


def _lift_data(level):
    """(U, {T: V_T}) with dlog pi_below = U dlog pi + sum V_T dT at this level."""
    if "UV" in level.lift_cache:
        return level.lift_cache["UV"]
    if level.representation == "series":
        U = level.one_el() * (level.e if level.kind == "tame" else 1)
        out = (U, {})
    elif level.kind == "constant":
        out = (level.one_el(), {})
    elif level.defkind == "tame":
        out = (level.one_el() * level.e, {})
    else:
        df = differential_of_element(level.f)
        ua, ub = level.ua, level.ub
        xinv = FieldElement(level, level.xinv())
        fpi = df.pi_coeff.embed(level.index)
        U = (level.one_el() * ub - fpi * xinv * ua).inverse()
        V = {}
        for name, c in df.var_coeffs.items():
            V[name] = c.embed(level.index) * xinv * U * ua
        out = (U, V)
    level.lift_cache["UV"] = out
    return out


def _lift_one(form, level):
    U, V = _lift_data(level)
    pi = form.pi_coeff.embed(level.index)
    vc = {k: c.embed(level.index) for k, c in form.var_coeffs.items()}
    if level.representation == "vector" and level.kind == "constant":
        return LogForm(level, pi, vc)
    new_pi = pi * U
    for name, c in V.items():
        t = pi * c
        vc[name] = vc[name] + t if name in vc else t
    return LogForm(level, new_pi, vc)


def lift_form(form, to_level):
    tower = form.level.tower
    k = to_level.index if hasattr(to_level, "index") else to_level
    for j in range(form.level.index + 1, k + 1):
        form = _lift_one(form, tower.levels[j])
    return form


# ---------------------------------------------------------------------------
# d of an element


def _series_differential(level, data):
    p = level.p
    pi_terms = {}
    var_terms = {}
    R = level.R
    for n, c in data.terms.items():
        if n % p:
            pi_terms[n] = c * R.const(n)
        for name in c.variables():
            dc = c.derivative(name)
            if dc:
                var_terms.setdefault(name, {})[n] = dc
    prec = data.prec
    pi = FieldElement(level, Series(pi_terms, prec))
    vc = {name: FieldElement(level, Series(t, prec)) for name, t in var_terms.items()}
    if prec != inf:
        for name in level.vars:
            vc.setdefault(name, FieldElement(level, Series({}, prec)))
    return LogForm(level, pi, vc)


def differential_of_element(x):
    level = x.level
    if level.representation == "series":
        return _series_differential(level, x.data)
    B = level.base
    out = LogForm.zero(level)
    X = FieldElement(level, level.gen())
    coords = x.data
    if level.defkind == "artin_schreier":
        dX = -_lift_to(differential_of_element(level.f), level)
    else:
        dX = LogForm(level, X, {})
    Xpow = level.one_el()
    for i, c in enumerate(coords):
        if not B.is_exact_zero(c) or not B.is_exact(c):
            dc = differential_of_element(FieldElement(B, c))
            lifted = _lift_to(dc, level)
            out = out + lifted.scale(Xpow)
            if i % level.p and not B.is_exact_zero(c):
                coef = FieldElement(level, level.coord(0, c)) * Xpow_minus(level, i) * i
                out = out + dX.scale(coef)
        Xpow = Xpow * X
    return out


def Xpow_minus(level, i):
    X = FieldElement(level, level.gen())
    return X ** (i - 1)


def _defining(level):
    """The non-alias vector level whose generator is X (for constant aliases, search below)."""
    tower = level.tower
    k = level.index
    while tower.levels[k].kind == "constant":
        k -= 1
    return tower.levels[k]


def _lift_to(form, level):
    """Lift a form from the defining level B up to ``level`` (alias aware)."""
    D = _defining(level)
    f = lift_form(form, D)
    if D is level:
        return f
    return LogForm(level, FieldElement(level, f.pi_coeff.data),
                   {k: FieldElement(level, v.data) for k, v in f.var_coeffs.items()})


def d(x):
    return differential_of_element(x)


def delta_tor(tower, base_level=0, top_level=None):
    """Content valuation of dlog pi_K pushed up to L."""
    K = tower.levels[base_level]
    L = tower.top if top_level is None else tower.levels[top_level]
    if K.vars:
        raise NotPerfect(f"residue field at level {K.index} is not perfect")
    return v_log(lift_form(LogForm.dlog_pi(K), L))


def delta_a(a, tower=None, top_level=None):
    """-v_K^log(da) + v_L^log(da)/e(L/K) as a Fraction."""
    tower = tower or a.tower
    L = tower.top if top_level is None else tower.levels[top_level]
    da = differential_of_element(a)
    if da.is_zero():
        raise ZeroDifferential(f"d({a}) = 0")
    vK = v_log(da)
    vL = v_log(lift_form(da, L))
    e = L.E // a.level.E
    return -vK + Fraction(vL, e)
