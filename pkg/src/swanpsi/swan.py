"""Artin-Schreier-Witt characters, best representatives and Swan conductors."""

from math import inf

from .errors import (NotImplementedExact, PrecisionExhausted, TrivialClass, ZeroConductor)
from .logdiff import LogForm, lift_form, v_log
from .tower import FieldElement, Level, PRECISION_CAP, Transport
from .witt import WittVector, d_map, frobenius_minus_one, witt_valuation


class Reduction:
    """Outcome of a reduction: unpacks as (rep, swan)."""

    __slots__ = ("rep", "swan", "certified", "steps")

    def __init__(self, rep, swan, certified=True, steps=0):
        self.rep, self.swan, self.certified, self.steps = rep, swan, certified, steps

    def __iter__(self):
        yield self.rep
        yield self.swan

    def __repr__(self):
        tag = "" if self.certified else " (upper bound)"
        return f"Reduction(Sw={self.swan}{tag}, rep={self.rep}, steps={self.steps})"


class RefinedSwan:
    """rsw as a form together with the quotient levels (n, m = n // p)."""

    __slots__ = ("form", "n", "m")

    def __init__(self, form, n, m):
        self.form, self.n, self.m = form, n, m

    def __iter__(self):
        yield self.form
        yield self.n
        yield self.m

    def same_class(self, other):
        if (self.n, self.m) != (other.n, other.m):
            return False
        diff = self.form - other.form
        return diff.is_zero() or v_log(diff) >= -self.m

    def __repr__(self):
        return f"rsw[{self.form}] in F_{self.n}/F_{self.m}"


class ASWCharacter:
    """A class in W_s(L)/(F-1)W_s(L) given by a representative."""

    def __init__(self, rep):
        if isinstance(rep, FieldElement):
            rep = WittVector([rep])
        self.rep = rep
        self.best_cache = None

    @property
    def level(self):
        return self.rep.level

    @property
    def s(self):
        return self.rep.length

    @property
    def tower(self):
        return self.rep.level.tower

    def reduce(self, allow_greedy=True):
        if self.best_cache is None:
            self.best_cache = reduce_to_best(self, allow_greedy=allow_greedy)
        return self.best_cache

    def swan(self):
        return self.reduce().swan

    def __repr__(self):
        return f"ASWCharacter({self.rep})"


def _as_char(chi):
    return chi if isinstance(chi, ASWCharacter) else ASWCharacter(chi)


def reduce_element(a, max_steps=10**6):
    """Length-one reduction loop; returns (best element, Sw, steps)."""
    level = a.level
    p = level.p
    steps = 0
    while True:
        v, cert = a.val_bound()
        if v >= 0:
            return a, 0, steps
        if not cert:
            raise PrecisionExhausted(f"cannot certify the pole of {a}")
        n = -v
        if n % p:
            return a, n, steps
        lam = a.leading_residue()
        if not lam.is_pth_power():
            return a, n, steps
        mono = FieldElement(level, level.monomial(-n // p))
        c = lam.pth_root() / mono.leading_residue()
        b = mono * c
        a = a - (b.frobenius() - b)
        steps += 1
        if steps > max_steps:
            raise RuntimeError("reduction did not terminate")


def reduce_to_best(chi, allow_greedy=True):
    chi = _as_char(chi)
    if chi.s == 1:
        best, sw, steps = reduce_element(chi.rep.components[0])
        return Reduction(WittVector([best]), sw, True, steps)
    if not allow_greedy:
        raise NotImplementedExact("exact bestness is only available for Witt length 1")
    return greedy_reduce(chi.rep)


def _candidate_scalars(level, rep, V, mono):
    R = level.R
    lm = mono.leading_residue()
    out = [R.gf_elem(c) / lm for c in range(1, R.q)]
    s, p = rep.length, level.p
    for j, x in enumerate(rep.components):
        if x.is_zero():
            continue
        if p ** (s - 1 - j) * x.valuation() == V:
            lam = x.leading_residue()
            if lam.is_pth_power():
                out.append(lam.pth_root() / lm)
    seen, uniq = set(), []
    for c in out:
        if c not in seen:
            seen.add(c)
            uniq.append(c)
    return uniq


def greedy_reduce(rep, max_rounds=64):
    """Local search over single-slot monomial b; returns an uncertified upper bound."""
    level = rep.level
    s, p = rep.length, level.p
    cur = rep
    V = witt_valuation(cur)
    rounds = 0
    while V < 0 and rounds < max_rounds:
        best = None
        for j in range(s):
            w = p ** (s - 1 - j)
            kmin = -((-V) // (p * w))
            for k in range(kmin, 0):
                mono = FieldElement(level, level.monomial(k))
                for c in _candidate_scalars(level, cur, V, mono):
                    comps = [level.zero_el()] * s
                    comps[j] = mono * c
                    new = cur - frobenius_minus_one(WittVector(comps))
                    nv = witt_valuation(new)
                    if nv > V and (best is None or nv > best[0]):
                        best = (nv, new)
        if best is None:
            break
        V, cur = best
        rounds += 1
    return Reduction(cur, max(0, -V) if V != inf else 0, False, rounds)


def swan_conductor(chi):
    return _as_char(chi).swan()


def refined_swan(chi):
    chi = _as_char(chi)
    red = chi.reduce()
    if red.swan == 0:
        raise ZeroConductor("Sw = 0: no refined Swan conductor")
    n = red.swan
    return RefinedSwan(d_map(red.rep), n, n // chi.level.p)


def swan_from_rsw(form, n=None, m=None):
    if isinstance(form, RefinedSwan):
        form, n, m = form.form, form.n, form.m
    w = -v_log(form)
    if w <= m:
        raise TrivialClass(f"-v_log = {w} <= {m}: the class is trivial in F_{n}/F_{m}")
    return w


def base_change_character(chi, target):
    """Move a character along an embedding (target level) or a probe/twist transport."""
    chi = _as_char(chi)
    if isinstance(target, Transport) or callable(target) and not isinstance(target, (Level, int)):
        comps = [target(c) for c in chi.rep.components]
    else:
        comps = [c.embed(target) for c in chi.rep.components]
    return ASWCharacter(WittVector(comps))


def rsw_dominant_part(rsw):
    """Which basis coefficients attain -v = n: a set of names ('dlog pi', 'dT', ...)."""
    out = set()
    for name, c in rsw.form.coefficients():
        if c.is_zero():
            continue
        v, cert = c.val_bound()
        if cert and v == -rsw.n:
            out.add(name)
    return out


def with_precision_retry(compute, start, cap=PRECISION_CAP):
    """Call compute(N) with N = start, 2*start, ... until it stops raising PrecisionExhausted."""
    N = start
    while True:
        try:
            return compute(N)
        except PrecisionExhausted:
            if N >= cap:
                raise
            N = min(2 * N, cap)


__all__ = [
    "ASWCharacter", "Reduction", "RefinedSwan", "reduce_to_best", "reduce_element",
    "greedy_reduce", "swan_conductor", "refined_swan", "swan_from_rsw",
    "base_change_character", "rsw_dominant_part", "with_precision_retry", "LogForm", "lift_form",
]
