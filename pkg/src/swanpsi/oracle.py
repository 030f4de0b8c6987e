"""Brute-force and formula-free checks of the conductor and psi machinery."""

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, gcd, inf, lcm

from .errors import BoundaryCase, BudgetExceeded, PrecisionExhausted, UnsupportedProbe
from .logdiff import delta_a, differential_of_element, lift_form, v_log
from .swan import (ASWCharacter, base_change_character, greedy_reduce, reduce_element,
                   refined_swan, rsw_dominant_part, swan_conductor, swan_from_rsw)
from .tower import FieldElement, Series, probe_extend, tame_twist
from .witt import WittVector, frobenius_minus_one, witt_valuation


@dataclass
class SearchBudget:
    max_pole: int = 4
    coeff_degree: int = 2
    support: int = 4
    q_max: int = 3
    cap: int = 200_000
    twist_max: int = 8
    window: int = 0  # 0 means "derive from the twist multiplier"

    def __post_init__(self):
        for name in ("max_pole", "support", "q_max", "cap", "twist_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"budget field {name} must be positive")
        if self.coeff_degree < 0:
            raise ValueError("coeff_degree must be >= 0")

    @classmethod
    def from_pairs(cls, pairs):
        kw = {}
        for item in pairs:
            k, _, v = item.partition("=")
            if k not in cls.__dataclass_fields__:
                raise ValueError(f"unknown budget key {k!r}")
            kw[k] = int(v)
        return cls(**kw)


# ---------------------------------------------------------------------------
# exhaustive Swan conductors


def coefficient_pool(level, degree):
    """Residue coefficients considered by the search: polynomials of bounded degree."""
    R = level.R
    vars_ = level.vars
    if len(vars_) > 1:
        raise BudgetExceeded("exhaustive search supports at most one residue variable")
    if not vars_:
        return [R.gf_elem(c) for c in range(R.q)]
    i = R.vars.index(vars_[0])
    out = []
    for coeffs in itertools.product(range(R.q), repeat=degree + 1):
        num = {}
        for k, c in enumerate(coeffs):
            if c:
                e = [0] * R.r
                e[i] = k
                num[tuple(e)] = c
        out.append(R.from_polys(num, R._one_poly))
    return out


def _b_space(level, kmax, pool, support):
    mons = [FieldElement(level, level.monomial(-k)) for k in range(1, kmax + 1)]
    positions = range(len(mons))
    for size in range(0, min(support, len(mons)) + 1):
        for pos in itertools.combinations(positions, size):
            nonzero = [c for c in pool if c]
            for cs in itertools.product(nonzero, repeat=size):
                b = level.zero_el()
                for j, c in zip(pos, cs):
                    b = b + mons[j] * c
                yield b


def brute_force_swan(a, budget=None, with_certificate=False):
    """min over b in the budget of max(0, -v(a - (b^p - b)))."""
    budget = budget or SearchBudget()
    level = a.level
    p = level.p
    if level.R.q > budget.q_max:
        raise BudgetExceeded(f"q={level.R.q} exceeds q_max={budget.q_max}")
    v, cert = a.val_bound()
    if v >= 0:
        return (0, True) if with_certificate else 0
    if not cert:
        raise PrecisionExhausted("pole of a is not certified")
    n = -v
    kmax = n // p
    pool = coefficient_pool(level, budget.coeff_degree)
    size = sum(len(pool) ** 0 * (len(pool) - 1) ** s * _comb(kmax, s)
               for s in range(0, min(budget.support, kmax) + 1))
    if size > budget.cap:
        raise BudgetExceeded(f"{size} candidates exceed the cap {budget.cap}")
    best = n
    for b in _b_space(level, kmax, pool, budget.support):
        x = a - (b.frobenius() - b)
        w, ok = x.val_bound()
        if w >= 0:
            best = 0
            break
        if not ok:
            raise PrecisionExhausted("candidate valuation not certified")
        best = min(best, -w)
    certified = _search_dominates(a, budget, kmax)
    return (best, certified) if with_certificate else best


def _comb(n, k):
    from math import comb
    return comb(n, k)


def _search_dominates(a, budget, kmax):
    """True when every useful b provably lies in the enumerated space."""
    level = a.level
    if level.representation != "series" or kmax > budget.support:
        return False
    for c in a.data.terms.values():
        if not c.is_poly or c.degree() > budget.coeff_degree:
            return False
    return True


def family_elements(level, max_pole, coeff_degree):
    """All a = sum_{n=1}^{max_pole} c_n pi^-n with coefficients in the search pool."""
    pool = coefficient_pool(level, coeff_degree)
    for cs in itertools.product(pool, repeat=max_pole):
        terms = {-(n + 1): c for n, c in enumerate(cs) if c}
        yield cs, FieldElement(level, Series(terms))


def brute_force_family(level, max_pole, coeff_degree, budget=None):
    """Exhaustive Sw for every element of the family, by prefix matching against all b^p - b.

    Equivalent to brute_force_swan element by element: the best b is the one whose
    polar part agrees with a's from the top down for as long as possible.
    """
    budget = budget or SearchBudget(max_pole=max_pole, coeff_degree=coeff_degree)
    p = level.p
    pool = coefficient_pool(level, coeff_degree)
    kmax = max_pole // p
    if len(pool) ** kmax > budget.cap:
        raise BudgetExceeded("family search too large")
    polar = []
    for b in _b_space(level, kmax, pool, kmax):
        x = b.frobenius() - b
        polar.append(tuple(x.data.terms.get(-k, level.R.zero) for k in range(max_pole, 0, -1)))
    prefixes = [set() for _ in range(max_pole + 1)]
    for d in polar:
        for L in range(max_pole + 1):
            prefixes[L].add(d[:L])
    out = {}
    for cs, a in family_elements(level, max_pole, coeff_degree):
        top = tuple(reversed(cs))  # coefficient of pi^-max_pole first
        L = 0
        while L < max_pole and top[:L + 1] in prefixes[L + 1]:
            L += 1
        out[cs] = max_pole - L
    return out


def brute_force_equivalence(level, max_pole, coeff_degree, budget=None, sample_check=20, seed=0):
    """Compare reduce_to_best with the exhaustive family search; returns a report dict."""
    brute = brute_force_family(level, max_pole, coeff_degree, budget)
    mismatches = []
    total = 0
    for cs, a in family_elements(level, max_pole, coeff_degree):
        _, sw, _ = reduce_element(a)
        total += 1
        if sw != brute[cs]:
            mismatches.append((a, sw, brute[cs]))
    rng = random.Random(seed)
    picks = set(rng.sample(range(total), min(sample_check, total)))
    direct_budget = budget or SearchBudget(max_pole=max_pole, coeff_degree=coeff_degree,
                                           q_max=level.R.q)
    spot = []
    for i, (cs, a) in enumerate(family_elements(level, max_pole, coeff_degree)):
        if i in picks:
            spot.append(brute_force_swan(a, direct_budget) == brute[cs])
    return {"total": total, "mismatches": mismatches, "spot_checks": len(spot),
            "spot_agree": all(spot)}


# ---------------------------------------------------------------------------
# degree-p case split


@dataclass
class CaseSplitResult:
    a: object
    sw_K: int
    sw_L: int
    delta: Fraction
    lhs: int  # -v_L^log(da)
    threshold: Fraction  # p * delta / (p - 1)
    case: str  # "first", "second" or "boundary"
    predicted: object
    match: object


def verify_lemma_case_split(a, tower=None, as_level=None):
    """Reduction side versus the case formula for one best a in the base field."""
    tower = tower or a.tower
    K = a.level
    top = tower.top
    p = tower.p
    if as_level is None:
        as_level = tower.as_levels[-1]
    red, n, _ = reduce_element(a)
    if red != a:
        raise ValueError("a must be best in K; reduce it first")
    sw_L = swan_conductor(a.embed(top.index))
    if n == 0:
        return CaseSplitResult(a, 0, sw_L, Fraction(0), 0, Fraction(0), "integral", 0, sw_L == 0)
    da = differential_of_element(a)
    delta = delta_a(a, tower)
    lhs = -v_log(lift_form(da, top))
    thr = Fraction(p) * delta / (p - 1)
    if lhs < thr:
        case, pred = "first", n
    elif lhs > thr:
        case, pred = "second", p * (n - delta)
    else:
        return CaseSplitResult(a, n, sw_L, delta, lhs, thr, "boundary", None, None)
    return CaseSplitResult(a, n, sw_L, delta, lhs, thr, case, pred, pred == sw_L)


def random_best_elements(level, count, max_pole, rng, coeff_degree=1, terms=3):
    """Random elements of the level reduced to best form with nonzero conductor."""
    out = []
    pool = coefficient_pool(level, coeff_degree)
    nonzero = [c for c in pool if c]
    attempts = 0
    while len(out) < count and attempts < 100 * count:
        attempts += 1
        npole = rng.randint(1, max_pole)
        t = {-npole: rng.choice(nonzero)}
        for _ in range(terms - 1):
            k = rng.randint(-npole, 2)
            if k != -npole:
                t[k] = rng.choice(pool)
        t = {k: c for k, c in t.items() if c}
        a = FieldElement(level, Series(t))
        best, sw, _ = reduce_element(a)
        if sw > 0:
            out.append(best)
    return out


def case_split_suite(tower, count=100, max_pole=8, seed=0, twists=None):
    """Randomized best characters over K and over tame twists K' (which reach the first case)."""
    rng = random.Random(seed)
    if twists is None:
        twists = twist_multipliers(tower.p, 5)[1:3]
    runs = [(1, tower)]
    for e in twists:
        runs.append((e, tame_twist(tower, e)[0]))
    results = []
    for e, tw in runs:
        n = count if e == 1 else max(1, count // len(twists))
        for a in random_best_elements(tw.levels[0], n, max_pole * e, rng):
            r = verify_lemma_case_split(a, tw)
            r.twist = e
            results.append(r)
    return {
        "total": len(results),
        "boundary": [r for r in results if r.case == "boundary"],
        "mismatches": [r for r in results if r.match is False],
        "first": sum(r.case == "first" for r in results),
        "second": sum(r.case == "second" for r in results),
        "results": results,
    }


# ---------------------------------------------------------------------------
# psi lower envelope


def twist_multipliers(p, kmax):
    return [k for k in range(1, kmax + 1) if k % p]


@dataclass
class EnvelopePoint:
    t: Fraction
    raw: Fraction
    rounded: Fraction
    grain: int
    source: dict = field(default_factory=dict)


class _TwistCache:
    def __init__(self, tower):
        self.tower = tower
        self.towers = {}
        self.sw = {}
        self.delta_base = {}

    def twisted(self, e):
        if e not in self.towers:
            self.towers[e] = tame_twist(self.tower, e)
        return self.towers[e]

    def swan_over_top(self, e, n):
        key = (e, n)
        if key not in self.sw:
            tw, _, e_top = self.twisted(e)
            a = FieldElement(tw.levels[0], tw.levels[0].monomial(-n))
            self.sw[key] = (swan_conductor(a.embed(tw.top.index)), e_top)
        return self.sw[key]

    def delta_of_pole(self, N):
        """delta_{L/K}(u^-N) in the untwisted tower (None if undefined)."""
        if N not in self.delta_base:
            K = self.tower.levels[0]
            try:
                self.delta_base[N] = delta_a(FieldElement(K, K.monomial(-N)), self.tower)
            except Exception:
                self.delta_base[N] = None
        return self.delta_base[N]


def twist_label(cache, e, n, p, rmax=8):
    """Write rho^-n as rho^(p^r) * u^-N with u^-N best in K, if possible.

    ``strict`` records whether (e, r) satisfies the strict window
    0 < e(N - delta/(p-1)) < p^r < e*N for that N.
    """
    found = []
    for r in range(1, rmax + 1):
        m = p**r
        if (n + m) % e:
            continue
        N = (n + m) // e
        if N < 1 or N % p == 0:
            continue
        delta = cache.delta_of_pole(N)
        if delta is None:
            continue
        lo = e * (N - delta / (p - 1))
        found.append({"label": "twisted_power", "N": N, "r": r,
                      "strict": 0 < lo < m < e * N})
    if not found:
        return {"label": "monomial"}
    return max(found, key=lambda d: d["strict"])


def _rank(src):
    return (src.get("label") == "twisted_power" and bool(src.get("first_case")),
            src.get("strict", False))


def estimate_psi_lower_bound(tower, t_grid, budget=None):
    """Certified lower bounds for psi^ab_{L/K} on a grid.

    For each t the search runs over twists K' = K(u^(1/e)) with e = denominator(t) * k,
    p not dividing k, and characters rho^-n of K' with n <= e*t.  Each gives
    Sw_{L'} / e(L'/L) <= psi(t).  Since psi(t) lies in (1/g)Z with g = e(L''/L) for the
    minimal twist L'', the bound is rounded up to that lattice.
    """
    budget = budget or SearchBudget()
    p = tower.p
    cache = _TwistCache(tower)
    E_top = tower.top.E
    kmax = max(budget.twist_max, E_top + 3)
    out = []
    for t in t_grid:
        t = Fraction(t)
        if t == 0:
            out.append(EnvelopePoint(t, Fraction(0), Fraction(0), 1, {"label": "zero"}))
            continue
        e0 = t.denominator
        grain = lcm(E_top, e0) // E_top
        best = None
        for k in twist_multipliers(p, kmax):
            e = e0 * k
            top_pole = int(e * t)
            width = budget.window or 2 * k
            for n in range(top_pole, max(0, top_pole - width), -1):
                if n % p == 0:
                    continue
                try:
                    sw, e_top = cache.swan_over_top(e, n)
                except PrecisionExhausted:
                    continue
                raw = Fraction(sw, e_top)
                rounded = Fraction(ceil(raw * grain), grain)
                src = {"e": e, "n": n, "sw_top": sw, "e_top": e_top,
                       "first_case": _first_case(cache, e, n, sw)}
                src.update(twist_label(cache, e, n, p))
                key = (rounded,) + _rank(src) + (raw,)
                if best is None or key > best[0]:
                    best = (key, raw, rounded, src)
        if best is None:
            raise BudgetExceeded(f"no character in budget for t={t}")
        _, raw, rounded, src = best
        out.append(EnvelopePoint(t, raw, rounded, grain, src))
    return out


def _first_case(cache, e, n, sw):
    """Sw is preserved across the top Artin-Schreier step (the lemma's first case)."""
    tw, _, _ = cache.twisted(e)
    if tw.steps and tw.steps[-1].kind == "artin_schreier":
        return sw == n * tw.levels[-2].E
    return None


def default_grid(p, emax=4, jscale=4):
    pts = set()
    for e in range(1, emax + 1):
        if gcd(e, p) != 1:
            continue
        for j in range(0, jscale * e + 1):
            pts.add(Fraction(j, e))
    return sorted(pts)


def envelope_report(tower, psi, t_grid, budget=None):
    """Compare the envelope with a formula psi; lists exceedances and misses."""
    pts = estimate_psi_lower_bound(tower, t_grid, budget)
    exceed, miss = [], []
    for pt in pts:
        target = psi.eval(pt.t)
        if pt.raw > target or pt.rounded > target:
            exceed.append((pt.t, pt.raw, pt.rounded, target))
        elif pt.rounded != target:
            miss.append((pt.t, pt.rounded, target))
    return {"points": pts, "exceed": exceed, "miss": miss}


# ---------------------------------------------------------------------------
# probes


@dataclass
class ProbeRecord:
    element: object
    sw: int
    dominant: set
    sw_pi: int
    sw_shift: dict
    envelope: Fraction
    violations: list


def probe_character_set(var="T"):
    """Fixed probe test set: dT-dominant, dlog-dominant, tied and mixed-pole cases."""
    return [f"{var}*u^-3", "u^-2", f"{var}*u^-1", f"{var}^2*u^-2 + u^-1", "u^-4",
            f"{var}*u^-5"]


def probe_consistency_suite(tower, characters, shifts=(2, 3), j=1):
    p = tower.p
    top = tower.top
    if top.representation != "series":
        raise UnsupportedProbe("probe suite needs a top level without Artin-Schreier steps")
    vars_ = top.vars
    pi_tower, pi_tr = probe_extend(tower, ("pi_root", j), vars_[0] if vars_ else None,
                                   all_vars=True)
    shift = {}
    for var in vars_:
        for i in shifts:
            shift[(var, i)] = probe_extend(tower, ("shift_probe", i, j), var)
    records = []
    for x in characters:
        if isinstance(x, str):
            x = tower.parse(x)
        n = swan_conductor(x)
        viol = []
        dom = set()
        if n > 0:
            dom = rsw_dominant_part(refined_swan(x))
        sw_pi = swan_conductor(pi_tr(x))
        sw_shift = {}
        env = Fraction(sw_pi)
        for (var, i), (_, tr) in shift.items():
            s = swan_conductor(tr(x))
            sw_shift[(var, i)] = s
            if s > 0:
                env = max(env, Fraction(s + 1, p**i))
            if ("d" + var) in dom and s != p**i * n - 1:
                viol.append(f"shift_probe({i}) on {var}: Sw {s} != {p**i * n - 1}")
        if "dlog pi" in dom and sw_pi != n:
            viol.append(f"pi_root: Sw {sw_pi} != {n}")
        if n > 0 and env != n:
            viol.append(f"envelope {env} != {n}")
        if n == 0 and sw_pi != 0:
            viol.append("pi_root created ramification")
        records.append(ProbeRecord(x, n, dom, sw_pi, sw_shift, env, viol))
    return {"records": records, "violations": [v for r in records for v in r.violations]}


# ---------------------------------------------------------------------------
# Witt length two


def exhaustive_witt_swan(rep, max_pole=2, coeff_degree=0):
    """min over b with polar components in the budget of max(0, -v(rep - (F-1)b))."""
    level = rep.level
    s = rep.length
    pool = coefficient_pool(level, coeff_degree)
    comps = []
    for cs in itertools.product(pool, repeat=max_pole):
        t = {-(k + 1): c for k, c in enumerate(cs) if c}
        comps.append(FieldElement(level, Series(t)))
    best = inf
    for bs in itertools.product(comps, repeat=s):
        x = rep - frobenius_minus_one(WittVector(bs))
        best = min(best, -witt_valuation(x))
    return max(0, best)


def witt_gap_report(p=2, s=2, max_pole=2, search_pole=None):
    """Greedy versus exhaustive on all length-s vectors with components of pole <= max_pole."""
    from .tower import LocalFieldTower

    tower = LocalFieldTower(p, p)
    K = tower.levels[0]
    pool = coefficient_pool(K, 0)
    comps = []
    for cs in itertools.product(pool, repeat=max_pole):
        t = {-(k + 1): c for k, c in enumerate(cs) if c}
        comps.append(FieldElement(K, Series(t)))
    rows = []
    search_pole = search_pole or max_pole
    for xs in itertools.product(comps, repeat=s):
        rep = WittVector(xs)
        g = greedy_reduce(rep).swan
        b = exhaustive_witt_swan(rep, search_pole)
        rows.append((rep, g, b))
    gaps = [g - b for _, g, b in rows]
    return {
        "rows": rows,
        "count": len(rows),
        "max_gap": max(gaps),
        "nonzero_gaps": sum(1 for x in gaps if x),
        "greedy_below_search": sum(1 for x in gaps if x < 0),
    }


def rsw_consistency(elements):
    """swan_from_rsw equals swan_conductor whenever the rsw class is nontrivial."""
    bad, checked = [], 0
    for x in elements:
        chi = ASWCharacter(x)
        n = chi.swan()
        if n == 0:
            continue
        r = refined_swan(chi)
        try:
            w = swan_from_rsw(r)
        except Exception as exc:  # TrivialClass: skip, the class is not pinned
            if type(exc).__name__ == "TrivialClass":
                continue
            raise
        checked += 1
        if w != n:
            bad.append((x, n, w))
    return {"checked": checked, "mismatches": bad}


__all__ = [
    "SearchBudget", "brute_force_swan", "brute_force_family", "brute_force_equivalence",
    "verify_lemma_case_split", "case_split_suite", "estimate_psi_lower_bound",
    "envelope_report", "default_grid", "probe_consistency_suite", "witt_gap_report",
    "exhaustive_witt_swan", "rsw_consistency", "BoundaryCase", "base_change_character",
]
