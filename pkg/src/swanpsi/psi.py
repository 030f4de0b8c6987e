"""Exact piecewise-linear functions on [0, oo) and the Hasse-Herbrand constructors."""

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor

from .errors import MalformedParams, NotBijective

F = Fraction


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise MalformedParams(f"expected an exact rational, got {x!r}")


@dataclass(frozen=True)
class PiecewiseLinear:
    """f(t) = value_at_zero + integral of a step function of slopes.

    ``breakpoints[i]`` separates ``slopes[i]`` from ``slopes[i + 1]``; the last slope
    extends to infinity.  ``phi_side`` marks objects whose slopes may be non-integral.
    """

    breakpoints: tuple
    slopes: tuple
    value_at_zero: Fraction = Fraction(0)
    phi_side: bool = False
    valid_from: Fraction = Fraction(0)
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        bps = tuple(_frac(b) for b in self.breakpoints)
        sl = tuple(_frac(s) for s in self.slopes)
        if len(sl) != len(bps) + 1:
            raise MalformedParams("need exactly one more slope than breakpoints")
        if any(b <= 0 for b in bps) or any(x >= y for x, y in zip(bps, bps[1:])):
            raise MalformedParams("breakpoints must be positive and strictly increasing")
        if not self.phi_side and any(s.denominator != 1 for s in sl):
            raise MalformedParams("psi-side slopes must be integers")
        # merge equal neighbouring slopes
        nb, ns = [], [sl[0]]
        for b, s in zip(bps, sl[1:]):
            if s == ns[-1]:
                continue
            nb.append(b)
            ns.append(s)
        object.__setattr__(self, "breakpoints", tuple(nb))
        object.__setattr__(self, "slopes", tuple(ns))
        object.__setattr__(self, "value_at_zero", _frac(self.value_at_zero))
        object.__setattr__(self, "valid_from", _frac(self.valid_from))

    # evaluation ---------------------------------------------------------------
    def values_at_breaks(self):
        vals = []
        v, prev = self.value_at_zero, F(0)
        for b, s in zip(self.breakpoints, self.slopes):
            v += s * (b - prev)
            vals.append(v)
            prev = b
        return vals

    def segments(self):
        """[(start, end or None, value at start, slope)]."""
        out = []
        starts = (F(0),) + self.breakpoints
        ends = self.breakpoints + (None,)
        v = self.value_at_zero
        for a, b, s in zip(starts, ends, self.slopes):
            out.append((a, b, v, s))
            if b is not None:
                v += s * (b - a)
        return out

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        t = _frac(t)
        if t < 0:
            raise ValueError("defined on t >= 0 only")
        for a, b, v, s in self.segments():
            if b is None or t <= b:
                return v + s * (t - a)
        raise AssertionError

    def slope_at(self, t, right=True):
        t = _frac(t)
        for a, b, _, s in self.segments():
            if b is None or t < b or (not right and t <= b):
                return s
        raise AssertionError

    @property
    def final_slope(self):
        return self.slopes[-1]

    def final_intercept(self):
        a, _, v, s = self.segments()[-1]
        return v - s * a

    # algebra --------------------------------------------------------------------
    def preimage(self, y):
        y = _frac(y)
        for a, b, v, s in self.segments():
            end = None if b is None else v + s * (b - a)
            if y < v:
                break
            if end is None or y <= end:
                return a + (y - v) / s
        raise ValueError(f"{y} is not in the range")

    def compose(self, inner):
        return compose(self, inner)

    def inverse(self):
        return inverse(self)

    def to_rows(self):
        rows = []
        for a, b, v, s in self.segments():
            rows.append({"start": a, "end": b, "value_at_start": v, "slope": s})
        return rows

    def to_dict(self):
        return {
            "breakpoints": [str(b) for b in self.breakpoints],
            "slopes": [str(s) for s in self.slopes],
            "value_at_zero": str(self.value_at_zero),
        }

    def __repr__(self):
        br = ", ".join(str(b) for b in self.breakpoints)
        sl = ", ".join(str(s) for s in self.slopes)
        return f"PL(breaks=[{br}], slopes=[{sl}], f(0)={self.value_at_zero})"


def _line(slope, v0=0, phi=False):
    return PiecewiseLinear((), (slope,), v0, phi_side=phi)


def identity():
    return _line(1)


def construct_psi(kind, **params):
    try:
        if kind == "tame":
            e = params["e"]
            if not isinstance(e, int) or e < 1:
                raise MalformedParams(f"tame needs an integer e >= 1, got {e!r}")
            return _line(e)
        if kind == "degree_p":
            p, delta = params["p"], _frac(params["delta"])
            if p < 2 or delta < 0:
                raise MalformedParams("degree_p needs p >= 2 and delta >= 0")
            if delta == 0:
                return _line(p)
            return PiecewiseLinear((delta / (p - 1),), (1, p))
        if kind == "classical_breaks":
            return classical_breaks(params["breaks"])
        if kind == "purely_inseparable":
            return identity()
        if kind == "large_t_affine":
            e, delta = params["e"], _frac(params["delta"])
            p = params.get("p")
            start = F(p, p - 1) * delta / e if p else F(0)
            return PiecewiseLinear((), (e,), -delta, valid_from=start)
    except KeyError as exc:
        raise MalformedParams(f"{kind} is missing parameter {exc}") from None
    raise MalformedParams(f"unknown psi kind {kind!r}")


def classical_breaks(breaks):
    """psi from lower breaks: [(m_j, drop_j)] with [G_t : G_t+] = drop_j at t = m_j."""
    ms = [(_frac(m), d) for m, d in breaks]
    if any(m <= 0 or d < 2 for m, d in ms) or any(a[0] >= b[0] for a, b in zip(ms, ms[1:])):
        raise MalformedParams("breaks need increasing positive m_j and drops >= 2")
    phi_breaks, slopes = [], [F(1)]
    pos, val, index = F(0), F(0), 1
    for m, d in ms:
        val += (m - pos) / index
        phi_breaks.append(val)
        index *= d
        slopes.append(F(index))
        pos = m
    return PiecewiseLinear(tuple(phi_breaks), tuple(slopes))


def compose(g, f):
    """g o f."""
    pts = set(f.breakpoints)
    for b in g.breakpoints:
        try:
            x = f.preimage(b)
        except ValueError:
            continue
        if x > 0:
            pts.add(x)
    pts = sorted(pts)
    starts = [F(0)] + pts
    slopes = []
    for i, a in enumerate(starts):
        mid = (a + pts[i]) / 2 if i < len(pts) else a + 1
        slopes.append(g.slope_at(f.eval(mid)) * f.slope_at(mid))
    phi = g.phi_side or f.phi_side or any(s.denominator != 1 for s in slopes)
    return PiecewiseLinear(tuple(pts), tuple(slopes), g.eval(f.value_at_zero), phi_side=phi)


def inverse(f):
    if f.value_at_zero != 0:
        raise NotBijective("f(0) must be 0")
    if any(s <= 0 for s in f.slopes):
        raise NotBijective("f must be strictly increasing")
    bps = tuple(f.values_at_breaks())
    slopes = tuple(1 / s for s in f.slopes)
    phi = any(s.denominator != 1 for s in slopes)
    return PiecewiseLinear(bps, slopes, 0, phi_side=phi)


def sup_family(fs):
    fs = list(fs)
    if not fs:
        raise MalformedParams("empty family")
    if len(fs) == 1:
        return fs[0]
    pts = set()
    for f in fs:
        pts.update(f.breakpoints)
    grid = [F(0)] + sorted(pts)
    cuts = set(pts)
    for i, a in enumerate(grid):
        b = grid[i + 1] if i + 1 < len(grid) else None
        lines = []
        for f in fs:
            s = f.slope_at(a)
            lines.append((s, f.eval(a) - s * a))
        for x in range(len(lines)):
            for y in range(x + 1, len(lines)):
                (s1, c1), (s2, c2) = lines[x], lines[y]
                if s1 == s2:
                    continue
                t = (c2 - c1) / (s1 - s2)
                if t > a and (b is None or t < b):
                    cuts.add(t)
    cuts = sorted(c for c in cuts if c > 0)
    starts = [F(0)] + cuts
    slopes = []
    for i, a in enumerate(starts):
        mid = (a + cuts[i]) / 2 if i < len(cuts) else a + 1
        best = max(fs, key=lambda f: (f.eval(mid), f.slope_at(mid)))
        slopes.append(best.slope_at(mid))
    v0 = max(f.value_at_zero for f in fs)
    phi = any(f.phi_side for f in fs) or any(s.denominator != 1 for s in slopes)
    return PiecewiseLinear(tuple(cuts), tuple(slopes), v0, phi_side=phi)


def property_check(f, t_max=None):
    segs = f.segments()
    continuous = all(
        v + s * (b - a) == segs[i + 1][2] for i, (a, b, v, s) in enumerate(segs[:-1]))
    increasing = all(s > 0 for s in f.slopes)
    convex = all(x <= y for x, y in zip(f.slopes, f.slopes[1:]))
    last = f.breakpoints[-1] if f.breakpoints else F(0)
    t_max = t_max if t_max is not None else int(ceil(last)) + 3
    sample = set(range(0, t_max + 1))
    for b in f.breakpoints:
        sample.update({max(0, floor(b) - 1), floor(b), ceil(b), ceil(b) + 1})
    integer_at_integers = all(f.eval(n).denominator == 1 for n in sorted(sample))
    integer_slopes = all(s.denominator == 1 for s in f.slopes)
    rational = all(isinstance(x, Fraction) for x in f.breakpoints + f.slopes) and \
        isinstance(f.value_at_zero, Fraction)
    return {
        "continuous": continuous,
        "increasing": increasing,
        "convex": convex,
        "integer_at_integers": integer_at_integers,
        "integer_slopes": integer_slopes,
        "rational_at_rationals": rational,
    }


def all_true(report):
    return all(report.values())


def psi_for_tower(tower, delta_offset=0):
    """psi^ab_{L/K} for the supported family: tame/constant steps, optionally one
    Artin-Schreier step on top of them (base residue field perfect).

    ``delta_offset`` shifts delta_tor; it exists for fault injection only.
    """
    from .errors import UnsupportedTower
    from .logdiff import delta_tor

    if tower.base_vars:
        raise UnsupportedTower("the base residue field must be perfect")
    kinds = [s.kind for s in tower.steps]
    n_as = kinds.count("artin_schreier")
    if n_as == 0:
        return construct_psi("tame", e=tower.e_total), 0
    if n_as > 1 or kinds[-1] != "artin_schreier":
        raise UnsupportedTower("only a single Artin-Schreier step at the top is covered by a "
                               "closed formula; use the verify command for an empirical envelope")
    E = tower.levels[-2].E
    delta = delta_tor(tower) + delta_offset
    outer = construct_psi("degree_p", p=tower.p, delta=delta)
    if E == 1:
        return outer, delta
    # K_t = K(u^(1/E)) is tame with delta_tor(K_t/K) = 0, so delta_tor(L/K_t) = delta_tor(L/K)
    return compose(outer, construct_psi("tame", e=E)), delta
