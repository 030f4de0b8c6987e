"""Command-line front end: JSON run configs in, TSV/CSV tables out.

Exit status: 0 when everything passed, 1 on a verification failure (or a row that
could not be computed), 2 for malformed or unsupported configurations.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import jsonschema

from .errors import (BudgetExceeded, MalformedParams, MalformedStep, ParseError,
                     PrecisionExhausted, SemanticError, SwanPsiError, UnsupportedTower,
                     ZeroConductor, ZeroDifferential)
from .logdiff import delta_a, delta_tor
from .oracle import (SearchBudget, brute_force_equivalence, case_split_suite, default_grid,
                     envelope_report, probe_character_set, probe_consistency_suite,
                     rsw_consistency, witt_gap_report)
from .psi import all_true, property_check, psi_for_tower
from .swan import (reduce_to_best, refined_swan, rsw_dominant_part, swan_conductor,
                   with_precision_retry)
from .tower import LocalFieldTower, TowerStep

COMMANDS = ("swan", "rsw", "delta", "psi", "verify")

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "swanpsi run configuration",
    "type": "object",
    "required": ["p", "tower"],
    "additionalProperties": False,
    "properties": {
        "p": {"type": "integer", "minimum": 2},
        "q": {"type": "integer", "minimum": 2},
        "precision": {"type": ["integer", "null"], "minimum": 4},
        "tower": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["step"],
                "oneOf": [
                    {"properties": {"step": {"const": "constant"},
                                    "var": {"type": "string", "minLength": 1}},
                     "required": ["var"], "additionalProperties": False},
                    {"properties": {"step": {"const": "tame"},
                                    "e": {"type": "integer", "minimum": 2}},
                     "required": ["e"], "additionalProperties": False},
                    {"properties": {"step": {"const": "artin_schreier"},
                                    "f": {"type": "string", "minLength": 1}},
                     "required": ["f"], "additionalProperties": False},
                ],
            },
        },
        "characters": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "string", "minLength": 1},
                    {"type": "object", "required": ["expr"], "additionalProperties": False,
                     "properties": {"expr": {"type": "string", "minLength": 1},
                                    "level": {"type": "integer", "minimum": 0}}},
                ]
            },
        },
        "commands": {"type": "array", "items": {"enum": list(COMMANDS)}},
        "budget": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "integer"} for k in
                           ("max_pole", "coeff_degree", "support", "q_max", "cap",
                            "twist_max", "window", "samples")},
        },
        "grid": {"type": ["string", "null"]},
        "emit": {"enum": ["tsv", "csv"]},
        "seed": {"type": "integer"},
        "fault_injection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"delta_tor_offset": {"type": "integer"}},
        },
    },
}


@dataclass
class CliBudget(SearchBudget):
    samples: int = 100  # random characters per tower in the case-split suite


@dataclass
class RunConfig:
    p: int
    q: int
    tower: list
    characters: list = field(default_factory=list)
    commands: list = field(default_factory=lambda: ["swan"])
    precision: int = None
    budget: CliBudget = field(default_factory=CliBudget)
    grid: str = None
    emit: str = "tsv"
    seed: int = 0
    fault_injection: dict = field(default_factory=dict)

    def build_tower(self, precision=None):
        steps = [TowerStep(**{("kind" if k == "step" else k): v for k, v in s.items()})
                 for s in self.tower]
        return LocalFieldTower(self.p, self.q, steps, precision or self.precision)

    def to_dict(self):
        return {
            "p": self.p,
            "q": self.q,
            "precision": self.precision,
            "tower": [dict(s) for s in self.tower],
            "characters": [dict(c) for c in self.characters],
            "commands": list(self.commands),
            "budget": asdict(self.budget),
            "grid": self.grid,
            "emit": self.emit,
            "seed": self.seed,
            "fault_injection": dict(self.fault_injection),
        }


def _canonical(x):
    return repr(x)


def parse_config(text):
    """Parse and validate a JSON config, normalizing every expression."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SemanticError(err.message, _path(err.absolute_path))
    p = raw["p"]
    q = raw.get("q", p)
    budget = raw.get("budget", {})
    try:
        budget = CliBudget(**budget)
    except ValueError as exc:
        raise SemanticError(str(exc), "budget") from None
    cfg = RunConfig(p=p, q=q, tower=[], precision=raw.get("precision"), budget=budget,
                    commands=list(raw.get("commands", ["swan"])), grid=raw.get("grid"),
                    emit=raw.get("emit", "tsv"), seed=raw.get("seed", 0),
                    fault_injection=dict(raw.get("fault_injection", {})))
    steps = []
    for i, s in enumerate(raw["tower"]):
        s = dict(s)
        if s["step"] == "tame" and s["e"] % p == 0:
            raise SemanticError(f"tame index {s['e']} is divisible by p={p}", f"tower[{i}].e")
        steps.append(s)
    # AS right-hand sides are parsed one level at a time so errors point at the step
    for i, s in enumerate(steps):
        cfg.tower = steps[:i + 1]
        try:
            tw = cfg.build_tower()
        except MalformedStep as exc:
            key = ".f" if steps[exc.index]["step"] == "artin_schreier" else ""
            raise SemanticError(str(exc), f"tower[{exc.index}]{key}") from None
        except MalformedParams as exc:
            where = "p" if "p=" in str(exc) and "q=" not in str(exc) else "q"
            raise SemanticError(str(exc), where) from None
        except ParseError as exc:
            raise SemanticError(f"{exc.reason} (column {exc.column})", f"tower[{i}].f") from None
        if s["step"] == "artin_schreier":
            s["f"] = _canonical(tw.levels[i + 1].f)
    cfg.tower = steps
    try:
        tower = cfg.build_tower()
    except MalformedParams as exc:
        raise SemanticError(str(exc), "p" if "q=" not in str(exc) else "q") from None
    for i, c in enumerate(raw.get("characters", [])):
        c = {"expr": c} if isinstance(c, str) else dict(c)
        try:
            level, x = home_level(tower, c["expr"], c.get("level"))
        except ParseError as exc:
            raise SemanticError(f"{exc.reason} (column {exc.column})",
                                f"characters[{i}]") from None
        except IndexError:
            raise SemanticError(f"level {c['level']} does not exist", f"characters[{i}].level")
        cfg.characters.append({"expr": _canonical(x), "level": level})
    if cfg.grid is not None:
        try:
            parse_grid(cfg.grid)
        except ValueError as exc:
            raise SemanticError(str(exc), "grid") from None
    return cfg


def _path(parts):
    out = ""
    for x in parts:
        out += f"[{x}]" if isinstance(x, int) else (f".{x}" if out else str(x))
    return out or "$"


def serialize(cfg):
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def home_level(tower, expr, level=None):
    """The lowest level at which the expression makes sense (or the requested one)."""
    if level is not None:
        return level, tower.parse(expr, tower.levels[level])
    last = None
    for lvl in tower.levels:
        try:
            return lvl.index, tower.parse(expr, lvl)
        except ParseError as exc:
            last = exc
    raise last


def parse_grid(spec):
    """'a..b/step' with rational endpoints; parts count resolves the slashes.

    "0..6/1" and "0..6/1/2" (step 1/2) and "1/2..13/2/1/4" are all accepted.
    """
    try:
        lo, rest = spec.split("..")
        parts = rest.split("/")
        if len(parts) == 2:
            hi, step = parts
        elif len(parts) == 3:
            hi, step = parts[0], parts[1] + "/" + parts[2]
        elif len(parts) == 4:
            hi, step = parts[0] + "/" + parts[1], parts[2] + "/" + parts[3]
        else:
            raise ValueError
        lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"grid {spec!r} is not of the form a..b/step") from None
    if step <= 0 or hi < lo or lo < 0:
        raise ValueError(f"grid {spec!r} needs 0 <= a <= b and step > 0")
    pts, t = [], lo
    while t <= hi:
        pts.append(t)
        t += step
    return pts


# ---------------------------------------------------------------------------
# tables


@dataclass
class Table:
    name: str
    header: list
    rows: list


def fmt(x):
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    if isinstance(x, (set, frozenset)):
        return ",".join(sorted(x))
    return str(x)


def emit(tables, style="tsv", out=None):
    out = out or sys.stdout
    buf = io.StringIO()
    delim = "\t" if style == "tsv" else ","
    for i, t in enumerate(tables):
        if i:
            buf.write("\n")
        w = csv.writer(buf, delimiter=delim, lineterminator="\n",
                       quoting=csv.QUOTE_MINIMAL if style == "csv" else csv.QUOTE_NONE,
                       escapechar="\\")
        w.writerow(t.header)
        for r in t.rows:
            w.writerow([fmt(v) for v in r])
    out.write(buf.getvalue())


def _retry(cfg, fn):
    tower = cfg.build_tower()
    start = cfg.precision or tower.precision
    return with_precision_retry(lambda N: fn(cfg.build_tower(N)), start)


def _summary(cfg, tower):
    try:
        dt = _retry(cfg, delta_tor)
    except SwanPsiError:
        dt = None
    desc = " > ".join(s.describe() for s in tower.steps) or "base"
    return Table("tower", ["p", "q", "steps", "e_total", "delta_tor"],
                 [[cfg.p, cfg.q, desc, tower.e_total, dt]])


def cmd_swan(cfg):
    tower = cfg.build_tower()
    rows, ok = [], True
    for i, c in enumerate(cfg.characters):
        def compute(tw, c=c):
            x = tw.parse(c["expr"], tw.levels[c["level"]])
            red = reduce_to_best(x)
            sw_L = swan_conductor(x.embed(tw.top.index))
            try:
                d = delta_a(x, tw)
            except (ZeroDifferential, SwanPsiError):
                d = None
            return red.rep.components[0], red.swan, sw_L, d
        try:
            best, sw, sw_L, d = _retry(cfg, compute)
            rows.append([i, c["expr"], c["level"], best, sw, sw_L, d, ""])
        except SwanPsiError as exc:
            ok = False
            rows.append([i, c["expr"], c["level"], None, None, None, None, f"{type(exc).__name__}: {exc}"])
    return [_summary(cfg, tower),
            Table("swan", ["index", "character", "level", "best_rep", "sw_K", "sw_L", "delta_a",
                           "error"], rows)], ok


def cmd_rsw(cfg):
    tower = cfg.build_tower()
    rows, ok = [], True
    for i, c in enumerate(cfg.characters):
        for where in ("K", "L"):
            def compute(tw, c=c, where=where):
                x = tw.parse(c["expr"], tw.levels[c["level"]])
                if where == "L":
                    x = x.embed(tw.top.index)
                n = swan_conductor(x)
                if n == 0:
                    return n, None
                return n, refined_swan(x)
            try:
                n, r = _retry(cfg, compute)
            except SwanPsiError as exc:
                ok = False
                rows.append([i, c["expr"], where, None, None, None, None, None, None,
                             f"{type(exc).__name__}: {exc}"])
                continue
            if r is None:
                rows.append([i, c["expr"], where, 0, 0, None, None, None, None, ""])
                continue
            dom = rsw_dominant_part(r)
            for name, coef in r.form.coefficients():
                if coef.is_zero():
                    continue
                v, cert = coef.val_bound()
                rows.append([i, c["expr"], where, r.n, r.m, name, coef,
                             v if cert else f">={v}", name in dom, ""])
    return [_summary(cfg, tower),
            Table("rsw", ["index", "character", "field", "n", "m", "basis", "coefficient",
                          "valuation", "dominant", "error"], rows)], ok


def cmd_delta(cfg):
    tower = cfg.build_tower()
    rows, ok = [], True
    for i, c in enumerate(cfg.characters):
        try:
            d = _retry(cfg, lambda tw, c=c: delta_a(tw.parse(c["expr"], tw.levels[c["level"]]), tw))
            rows.append([i, c["expr"], c["level"], d, ""])
        except SwanPsiError as exc:
            if not isinstance(exc, ZeroDifferential):
                ok = False
            rows.append([i, c["expr"], c["level"], None, f"{type(exc).__name__}: {exc}"])
    return [_summary(cfg, tower),
            Table("delta", ["index", "character", "level", "delta_a", "error"], rows)], ok


def _psi(cfg, tower):
    offset = cfg.fault_injection.get("delta_tor_offset", 0)
    return psi_for_tower(tower, delta_offset=offset)


def cmd_psi(cfg, decimals=False):
    tower = cfg.build_tower()
    psi, delta = _psi(cfg, tower)
    seg = []
    for r in psi.to_rows():
        seg.append([r["start"], "inf" if r["end"] is None else r["end"], r["value_at_start"],
                    r["slope"]])
    props = property_check(psi)
    tables = [
        Table("psi", ["delta_tor", "breakpoints", "slopes"],
              [[delta, ";".join(map(str, psi.breakpoints)) or "-",
                ";".join(map(str, psi.slopes))]]),
        Table("segments", ["start", "end", "value_at_start", "slope"], seg),
        Table("properties", ["property", "holds"], [[k, v] for k, v in props.items()]),
    ]
    if cfg.grid:
        header = ["t", "psi"] + (["t_decimal", "psi_decimal"] if decimals else [])
        rows = []
        for t in parse_grid(cfg.grid):
            y = psi.eval(t)
            row = [t, y]
            if decimals:
                row += [f"{float(t):.6f}", f"{float(y):.6f}"]
            rows.append(row)
        tables.append(Table("samples", header, rows))
    return tables, all_true(props)


# ---------------------------------------------------------------------------
# verification


def _series_prefix(tower):
    """Largest initial segment of the tower that ends on a Laurent-series level."""
    k = max(l.index for l in tower.levels if l.representation == "series")
    return LocalFieldTower(tower.p, tower.q, tower.steps[:k], tower.precision)


def _suite(name, fn):
    try:
        status, checked, bad, detail = fn()
    except BudgetExceeded as exc:
        return [name, "skipped", 0, 0, f"budget: {exc}"]
    except (UnsupportedTower, NotImplementedError) as exc:
        return [name, "skipped", 0, 0, str(exc)]
    return [name, status, checked, bad, detail]


def cmd_verify(cfg):
    tower = cfg.build_tower()
    budget = cfg.budget
    rows = []

    def brute():
        base = _series_prefix(tower)
        lvl = base.top
        if len(lvl.vars) > 1:
            raise BudgetExceeded("more than one residue variable")
        if cfg.q > budget.q_max:
            raise BudgetExceeded(f"q={cfg.q} exceeds q_max={budget.q_max}")
        rep = brute_force_equivalence(lvl, budget.max_pole, budget.coeff_degree, budget,
                                      seed=cfg.seed)
        bad = len(rep["mismatches"]) + (0 if rep["spot_agree"] else 1)
        detail = "; ".join(f"{a}: reduce {x} brute {y}" for a, x, y in rep["mismatches"][:3])
        return ("pass" if bad == 0 else "fail"), rep["total"], bad, \
            detail or f"level {lvl.index}, {rep['spot_checks']} direct spot checks"

    def split():
        kinds = [s.kind for s in tower.steps]
        if kinds.count("artin_schreier") != 1 or kinds[-1] != "artin_schreier" or "tame" in kinds:
            raise UnsupportedTower("case split needs exactly one Artin-Schreier step, on top, "
                                   "over constant steps")
        rep = case_split_suite(tower, budget.samples, seed=cfg.seed)
        bad = len(rep["mismatches"])
        detail = (f"first={rep['first']} second={rep['second']} "
                  f"boundary={len(rep['boundary'])}")
        return ("pass" if bad == 0 else "fail"), rep["total"], bad, detail

    def probes():
        base = _series_prefix(tower)
        if not base.top.vars:
            raise UnsupportedTower("probe suite needs a residue variable")
        chars = [c["expr"] for c in cfg.characters if c["level"] <= base.top.index]
        var = base.top.vars[0]
        chars += probe_character_set(var)
        rep = probe_consistency_suite(base, chars)
        bad = len(rep["violations"])
        return ("pass" if bad == 0 else "fail"), len(rep["records"]), bad, \
            "; ".join(rep["violations"][:3]) or f"level {base.top.index}"

    def envelope():
        psi, _ = _psi(cfg, tower)
        grid = parse_grid(cfg.grid) if cfg.grid else default_grid(tower.p)
        rep = envelope_report(tower, psi, grid, budget)
        bad = len(rep["exceed"]) + len(rep["miss"])
        notes = [f"t={t}: bound {r} exceeds psi {y}" for t, _, r, y in rep["exceed"][:3]]
        notes += [f"t={t}: bound {r} below psi {y}" for t, r, y in rep["miss"][:3]]
        detail = "; ".join(notes)
        return ("pass" if bad == 0 else "fail"), len(rep["points"]), bad, detail

    def psi_props():
        psi, _ = _psi(cfg, tower)
        props = property_check(psi)
        bad = [k for k, v in props.items() if not v]
        return ("pass" if not bad else "fail"), len(props), len(bad), ",".join(bad)

    def rsw():
        xs = []
        for c in cfg.characters:
            x = tower.parse(c["expr"], tower.levels[c["level"]])
            xs += [x, x.embed(tower.top.index)]
        rep = rsw_consistency(xs)
        return ("pass" if not rep["mismatches"] else "fail"), rep["checked"], \
            len(rep["mismatches"]), ""

    def witt():
        rep = witt_gap_report(p=min(tower.p, 3), s=2, max_pole=2)
        return "info", rep["count"], rep["nonzero_gaps"], f"max gap {rep['max_gap']}"

    for name, fn in (("brute_force", brute), ("case_split", split), ("probe", probes),
                     ("envelope", envelope), ("psi_properties", psi_props), ("rsw", rsw),
                     ("witt_gap", witt)):
        rows.append(_suite(name, fn))
    ok = all(r[1] != "fail" for r in rows)
    return [Table("verify", ["suite", "status", "checked", "mismatches", "detail"], rows)], ok


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="swanpsi", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS + ("run", "normalize"),
                    help="'run' executes the config's command list; 'normalize' prints the "
                         "canonical config")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--precision", type=int)
    ap.add_argument("--grid", help="rational grid a..b/step, e.g. 0..4/1/4")
    ap.add_argument("--emit", choices=("tsv", "csv"))
    ap.add_argument("--budget", nargs="*", default=[], metavar="KEY=VAL")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--decimal", action="store_true",
                    help="add decimal columns to sampled psi values")
    return ap


def load(args):
    with open(args.config, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    if args.precision is not None:
        if args.precision < 4:
            raise SemanticError("precision must be >= 4", "--precision")
        cfg.precision = args.precision
    if args.grid is not None:
        try:
            parse_grid(args.grid)
        except ValueError as exc:
            raise SemanticError(str(exc), "--grid") from None
        cfg.grid = args.grid
    if args.emit:
        cfg.emit = args.emit
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget:
        kw = asdict(cfg.budget)
        for item in args.budget:
            k, sep, v = item.partition("=")
            if not sep or k not in kw:
                raise SemanticError(f"unknown budget entry {item!r}", "--budget")
            try:
                kw[k] = int(v)
            except ValueError:
                raise SemanticError(f"budget value {v!r} is not an integer", "--budget") from None
        try:
            cfg.budget = CliBudget(**kw)
        except ValueError as exc:
            raise SemanticError(str(exc), "--budget") from None
    return cfg


def run(cfg, command, decimals=False):
    if command == "swan":
        return cmd_swan(cfg)
    if command == "rsw":
        return cmd_rsw(cfg)
    if command == "delta":
        return cmd_delta(cfg)
    if command == "psi":
        return cmd_psi(cfg, decimals)
    if command == "verify":
        return cmd_verify(cfg)
    raise ValueError(command)


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error at line {exc.line}, column {exc.column}: {exc.reason}",
              file=sys.stderr)
        return 2
    except SemanticError as exc:
        print(f"config error at {exc.path}: {exc.reason}", file=sys.stderr)
        return 2
    if args.command == "normalize":
        out.write(serialize(cfg))
        return 0
    commands = cfg.commands if args.command == "run" else [args.command]
    tables, ok = [], True
    for c in commands:
        try:
            t, good = run(cfg, c, args.decimal)
        except UnsupportedTower as exc:
            print(f"unsupported tower for {c}: {exc}", file=sys.stderr)
            return 2
        except PrecisionExhausted as exc:
            print(f"{c}: precision exhausted: {exc}", file=sys.stderr)
            return 1
        except ZeroConductor as exc:
            print(f"{c}: {exc}", file=sys.stderr)
            return 1
        tables += t
        ok = ok and good
    emit(tables, cfg.emit, out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
