"""Tiny expression language for field elements.

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ['^' ['-'] INT]
    atom   := INT | NAME | '(' expr ')'

Evaluation is delegated to a resolver so the same grammar serves every tower
level.  Integers are reduced mod p by the resolver.
"""

import re

from .errors import ParseError

_TOKEN = re.compile(r"(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9']*)|(?P<op>[-+*^()])")
_SPACE = re.compile(r"\s*")


def tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        pos = _SPACE.match(text, pos).end()
        m = _TOKEN.match(text, pos)
        if not m:
            raise _error(text, pos, f"unexpected character {text[pos]!r}")
        start = m.start(m.lastgroup)
        out.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _error(text, pos, msg):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return ParseError(msg, line, col)


class Parser:
    """Recursive-descent parser producing a small AST of nested tuples."""

    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise _error(self.text, tok[2], f"expected {want}, got {got!r}")
        self.i += 1
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise _error(self.text, 0, "empty expression")
        node = self.expr()
        self.take("end")
        return node

    def expr(self):
        terms = []
        sign = 1
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            sign = -1 if tok[1] == "-" else 1
            self.i += 1
        terms.append((sign, self.term()))
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = -1 if self.take()[1] == "-" else 1
            terms.append((sign, self.term()))
        return ("sum", terms)

    def term(self):
        factors = [self.factor()]
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.i += 1
            factors.append(self.factor())
        return ("prod", factors)

    def factor(self):
        tok = self.peek()
        if tok[0] == "int":
            self.i += 1
            base = ("int", int(tok[1]), tok[2])
        elif tok[0] == "name":
            self.i += 1
            base = ("name", tok[1], tok[2])
        elif tok[0] == "op" and tok[1] == "(":
            self.i += 1
            base = self.expr()
            self.take("op", ")")
        else:
            raise _error(self.text, tok[2], f"unexpected {tok[1] or 'end of input'!r}")
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.i += 1
            neg = False
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.i += 1
                neg = True
            k = int(self.take("int")[1])
            return ("pow", base, -k if neg else k)
        return base


def parse(text):
    return Parser(text).parse()


def evaluate(node, resolve, const, text=""):
    """Evaluate an AST.  ``resolve(name)`` returns an element or None; ``const(n)`` embeds ints."""
    kind = node[0]
    if kind == "sum":
        acc = None
        for sign, t in node[1]:
            v = evaluate(t, resolve, const, text)
            v = -v if sign < 0 else v
            acc = v if acc is None else acc + v
        return acc
    if kind == "prod":
        acc = None
        for f in node[1]:
            v = evaluate(f, resolve, const, text)
            acc = v if acc is None else acc * v
        return acc
    if kind == "int":
        return const(node[1])
    if kind == "name":
        v = resolve(node[1])
        if v is None:
            raise _error(text, node[2], f"unknown symbol {node[1]!r}")
        return v
    if kind == "pow":
        return evaluate(node[1], resolve, const, text) ** node[2]
    raise AssertionError(kind)


def names_in(node):
    kind = node[0]
    if kind == "name":
        return {node[1]}
    if kind in ("sum",):
        return set().union(*(names_in(t) for _, t in node[1]))
    if kind == "prod":
        return set().union(*(names_in(f) for f in node[1]))
    if kind == "pow":
        return names_in(node[1])
    return set()
