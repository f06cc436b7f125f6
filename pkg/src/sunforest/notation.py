"""Einstein-convention text form of expressions.

    expression := ['-'] term (('+'|'-') term)*
    term       := item (['*'|'/'] item)*
    item       := 'd(' i ',' j ',' k ')' | 'f(' i ',' j ',' k ')' | 'delta(' i ',' j ')'
                | coefficient atom: integer, N, I, '(' coefficient ')', optionally '^' power

An index that occurs twice in a term is summed over; once, it is free.  The
argument order of ``f`` is its cyclic (anticlockwise) order.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import List, Optional, Tuple

from .coefficient import Coefficient, I, N, ONE, format_coefficient
from .diagram import Assembly, Kind
from .expression import Expression


class ParseError(SyntaxError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class IndexArityError(ParseError):
    pass


class MixedFreeIndexError(ParseError):
    pass


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[()+\-*/^,]))")
_RESERVED = {"d", "f", "delta", "N", "I"}


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # -- helpers -----------------------------------------------------------
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, value: Optional[str] = None, kind: Optional[str] = None):
        tok = self.peek()
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value or kind
            raise ParseError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", tok[2], self.text)
        self.i += 1
        return tok

    def at(self, value: str) -> bool:
        return self.peek()[1] == value and self.peek()[0] != "end"

    # -- coefficient arithmetic -----------------------------------------------
    def coeff_sum(self) -> Coefficient:
        neg = False
        if self.at("-") or self.at("+"):
            neg = self.take()[1] == "-"
        total = self.coeff_product()
        if neg:
            total = -total
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            rhs = self.coeff_product()
            total = total + rhs if op == "+" else total - rhs
        return total

    def coeff_product(self) -> Coefficient:
        value = self.coeff_power()
        while self.at("*") or self.at("/"):
            op, _, pos = self.take()[1], None, self.peek()[2]
            rhs = self.coeff_power()
            if op == "*":
                value = value * rhs
            else:
                value = self._divide(value, rhs, pos)
        return value

    def _divide(self, a: Coefficient, b: Coefficient, pos: int) -> Coefficient:
        try:
            return a / b
        except ZeroDivisionError:
            raise ParseError("can only divide by a single monomial", pos, self.text) from None

    def coeff_power(self) -> Coefficient:
        base = self.coeff_atom()
        if self.at("^"):
            self.take("^")
            neg = False
            if self.at("-"):
                self.take("-")
                neg = True
            exp = int(self.take(kind="num")[1])
            try:
                base = base ** (-exp if neg else exp)
            except ZeroDivisionError:
                raise ParseError("negative power of a non-monomial", self.peek()[2], self.text) from None
        return base

    def coeff_atom(self) -> Coefficient:
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Coefficient.const(int(value))
        if kind == "id" and value == "N":
            self.take()
            return N
        if kind == "id" and value == "I":
            self.take()
            return I
        if value == "(":
            self.take("(")
            c = self.coeff_sum()
            self.take(")")
            return c
        if value == "-":
            self.take("-")
            return -self.coeff_atom()
        raise ParseError(f"expected a coefficient, found {value or 'end of input'!r}", pos, self.text)

    # -- terms ---------------------------------------------------------------
    def is_factor_start(self) -> bool:
        kind, value, _ = self.peek()
        return kind == "id" and value in ("d", "f", "delta") and self.peek(1)[1] == "("

    def factor(self):
        _, name, pos = self.take(kind="id")
        self.take("(")
        arity = 2 if name == "delta" else 3
        idx = []
        for k in range(arity):
            if k:
                self.take(",")
            kind, value, ipos = self.peek()
            if kind != "id" or value in _RESERVED:
                raise ParseError(f"expected an index name, found {value or 'end of input'!r}", ipos, self.text)
            self.take()
            idx.append(value)
        self.take(")")
        return name, idx, pos

    def term(self):
        coeff = ONE
        factors = []
        start = self.peek()[2]
        first = True
        while True:
            if not first:
                if self.at("*"):
                    self.take("*")
                elif self.at("/"):
                    _, _, pos = self.take("/")
                    coeff = self._divide(coeff, self.coeff_power(), pos)
                    continue
                elif not (self.is_factor_start() or self.peek()[0] in ("num",) or self.at("(")
                          or (self.peek()[0] == "id" and self.peek()[1] in ("N", "I"))):
                    break
            first = False
            if self.is_factor_start():
                factors.append(self.factor())
            else:
                tok = self.peek()
                if tok[0] == "id" and tok[1] not in ("N", "I"):
                    raise ParseError(f"unknown symbol {tok[1]!r}", tok[2], self.text)
                coeff = coeff * self.coeff_power()
        return coeff, factors, start

    def expression(self):
        terms = []
        sign = 1
        if self.at("-") or self.at("+"):
            sign = -1 if self.take()[1] == "-" else 1
        while True:
            c, fs, pos = self.term()
            terms.append((c * sign, fs, pos))
            if self.at("+") or self.at("-"):
                sign = -1 if self.take()[1] == "-" else 1
                continue
            break
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2], self.text)
        return terms


def build_term(factors, text: str = "", pos: int = 0):
    """Assemble a diagram from ``(name, indices)`` factors; returns (diagram, delta loops)."""
    counts = Counter(x for _, idx, *_ in factors for x in idx)
    over = sorted(x for x, c in counts.items() if c > 2)
    if over:
        raise IndexArityError(f"index {over[0]!r} used {counts[over[0]]} times", pos, text)
    asm = Assembly()
    for k, (name, idx, *_) in enumerate(factors):
        if name == "delta":
            # two pass-through ends joined by a wire
            asm.wire(("dlt", k, 0), ("dlt", k, 1))
            for s, x in enumerate(idx):
                asm.wire(("dlt", k, s), ("occ", x, k, s))
        else:
            asm.vertex(Kind(name), [("slot", k, s) for s in range(3)])
            for s, x in enumerate(idx):
                asm.wire(("slot", k, s), ("occ", x, k, s))
    occs = {}
    for k, (name, idx, *_) in enumerate(factors):
        for s, x in enumerate(idx):
            occs.setdefault(x, []).append(("occ", x, k, s))
    for x, lst in occs.items():
        if len(lst) == 2:
            asm.wire(lst[0], lst[1])
        else:
            asm.name(("name", x), x)
            asm.wire(lst[0], ("name", x))
    return asm.build()


def parse_expression(text: str) -> Expression:
    """Parse text into a canonical :class:`Expression`."""
    parser = _Parser(text)
    if not text.strip():
        raise ParseError("empty expression", 0, text)
    raw = parser.expression()
    free_sets = []
    pairs = []
    for coeff, factors, pos in raw:
        counts = Counter(x for _, idx, _ in factors for x in idx)
        free = frozenset(x for x, c in counts.items() if c == 1)
        diagram, loops = build_term(factors, text, pos)
        if coeff.is_zero():
            continue
        free_sets.append((free, pos))
        pairs.append((coeff * (N * N - 1) ** loops, diagram))
    if free_sets and any(f != free_sets[0][0] for f, _ in free_sets):
        pos = next(p for f, p in free_sets if f != free_sets[0][0])
        raise MixedFreeIndexError("terms have different free indices", pos, text)
    return Expression.from_terms(pairs)


# ---------------------------------------------------------------------------
# printing

_DUMMIES = ["k", "l", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z"]


def _dummy_names(count: int, taken) -> List[str]:
    out = []
    pool = iter(_DUMMIES)
    suffix = 1
    while len(out) < count:
        try:
            name = next(pool)
        except StopIteration:
            name = f"k{suffix}"
            suffix += 1
        if name not in taken and name not in _RESERVED:
            out.append(name)
    return out


def format_diagram(diagram) -> str:
    names = dict((leg, name) for name, leg in diagram.externals)
    dummies = _dummy_names(len(diagram.edges), diagram.external_names)
    for (a, b), name in zip(diagram.edges, dummies):
        names[a] = names[b] = name
    parts = [f"{v.kind.value}({','.join(names[l] for l in v.legs)})" for v in diagram.vertices]
    parts += [f"delta({a},{b})" for a, b in diagram.deltas]
    return " ".join(parts)


def _split_sign(c: Coefficient) -> Tuple[int, Coefficient]:
    if len(c.terms) == 1:
        (_, (re, im)), = c.terms.items()
        if re < 0 or (re == 0 and im < 0):
            return -1, -c
    return 1, c


def _compound(c: Coefficient) -> bool:
    """True when the printed coefficient is a sum and needs parentheses."""
    return len(c.terms) > 1 or any(re and im for re, im in c.terms.values())


def format_expression(e: Expression) -> str:
    """Deterministic text with terms in canonical-encoding order; reparses to ``e``."""
    if e.is_zero():
        return "0"
    out = []
    for key, c in e.items():
        sign, mag = _split_sign(c)
        body = format_diagram(key.diagram)
        cs = format_coefficient(mag)
        if not body:
            text = f"({cs})" if out and _compound(mag) else cs
        elif mag == ONE:
            text = body
        else:
            text = f"({cs})*{body}" if _compound(mag) else f"{cs}*{body}"
        if not out:
            out.append(text if sign > 0 else f"-{text}")
        else:
            out.append(f" {'+' if sign > 0 else '-'} {text}")
    return "".join(out)
