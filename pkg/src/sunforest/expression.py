"""Linear combinations of canonical diagrams with Laurent-polynomial weights."""

from __future__ import annotations

from typing import Dict, Iterable, Iterator, Tuple

from .coefficient import Coefficient, ONE, Scalar
from .diagram import CanonicalDiagram, Diagram, canonicalize


class TargetAbsent(KeyError):
    pass


class Expression:
    """Immutable map ``CanonicalDiagram -> Coefficient`` without zero entries."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Dict[CanonicalDiagram, Coefficient] | None = None):
        self._terms = {k: v for k, v in (terms or {}).items() if not v.is_zero()}

    @classmethod
    def from_diagram(cls, diagram: Diagram, coeff: Scalar = 1) -> "Expression":
        canon, sign = canonicalize(diagram)
        if sign == 0:
            return cls()
        return cls({canon: Coefficient.coerce(coeff) * sign})

    @classmethod
    def from_terms(cls, pairs: Iterable[Tuple[Scalar, Diagram]]) -> "Expression":
        acc: Dict[CanonicalDiagram, Coefficient] = {}
        for coeff, diagram in pairs:
            canon, sign = canonicalize(diagram)
            if sign == 0:
                continue
            c = Coefficient.coerce(coeff) * sign
            acc[canon] = acc[canon] + c if canon in acc else c
        return cls(acc)

    # -- mapping protocol ----------------------------------------------------
    def __iter__(self) -> Iterator[CanonicalDiagram]:
        return iter(sorted(self._terms))

    def items(self):
        return [(k, self._terms[k]) for k in sorted(self._terms)]

    def __getitem__(self, key: CanonicalDiagram) -> Coefficient:
        return self._terms[key]

    def get(self, key, default=None):
        return self._terms.get(key, default)

    def __contains__(self, key) -> bool:
        return key in self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def external_names(self) -> frozenset:
        names = set()
        for k in self._terms:
            names |= k.diagram.external_names
        return frozenset(names)

    # -- algebra ---------------------------------------------------------------
    def __add__(self, other: "Expression") -> "Expression":
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return Expression(out)

    def __neg__(self) -> "Expression":
        return Expression({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: "Expression") -> "Expression":
        return self + (-other)

    def scale(self, c: Scalar) -> "Expression":
        c = Coefficient.coerce(c)
        if c.is_zero():
            return Expression()
        return Expression({k: v * c for k, v in self._terms.items()})

    def __mul__(self, c: Scalar) -> "Expression":
        return self.scale(c)

    __rmul__ = __mul__

    def substitute(self, target: CanonicalDiagram, replacement: "Expression") -> "Expression":
        if target not in self._terms:
            raise TargetAbsent(target)
        rest = dict(self._terms)
        c = rest.pop(target)
        return Expression(rest) + replacement.scale(c)

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        from .notation import format_expression
        return f"Expression({format_expression(self)})"


def expr_add(a: Expression, b: Expression) -> Expression:
    return a + b


def expr_scale(a: Expression, c: Scalar) -> Expression:
    return a.scale(c)


def substitute(e: Expression, target: CanonicalDiagram, replacement: Expression) -> Expression:
    return e.substitute(target, replacement)


def coeff_eval(c: Coefficient, n: int) -> complex:
    if n < 2:
        raise ValueError("N must be at least 2")
    return c.evaluate(n)


def scalar(c: Scalar = 1) -> Expression:
    """The expression ``c`` times the empty diagram."""
    from .diagram import build_diagram
    return Expression.from_diagram(build_diagram([]), c)


__all__ = ["Expression", "TargetAbsent", "expr_add", "expr_scale", "substitute", "coeff_eval", "scalar", "ONE"]
