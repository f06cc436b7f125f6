"""Traces of generator products.

``expand_trace`` peels two generators at a time off a fundamental trace,

    Tr(l_a l_b X) = 2/N delta(a,b) Tr(X) + (d(a,b,k) + I f(a,b,k)) Tr(l_k X),

which only ever produces trees.  ``adjoint_trace_diagram`` builds the ring
Tr(M_1 ... M_n) with [D_a]_jk = d(a,j,k) and [F_a]_jk = f(a,j,k).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .coefficient import I, N, ONE, Coefficient
from .diagram import Diagram, Kind
from .expression import Expression
from .notation import build_term


class WordTooShort(ValueError):
    pass


class TraceKind(str, enum.Enum):
    FUNDAMENTAL = "lambda"
    ADJOINT_D = "D"
    ADJOINT_F = "F"
    MIXED = "mixed"


@dataclass(frozen=True)
class TraceWord:
    indices: Tuple[str, ...]
    kind: TraceKind = TraceKind.FUNDAMENTAL
    letters: Optional[Tuple[str, ...]] = None  # per-position 'D'/'F' for mixed words

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        object.__setattr__(self, "kind", TraceKind(self.kind))
        if self.kind is TraceKind.MIXED:
            if self.letters is None or len(self.letters) != len(self.indices):
                raise ValueError("a mixed word needs one D/F letter per index")
            letters = tuple(x.upper() for x in self.letters)
            if set(letters) - {"D", "F"}:
                raise ValueError("letters must be D or F")
            object.__setattr__(self, "letters", letters)
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("trace indices must be distinct")

    def letter_kinds(self) -> Tuple[Kind, ...]:
        if self.kind is TraceKind.ADJOINT_D:
            return (Kind.D,) * len(self.indices)
        if self.kind is TraceKind.ADJOINT_F:
            return (Kind.F,) * len(self.indices)
        if self.kind is TraceKind.MIXED:
            return tuple(Kind(x.lower()) for x in self.letters)
        raise ValueError("fundamental words have no adjoint letters")


Factor = Tuple[str, List[str]]


def _expand(word: List[str], fresh) -> List[Tuple[Coefficient, List[Factor]]]:
    if not word:
        return [(N, [])]
    if len(word) == 1:
        return []
    if len(word) == 2:
        return [(Coefficient.const(2), [("delta", [word[0], word[1]])])]
    a, b, rest = word[0], word[1], word[2:]
    out = [(c * (2 / N), [("delta", [a, b])] + fs) for c, fs in _expand(rest, fresh)]
    k = next(fresh)
    for c, fs in _expand([k] + rest, fresh):
        out.append((c, [("d", [a, b, k])] + fs))
        out.append((c * I, [("f", [a, b, k])] + fs))
    return out


def _canonical_rotation(indices: Sequence[str]) -> List[str]:
    rots = [list(indices[i:]) + list(indices[:i]) for i in range(len(indices))]
    return min(rots) if rots else []


def expand_trace(w) -> Expression:
    """Tr(l_{i1} ... l_{in}) as a combination of delta/d/f trees."""
    if not isinstance(w, TraceWord):
        w = TraceWord(tuple(w))
    if w.kind is not TraceKind.FUNDAMENTAL:
        raise ValueError("expand_trace takes a fundamental word")
    fresh = (f"#k{j}" for j in itertools.count(1))
    pairs = []
    for c, factors in _expand(_canonical_rotation(w.indices), fresh):
        diagram, loops = build_term(factors)
        pairs.append((c * (N * N - 1) ** loops, diagram))
    return Expression.from_terms(pairs)


def adjoint_trace_diagram(w: TraceWord) -> Diagram:
    """The ring diagram equal to Tr(M_1 ... M_n)."""
    n = len(w.indices)
    if n < 2:
        raise WordTooShort(f"need at least 2 letters, got {n}")
    kinds = w.letter_kinds()
    factors = [(kinds[i].value, [w.indices[i], f"#j{i}", f"#j{(i + 1) % n}"]) for i in range(n)]
    diagram, _ = build_term(factors)
    return diagram


def real_part(e: Expression) -> Expression:
    half = Coefficient.const(ONE.as_fraction() / 2)
    return Expression({k: (c + c.conjugate()) * half for k, c in e.items()})
