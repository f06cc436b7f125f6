"""Reduction of su(N) d/f birdtrack diagrams to forests, with a numeric oracle."""

from .coefficient import ADJOINT_DIM, I, N, ONE, ZERO, Coefficient, format_coefficient
from .diagram import CanonicalDiagram, Diagram, Kind, Vertex, build_diagram, canonicalize
from .expression import Expression, TargetAbsent, coeff_eval
from .notation import IndexArityError, MixedFreeIndexError, ParseError, format_expression, parse_expression
from .oracle import (
    FitFailure,
    RankDeficient,
    StructureTensors,
    build_structure_tensors,
    eval_diagram,
    eval_expression,
    fit_forest_coefficients,
    verify_equal,
)
from .reducer import (
    PreconditionViolated,
    ReductionTrace,
    StepBudgetExceeded,
    eliminate_f_pairs,
    measure,
    reduce_1f_loop,
    reduce_d_loop,
    reduce_to_forests,
)
from .rules import (
    NoChange,
    RuleApplication,
    RuleId,
    apply_ff_contraction,
    apply_ff_expansion,
    apply_jacobi_move,
    atomic_simplify,
)
from .traces import TraceKind, TraceWord, WordTooShort, adjoint_trace_diagram, expand_trace

__version__ = "0.1.0"
