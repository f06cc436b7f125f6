"""Acceptance criteria, each reported as one PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed in the
terminal summary) or ``python3 tests/test_acceptance.py``.
"""

import itertools
import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import corpus  # noqa: E402
from reencode import reencode  # noqa: E402
from sunforest.diagram import canonicalize, is_forest  # noqa: E402
from sunforest.expression import Expression  # noqa: E402
from sunforest.notation import parse_expression  # noqa: E402
from sunforest.oracle import (  # noqa: E402
    build_structure_tensors,
    eval_expression_batch,
    fit_forest_coefficients,
    matrix_trace_adjoint,
    matrix_trace_fundamental,
    verify_equal,
)
from sunforest.reducer import measure, progress_violations, reduce_to_forests  # noqa: E402
from sunforest.traces import TraceKind, TraceWord, adjoint_trace_diagram, expand_trace  # noqa: E402

RESULTS = {}

TRIANGLE = "d(i,a,b) d(a,c,j) d(b,c,k)"
SQUARE = "d(i,a,b) d(b,c,j) d(c,e,k) d(e,a,l)"


def report(number, name, passed, detail, seconds):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail} ({seconds:.1f}s)"
    RESULTS[number] = line
    print(line)
    return passed


@pytest.fixture(scope="module")
def loop_corpus():
    """The random loop diagrams with their reductions, shared by criteria 5-7."""
    out = []
    for d, _ in corpus(100, seed=2024):
        t0 = time.perf_counter()
        result, trace = reduce_to_forests(d)
        out.append((d, result, trace, time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------------------

def _eq(x, y):
    return (x == y).astype(float)


def _identity_violations(n, rng, samples=None):
    t = build_structure_tensors(n)
    d, f, lam, dim = t.d, t.f, t.lambdas, t.dim
    if samples is None:
        pairs = list(itertools.product(range(dim), repeat=2))
        quads = np.array(list(itertools.product(range(dim), repeat=4)))
    else:
        pairs = [tuple(x) for x in rng.integers(0, dim, size=(samples, 2))]
        quads = rng.integers(0, dim, size=(samples, 4))
    worst = 0.0
    # generator product law
    for i, j in pairs:
        rhs = (2 / n) * (i == j) * np.eye(n) + np.einsum("k,kab->ab", d[i, j] + 1j * f[i, j], lam)
        worst = max(worst, float(np.abs(lam[i] @ lam[j] - rhs).max()))
    a, b, c, e = quads.T
    jacobi = np.einsum("sk,sk->s", f[a, b], d[:, c, e].T) + np.einsum("sk,sk->s", f[a, c], d[:, b, e].T) \
        + np.einsum("sk,sk->s", f[a, e], d[:, b, c].T)
    worst = max(worst, float(np.abs(jacobi).max()))
    lhs = np.einsum("sk,sk->s", f[a, b], f[:, c, e].T)
    rhs = (2 / n) * (_eq(a, c) * _eq(b, e) - _eq(a, e) * _eq(b, c)) \
        + np.einsum("sk,sk->s", d[a, c], d[:, b, e].T) - np.einsum("sk,sk->s", d[a, e], d[:, b, c].T)
    worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def test_criterion_1_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = {n: _identity_violations(n, rng) for n in (2, 3)}
    worst.update({n: _identity_violations(n, rng, samples=1000) for n in (4, 5)})
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-10 and elapsed < 60
    detail = "max violation " + ", ".join(f"N={n}: {v:.1e}" for n, v in worst.items())
    assert report(1, "product law, Jacobi and ff identities", ok, detail, elapsed)


def _fit_and_reduce(text):
    e = parse_expression(text)
    reduced, _ = reduce_to_forests(e, normal_form=True)
    fitted = fit_forest_coefficients(e, ns=(3, 4, 5, 6), holdout=7)
    return e, reduced, fitted


def test_criterion_2_triangle():
    t0 = time.perf_counter()
    e, reduced, fitted = _fit_and_reduce(TRIANGLE)
    check = verify_equal(e, reduced, ns=(3,), tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = reduced == fitted and check.passed and check.checked[3] == 8 ** 3 and elapsed < 10
    detail = f"reducer == fit: {reduced == fitted}; N=3 exhaustive max diff {check.max_abs_diff:.1e}; result {reduced!r}"
    assert report(2, "d triangle", ok, detail, elapsed)


def test_criterion_3_square():
    t0 = time.perf_counter()
    e, reduced, fitted = _fit_and_reduce(SQUARE)
    exhaustive = verify_equal(e, reduced, ns=(3,), tol=1e-8)
    sampled = verify_equal(e, reduced, ns=(4, 5), samples=1000, tol=1e-8, exhaustive_limit=0)
    elapsed = time.perf_counter() - t0
    ok = (reduced == fitted and exhaustive.passed and exhaustive.checked[3] == 8 ** 4
          and sampled.passed and elapsed < 60)
    detail = (f"reducer == fit: {reduced == fitted}; N=3 exhaustive {exhaustive.max_abs_diff:.1e}; "
              f"N=4,5 sampled {sampled.max_abs_diff:.1e}")
    assert report(3, "d square", ok, detail, elapsed)


def _trace_chain(letters, indices, tag):
    n = len(indices)
    return " ".join(f"{l.lower()}({a},{tag}{i},{tag}{(i + 1) % n})" for i, (l, a) in enumerate(zip(letters, indices)))


# The pentagon right-hand side exactly as printed, with a..g for i1..i5 and
# each adjoint trace written out as its ring of d/f tensors.
PRINTED_PENTAGON = (
    "(1/2 - 6/N)*d(a,b,c) delta(e,g) + (1/2 - 6/N)*d(a,b,g) delta(e,c)"
    " - 1/N*d(c,e,k) d(k,b,l) d(l,a,g) - 1/N*d(e,g,k) d(k,b,l) d(l,a,c)"
    " - 1/N*d(a,g,k) d(k,e,l) d(l,b,c) + 1/N*d(b,g,k) d(k,e,l) d(l,a,c)"
    f" + 1/2*{_trace_chain('DDFF', ['b', 'a', 'e', 'k'], 'p')} d(k,g,c)"
    f" + 1/2*{_trace_chain('DDDD', ['a', 'b', 'g', 'k'], 'q')} d(k,c,e)"
    f" + 1/2*{_trace_chain('DDDD', ['a', 'b', 'c', 'k'], 'r')} d(k,g,e)"
    f" - 1/2*{_trace_chain('DDDF', ['c', 'e', 'g', 'k'], 's')} f(k,a,b)"
)


def test_criterion_4_pentagon():
    t0 = time.perf_counter()
    word = ["a", "b", "c", "e", "g"]
    pentagon = adjoint_trace_diagram(TraceWord(tuple(word), TraceKind.ADJOINT_D))
    reduced, _ = reduce_to_forests(pentagon)
    rng = np.random.default_rng(4)
    worst = {}
    for n in (3, 4):
        t = build_structure_tensors(n)
        vals = rng.integers(0, t.dim, size=(2000, 5))
        direct = matrix_trace_adjoint(word, "DDDDD", t, vals, word)
        worst[n] = float(np.abs(eval_expression_batch(reduced, t, word, vals) - direct).max())
    ok = max(worst.values()) < 1e-8 and all(is_forest(k.diagram) for k in reduced)
    printed = verify_equal(Expression.from_diagram(pentagon), parse_expression(PRINTED_PENTAGON),
                           ns=(3, 4), samples=2000, tol=1e-8)
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120
    detail = (f"reducer vs matrix trace max diff {max(worst.values()):.1e} over {len(reduced)} forests; "
              f"printed right-hand side {'matches' if printed.passed else 'does NOT match'} "
              f"(max diff {printed.max_abs_diff:.3g})")
    assert report(4, "d pentagon", ok, detail, elapsed)


def test_criterion_5_step_soundness(loop_corpus):
    t0 = time.perf_counter()
    count = bad = 0
    worst = 0.0
    for _, _, trace, _ in loop_corpus:
        for app in trace.applications:
            r = verify_equal(app.input_expression, app.output, ns=(3,), samples=50, tol=1e-9, exhaustive_limit=0)
            count += 1
            bad += not r.passed
            worst = max(worst, r.max_abs_diff)
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and count > 0 and len(loop_corpus) >= 100
    detail = f"{count} rule applications over {len(loop_corpus)} diagrams, {bad} violations, max diff {worst:.1e}"
    assert report(5, "per-step soundness", ok, detail, elapsed)


def test_criterion_6_forests(loop_corpus):
    t0 = time.perf_counter()
    cyclic = failed = 0
    worst = 0.0
    for d, result, _, _ in loop_corpus:
        cyclic += sum(not is_forest(k.diagram) for k in result)
        r = verify_equal(d, result, ns=(3, 4), samples=500, tol=1e-8, exhaustive_limit=0)
        failed += not r.passed
        worst = max(worst, r.max_abs_diff)
    reduce_time = sum(x[3] for x in loop_corpus)
    elapsed = time.perf_counter() - t0 + reduce_time
    ok = cyclic == 0 and failed == 0
    detail = (f"{cyclic} cyclic output terms, {failed} numeric mismatches (max diff {worst:.1e}), "
              "all within the default step budget")
    assert report(6, "reduction yields forests", ok, detail, elapsed)


def test_criterion_7_progress(loop_corpus):
    t0 = time.perf_counter()
    phases = sum(len(trace) for _, _, trace, _ in loop_corpus)
    bad = sum(len(progress_violations(trace, key=measure)) for _, _, trace, _ in loop_corpus)
    elapsed = time.perf_counter() - t0
    detail = f"{phases} phases, {bad} where a replacement term does not have a smaller measure"
    assert report(7, "measure decreases at each phase", bad == 0 and phases > 0, detail, elapsed)


def test_criterion_8_fundamental_traces():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    pyrng = random.Random(8)
    names = [f"a{j}" for j in range(1, 8)]
    worst = 0.0
    rotation_failures = 0
    for length in range(0, 8):
        for _ in range(3):
            word = pyrng.sample(names, length)
            e = expand_trace(word)
            for n in (2, 3, 4):
                t = build_structure_tensors(n)
                vals = rng.integers(0, t.dim, size=(200, length))
                got = eval_expression_batch(e, t, word, vals)
                worst = max(worst, float(np.abs(got - matrix_trace_fundamental(word, t, vals, word)).max()))
            rotation_failures += sum(expand_trace(word[r:] + word[:r]) != e for r in range(1, max(length, 1)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and rotation_failures == 0
    detail = f"max diff {worst:.1e} for words of length 0..7 at N=2,3,4; {rotation_failures} rotation mismatches"
    assert report(8, "fundamental trace expansion", ok, detail, elapsed)


def test_criterion_9_canonicalization():
    t0 = time.perf_counter()
    rng = random.Random(9)
    failures = 0
    diagrams = [d for d, _ in corpus(100, seed=99)]
    for d in diagrams:
        key, sign = canonicalize(d)
        again, s_again = canonicalize(key.diagram)
        failures += again != key or s_again != (1 if sign else 0)
        for _ in range(100):
            other, s = reencode(d, rng)
            k2, s2 = canonicalize(other)
            failures += k2 != key or s2 != sign * s
    elapsed = time.perf_counter() - t0
    detail = f"{len(diagrams)} diagrams x 100 re-encodings, {failures} failures"
    assert report(9, "canonical form", failures == 0, detail, elapsed)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
