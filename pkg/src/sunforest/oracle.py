"""Numeric ground truth from explicit generalized Gell-Mann matrices.

Everything here is floating point and deliberately independent of the
symbolic rewriting code: diagrams are evaluated by brute-force contraction of
the numeric d and f arrays.
"""

from __future__ import annotations

import csv
from fractions import Fraction
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from .diagram import Diagram, Kind
from .expression import Expression


class IncompleteAssignment(KeyError):
    pass


class LegMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StructureTensors:
    n: int
    lambdas: np.ndarray  # (N^2-1, N, N)
    d: np.ndarray  # (N^2-1,)*3
    f: np.ndarray

    @property
    def dim(self) -> int:
        return self.n * self.n - 1

    def D(self, a: int) -> np.ndarray:
        return self.d[a]

    def F(self, a: int) -> np.ndarray:
        return self.f[a]


def gell_mann(n: int) -> np.ndarray:
    """Generalized Gell-Mann matrices in the standard order, Tr(l_a l_b) = 2 delta_ab."""
    mats = []
    for k in range(1, n):
        for j in range(k):
            m = np.zeros((n, n), complex)
            m[j, k] = m[k, j] = 1
            mats.append(m)
            m = np.zeros((n, n), complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m)
        m = np.zeros((n, n), complex)
        m[np.arange(k), np.arange(k)] = 1
        m[k, k] = -k
        mats.append(m * np.sqrt(2.0 / (k * (k + 1))))
    return np.array(mats)


@lru_cache(maxsize=None)
def build_structure_tensors(n: int) -> StructureTensors:
    if n < 2:
        raise ValueError("N must be at least 2")
    lam = gell_mann(n)
    prod = np.einsum("aij,bjk->abik", lam, lam)
    anti = prod + prod.transpose(1, 0, 2, 3)
    comm = prod - prod.transpose(1, 0, 2, 3)
    d = np.einsum("abik,cki->abc", anti, lam) / 4
    f = np.einsum("abik,cki->abc", comm, lam) / 4j
    if max(abs(d.imag).max(), abs(f.imag).max()) > 1e-12:
        raise ArithmeticError("structure constants came out complex")
    d, f = d.real.copy(), f.real.copy()
    d[abs(d) < 1e-15] = 0.0
    f[abs(f) < 1e-15] = 0.0
    for arr in (lam, d, f):
        arr.setflags(write=False)
    return StructureTensors(n, lam, d, f)


# ---------------------------------------------------------------------------
# contraction

def _as_batch(names: Sequence[str], assignment) -> np.ndarray:
    """Normalize assignments to an int array of shape (samples, len(names))."""
    if isinstance(assignment, Mapping):
        missing = [x for x in names if x not in assignment]
        if missing:
            raise IncompleteAssignment(missing)
        return np.array([[int(assignment[x]) for x in names]], dtype=np.int64)
    arr = np.asarray(assignment, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[1] != len(names):
        raise IncompleteAssignment(f"expected {len(names)} columns, got {arr.shape[1]}")
    return arr


def _contract(operands: List, out: Sequence[int]) -> np.ndarray:
    """einsum along a pairwise path that always makes the smallest intermediate.

    numpy's own greedy search caps intermediates at the largest input and
    otherwise prefers big rank reductions, which on rings of 3-tensors ends
    in huge intermediates or one naive nested loop.
    """
    arrays = list(operands[0::2])
    subs = [tuple(x) for x in operands[1::2]]
    size: Dict[int, int] = {}
    for a, sub in zip(arrays, subs):
        size.update(zip(sub, a.shape))
    keep = set(out)
    live = list(subs)
    path = []
    while len(live) > 1:
        best = None
        for i in range(len(live)):
            for j in range(i + 1, len(live)):
                shared = set(live[i]) & set(live[j])
                rest = set().union(*(live[k] for k in range(len(live)) if k not in (i, j))) | keep
                res = tuple(dict.fromkeys(x for x in live[i] + live[j] if x in rest))
                cost = (not shared, int(np.prod([size[x] for x in res], dtype=float)))
                if best is None or cost < best[0]:
                    best = (cost, i, j, res)
        _, i, j, res = best
        path.append((i, j))
        live = [s for k, s in enumerate(live) if k not in (i, j)] + [res]
    args = [x for pair in zip(arrays, subs) for x in (pair[0], list(pair[1]))]
    return np.einsum(*args, list(out), optimize=["einsum_path"] + path if path else False)


def eval_diagram_batch(diagram: Diagram, t: StructureTensors, names: Sequence[str],
                       values: np.ndarray) -> np.ndarray:
    """Contract a diagram for many external assignments at once.

    ``values[s, j]`` is the 0-based adjoint index of external ``names[j]`` in
    sample ``s``.  Names not present in the diagram are ignored.
    """
    col = {x: j for j, x in enumerate(names)}
    missing = [x for x in diagram.external_names if x not in col]
    if missing:
        raise IncompleteAssignment(missing)
    own = sorted(diagram.external_names)
    if own and t.dim ** len(own) <= FULL_TENSOR_LIMIT and values.shape[0] > t.dim:
        full = _open_tensor(diagram, t, own)
        return full[tuple(values[:, col[x]] for x in own)].astype(complex)
    samples = values.shape[0]
    batch = 0
    symbols: Dict[int, int] = {}
    for a, b in diagram.edges:
        symbols[a] = symbols[b] = len(symbols) // 2 + 1
    if len(symbols) // 2 + 1 > 51:
        raise ValueError("diagram too large for direct contraction")
    operands: List = []
    scalar = np.ones(samples)
    for v in diagram.vertices:
        base = t.d if v.kind is Kind.D else t.f
        ext_slots = [s for s, leg in enumerate(v.legs) if leg in diagram.leg_name]
        int_slots = [s for s, leg in enumerate(v.legs) if leg not in diagram.leg_name]
        if not ext_slots:
            operands += [base, [symbols[v.legs[s]] for s in int_slots]]
            continue
        arr = base.transpose(ext_slots + int_slots)
        idx = tuple(values[:, col[diagram.leg_name[v.legs[s]]]] for s in ext_slots)
        picked = arr[idx]
        if int_slots:
            operands += [picked, [batch] + [symbols[v.legs[s]] for s in int_slots]]
        else:
            scalar = scalar * picked
    for a, b in diagram.deltas:
        scalar = scalar * (values[:, col[a]] == values[:, col[b]])
    if not operands:
        return scalar.astype(complex)
    has_batch = any(batch in sub for sub in operands[1::2])
    out = [batch] if has_batch else []
    res = _contract(operands, out)
    return (scalar * res).astype(complex)


FULL_TENSOR_LIMIT = 4_000_000


def _open_tensor(diagram: Diagram, t: StructureTensors, own: Sequence[str]) -> np.ndarray:
    """The diagram with every external leg left open, axes in ``own`` order."""
    sym: Dict[object, int] = {x: j for j, x in enumerate(own)}
    for j, (a, b) in enumerate(diagram.edges):
        sym[a] = sym[b] = len(own) + j
    operands: List = []
    for v in diagram.vertices:
        base = t.d if v.kind is Kind.D else t.f
        sub = [sym[diagram.leg_name[l]] if l in diagram.leg_name else sym[l] for l in v.legs]
        operands += [base, sub]
    eye = np.eye(t.dim)
    for a, b in diagram.deltas:
        operands += [eye, [sym[a], sym[b]]]
    return _contract(operands, list(range(len(own))))


def eval_diagram(diagram: Diagram, t: StructureTensors, assignment: Mapping[str, int]) -> complex:
    """Value of the diagram at one assignment of (0-based) adjoint indices."""
    names = sorted(diagram.external_names)
    values = _as_batch(names, assignment)
    return complex(eval_diagram_batch(diagram, t, names, values)[0])


def eval_expression_batch(e: Expression, t: StructureTensors, names: Sequence[str],
                          values: np.ndarray) -> np.ndarray:
    total = np.zeros(values.shape[0], complex)
    for key, c in e.items():
        total += c.evaluate(t.n) * eval_diagram_batch(key.diagram, t, names, values)
    return total


def eval_expression(e: Expression, t: StructureTensors, assignment: Mapping[str, int]) -> complex:
    names = sorted(e.external_names)
    values = _as_batch(names, assignment)
    return complex(eval_expression_batch(e, t, names, values)[0])


def _evaluable(obj) -> Expression:
    if isinstance(obj, Expression):
        return obj
    return Expression.from_diagram(obj)


def assignments(n_legs: int, dim: int, samples: int, rng: np.random.Generator,
                exhaustive_limit: int = 100_000) -> np.ndarray:
    """All index tuples when that is at most ``exhaustive_limit`` rows, else a random sample."""
    if n_legs == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if dim ** n_legs <= exhaustive_limit:
        return np.array(list(itertools.product(range(dim), repeat=n_legs)), dtype=np.int64)
    return rng.integers(0, dim, size=(samples, n_legs))


@lru_cache(maxsize=None)
def _support(n: int) -> np.ndarray:
    t = build_structure_tensors(n)
    return np.argwhere((np.abs(t.d) + np.abs(t.f)) > 1e-12)


def structured_assignments(n_legs: int, t: StructureTensors, samples: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Random tuples drawn from the indices of a few random nonzero d/f entries.

    Uniform tuples of a sparse invariant are almost always zero; pooling
    the legs from actual nonzero entries keeps most samples informative.
    """
    if n_legs == 0:
        return np.zeros((1, 0), dtype=np.int64)
    support = _support(t.n)
    k = n_legs // 2 + 1
    rows = support[rng.integers(0, len(support), size=(samples, k))].reshape(samples, 3 * k)
    pick = rng.integers(0, 3 * k, size=(samples, n_legs))
    return np.take_along_axis(rows, pick, axis=1).astype(np.int64)


def mixed_assignments(n_legs: int, t: StructureTensors, samples: int, rng: np.random.Generator,
                      exhaustive_limit: int = 100_000) -> np.ndarray:
    """Exhaustive when small, otherwise half uniform and half structured samples."""
    if n_legs == 0 or t.dim ** n_legs <= exhaustive_limit:
        return assignments(n_legs, t.dim, samples, rng, exhaustive_limit)
    half = samples // 2
    return np.vstack([rng.integers(0, t.dim, size=(samples - half, n_legs)),
                      structured_assignments(n_legs, t, half, rng)])


@dataclass
class VerifyReport:
    max_abs_diff: float
    passed: bool
    per_n: Dict[int, float] = field(default_factory=dict)
    checked: Dict[int, int] = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def verify_equal(a, b, ns: Iterable[int] = (3, 4, 5), samples: int = 200, tol: float = 1e-9,
                 seed: int = 0, exhaustive_limit: int = 100_000) -> VerifyReport:
    """Compare two expressions (or diagrams) numerically.

    Exhaustive over all index tuples when ``(N^2-1)^legs <= exhaustive_limit``,
    otherwise ``samples`` random tuples per N.
    """
    ea, eb = _evaluable(a), _evaluable(b)
    na, nb = ea.external_names, eb.external_names
    if na != nb and not (ea.is_zero() or eb.is_zero()):
        raise LegMismatch(f"{sorted(na)} vs {sorted(nb)}")
    names = sorted(na | nb)
    rng = np.random.default_rng(seed)
    report = VerifyReport(0.0, True)
    for n in ns:
        t = build_structure_tensors(n)
        vals = mixed_assignments(len(names), t, samples, rng, exhaustive_limit)
        diff = eval_expression_batch(ea, t, names, vals) - eval_expression_batch(eb, t, names, vals)
        m = float(abs(diff).max()) if diff.size else 0.0
        report.per_n[n] = m
        report.checked[n] = len(vals)
        report.max_abs_diff = max(report.max_abs_diff, m)
    report.passed = report.max_abs_diff < tol
    return report


def matrix_trace_adjoint(word: Sequence[str], kinds: Sequence[str], t: StructureTensors,
                         values: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Direct Tr(M_1 ... M_n) with [D_a]_{jk}=d_{ajk}, [F_a]_{jk}=f_{ajk}, per sample."""
    col = {x: j for j, x in enumerate(names)}
    out = np.empty(values.shape[0])
    for s in range(values.shape[0]):
        m = np.eye(t.dim)
        for x, k in zip(word, kinds):
            base = t.d if k.upper() == "D" else t.f
            m = m @ base[values[s, col[x]]]
        out[s] = np.trace(m)
    return out


def matrix_trace_fundamental(word: Sequence[str], t: StructureTensors, values: np.ndarray,
                             names: Sequence[str]) -> np.ndarray:
    """Direct Tr(lambda_{i1} ... lambda_{in}) per sample."""
    col = {x: j for j, x in enumerate(names)}
    out = np.empty(values.shape[0], complex)
    for s in range(values.shape[0]):
        m = np.eye(t.n, dtype=complex)
        for x in word:
            m = m @ t.lambdas[values[s, col[x]]]
        out[s] = np.trace(m)
    return out


def export_tensors(n: int, path, tol: float = 1e-14) -> int:
    """Write nonzero d and f entries (1-based indices) as CSV; returns row count."""
    t = build_structure_tensors(n)
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tensor", "a", "b", "c", "value"])
        for name, arr in (("d", t.d), ("f", t.f)):
            for a, b, c in zip(*np.nonzero(abs(arr) > tol)):
                w.writerow([name, a + 1, b + 1, c + 1, f"{arr[a, b, c]:.15g}"])
                rows += 1
    return rows


# ---------------------------------------------------------------------------
# fitting forest decompositions

class RankDeficient(ArithmeticError):
    pass


class FitFailure(ArithmeticError):
    pass


def _independent(columns: np.ndarray, tol: float = 1e-9) -> List[int]:
    """Greedy choice of linearly independent columns, left to right."""
    keep: List[int] = []
    basis = np.zeros((columns.shape[0], 0))
    for j in range(columns.shape[1]):
        col = columns[:, j]
        norm = np.linalg.norm(col)
        if norm == 0:
            continue
        col = col / norm
        if basis.shape[1]:
            col = col - basis @ (basis.T @ col)
            col = col - basis @ (basis.T @ col)
        if np.linalg.norm(col) > tol:
            keep.append(j)
            basis = np.column_stack([basis, col / np.linalg.norm(col)])
    return keep


def _windows(max_width: int, reach: int = 6):
    out = []
    for w in range(1, max_width + 1):
        for lo in range(-reach, reach - w + 2):
            hi = lo + w - 1
            out.append((w, max(abs(lo), abs(hi)), lo, hi))
    return [(lo, hi) for _, _, lo, hi in sorted(out)]


def _rationalize(x: float, max_den: int) -> Fraction:
    return Fraction(float(x)).limit_denominator(max_den)


def _check_candidate(sol, powers, blocks, n_basis: int, max_den: int, tol: float):
    coeffs: Dict[int, Dict[int, Fraction]] = {}
    for k, p in enumerate(powers):
        for j in range(n_basis):
            q = _rationalize(sol[k * n_basis + j], max_den)
            if q:
                coeffs.setdefault(j, {})[p] = q
    for n, a, b in blocks:
        c = np.array([sum(float(q) * float(n) ** p for p, q in coeffs.get(j, {}).items())
                      for j in range(n_basis)])
        if a.shape[1] and np.abs(a @ c - b).max() > tol:
            return None
        if not a.shape[1] and np.abs(b).max() > tol:
            return None
    return coeffs


def _fit_part(blocks, ns, holdout_block, n_basis: int, max_den: int, tol: float):
    """Joint Laurent fit over all N of one real right-hand side.

    ``blocks[i] = (n, A, b)``.  Returns {basis index: {power: Fraction}} or
    raises.
    """
    scale = max(float(np.abs(b).max()) for _, _, b in blocks + [holdout_block])
    if scale < tol:
        return {}
    deficient = False
    for lo, hi in _windows(len(ns)):
        powers = list(range(lo, hi + 1))
        rows, rhs = [], []
        for n, a, b in blocks:
            rows.append(np.hstack([a * float(n) ** p for p in powers]))
            rhs.append(b)
        m = np.vstack(rows)
        y = np.concatenate(rhs)
        norms = np.linalg.norm(m, axis=0)
        norms[norms == 0] = 1
        ms = m / norms
        sol, _, rank, sv = np.linalg.lstsq(ms, y, rcond=None)
        candidates = [sol]
        if rank < m.shape[1]:
            deficient = True
            if rank < m.shape[1] - 1:
                continue
            # one free direction: try the members of the line that zero one entry
            z = np.linalg.svd(ms)[2][-1]
            candidates = [sol - (sol[i] / z[i]) * z for i in np.argsort(-np.abs(z)) if abs(z[i]) > 1e-6]
        for cand in candidates:
            coeffs = _check_candidate(cand / norms, powers, blocks + [holdout_block], n_basis,
                                      max_den, tol * max(1.0, scale))
            if coeffs is not None:
                return coeffs
    if deficient:
        raise RankDeficient("forest basis is degenerate for every Laurent window; add more N values")
    raise FitFailure("no Laurent polynomial window reproduces the target")


def fit_forest_coefficients(target, ns: Sequence[int] = (3, 4, 5, 6), holdout: int = 7,
                            samples: int = 400, max_vertices: Optional[int] = None, seed: int = 0,
                            max_den: int = 10_000, tol: float = 1e-7) -> Expression:
    """Decompose a diagram or expression on normal-form forests by numeric fitting.

    Coefficients are fitted jointly over ``ns`` as Laurent polynomials in N
    with rational coefficients, then checked at ``holdout``.
    """
    from .coefficient import Coefficient, N as N_SYM
    from .forests import enumerate_forests

    e = _evaluable(target)
    names = sorted(e.external_names)
    if len(names) > 6:
        raise ValueError("fitting is limited to at most 6 external legs")
    if e.is_zero():
        return Expression()
    if max_vertices is None:
        max_vertices = max(len(k.diagram.vertices) for k in e)
    basis = enumerate_forests(names, max_vertices)
    rng = np.random.default_rng(seed)

    def block(n):
        t = build_structure_tensors(n)
        vals = structured_assignments(len(names), t, max(samples, 4 * len(basis)), rng)
        a = np.column_stack([eval_diagram_batch(k.diagram, t, names, vals).real for k in basis]) \
            if basis else np.zeros((len(vals), 0))
        return n, a, eval_expression_batch(e, t, names, vals)

    probe = block(max(list(ns) + [holdout]))
    keep = _independent(probe[1])
    basis = [basis[j] for j in keep]
    blocks = [block(n) for n in ns]
    hold = block(holdout)

    re = _fit_part([(n, a, b.real) for n, a, b in blocks], ns, (hold[0], hold[1], hold[2].real),
                   len(basis), max_den, tol)
    im = _fit_part([(n, a, b.imag) for n, a, b in blocks], ns, (hold[0], hold[1], hold[2].imag),
                   len(basis), max_den, tol)
    out = Expression()
    for j, key in enumerate(basis):
        c = Coefficient()
        for p, q in re.get(j, {}).items():
            c = c + Coefficient.monomial(p, q)
        for p, q in im.get(j, {}).items():
            c = c + Coefficient.monomial(p, 0, q)
        if not c.is_zero():
            out = out + Expression({key: c})
    return out
