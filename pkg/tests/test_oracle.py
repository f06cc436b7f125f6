import csv

import numpy as np
import pytest

from sunforest.coefficient import N
from sunforest.notation import parse_expression
from sunforest.oracle import (
    FitFailure,
    LegMismatch,
    build_structure_tensors,
    eval_diagram,
    eval_expression,
    export_tensors,
    fit_forest_coefficients,
    verify_equal,
)
from sunforest.rules import DD_BUBBLE, FF_BUBBLE


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_structure_tensor_invariants(n):
    t = build_structure_tensors(n)
    lam = t.lambdas
    gram = np.einsum("aij,bji->ab", lam, lam)
    assert np.allclose(gram, 2 * np.eye(t.dim), atol=1e-12)
    assert np.allclose(np.einsum("aii->a", lam), 0, atol=1e-12)
    assert np.allclose(lam, lam.conj().transpose(0, 2, 1), atol=1e-12)
    for p in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(t.d, t.d.transpose(p), atol=1e-12)
        assert np.allclose(t.f, -t.f.transpose(p), atol=1e-12)


def test_su2_and_su3_conventions():
    t2 = build_structure_tensors(2)
    assert np.allclose(t2.d, 0)
    eps = np.zeros((3, 3, 3))
    for (a, b, c), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (0, 2, 1): -1, (2, 1, 0): -1}.items():
        eps[a, b, c] = s
    assert np.allclose(t2.f, eps)
    t3 = build_structure_tensors(3)
    assert t3.f[0, 1, 2] == pytest.approx(1.0)
    assert t3.d[0, 0, 7] == pytest.approx(1 / np.sqrt(3))


def test_eval_single_vertex():
    t = build_structure_tensors(3)
    e = parse_expression("f(i,j,k)")
    assert eval_expression(e, t, {"i": 0, "j": 1, "k": 2}) == pytest.approx(1.0)
    (key,) = list(e)
    assert eval_diagram(key.diagram, t, {"i": 1, "j": 0, "k": 2}) == pytest.approx(-1.0)


def test_verify_reports_failures():
    a = parse_expression("d(i,j,k)")
    assert verify_equal(a, a, ns=(3,))
    bad = verify_equal(a, parse_expression("2*d(i,j,k)"), ns=(3,))
    assert not bad and bad.max_abs_diff > 0.1
    with pytest.raises(LegMismatch):
        verify_equal(a, parse_expression("d(i,j,l)"), ns=(3,))


def test_bubble_constants_from_fit():
    dd = fit_forest_coefficients(parse_expression("d(i,k,l) d(j,k,l)"))
    ff = fit_forest_coefficients(parse_expression("f(i,k,l) f(j,k,l)"))
    df = fit_forest_coefficients(parse_expression("d(i,k,l) f(j,k,l)"))
    assert dd == parse_expression("delta(i,j)").scale(DD_BUBBLE)
    assert ff == parse_expression("delta(i,j)").scale(FF_BUBBLE)
    assert df.is_zero()


def test_fit_triangle():
    fit = fit_forest_coefficients(parse_expression("d(i,a,b) d(a,c,j) d(b,c,k)"))
    assert fit == parse_expression("(1/2*N - 6/N)*d(i,j,k)")


def test_fit_needs_enough_points():
    theta = parse_expression("d(a,b,c) d(a,b,c)")
    with pytest.raises(FitFailure):
        fit_forest_coefficients(theta, ns=(3, 4), holdout=5)
    fit = fit_forest_coefficients(theta, ns=(3, 4, 5, 6, 7), holdout=8)
    assert fit == parse_expression("1").scale((N * N - 1) * (N - 4 / N))


def test_export(tmp_path):
    out = tmp_path / "su3.csv"
    rows = export_tensors(3, out)
    with open(out) as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["tensor", "a", "b", "c", "value"]
    assert len(data) == rows + 1
    assert ["f", "1", "2", "3", "1"] in data
