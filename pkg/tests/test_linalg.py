from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from didacks.linalg import (
    ConvergenceError,
    IndefiniteMatrixError,
    SingularSystemError,
    SymMatrix,
    cholesky_pivots,
    condition_number,
    householder_solve,
    is_positive_definite,
    jacobi_eigenvalues,
)
from didacks.precision import DOUBLE, EXTENDED, DoubleDouble, to_float


def dd_from_fractions(rows):
    hi = np.array([[float(v) for v in r] for r in rows])
    lo = np.array([[float(v - Fraction(float(v))) for v in r] for r in rows])
    return DoubleDouble(hi, lo)


def hilbert(n):
    h = [[Fraction(1, i + j + 1) for j in range(n)] for i in range(n)]
    return h, [sum(r) for r in h]


def residual_bound(t: SymMatrix, q, a):
    tf, qf, af = t.to_float(), np.asarray(to_float(q)), np.asarray(to_float(a))
    eps = t.backend.eps
    return 10 * t.n * eps * (np.abs(tf).sum(axis=1).max() * np.abs(qf).max() + np.abs(af).max())


def test_solve_examples_double():
    q = householder_solve(SymMatrix(np.eye(3)), [1.0, 2.0, 3.0])
    np.testing.assert_allclose(q, [1, 2, 3], rtol=1e-15)
    q = householder_solve(SymMatrix([[2.0, 1.0], [1.0, 2.0]]), [3.0, 3.0])
    np.testing.assert_allclose(q, [1, 1], rtol=1e-15)


def test_hilbert_solve_both_backends():
    h, sums = hilbert(4)
    q = householder_solve(SymMatrix(np.array([[float(v) for v in r] for r in h])), [float(s) for s in sums])
    np.testing.assert_allclose(q, np.ones(4), rtol=1e-11)
    t = SymMatrix(dd_from_fractions(h))
    a = dd_from_fractions([sums])[0]
    q = householder_solve(t, a)
    err = (q - 1.0).to_float()
    assert np.abs(err).max() < 1e-26


def test_backsubstitution_residual_bound():
    rng = np.random.default_rng(1)
    for backend in (DOUBLE, EXTENDED):
        m = rng.normal(size=(12, 12))
        spd = m @ m.T + 0.1 * np.eye(12)
        t = SymMatrix(spd, backend)
        a = backend.asarray(rng.normal(size=12))
        q = householder_solve(t, a)
        res = t.matvec(q) - a
        assert np.abs(np.asarray(to_float(res))).max() <= residual_bound(t, q, a)


def test_singular_and_shape_errors():
    with pytest.raises(SingularSystemError) as info:
        householder_solve(SymMatrix(np.zeros((2, 2))), [1.0, 1.0])
    assert info.value.pivot == 0
    with pytest.raises(ValueError, match="length"):
        householder_solve(SymMatrix(np.eye(2)), [1.0])


def test_symmatrix_enforces_symmetry_from_lower_triangle():
    t = SymMatrix([[1.0, 99.0], [2.0, 3.0]])
    assert t.to_float().tolist() == [[1.0, 2.0], [2.0, 3.0]]
    assert t.n == 2 and float(t.trace()) == 4.0
    with pytest.raises(ValueError):
        SymMatrix(np.ones((2, 3)))


def test_jacobi_examples():
    np.testing.assert_allclose(jacobi_eigenvalues(SymMatrix(np.diag([3.0, 1.0, 2.0]))), [3, 2, 1])
    np.testing.assert_allclose(jacobi_eigenvalues(SymMatrix([[2.0, 1.0], [1.0, 2.0]])), [3, 1], rtol=1e-15)
    assert condition_number([3.0, 1.0]) == 3.0
    assert condition_number(np.ones(5)) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_jacobi_matches_cubic_roots(vals):
    a, b, c, d, e, f = vals
    m = np.array([[a, b, c], [b, d, e], [c, e, f]])
    mpmath.mp.dps = 40
    mm = mpmath.matrix(m.tolist())
    # characteristic polynomial -l^3 + tr l^2 - c2 l + det, monic form
    tr = mm[0, 0] + mm[1, 1] + mm[2, 2]
    c2 = sum(mm[i, i] * mm[j, j] - mm[i, j] ** 2 for i, j in ((0, 1), (0, 2), (1, 2)))
    det = mpmath.det(mm)
    roots = sorted((float(mpmath.re(r)) for r in mpmath.polyroots([1, -tr, c2, -det], maxsteps=200, extraprec=200)), reverse=True)
    got = jacobi_eigenvalues(SymMatrix(m))
    scale = max(1.0, np.abs(m).max())
    np.testing.assert_allclose(got, roots, atol=1e-12 * scale)


def test_eigenvalue_sum_equals_trace():
    rng = np.random.default_rng(4)
    m = rng.normal(size=(20, 20))
    m = m + m.T
    t = SymMatrix(m)
    e = jacobi_eigenvalues(t)
    assert e.sum() == pytest.approx(float(t.trace()), rel=1e-12, abs=1e-12 * t.frobenius())
    te = SymMatrix(m, EXTENDED)
    ee = jacobi_eigenvalues(te)
    diff = float(abs(ee.sum() - te.trace()))
    assert diff <= 1e-28 * te.frobenius()


def test_extended_resolves_what_double_cannot():
    # eigenvalues 1 and 1e-20 hidden by a rotation; double loses the small one
    c, s = np.cos(0.3), np.sin(0.3)
    r = np.array([[c, -s], [s, c]])
    hi = r @ np.diag([1.0, 0.0]) @ r.T
    t = SymMatrix(DoubleDouble(hi) + DoubleDouble(r @ np.diag([0.0, 1e-20]) @ r.T))
    e = jacobi_eigenvalues(t)
    assert float(e[1]) == pytest.approx(1e-20, rel=1e-6)


def test_indefinite_and_convergence_errors():
    with pytest.raises(IndefiniteMatrixError) as info:
        condition_number(jacobi_eigenvalues(SymMatrix([[1.0, 2.0], [2.0, 1.0]])))
    assert info.value.lambda_min == pytest.approx(-1.0)
    rng = np.random.default_rng(0)
    m = rng.normal(size=(16, 16))
    with pytest.raises(ConvergenceError) as cinfo:
        jacobi_eigenvalues(SymMatrix(m + m.T), max_sweeps=1)
    assert cinfo.value.residual > 0 and cinfo.value.sweeps == 1


def test_cholesky_pivots():
    h, _ = hilbert(6)
    t = SymMatrix(dd_from_fractions(h))
    piv = cholesky_pivots(t)
    assert len(piv) == 6 and np.all(piv > 0) and is_positive_definite(t)
    # pivots multiply to the determinant
    det = np.prod(piv)
    want = float(mpmath.det(mpmath.matrix([[mpmath.mpf(v.numerator) / v.denominator for v in r] for r in h])))
    assert det == pytest.approx(want, rel=1e-12)
    bad = SymMatrix([[1.0, 2.0], [2.0, 1.0]])
    assert not is_positive_definite(bad)
    assert cholesky_pivots(bad)[-1] < 0
