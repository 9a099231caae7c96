"""Dense symmetric linear algebra that runs in any working precision.

Every routine is written against array arithmetic only, so the same code
operates on float64 arrays and on :class:`~didacks.precision.DoubleDouble`
arrays.  Work is vectorized over rows/columns; the Jacobi solver uses a
parallel (round-robin) pair ordering so that n/2 disjoint rotations are
applied per step.
"""

from __future__ import annotations

import numpy as np

from . import precision
from .precision import Backend, DoubleDouble, get_backend


class SingularSystemError(ArithmeticError):
    """Householder elimination met an exactly zero column."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"exactly zero pivot column at index {pivot}")


class ConvergenceError(ArithmeticError):
    def __init__(self, residual: float, sweeps: int):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(f"Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal norm {residual:.3e})")


class IndefiniteMatrixError(ArithmeticError):
    """Smallest eigenvalue is zero or negative at the working precision."""

    def __init__(self, lambda_min: float):
        self.lambda_min = lambda_min
        super().__init__(f"matrix is numerically singular or indefinite (smallest eigenvalue {lambda_min:.3e})")


def _approx(x) -> np.ndarray:
    """Leading float64 part, enough for signs and masks."""
    return x.hi if isinstance(x, DoubleDouble) else np.asarray(x)


def _backend_of(x) -> Backend:
    return precision.EXTENDED if isinstance(x, DoubleDouble) else precision.DOUBLE


class SymMatrix:
    """Symmetric matrix in a working precision.

    Only the lower triangle of the input is read; the upper triangle is
    filled by mirroring, so the stored matrix is exactly symmetric.
    """

    __slots__ = ("data", "backend")

    def __init__(self, data, backend: str | Backend | None = None):
        backend = get_backend(backend) if backend is not None else _backend_of(data)
        data = backend.asarray(data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"SymMatrix needs a square matrix, got shape {data.shape}")
        iu = np.triu_indices(data.shape[0], 1)
        data[iu] = data.T[iu]
        self.data = data
        self.backend = backend

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.n

    def to_float(self) -> np.ndarray:
        return np.asarray(precision.to_float(self.data), dtype=np.float64).reshape(self.n, self.n)

    def trace(self):
        idx = np.arange(self.n)
        return self.data[idx, idx].sum()

    def frobenius(self) -> float:
        a = self.to_float()
        return float(np.sqrt(np.sum(a * a)))

    def matvec(self, x):
        return (self.data * x.reshape(1, -1)).sum(axis=1)

    def __repr__(self) -> str:
        return f"SymMatrix(n={self.n}, backend={self.backend.name})"


def _as_vector(a, backend: Backend):
    v = backend.asarray(a)
    return v.reshape(-1)


def householder_solve(t: SymMatrix, a):
    """Least-squares solution of ``T q = A`` by Householder QR.

    Returns ``q`` in the matrix's working precision.
    """
    backend = t.backend
    n = t.n
    b = _as_vector(a, backend).copy()
    if len(b) != n:
        raise ValueError(f"right-hand side has length {len(b)}, matrix order is {n}")
    r = t.data.copy()
    for k in range(n):
        x = r[k:, k]
        norm2 = (x * x).sum()
        if float(precision.to_float(norm2)) == 0.0:
            raise SingularSystemError(k)
        norm = precision.sqrt(norm2)
        x0 = x[0]
        alpha = -norm if _approx(x0) >= 0 else norm
        v = x.copy()
        v[0] = x0 - alpha
        beta = 2.0 / (v * v).sum()
        block = r[k:, k:]
        w = (v.reshape(-1, 1) * block).sum(axis=0)
        r[k:, k:] = block - (v * beta).reshape(-1, 1) * w.reshape(1, -1)
        bk = b[k:]
        b[k:] = bk - v * (beta * (v * bk).sum())
    q = backend.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = b[i]
        if i + 1 < n:
            acc = acc - (r[i, i + 1 :] * q[i + 1 :]).sum()
        q[i] = acc / r[i, i]
    return q


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q) once per sweep, disjoint within a round."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigenvalues(t: SymMatrix, max_sweeps: int = 50):
    """All eigenvalues of ``T``, descending, in the working precision.

    A rotation is skipped once its pivot is negligible relative to the
    two diagonal entries it couples; iteration ends after a sweep with no
    rotations.  If the sweep budget runs out the result is still accepted
    when the off-diagonal Frobenius norm is below n^2 eps ||T||.
    """
    backend = t.backend
    n = t.n
    eps = backend.eps
    a = t.data.copy()
    scale = t.frobenius()
    if n == 1 or scale == 0.0:
        return _sorted_desc(a[np.arange(n), np.arange(n)])
    rounds = _round_robin(n)
    for sweep in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            fp, fpp, fqq = _approx(apq), _approx(app), _approx(aqq)
            keep = np.abs(fp) > eps * np.sqrt(np.abs(fpp * fqq))
            keep &= np.abs(fp) > eps * eps * scale
            if not np.any(keep):
                if np.any(fp != 0.0):
                    zero = np.where(~keep)[0]
                    a[p[zero], q[zero]] = 0.0
                    a[q[zero], p[zero]] = 0.0
                continue
            rotated = True
            kf = keep.astype(np.float64)
            safe = apq * kf + (1.0 - kf)
            theta = (aqq - app) / (safe * 2.0)
            sgn = np.where(_approx(theta) >= 0, 1.0, -1.0)
            tt = sgn / (abs(theta) + precision.sqrt(theta * theta + 1.0)) * kf
            c = 1.0 / precision.sqrt(tt * tt + 1.0)
            s = tt * c
            colp = a[:, p]
            colq = a[:, q]
            a[:, p] = colp * c - colq * s
            a[:, q] = colp * s + colq * c
            rowp = a[p, :]
            rowq = a[q, :]
            cr = c.reshape(-1, 1)
            sr = s.reshape(-1, 1)
            a[p, :] = rowp * cr - rowq * sr
            a[q, :] = rowp * sr + rowq * cr
            a[p, p] = app - tt * apq
            a[q, q] = aqq + tt * apq
            a[p, q] = apq * (1.0 - kf)
            a[q, p] = apq * (1.0 - kf)
        if not rotated:
            break
    else:
        residual = _off_norm(np.asarray(precision.to_float(a)))
        if residual >= n * n * eps * scale:
            raise ConvergenceError(residual, max_sweeps)
    return _sorted_desc(a[np.arange(n), np.arange(n)])


def _sorted_desc(d):
    if isinstance(d, DoubleDouble):
        order = np.lexsort((-d.lo, -d.hi))
    else:
        order = np.argsort(-np.asarray(d), kind="stable")
    return d[order]


def condition_number(eigs) -> float:
    """lambda_max / lambda_min as a float; raises when lambda_min <= 0."""
    if isinstance(eigs, DoubleDouble):
        eigs = eigs.to_float()
    vals = np.atleast_1d(np.asarray(eigs, dtype=np.float64))
    if vals.size == 0:
        raise ValueError("no eigenvalues given")
    lo, hi = float(vals.min()), float(vals.max())
    if not lo > 0.0:
        raise IndefiniteMatrixError(lo)
    return hi / lo


def cholesky_pivots(t: SymMatrix):
    """Squared Cholesky pivots d_j (as floats), stopping at the first d_j <= 0.

    All pivots positive is a proof of positive definiteness at the working
    precision, and far cheaper than a full eigen-decomposition for large n.
    Left-looking column form: one matrix-vector product per column.
    """
    n = t.n
    a = t.data
    backend = t.backend
    lower = backend.zeros((n, n))
    pivots = np.empty(n)
    for j in range(n):
        col = a[j:, j]
        if j:
            col = col - (lower[j:, :j] * lower[j, :j].reshape(1, -1)).sum(axis=1)
        d = col[0]
        pivots[j] = float(precision.to_float(d))
        if not pivots[j] > 0.0:
            return pivots[: j + 1]
        root = precision.sqrt(d)
        lower[j:, j] = col / root
    return pivots


def is_positive_definite(t: SymMatrix) -> bool:
    return bool(np.all(cholesky_pivots(t) > 0.0))
