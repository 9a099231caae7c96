"""Normal equations, solution and error statistics for point-source fits."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import precision
from .geometry import PointConfig
from .kernel import (
    Basis,
    FieldProbe,
    Geometry,
    Kind,
    basis_matrix,
    basis_norm,
    gram_block,
    point_bases,
    rhs_vector,
)
from .linalg import (
    IndefiniteMatrixError,
    SingularSystemError,
    SymMatrix,
    condition_number,
    householder_solve,
    jacobi_eigenvalues,
)
from .precision import Backend, get_backend


class FitError(ArithmeticError):
    """The normal equations could not be solved."""


def make_bases(
    grids: Sequence[PointConfig | np.ndarray],
    geometry: Geometry | str = Geometry.INTERIOR,
    *,
    dipoles: bool = False,
    constant: bool = False,
) -> list[Basis]:
    """Bases at the points of one or more grids (a union for multi-shell fits)."""
    pts = np.vstack([g.points if isinstance(g, PointConfig) else np.atleast_2d(g) for g in grids])
    return point_bases(pts, geometry, dipoles=dipoles, constant=constant)


@dataclass(frozen=True, eq=False)
class FitProblem:
    bases: Sequence[Basis]
    probe: FieldProbe
    normalize: bool = False
    precision: str = "double"

    def __post_init__(self):
        bases = tuple(self.bases)
        if not bases:
            raise ValueError("a fit needs at least one basis")
        geoms = {b.geometry for b in bases}
        if len(geoms) != 1:
            raise ValueError(f"all bases must share one geometry, got {sorted(g.value for g in geoms)}")
        _check_distinct(bases)
        get_backend(self.precision)
        if self.normalize:
            bases = tuple(replace(b, norm_factor=1.0 / basis_norm(b)) for b in bases)
        object.__setattr__(self, "bases", bases)

    @property
    def geometry(self) -> Geometry:
        return self.bases[0].geometry

    @property
    def backend(self) -> Backend:
        return get_backend(self.precision)


def _check_distinct(bases: Sequence[Basis]) -> None:
    seen: dict[tuple, int] = {}
    for i, b in enumerate(bases):
        key = (b.kind, None if b.interp is None else tuple(b.interp), None if b.direction is None else tuple(b.direction))
        if key in seen:
            raise ValueError(f"bases {seen[key]} and {i} coincide ({b!r})")
        seen[key] = i


@dataclass(frozen=True)
class ErrorStats:
    """Statistics of f - phi over an evaluation set.

    ``std`` is taken about the mean and ``rms`` about zero.  When the probe
    values are supplied, ``reference_rms`` (rms of f itself) allows a
    scale-free comparison across probes.
    """

    mean: float
    std: float
    rms: float
    max_magnitude: float
    eval_radius: float
    n_points: int
    reference_rms: float = float("nan")

    @property
    def relative_rms(self) -> float:
        return self.rms / self.reference_rms if self.reference_rms > 0 else float("nan")

    @classmethod
    def from_errors(cls, errors, eval_radius: float, reference=None) -> "ErrorStats":
        e = np.asarray(errors, dtype=np.float64)
        if e.size == 0:
            raise ValueError("no evaluation points")
        mean = float(e.mean())
        ref = float("nan") if reference is None else float(np.sqrt(np.mean(np.square(reference))))
        return cls(
            mean=mean,
            std=float(np.sqrt(np.mean((e - mean) ** 2))),
            rms=float(np.sqrt(np.mean(e * e))),
            max_magnitude=float(np.max(np.abs(e))),
            eval_radius=float(eval_radius),
            n_points=len(e),
            reference_rms=ref,
        )


@dataclass(frozen=True, eq=False)
class FitResult:
    bases: tuple[Basis, ...]
    coefficients: object  # working-precision vector
    precision: str
    condition_number: float
    lambda_max: float
    lambda_min: float
    indefinite: bool
    collocation_residual: float
    gradient_residual: float | None
    fit_norm_sq: float
    source_mean: float
    source_std: float
    raw_condition_number: float | None = None
    probe_scale: float = field(default=0.0)

    @property
    def coefficients_float(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(precision.to_float(self.coefficients), dtype=np.float64))

    @property
    def strengths(self) -> np.ndarray:
        """Coefficients of the unnormalized bases (q_k times the norm factor)."""
        return self.coefficients_float * np.array([b.norm_factor for b in self.bases])

    @property
    def eps(self) -> float:
        return get_backend(self.precision).eps

    def collocation_bound(self) -> float:
        """Condition-scaled tolerance on the collocation residual."""
        c = self.condition_number if np.isfinite(self.condition_number) else 1.0 / self.eps
        return 100.0 * c * self.eps * self.probe_scale + 1e-30


def assemble(problem: FitProblem):
    """Gram matrix and right-hand side in the problem's precision."""
    backend = problem.backend
    t = SymMatrix(gram_block(problem.bases, problem.bases, backend), backend)
    a = rhs_vector(problem.bases, problem.probe, backend)
    return t, a


def _eigen_summary(eigs) -> tuple[float, float, float, bool]:
    vals = np.atleast_1d(np.asarray(precision.to_float(eigs), dtype=np.float64))
    try:
        c = condition_number(eigs)
        indefinite = False
    except IndefiniteMatrixError:
        c = float("inf")
        indefinite = True
    return c, float(vals.max()), float(vals.min()), indefinite


def _collocation_points(bases: Sequence[Basis]) -> np.ndarray:
    return np.array([b.interp for b in bases if b.kind is Kind.MONOPOLE])


def solve_fit(problem: FitProblem, *, eigen: bool = True) -> FitResult:
    """Solve T q = A and collect the fit diagnostics.

    With ``eigen=False`` the Jacobi step is skipped and the condition
    number reported as NaN.
    """
    backend = problem.backend
    t, a = assemble(problem)
    if eigen:
        c, lmax, lmin, indefinite = _eigen_summary(jacobi_eigenvalues(t))
    else:
        c, lmax, lmin, indefinite = float("nan"), float("nan"), float("nan"), False
    try:
        q = householder_solve(t, a)
    except SingularSystemError as exc:
        raise FitError(
            f"singular normal equations at pivot {exc.pivot} "
            f"(lambda_max={lmax:.3e}, lambda_min={lmin:.3e}, C#={c:.3e})"
        ) from exc

    raw_c = None
    if problem.normalize and eigen:
        raw = [replace(b, norm_factor=1.0) for b in problem.bases]
        raw_c = _eigen_summary(jacobi_eigenvalues(SymMatrix(gram_block(raw, raw, backend), backend)))[0]

    fit_norm_sq = float(precision.to_float((q * a).sum()))

    pts = _collocation_points(problem.bases)
    if len(pts):
        phi = _evaluate(problem.bases, q, pts, backend, check_domain=False)
        fv = _probe_values(problem.probe, pts, backend)
        resid = np.asarray(precision.to_float(phi - fv), dtype=np.float64)
        colloc = float(np.max(np.abs(resid)))
        scale = float(np.max(np.abs(precision.to_float(fv))))
    else:
        colloc, scale = 0.0, 0.0

    grad_resid = _gradient_residual(problem, q) if any(b.kind is Kind.DIPOLE for b in problem.bases) else None

    mono = np.array([i for i, b in enumerate(problem.bases) if b.kind is Kind.MONOPOLE])
    qf = np.atleast_1d(np.asarray(precision.to_float(q), dtype=np.float64))
    if len(mono):
        strengths = qf[mono] * np.array([problem.bases[i].norm_factor for i in mono])
        mean = float(strengths.mean())
        std = float(strengths.std(ddof=1)) if len(mono) > 1 else 0.0
    else:
        mean = std = float("nan")

    return FitResult(
        bases=tuple(problem.bases),
        coefficients=q,
        precision=backend.name,
        condition_number=c,
        lambda_max=lmax,
        lambda_min=lmin,
        indefinite=indefinite,
        collocation_residual=colloc,
        gradient_residual=grad_resid,
        fit_norm_sq=fit_norm_sq,
        source_mean=mean,
        source_std=std,
        raw_condition_number=raw_c,
        probe_scale=scale,
    )


def _gradient_residual(problem: FitProblem, q) -> float:
    """Largest mismatch between grad phi and grad f along dipole directions."""
    from .oracle import basis_function, _dual_gradient

    worst = 0.0
    qf = np.asarray(precision.to_float(q), dtype=np.float64)
    fns = [basis_function(b) for b in problem.bases]

    def phi(x, y, z):
        total = x * 0.0
        for c, f in zip(qf, fns):
            total = total + c * f(x, y, z)
        return total

    grad_phi = _dual_gradient(phi)
    for b in problem.bases:
        if b.kind is not Kind.DIPOLE:
            continue
        p = b.interp
        gp = np.array([float(precision.to_float(g)) for g in grad_phi(*p)])
        gf = problem.probe.grad(p)
        worst = max(worst, abs(float(b.direction @ (gp - gf))))
    return worst


def _probe_values(probe: FieldProbe, pts: np.ndarray, backend: Backend):
    x = [backend.asarray(pts[:, i]) for i in range(3)]
    return probe.value(*x) + backend.zeros(len(pts))


def _evaluate(bases, q, pts, backend: Backend, check_domain: bool = True):
    m = basis_matrix(bases, pts, backend, check_domain=check_domain)
    return (m * q.reshape(1, -1)).sum(axis=1)


def evaluate_fit(result: FitResult, bases: Sequence[Basis] | None, x) -> float:
    """phi(x) = sum_k q_k b_k(x)."""
    bases = result.bases if bases is None else bases
    backend = get_backend(result.precision)
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    vals = np.atleast_1d(precision.to_float(_evaluate(bases, result.coefficients, pts, backend)))
    return float(vals[0]) if np.ndim(x) == 1 else np.asarray(vals, dtype=np.float64)


def fit_errors(result: FitResult, probe: FieldProbe, points) -> np.ndarray:
    """f - phi at each point, computed in the fit's working precision."""
    backend = get_backend(result.precision)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    diff = _probe_values(probe, pts, backend) - _evaluate(result.bases, result.coefficients, pts, backend)
    return np.atleast_1d(np.asarray(precision.to_float(diff), dtype=np.float64))


def fit_statistics(result: FitResult, bases: Sequence[Basis] | None, probe: FieldProbe, eval_points: PointConfig) -> ErrorStats:
    if bases is not None and tuple(bases) != result.bases:
        result = replace(result, bases=tuple(bases))
    return ErrorStats.from_errors(fit_errors(result, probe, eval_points.points), eval_points.radius)


def phi_at_origin(result: FitResult) -> float:
    """phi(0); equals the fit error there when f(0) = 0."""
    backend = get_backend(result.precision)
    return float(precision.to_float(_evaluate(result.bases, result.coefficients, np.zeros((1, 3)), backend)[0]))
