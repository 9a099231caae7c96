import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from didacks.fit import (
    ErrorStats,
    FitError,
    FitProblem,
    assemble,
    evaluate_fit,
    fit_statistics,
    make_bases,
    phi_at_origin,
    solve_fit,
)
from didacks.geometry import ring_grid
from didacks.kernel import Basis, Geometry, point_bases
from didacks.oracle import check_identity, surface_ip_II
from didacks.oracle import test_function as make_function
from didacks.precision import to_float

I = Geometry.INTERIOR
F1, F2 = make_function("F1"), make_function("F2")
C_P2 = ring_grid(36, 1.0)


def fit(grid_radius, f=F1, n_theta=8, precision="double", **kw):
    bases = make_bases([ring_grid(n_theta, grid_radius)], I, **kw)
    problem = FitProblem(bases, f.probe(), precision=precision)
    return problem, solve_fit(problem)


def test_assemble_single_monopole():
    problem = FitProblem([Basis.monopole(I, interp=(0, 0, 0.5))], F1.probe())
    t, a = assemble(problem)
    assert t.to_float()[0, 0] == pytest.approx(1 / 3, rel=1e-15)
    assert a[0] == pytest.approx(-0.125, rel=1e-15)


def test_constant_only_fit():
    problem = FitProblem([Basis.constant()], F1.probe())
    t, a = assemble(problem)
    assert t.to_float()[0, 0] == 1.0 and a[0] == 0.0
    result = solve_fit(problem)
    assert result.coefficients_float.tolist() == [0.0]
    assert evaluate_fit(result, None, (0.2, 0.3, 0.1)) == 0.0


def test_exact_point_source_recovery():
    f = make_function("point_source", q=2.5, source=(0, 0, 2))
    b = Basis.monopole(I, source=(0, 0, 2))
    result = solve_fit(FitProblem([b], f.probe()))
    assert result.coefficients_float[0] == pytest.approx(2.5, rel=1e-12)
    assert result.collocation_residual <= 1e-15
    assert evaluate_fit(result, None, (0, 0, 0)) == pytest.approx(1.25, rel=1e-15)
    stats = fit_statistics(result, None, f.probe(), C_P2)
    assert stats.max_magnitude <= 1e-14


def test_single_basis_evaluation():
    b = Basis.monopole(I, source=(0, 0, 2))
    result = solve_fit(FitProblem([b], make_function("point_source", q=1.0, source=(0, 0, 2)).probe()))
    assert evaluate_fit(result, None, np.zeros(3)) == pytest.approx(0.5)
    zero = solve_fit(FitProblem([b], make_function("constant", value=0.0).probe()))
    assert evaluate_fit(zero, None, np.zeros(3)) == 0.0


# frozen from the double-precision runs of the C_P1 configurations
FROZEN = {
    # (R_P, f): (C#, q std, std R_E=1, max R_E=1, std R_E=1/2, max R_E=1/2)
    (0.75, "F1"): (660.9368439048916, 0.09112972044089301, 0.010027949832186453, 0.03140469564780812,
                   0.00025943735102162334, 0.0004964247081153672),
    (0.5, "F1"): (494386.5429637681, 0.31018980216688974, 0.00036147128552578795, 0.0010285823188206922,
                  1.3148352253773823e-06, 2.933119971543219e-06),
    (0.75, "F2"): (660.9368439048916, 0.25267258877865906, 0.05193029951187303, 0.13140929445926686,
                   0.000826626897224117, 0.001271268075163312),
    (0.5, "F2"): (494386.5429637681, 2.6741098944290744, 0.009302142435654543, 0.03710706077754633,
                  3.0348031958330345e-05, 5.8657228813596696e-05),
}


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_frozen_double_cases(key):
    r_p, name = key
    f = make_function(name)
    _, result = fit(r_p, f)
    c, qstd, s1, m1, s2, m2 = FROZEN[key]
    assert result.condition_number == pytest.approx(c, rel=1e-8)
    assert result.source_std == pytest.approx(qstd, rel=1e-8)
    st1 = fit_statistics(result, None, f.probe(), ring_grid(36, 1.0))
    st2 = fit_statistics(result, None, f.probe(), ring_grid(36, 0.5))
    assert (st1.std, st1.max_magnitude) == pytest.approx((s1, m1), rel=1e-7)
    assert (st2.std, st2.max_magnitude) == pytest.approx((s2, m2), rel=1e-6)
    assert result.collocation_residual <= 1e-8
    assert result.collocation_residual <= result.collocation_bound()


def test_phi_at_origin_case1():
    _, result = fit(0.75)
    assert phi_at_origin(result) == pytest.approx(7.54988766846626e-05, rel=1e-7)


def test_pythagorean_and_least_norm():
    bases = make_bases([ring_grid(8, 0.75)], I)
    report = check_identity("pythagorean", F1, basis=bases)
    assert report.passed, report
    result = solve_fit(FitProblem(bases, F1.probe()), eigen=False)
    norm_f = surface_ip_II(F1, F1)
    assert 0.0 <= result.fit_norm_sq <= norm_f


def test_nested_subsets_never_increase_residual_norm():
    pts = ring_grid(8, 0.75).points
    norm_f = surface_ip_II(F2, F2)
    previous = np.inf
    for n in (5, 12, 25, 40, 58):
        result = solve_fit(FitProblem(point_bases(pts[:n], I), F2.probe()), eigen=False)
        phi_sq = norm_f - result.fit_norm_sq
        assert phi_sq <= previous + 1e-12
        previous = phi_sq


def test_argmin_stationarity():
    problem, result = fit(0.75, F2)
    t, a = assemble(problem)
    tf, af = t.to_float(), np.asarray(a)
    q = result.coefficients_float
    r = tf @ q - af
    for k in range(len(q)):
        delta = 1e-3 * abs(q[k]) + 1e-9
        for sign in (1.0, -1.0):
            assert 2 * sign * delta * r[k] + delta * delta * tf[k, k] >= 0.0


def test_collocation_with_constant_and_dipoles():
    _, result = fit(0.5, make_function("F3"), constant=True)
    assert result.collocation_residual <= result.collocation_bound()
    _, result = fit(0.75, F2, n_theta=5, dipoles=True)
    assert result.gradient_residual is not None
    assert result.gradient_residual <= 1e-8
    assert result.collocation_residual <= 1e-8


def test_normalized_fit_matches_raw_fit_values():
    bases = make_bases([ring_grid(8, 0.5)], I)
    raw = solve_fit(FitProblem(bases, F1.probe()))
    norm = solve_fit(FitProblem(bases, F1.probe(), normalize=True))
    np.testing.assert_allclose(norm.strengths, raw.strengths, rtol=1e-7, atol=1e-12)
    assert norm.raw_condition_number == pytest.approx(raw.condition_number, rel=1e-8)
    assert norm.condition_number < raw.condition_number


def test_extended_fit_matches_double_at_moderate_condition():
    _, d = fit(0.75)
    _, e = fit(0.75, precision="extended")
    assert e.precision == "extended"
    np.testing.assert_allclose(e.coefficients_float, d.coefficients_float, rtol=1e-10, atol=1e-13)
    assert e.collocation_residual < 1e-25


def test_problem_validation():
    with pytest.raises(ValueError, match="coincide"):
        FitProblem([Basis.monopole(I, interp=(0, 0, 0.5))] * 2, F1.probe())
    with pytest.raises(ValueError, match="geometry"):
        FitProblem([Basis.monopole(I, interp=(0, 0, 0.5)), Basis.monopole("exterior_I", interp=(0, 0, 2))], F1.probe())
    with pytest.raises(ValueError, match="at least one"):
        FitProblem([], F1.probe())
    with pytest.raises(ValueError, match="precision"):
        FitProblem([Basis.constant()], F1.probe(), precision="single")


def test_singular_system_reports_fit_error(monkeypatch):
    import didacks.fit as fit_mod
    from didacks.linalg import SingularSystemError

    def boom(t, a):
        raise SingularSystemError(3)

    monkeypatch.setattr(fit_mod, "householder_solve", boom)
    with pytest.raises(FitError, match="pivot 3"):
        solve_fit(FitProblem([Basis.constant()], F1.probe()))


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
def test_error_stats_invariants(errors):
    s = ErrorStats.from_errors(errors, 1.0)
    assert s.rms**2 == pytest.approx(s.std**2 + s.mean**2, rel=1e-10, abs=1e-300)
    assert s.max_magnitude >= s.rms * (1 - 1e-12)
    assert s.n_points == len(errors)


def test_error_stats_empty_and_relative():
    with pytest.raises(ValueError):
        ErrorStats.from_errors([], 1.0)
    s = ErrorStats.from_errors([1.0, -1.0], 1.0, reference=[2.0, 2.0])
    assert s.relative_rms == 0.5 and s.mean == 0.0 and s.std == 1.0
    assert np.isnan(ErrorStats.from_errors([1.0], 1.0).relative_rms)


def test_working_precision_evaluation_keeps_extended_digits():
    _, e = fit(0.1, precision="extended")
    stats = fit_statistics(e, None, F1.probe(), ring_grid(36, 0.25))
    assert stats.std < 1e-12
    assert float(to_float(e.coefficients[0])) == e.coefficients_float[0]
