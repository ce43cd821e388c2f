import numpy as np
import pytest

from convex_lse import errors
from convex_lse.estimation import LSE, CoordinateMean, Identity, apply, estimate_risk, squared_errors
from convex_lse.experiments import (
    SweepReport,
    counterexample_risk,
    fit_loglog_slope,
    isotonic_sweep,
    lasso_sweep,
    rademacher_design,
    subspace_sweep,
)
from convex_lse.sets import IsotonicCone, Subspace


def test_lse_applies_projection():
    np.testing.assert_allclose(apply(LSE(IsotonicCone(2)), [2.0, 1.0]), [1.5, 1.5])


def test_coordinate_mean():
    np.testing.assert_allclose(apply(CoordinateMean(), [1.0, 2.0, 6.0]), [3.0, 3.0, 3.0])


def test_identity_risk_is_dimension():
    r = estimate_risk(Identity(), np.zeros(20), 4000, 0)
    assert abs(r.mean_sq_error - 20) <= 3 * r.stderr + 0.5


def test_coordinate_mean_risk_at_constant():
    r = estimate_risk(CoordinateMean(), np.full(30, 2.0), 4000, 1)
    assert abs(r.mean_sq_error - 1.0) <= 4 * r.stderr


def test_subspace_lse_risk_is_rank():
    r = estimate_risk(LSE(Subspace.coordinate(40, 7)), np.zeros(40), 4000, 2)
    assert abs(r.mean_sq_error - 7) <= 4 * r.stderr


def test_risk_reuses_the_same_draws():
    a = squared_errors(Identity(), np.zeros(5), 30, 9)
    b = squared_errors(Identity(), np.zeros(5), 30, 9, chunk=7)
    np.testing.assert_array_equal(a, b)


def test_estimator_dimension_checked():
    with pytest.raises(errors.DimensionMismatch):
        apply(LSE(IsotonicCone(3)), [1.0, 2.0])


def test_loglog_slope_exact_power_law():
    xs = np.array([1.0, 2.0, 4.0, 8.0])
    slope, se = fit_loglog_slope(xs, 3 * xs**0.25)
    assert slope == pytest.approx(0.25) and se == pytest.approx(0.0, abs=1e-12)


def test_loglog_slope_errors():
    with pytest.raises(errors.TooFewPoints):
        fit_loglog_slope([1, 2], [1, 2])
    with pytest.raises(errors.NonPositiveValue):
        fit_loglog_slope([1, 2, 3], [1, 0, 2])


def test_rademacher_design_normalized():
    X = rademacher_design(32, 16, 0)
    np.testing.assert_allclose((X * X).sum(0) / 32, 1.0)
    np.testing.assert_array_equal(X, rademacher_design(32, 16, 0))


def test_lasso_sweep_rejects_unnormalized_design():
    def bad(n, p, seed):
        return 2.0 * rademacher_design(n, p, seed)

    with pytest.raises(errors.BadDesign):
        lasso_sweep([16, 32, 64], design=bad, delta=1.0, samples=20)


def test_isotonic_sweep_rejects_decreasing_truth():
    with pytest.raises(errors.NonMonotoneTruth):
        isotonic_sweep([8, 16, 32], mu_spec=lambda n: -np.arange(n, dtype=float), samples=20)


def test_subspace_sweep_tracks_root_p():
    rep = subspace_sweep([4, 16, 64], 128, samples=300, seed=1)
    assert rep.slope == pytest.approx(0.5, abs=0.05)


def test_report_serialization():
    rep = counterexample_risk([16, 64, 256], samples=50, seed=0)
    assert isinstance(rep, SweepReport)
    assert "wall_time" not in rep.to_dict()
    assert "wall_time" in rep.to_dict(timing=True)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,param_json,t_mu_hat,ci_low,ci_high,risk,risk_stderr"
    assert len(lines) == 4
    assert rep.to_json() == counterexample_risk([16, 64, 256], samples=50, seed=0).to_json()
