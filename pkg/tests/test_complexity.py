import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convex_lse import complexity, errors, rng
from convex_lse.complexity import (
    ComplexityCurve,
    bracket_tmu,
    concentration_check,
    draws,
    estimate_curve,
    evaluate_M,
    risk_vs_tmu_check,
    sample_M,
    sample_t_star,
    solve_tmu,
    tail_bound,
)
from convex_lse.path import ProjectionPath
from convex_lse.search import golden_section_max, golden_section_min
from convex_lse.sets import Box, IsotonicCone, L1Ball, Subspace

from oracles import expected_chi, isotonic_M_sphere

# --- random streams ---------------------------------------------------------------


def test_rows_do_not_depend_on_split():
    whole = rng.gaussian_rows(5, 4, 10)
    parts = np.vstack([rng.gaussian_rows(5, 4, 3), rng.gaussian_rows(5, 4, 7, start=3)])
    np.testing.assert_array_equal(whole, parts)


def test_seeds_differ():
    assert not np.allclose(rng.gaussian_rows(1, 5, 2), rng.gaussian_rows(2, 5, 2))


def test_derived_seed_is_stable():
    assert rng.derived_seed(3, 10, 4) == rng.derived_seed(3, 10, 4)
    assert rng.derived_seed(3, 10, 4) != rng.derived_seed(3, 4, 10)


# --- the supremum M(t) ----------------------------------------------------------------


def test_subspace_M_is_linear_in_t():
    K = Subspace.random(12, 3, seed=0)
    z = np.random.default_rng(0).normal(size=12)
    pz = np.linalg.norm(K.basis.T @ z)
    for t in (0.1, 1.0, 5.0):
        assert sample_M(K, np.zeros(12), z, t) == pytest.approx(t * pz, rel=1e-9)


def test_isotonic_M_matches_spherical_grid():
    K = IsotonicCone(3)
    mu = np.array([0.0, 0.5, 1.0])
    gen = np.random.default_rng(4)
    for _ in range(4):
        z = gen.normal(size=3)
        for t in (0.3, 1.0, 2.0):
            got = sample_M(K, mu, z, t)
            ref = isotonic_M_sphere(z, mu, t, points=200)
            # the grid is feasible, so it can only under-estimate the supremum
            assert got >= ref - 1e-9
            assert got - ref <= 0.02 * (1 + abs(got))


def test_M_below_distance_is_minus_infinity():
    K = Box(np.zeros(2), np.ones(2))
    mu = np.array([3.0, 0.5])
    z = np.array([0.2, -0.1])
    assert sample_M(K, mu, z, 1.0) == -math.inf
    assert math.isfinite(sample_M(K, mu, z, 2.5))


def test_negative_radius_rejected():
    with pytest.raises(errors.NegativeRadius):
        sample_M(IsotonicCone(2), np.zeros(2), np.ones(2), -1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_M_nondecreasing_and_objective_concave(seed):
    K = L1Ball(6, 1.5)
    mu = np.array([0.5, -0.5, 0.0, 0.0, 0.2, 0.0])
    Z = rng.gaussian_rows(seed, 6, 4)
    grid = np.linspace(0.05, 4.0, 60)
    M, _ = evaluate_M(K, mu, Z, grid)
    assert np.all(np.diff(M, axis=1) >= -1e-8)
    F = M - grid**2 / 2
    second = F[:, :-2] - 2 * F[:, 1:-1] + F[:, 2:]
    assert np.all(second <= 1e-7)


def test_per_sample_argmax_is_projection_distance():
    K = IsotonicCone(8)
    mu = np.linspace(0, 1, 8)
    Z = rng.gaussian_rows(9, 8, 20)
    grid = np.arange(1, 600) * 1e-2
    M, path = evaluate_M(K, mu, Z, grid)
    F = M - grid**2 / 2
    for i, z in enumerate(Z):
        t_star = sample_t_star(K, mu, z).t_star
        assert abs(grid[np.argmax(F[i])] - t_star) <= 1e-2
        assert path.t_star[i] == pytest.approx(t_star, abs=1e-10)


def test_path_results_do_not_depend_on_threads():
    K = L1Ball(10, 2.0)
    mu = np.zeros(10)
    Z = draws(K, 300, 1)
    a = ProjectionPath(K, mu, Z, threads=1).values(1.3)
    b = ProjectionPath(K, mu, Z, threads=3).values(1.3)
    np.testing.assert_array_equal(a, b)


# --- curves ---------------------------------------------------------------------------


def test_curve_csv_round_trip():
    K = IsotonicCone(5)
    curve = estimate_curve(K, np.linspace(0, 1, 5), [0.5, 1.0, 2.0], 50, 0)
    back = ComplexityCurve.from_csv(curve.to_csv())
    np.testing.assert_array_equal(back.grid, curve.grid)
    np.testing.assert_array_equal(back.f_hat, curve.f_hat)
    np.testing.assert_array_equal(back.stderr, curve.stderr)


def test_curve_rejects_bad_grids():
    K = IsotonicCone(3)
    with pytest.raises(errors.EmptyGrid):
        estimate_curve(K, np.zeros(3), [], 10, 0)
    with pytest.raises(errors.ParameterOutOfRange):
        estimate_curve(K, np.zeros(3), [1.0, 0.5], 10, 0)


def test_default_grid_spans_to_four_root_n():
    g = complexity.default_grid(0.0, 100)
    assert g[0] == pytest.approx(1e-2) and g[-1] == pytest.approx(40.0)


def _curve(grid, f, se):
    grid = np.asarray(grid, float)
    return ComplexityCurve(np.zeros(1), grid, np.asarray(f, float), np.asarray(se, float),
                           np.asarray(f, float) + grid**2 / 2, 0.5, 100, 0)


def test_bracket_verdicts():
    c = _curve([1.0, 2.0, 3.0], [0.0, 1.0, 0.0], [0.01, 0.01, 0.01])
    assert bracket_tmu(c, 1.0, 2.0).kind == "lower"
    assert bracket_tmu(c, 2.0, 3.0).kind == "upper"
    noisy = _curve([1.0, 2.0], [0.0, 0.01], [1.0, 1.0])
    assert bracket_tmu(noisy, 1.0, 2.0).kind == "inconclusive"
    with pytest.raises(errors.PointsNotOnGrid):
        bracket_tmu(c, 1.5, 2.0)


# --- t_mu ----------------------------------------------------------------------------------


def test_tmu_singleton_is_zero():
    K = Box(np.ones(4), np.ones(4))
    est = solve_tmu(K, np.ones(4), 100, 0)
    assert est.t_mu == pytest.approx(0.0, abs=1e-3)


def test_tmu_subspace_small():
    K = Subspace.coordinate(40, 9)
    est = solve_tmu(K, np.zeros(40), 1000, 2, certify=True)
    assert est.t_mu == pytest.approx(expected_chi(9), rel=0.04)
    assert est.ci_low <= est.t_mu <= est.ci_high
    assert est.bracket["lower"]["kind"] == "lower"
    assert est.bracket["upper"]["kind"] == "upper"


def test_tmu_is_thread_independent():
    K = IsotonicCone(30)
    mu = np.linspace(0, 1, 30)
    a = solve_tmu(K, mu, 300, 5, threads=1)
    b = solve_tmu(K, mu, 300, 5, threads=4)
    assert a.to_dict() == b.to_dict()


def test_tmu_rejects_small_samples():
    with pytest.raises(errors.ParameterOutOfRange):
        solve_tmu(IsotonicCone(3), np.zeros(3), 1, 0)


# --- concentration and risk checks -----------------------------------------------------


def test_tail_bound_formula():
    assert tail_bound(0.0, 4.0) == pytest.approx(3.0)
    assert tail_bound(2.0, 4.0) == pytest.approx(3 * math.exp(-16 / (32 * 4)))


def test_concentration_rejects_nonpositive_tmu():
    with pytest.raises(errors.NonPositiveTmu):
        concentration_check(IsotonicCone(3), np.zeros(3), 0.0, 10, 0, [1.0])


def test_risk_check_subspace():
    K = Subspace.coordinate(50, 16)
    chk = risk_vs_tmu_check(K, np.zeros(50), expected_chi(16), 2000, 1)
    assert chk.inside
    assert chk.risk == pytest.approx(16, rel=0.1)


# --- search ------------------------------------------------------------------------


@given(st.floats(-5, 5), st.floats(0.1, 10))
def test_golden_section_max_quadratic(center, width):
    lo, hi = center - width, center + 2 * width
    x, fx, _ = golden_section_max(lambda t: -(t - center) ** 2, lo, hi, 1e-7)
    assert abs(x - center) <= 1e-6


def test_golden_section_max_boundary():
    x, _, _ = golden_section_max(lambda t: t, 0.0, 1.0, 1e-6)
    assert x == 1.0


def test_golden_section_min_vectorized():
    centers = np.array([0.2, 0.5, 0.9])
    x = golden_section_min(lambda a: (a - centers) ** 2, np.zeros(3), np.ones(3))
    np.testing.assert_allclose(x, centers, atol=1e-7)
