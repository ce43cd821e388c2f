"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from convex_lse import rng  # noqa: E402
from convex_lse.cli import main as cli_main  # noqa: E402
from convex_lse.complexity import (  # noqa: E402
    concentration_check,
    draws,
    evaluate_M,
    sample_t_star,
    solve_tmu,
)
from convex_lse.estimation import LSE, estimate_risk  # noqa: E402
from convex_lse.experiments import (  # noqa: E402
    counterexample_risk,
    isotonic_sweep,
    lasso_sweep,
)
from convex_lse.sets import (  # noqa: E402
    Box,
    CounterexampleSet,
    IsotonicCone,
    L1Ball,
    LassoImage,
    Subspace,
)
from oracles import expected_chi, isotonic_oracle  # noqa: E402

SEED = 0
RESULTS = {}

# tolerances and budgets, one block per criterion
C1_TOL, C1_PAVA_TOL, C1_PAIRS, C1_BUDGET = 1e-8, 1e-10, 1000, 30.0
C2_DRAWS, C2_N, C2_STEP, C2_BUDGET = 200, 20, 1e-2, 120.0
C3_N, C3_P, C3_SAMPLES, C3_REL, C3_SE, C3_BUDGET = 100, 25, 2000, 0.03, 3.0, 60.0
C4_N, C4_P, C4_SAMPLES, C4_X, C4_SE, C4_BUDGET = 200, 100, 10_000, (1.0, 2.0, 3.0), 3.0, 120.0
C5_NS, C5_SAMPLES, C5_WINDOW, C5_BUDGET = [64 * 2**k for k in range(7)], 400, (0.10, 0.23), 600.0
C6_NS, C6_SAMPLES, C6_BUDGET = [128 * 2**k for k in range(5)], 100, 900.0
C6_WINDOW_POS, C6_RATIO_MAX, C6_WINDOW_NEG = (0.17, 0.33), 3.0, (0.42, 0.58)
C7_NS, C7_SAMPLES, C7_MEAN_RISK, C7_SE, C7_WINDOW, C7_BUDGET = [256, 1024, 4096], 400, 5.0, 3.0, (0.35, 0.65), 300.0


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    RESULTS[number] = line
    print(line)
    return ok


# --- 1. projection correctness ----------------------------------------------------


def _projection_sets(gen):
    return [
        IsotonicCone(10),
        L1Ball(10, 2.0),
        CounterexampleSet(16),
        Box(-np.ones(10), np.linspace(0.0, 3.0, 10)),
        Subspace.random(10, 4, seed=SEED),
        LassoImage(gen.choice([-1.0, 1.0], size=(12, 6)), 1.5),
    ]


def _projection_worst(K, gen):
    X = gen.normal(scale=3.0, size=(C1_PAIRS, K.dim))
    Y = gen.normal(scale=3.0, size=(C1_PAIRS, K.dim))
    PX, PY = K.project_many(X).points, K.project_many(Y).points
    contraction = np.max(np.linalg.norm(PX - PY, axis=1) - np.linalg.norm(X - Y, axis=1))
    idempotence = np.max(np.abs(K.project_many(PX).points - PX))
    members = np.vstack([K.sample(gen, 200), PY])
    # <x - P x, v - P x> <= 0 for every member v
    obtuse = max(float(np.max((members - px) @ (x - px))) for x, px in zip(X, PX))
    return contraction, idempotence, obtuse


def test_criterion_1_projection_correctness():
    started = time.perf_counter()
    gen = np.random.default_rng(SEED)
    worst = {}
    for K in _projection_sets(gen):
        worst[K.kind] = _projection_worst(K, gen)
    pava = 0.0
    for _ in range(C1_PAIRS):
        n = int(gen.integers(1, 9))
        y = gen.normal(scale=2.0, size=n)
        if gen.uniform() < 0.3:
            y = np.round(y)  # ties exercise block merging
        pava = max(pava, float(np.max(np.abs(IsotonicCone(n).project(y).point - isotonic_oracle(y)))))
    elapsed = time.perf_counter() - started
    props_ok = all(max(v) <= C1_TOL for v in worst.values())
    ok = props_ok and pava <= C1_PAVA_TOL and elapsed < C1_BUDGET
    worst_kind = max(worst, key=lambda k: max(worst[k]))
    detail = (
        f"worst property residual {max(worst[worst_kind]):.2e} ({worst_kind}) <= {C1_TOL:g}; "
        f"PAVA vs oracle {pava:.1e} <= {C1_PAVA_TOL:g}; {elapsed:.1f}s < {C1_BUDGET:g}s"
    )
    assert report(1, ok, detail), detail


# --- 2. argmax of the per-draw objective is the projection distance ------------


def _argmax_mismatch(K, mu):
    Z = rng.gaussian_rows(SEED, K.dim, C2_DRAWS)
    t_star = np.array([sample_t_star(K, mu, z).t_star for z in Z])
    grid = np.arange(0.0, t_star.max() + 1.0, C2_STEP)
    M, _ = evaluate_M(K, mu, Z, grid)
    arg = grid[np.argmax(M - grid**2 / 2, axis=1)]
    return float(np.max(np.abs(arg - t_star)))


def test_criterion_2_argmax_equals_error():
    started = time.perf_counter()
    iso = _argmax_mismatch(IsotonicCone(C2_N), np.linspace(0.0, 1.0, C2_N))
    mu = np.zeros(C2_N)
    mu[:2] = [0.5, -0.5]
    l1 = _argmax_mismatch(L1Ball(C2_N, 2.0), mu)
    elapsed = time.perf_counter() - started
    # "within one grid step" allows the argmax to sit in a neighbouring cell
    ok = iso <= C2_STEP and l1 <= C2_STEP and elapsed < C2_BUDGET
    detail = (
        f"max |grid argmax - t*|: isotonic {iso:.4f}, l1ball {l1:.4f} <= {C2_STEP:g}; "
        f"{elapsed:.1f}s < {C2_BUDGET:g}s"
    )
    assert report(2, ok, detail), detail


# --- 3. subspace calibration ----------------------------------------------------------


def test_criterion_3_subspace_calibration():
    started = time.perf_counter()
    K = Subspace.random(C3_N, C3_P, seed=SEED)
    mu = np.zeros(C3_N)
    target = expected_chi(C3_P)
    est = solve_tmu(K, mu, C3_SAMPLES, SEED)
    risk = estimate_risk(LSE(K), mu, C3_SAMPLES, SEED)
    elapsed = time.perf_counter() - started
    rel = abs(est.t_mu - target) / target
    z = abs(risk.mean_sq_error - C3_P) / risk.stderr
    ok = rel <= C3_REL and z <= C3_SE and elapsed < C3_BUDGET
    detail = (
        f"t_mu {est.t_mu:.4f} vs {target:.4f} (rel {rel:.4f} <= {C3_REL}); "
        f"risk {risk.mean_sq_error:.3f} vs {C3_P} ({z:.2f} se <= {C3_SE}); {elapsed:.1f}s < {C3_BUDGET:g}s"
    )
    assert report(3, ok, detail), detail


# --- 4. concentration -------------------------------------------------------------------


def test_criterion_4_concentration():
    started = time.perf_counter()
    K = Subspace.random(C4_N, C4_P, seed=SEED)
    mu = np.zeros(C4_N)
    # t_mu comes from an independent run so the tail check is not fitted to its own draws
    t_mu = solve_tmu(K, mu, 2000, SEED + 1).t_mu
    table = concentration_check(K, mu, t_mu, C4_SAMPLES, SEED, C4_X)
    elapsed = time.perf_counter() - started
    rows_ok = all(r.empirical <= r.bound + C4_SE * r.stderr for r in table.rows)
    ok = rows_ok and elapsed < C4_BUDGET
    cells = ", ".join(f"x={r.x:g}: {r.empirical:.4f} <= {r.bound:.4f}+3se" for r in table.rows)
    detail = f"t_mu {t_mu:.3f}; {cells}; {elapsed:.1f}s < {C4_BUDGET:g}s"
    assert report(4, ok, detail), detail


# --- 5. isotonic rate ----------------------------------------------------------------------


def test_criterion_5_isotonic_rate():
    started = time.perf_counter()
    rep = isotonic_sweep(C5_NS, "linear", samples=C5_SAMPLES, seed=SEED)
    elapsed = time.perf_counter() - started
    lo, hi = C5_WINDOW
    ok = lo <= rep.slope <= hi and elapsed < C5_BUDGET
    detail = f"slope {rep.slope:.4f} +/- {rep.slope_stderr:.4f} in [{lo}, {hi}]; {elapsed:.1f}s < {C5_BUDGET:g}s"
    assert report(5, ok, detail), detail


# --- 6. lasso phase transition -------------------------------------------------------


def test_criterion_6_lasso_regimes():
    started = time.perf_counter()
    kw = dict(beta=(1.0, 1.0), samples=C6_SAMPLES, seed=SEED)
    pos = lasso_sweep(C6_NS, delta=1.0, **kw)
    zero = lasso_sweep(C6_NS, delta=0.0, **kw)
    neg = lasso_sweep(C6_NS, delta=-1.0, **kw)
    elapsed = time.perf_counter() - started
    ratio = np.array([r["t_mu_hat"] / math.sqrt(math.log(r["n"])) for r in zero.rows])
    spread = float(ratio.max() / ratio.min())
    ok = (
        C6_WINDOW_POS[0] <= pos.slope <= C6_WINDOW_POS[1]
        and spread <= C6_RATIO_MAX
        and C6_WINDOW_NEG[0] <= neg.slope <= C6_WINDOW_NEG[1]
        and elapsed < C6_BUDGET
    )
    detail = (
        f"delta=1 slope {pos.slope:.3f} in {list(C6_WINDOW_POS)}; "
        f"delta=0 max/min t/sqrt(log n) {spread:.3f} <= {C6_RATIO_MAX}; "
        f"delta=-1 slope {neg.slope:.3f} in {list(C6_WINDOW_NEG)}; {elapsed:.1f}s < {C6_BUDGET:g}s"
    )
    assert report(6, ok, detail), detail


# --- 7. counterexample ------------------------------------------------------------------


def test_criterion_7_counterexample():
    started = time.perf_counter()
    rep = counterexample_risk(C7_NS, samples=C7_SAMPLES, seed=SEED)
    elapsed = time.perf_counter() - started
    means_ok = all(
        r["params"]["mean_risk"] <= C7_MEAN_RISK + C7_SE * r["params"]["mean_risk_stderr"] for r in rep.rows
    )
    lo, hi = C7_WINDOW
    ok = means_ok and lo <= rep.slope <= hi and elapsed < C7_BUDGET
    worst = max(r["params"]["mean_risk"] for r in rep.rows)
    detail = (
        f"coordinate-mean risk max {worst:.3f} <= {C7_MEAN_RISK}+3se; "
        f"LSE risk slope {rep.slope:.3f} in [{lo}, {hi}]; {elapsed:.1f}s < {C7_BUDGET:g}s"
    )
    assert report(7, ok, detail), detail


# --- 8. determinism across thread counts ----------------------------------------------

C8_COMMANDS = {
    "project": ["project", "--set", '{"kind": "isotonic", "n": 4}', "--y", "3,1,2,0"],
    "curve": ["curve", "--set", '{"kind": "l1ball", "n": 30, "L": 2}', "--samples", "500",
              "--grid", "0.1:5:12", "--seed", "3"],
    "tmu": ["tmu", "--set", '{"kind": "isotonic", "n": 60}', "--mu", "ramp", "--samples", "500",
            "--seed", "3", "--certify"],
    "risk": ["risk", "--set", '{"kind": "counterexample", "n": 128}', "--samples", "500", "--seed", "3"],
    "experiment": ["experiment", "--name", "isotonic", "--n-list", "32,64,128", "--samples", "100",
                   "--seed", "3", "--plot"],
}


def test_criterion_8_determinism(tmp_path, capsys):
    differing = []
    for name, cmd in C8_COMMANDS.items():
        outs = []
        for threads in ("1", "4"):
            path = tmp_path / f"{name}-{threads}.out"
            code = cli_main([*cmd, "--threads", threads, "--out", str(path)])
            produced = sorted(tmp_path.glob(f"{name}-{threads}.*"))
            outs.append((code, [p.read_bytes() for p in produced]))
        if outs[0] != outs[1] or outs[0][0] != 0:
            differing.append(name)
    capsys.readouterr()
    ok = not differing
    detail = f"{len(C8_COMMANDS)} commands, threads 1 vs 4; differing: {differing or 'none'}"
    assert report(8, ok, detail), detail


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
