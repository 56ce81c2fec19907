"""Tests for damped and Anderson-accelerated fixed-point iteration."""

import numpy as np
import pytest

from src.models.config import SolverConfig
from src.models.trace import DEQTrace
from src.network.solvers import anderson, picard, relative_residual, solve
from src.numeric import SplitMix64
from src.utils.errors import SolverDivergenceError

METHODS = ["anderson", "picard"]


def _trace(cfg: SolverConfig) -> DEQTrace:
    return DEQTrace(solver=cfg.method, tol=cfg.tol)


def _contraction(seed: int, n: int = 8, lipschitz: float = 0.6):
    rng = SplitMix64(seed)
    a = rng.normal((n, n))
    a *= lipschitz / np.linalg.norm(a, ord=2)
    b = rng.normal(n)
    return lambda z: np.tanh(a @ z + b)


@pytest.mark.parametrize("method", METHODS)
def test_linear_scalar_contraction(method: str) -> None:
    """Test f(z) = 0.5z + 1 converges to 2."""
    cfg = SolverConfig(method=method, max_iter=200)
    trace = _trace(cfg)

    z, converged = solve(lambda z: 0.5 * z + 1.0, np.zeros(1), cfg, trace)

    assert converged and trace.converged
    assert z[0] == pytest.approx(2.0, abs=1e-4)
    assert relative_residual(z, 0.5 * z + 1.0) < cfg.tol


def test_anderson_solves_linear_scalar_in_few_steps() -> None:
    """Test one secant extrapolation lands on the fixed point of an affine map."""
    cfg = SolverConfig()
    trace = _trace(cfg)

    z, converged = anderson(lambda z: 0.5 * z + 1.0, np.zeros(1), cfg, trace)

    assert converged
    assert trace.iterations <= 4
    assert z[0] == pytest.approx(2.0)


@pytest.mark.parametrize("method", METHODS)
def test_cosine_fixed_point(method: str) -> None:
    """Test z = cos(z) is solved to the Dottie number."""
    cfg = SolverConfig(method=method, tol=1e-10, max_iter=300)

    z, converged = solve(np.cos, np.zeros(1), cfg, _trace(cfg))

    assert converged
    assert z[0] == pytest.approx(0.7390851332151607, abs=1e-6)


def test_zero_map_converges_immediately() -> None:
    """Test Z⁰ = 0 is accepted after one evaluation when f(0) = 0."""
    cfg = SolverConfig()
    trace = _trace(cfg)

    z, converged = solve(lambda z: 0.0 * z, np.zeros(5), cfg, trace)

    assert converged
    assert trace.iterations == 1
    np.testing.assert_array_equal(z, 0.0)


@pytest.mark.parametrize("method", METHODS)
def test_nan_raises_divergence_with_trace(method: str) -> None:
    """Test a NaN evaluation aborts and carries the partial trace."""
    cfg = SolverConfig(method=method)
    trace = _trace(cfg)
    calls = []

    def f(z: np.ndarray) -> np.ndarray:
        calls.append(1)
        return z + 1.0 if len(calls) < 3 else np.full_like(z, np.nan)

    with pytest.raises(SolverDivergenceError) as info:
        solve(f, np.zeros(2), cfg, trace)

    assert info.value.trace is trace
    assert trace.iterations == 2
    assert info.value.exit_code == 4


def test_unconverged_run_returns_best_iterate() -> None:
    """Test hitting max_iter reports non-convergence and the lowest-residual iterate."""
    cfg = SolverConfig(method="picard", max_iter=3)
    trace = _trace(cfg)
    f = _contraction(0)

    z, converged = picard(f, np.zeros(8), cfg, trace)

    assert not converged and not trace.converged
    assert trace.iterations == 3
    assert relative_residual(z, f(z)) == pytest.approx(min(trace.residuals))


def test_trace_invariants() -> None:
    """Test residual count equals iterations and convergence matches the last residual."""
    cfg = SolverConfig(max_iter=100)
    trace = _trace(cfg)

    solve(_contraction(1), np.zeros(8), cfg, trace)

    assert len(trace.residuals) == trace.iterations
    assert trace.converged == (trace.residuals[-1] < cfg.tol)
    assert trace.residuals[-1] < trace.residuals[0]


def test_solver_correctness_over_seeded_trials() -> None:
    """Test 100 random contractions all converge, with input-dependent iteration counts."""
    cfg = SolverConfig(max_iter=100)
    iterations = set()
    for seed in range(100):
        f = _contraction(seed)
        trace = _trace(cfg)

        z, converged = solve(f, np.zeros(8), cfg, trace)

        assert converged, f"seed {seed}: residuals {trace.residuals[-3:]}"
        assert relative_residual(z, f(z)) < cfg.tol
        iterations.add(trace.iterations)
    assert len(iterations) > 1


@pytest.mark.parametrize("seed", range(10))
def test_picard_and_anderson_agree(seed: int) -> None:
    """Test both solvers land within 10·tol of each other."""
    f = _contraction(seed)
    results = []
    for method in METHODS:
        cfg = SolverConfig(method=method, tol=1e-8, max_iter=500)
        z, converged = solve(f, np.zeros(8), cfg, _trace(cfg))
        assert converged
        results.append(z)

    z_a, z_p = results
    assert np.linalg.norm(z_a - z_p) / np.linalg.norm(z_a) < 10 * 1e-8


def test_adjoint_record_is_separate() -> None:
    """Test an explicit record list receives residuals instead of the trace."""
    cfg = SolverConfig()
    trace = _trace(cfg)

    solve(np.cos, np.zeros(1), cfg, trace, record=trace.adjoint_residuals)

    assert trace.residuals == []
    assert trace.adjoint_residuals
