import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csdeflect import sensing, simulator, solver, wavelet


@settings(max_examples=40, deadline=None)
@given(u=st.floats(-10, 10), gamma=st.floats(0, 5))
def test_prox_l1_matches_grid_search(u, gamma):
    grid = np.linspace(-12, 12, 240_001)
    brute = grid[np.argmin(gamma * np.abs(grid) + 0.5 * (grid - u) ** 2)]
    assert abs(solver.prox_l1(u, gamma) - brute) < 1e-4


def test_prox_l1_examples():
    assert np.allclose(solver.prox_l1([3.0, -0.5, 1.0], 1.0), [2.0, 0.0, 0.0])
    assert np.array_equal(solver.prox_l1([1.5, -2.0], 0.0), [1.5, -2.0])
    with pytest.raises(ValueError):
        solver.prox_l1(1.0, -1.0)


def test_proj_l2ball():
    c = np.array([1.0, 1.0])
    assert np.allclose(solver.proj_l2ball(np.array([4.0, 5.0]), c, 2.5), [2.5, 3.0])
    inside = np.array([1.5, 1.2])
    assert np.array_equal(solver.proj_l2ball(inside, c, 1.0), inside)
    assert np.array_equal(solver.proj_l2ball(np.array([3.0, 1.0]), c, 0.0), c)
    with pytest.raises(ValueError):
        solver.proj_l2ball(c, c, -1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), radius=st.floats(0.01, 3))
def test_proj_l2ball_variational_inequality(seed, radius):
    rng = np.random.default_rng(seed)
    u, c = rng.standard_normal(5) * 3, rng.standard_normal(5)
    p = solver.proj_l2ball(u, c, radius)
    assert np.linalg.norm(p - c) <= radius * (1 + 1e-12)
    for _ in range(5):
        w = c + rng.standard_normal(5)
        w = c + (w - c) * min(1.0, radius / np.linalg.norm(w - c))
        assert (u - p) @ (w - p) <= 1e-9


def test_output_snr():
    s = np.ones(4)
    assert solver.output_snr(s, s) == float("inf")
    assert abs(solver.output_snr(s, 0.9 * s) - 20.0) < 1e-12
    with pytest.raises(ValueError):
        solver.output_snr(np.zeros(4), s)


def small_problem(M, seed=0, noise=0.0):
    n = 16
    op = sensing.build_sensing(seed, n, M)
    s = simulator.gaussian_spots([(7.3, 9.1)], 1.0, 2.0, n)
    z = sensing.apply_ss(op, s.ravel())
    if noise:
        z = z + np.random.default_rng(seed).normal(0, noise, M)
    return op, s, z


def test_noiseless_full_sampling_exact():
    op, s, z = small_problem(256)
    res = solver.reconstruct(z, op, cfg=solver.SolverConfig(rel_tol=1e-8))
    assert solver.output_snr(s, res.spectrum) > 60


def test_feasibility_and_nonnegativity():
    op, s, z = small_problem(96, noise=0.02)
    eps = 1.05 * 0.02 * np.sqrt(96) * np.sqrt(256)
    res = solver.reconstruct(z, op, epsilon=eps)
    assert res.spectrum.min() >= 0
    assert res.residual <= eps * (1 + 1e-3)
    assert res.converged and res.metrics()["converged"]


def test_zero_solution_when_ball_contains_origin():
    op, s, z = small_problem(64)
    res = solver.reconstruct(z, op, epsilon=1e6)
    assert np.all(res.spectrum == 0) and res.iterations == 0


def test_bias_shifts_center():
    op, s, z = small_problem(128)
    b = np.random.default_rng(3).normal(size=128)
    a = solver.reconstruct(z, op).spectrum
    c = solver.reconstruct(z + b / np.sqrt(op.N), op, b=b).spectrum
    assert np.max(np.abs(a - c)) < 1e-6


def test_scale_equivariance():
    op, s, z = small_problem(100, noise=0.01)
    eps = 0.5
    a = solver.reconstruct(z, op, epsilon=eps).spectrum
    c = solver.reconstruct(7.0 * z, op, epsilon=7.0 * eps).spectrum
    assert np.max(np.abs(7.0 * a - c)) < 1e-8 * np.abs(c).max() + 1e-12


def test_unconverged_warns():
    op, s, z = small_problem(64)
    with pytest.warns(RuntimeWarning):
        res = solver.reconstruct(z, op, cfg=solver.SolverConfig(max_iters=3, min_iters=1))
    assert not res.converged


def test_input_validation():
    op, s, z = small_problem(64)
    with pytest.raises(sensing.SensingError):
        solver.reconstruct(z[:-1], op)
    with pytest.raises(ValueError):
        solver.reconstruct(z, op, epsilon=-1)


def test_stacked_norm():
    op = sensing.build_sensing(0, 16, 64)
    L = solver.stacked_norm(op, wavelet.FrameConfig())
    # rows of Phi_ss are orthonormal and the frame is tight: ||K||^2 = 2
    assert abs(L - np.sqrt(2)) < 1e-6


def test_objective_matches_frame_l1():
    s = np.random.default_rng(0).random((16, 16))
    assert abs(solver.objective(s) - np.abs(wavelet.analysis(s)).sum()) < 1e-12


def test_fidelity_residual_instrument_scale():
    op, s, z = small_problem(50)
    b = np.ones(50)
    r = solver.fidelity_residual(z + b / 16.0, op, b, s)
    assert r < 1e-10
    assert abs(solver.fidelity_residual(z, op, np.zeros(50), np.zeros(256))
               - 16.0 * np.linalg.norm(z)) < 1e-9


def test_warm_start_does_not_change_solution():
    op, s, z = small_problem(80, noise=0.01)
    eps = 0.01 * np.sqrt(80) * 16
    cfg = solver.SolverConfig(rel_tol=1e-5)
    a = solver.reconstruct(z, op, epsilon=eps, cfg=cfg)
    c = solver.reconstruct(z, op, epsilon=eps, cfg=cfg, x0=a.spectrum)
    assert abs(a.objective - c.objective) < 1e-4 * a.objective
