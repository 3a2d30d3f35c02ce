import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csdeflect import sensing


def sylvester(n):
    """Dense orthonormal Sylvester-Hadamard matrix by Kronecker recursion."""
    H = np.array([[1.0]])
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    while H.shape[0] < n:
        H = np.kron(H, h2)
    return H / np.sqrt(n)


def dense_phi_ss(op):
    H = sylvester(op.N)
    return H[op.omega] * op.sigma[None, :]


@pytest.mark.parametrize("n", [2, 4, 64, 256, 1024])
def test_fwht_matches_dense_oracle(n):
    rng = np.random.default_rng(n)
    v = rng.standard_normal((n, 3))
    assert np.max(np.abs(sensing.fwht(v) - sylvester(n) @ v)) < 1e-10


def test_fwht_examples():
    assert np.allclose(sensing.fwht(np.eye(4)[0]), [0.5] * 4)
    v = np.random.default_rng(0).standard_normal(64)
    assert np.max(np.abs(sensing.fwht(sensing.fwht(v)) - v)) < 1e-12


@pytest.mark.parametrize("n", [0, 3, 12, 100])
def test_fwht_rejects_non_power_of_two(n):
    with pytest.raises(sensing.SensingError):
        sensing.fwht(np.ones(n))


def test_build_sensing_determinism_and_invariants():
    a = sensing.build_sensing(0, 64, 450)
    b = sensing.build_sensing(0, 64, 450)
    assert np.array_equal(a.sigma, b.sigma) and np.array_equal(a.omega, b.omega)
    assert len(np.unique(a.omega)) == 450
    assert a.sigma[0] == 1.0 and set(np.unique(a.sigma)) <= {-1.0, 1.0}
    full = sensing.build_sensing(0, 64, 4096)
    assert sorted(full.omega) == list(range(4096))
    assert abs(full.sigma.mean()) < 3 / np.sqrt(4096)


def test_omega_nested_across_m():
    small = sensing.build_sensing(5, 32, 100)
    big = sensing.build_sensing(5, 32, 700)
    assert np.array_equal(big.omega[:100], small.omega)
    assert np.array_equal(big.sigma, small.sigma)
    assert np.array_equal(big.subsample(100).omega, small.omega)


def test_plain_hadamard_has_unit_sigma():
    op = sensing.build_sensing(1, 16, 40, plain=True)
    assert np.all(op.sigma == 1.0)


@pytest.mark.parametrize("args", [(0, 10, 5), (0, 8, 65), (0, 8, 0)])
def test_build_sensing_errors(args):
    with pytest.raises(sensing.SensingError):
        sensing.build_sensing(*args)


def test_descriptor_round_trip():
    op = sensing.build_sensing(3, 16, 77, plain=True)
    again = sensing.SensingOperator.from_descriptor(op.descriptor())
    assert again == op and np.array_equal(again.omega, op.omega)


def test_apply_ss_matches_dense():
    op = sensing.build_sensing(2, 8, 16)
    s = np.random.default_rng(1).random(64)
    assert np.max(np.abs(sensing.apply_ss(op, s) - dense_phi_ss(op) @ s)) < 1e-10
    assert np.all(sensing.apply_ss(op, np.zeros(64)) == 0)


def test_adjoint_identity_random_pairs():
    op = sensing.build_sensing(4, 16, 100)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        s, y = rng.standard_normal(256), rng.standard_normal(100)
        lhs = sensing.apply_ss(op, s) @ y
        rhs = s @ sensing.adjoint_ss(op, y)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    assert worst < 1e-12


def test_full_sampling_orthonormal():
    op = sensing.build_sensing(0, 16, 256)
    s = np.random.default_rng(3).standard_normal(256)
    assert abs(np.linalg.norm(sensing.apply_ss(op, s)) / np.linalg.norm(s) - 1) < 1e-10
    assert np.allclose(sensing.adjoint_ss(op, sensing.apply_ss(op, s)), s, atol=1e-12)


def test_operator_norm_at_most_one():
    op = sensing.build_sensing(9, 16, 60)
    nrm = sensing.operator_norm(lambda x: sensing.apply_ss(op, x),
                                lambda y: sensing.adjoint_ss(op, y), op.N, iters=300)
    assert nrm <= 1 + 1e-6


def test_pattern_matrix_binary_and_dense_form():
    op = sensing.build_sensing(6, 8, 64)
    P = sensing.pattern_matrix(op)
    assert set(np.unique(P)) <= {0.0, 1.0}
    expected = 0.5 * (np.sqrt(64) * dense_phi_ss(op) + 1.0)
    assert np.max(np.abs(P - expected)) < 1e-12
    # all-ones spectrum, dense oracle
    ones = np.ones(64)
    assert np.allclose(sensing.apply_opt(op, ones), expected @ ones)


def test_adjoint_opt_is_transpose():
    op = sensing.build_sensing(7, 8, 30)
    P = sensing.pattern_matrix(op)
    y = np.random.default_rng(4).standard_normal(30)
    assert np.allclose(sensing.adjoint_opt(op, y), P.T @ y, atol=1e-12)


def test_debias_noiseless_identity():
    op = sensing.build_sensing(8, 16, 90)
    s = np.random.default_rng(5).random(256)
    z = sensing.debias(sensing.apply_opt(op, s), s.sum(), op.N)
    assert np.max(np.abs(z - sensing.apply_ss(op, s))) < 1e-12
    assert np.all(sensing.debias(np.zeros(5), 0.0, 256) == 0)


def test_debias_mean_offset_monte_carlo():
    # additive mean mu on both terms leaves (2 mu - mu) / sqrt(N) per entry
    op = sensing.build_sensing(1, 8, 20)
    s = np.random.default_rng(6).random(64)
    rng = np.random.default_rng(7)
    mu, draws = 3.0, 10_000
    y = sensing.apply_opt(op, s)[:, None] + rng.normal(mu, 1.0, (20, draws))
    y_on = s.sum() + rng.normal(mu, 1.0, draws)
    dev = (sensing.debias(y, y_on, 64) - sensing.apply_ss(op, s)[:, None]).mean()
    se = np.sqrt(5.0 / 64 / (20 * draws))
    assert abs(dev - mu / 8) < 4 * se


def test_invert_full_round_trip_and_dense():
    op = sensing.build_sensing(11, 64, 4096)
    s = np.random.default_rng(8).random(4096)
    assert np.max(np.abs(sensing.invert_full(op, sensing.apply_opt(op, s)) - s)) < 1e-9
    assert np.allclose(sensing.invert_full(op, sensing.apply_opt(op, np.ones(4096))), 1.0)
    small = sensing.build_sensing(2, 8, 64)
    inv = sensing.invert_full(small, np.eye(64))
    assert np.max(np.abs(inv @ sensing.pattern_matrix(small) - np.eye(64))) < 1e-10


def test_invert_full_errors():
    with pytest.raises(sensing.SensingError):
        sensing.invert_full(sensing.build_sensing(0, 8, 32), np.zeros(32))
    op = sensing.build_sensing(0, 8, 64)
    flipped = sensing.SensingOperator(op.seed, 8, 64, sigma=-op.sigma, omega=op.omega)
    with pytest.raises(sensing.SensingError):
        sensing.invert_full(flipped, np.zeros(64))


def test_dimension_mismatch():
    op = sensing.build_sensing(0, 8, 10)
    with pytest.raises(sensing.SensingError):
        sensing.apply_ss(op, np.zeros(63))
    with pytest.raises(sensing.SensingError):
        sensing.adjoint_ss(op, np.zeros(11))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), M=st.integers(1, 64),
       a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_apply_ss_linear(seed, M, a, b):
    op = sensing.build_sensing(seed, 8, M)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(64), rng.standard_normal(64)
    lhs = sensing.apply_ss(op, a * x + b * y)
    rhs = a * sensing.apply_ss(op, x) + b * sensing.apply_ss(op, y)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_batched_columns_match_single():
    op = sensing.build_sensing(3, 16, 50)
    S = np.random.default_rng(9).random((256, 4))
    block = sensing.apply_ss(op, S)
    for j in range(4):
        assert np.allclose(block[:, j], sensing.apply_ss(op, S[:, j]), atol=1e-13)
