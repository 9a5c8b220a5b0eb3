import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analog_ia.channel import crandn, stream_rng
from analog_ia.config import ConfigError, NetworkConfig
from analog_ia.ia import IaConvergenceError, IaSolution, SolverOptions, combiners, random_unitary, solve_ia
from analog_ia.rates import (
    RATE_COLUMNS,
    InsufficientDataError,
    RateReport,
    bound_constant,
    empirical_rate_loss,
    multiplexing_gain_fit,
    rate_loss_bound,
    stream_powers,
    sum_rate_joint,
    sum_rate_zf,
)

FIG4 = NetworkConfig(K=3, Nt=5, Nr=4, d=2, P=100.0, Pf=50.0)


def aligned(seed=0):
    H = crandn(stream_rng(seed, 0, 0), 3, 3, 4, 5)
    return H, solve_ia(H, (2, 2, 2), SolverOptions(init_seed=seed))


def test_scalar_awgn_rate():
    H = np.ones((1, 1, 1, 1), complex)
    sol = IaSolution(F=(np.ones((1, 1), complex),), W=(np.ones((1, 1), complex),))
    assert sum_rate_zf(H, sol, 10.0, 1.0).total == pytest.approx(math.log2(11))
    assert sum_rate_joint(H, sol.F, 10.0, 1.0) == pytest.approx(math.log2(11))


def test_perfect_csi_has_no_leakage():
    H, sol = aligned()
    P = 1e5
    rates = sum_rate_zf(H, sol, P, 1.0)
    assert rates.leakage.max() <= 1e-10 * P
    clean = np.log2(1 + (P / 2) * rates.desired)
    assert rates.total == pytest.approx(clean.sum(), rel=1e-12)


def test_leakage_is_bruteforce_sum():
    H = crandn(stream_rng(1, 0, 0), 3, 3, 4, 5)
    rng = np.random.default_rng(1)
    F = [random_unitary(rng, 5, 2) for _ in range(3)]
    W = [random_unitary(rng, 4, 2) for _ in range(3)]
    P = 7.0
    desired, leakage = stream_powers(H, F, W, P)
    for i in range(3):
        for m in range(2):
            want = 0.0
            for k in range(3):
                for l in range(2):
                    if (k, l) != (i, m):
                        want += P / 2 * abs(W[i][:, m].conj() @ H[i, k] @ F[k][:, l]) ** 2
            assert leakage[i, m] == pytest.approx(want, rel=1e-12)
            assert desired[i, m] == pytest.approx(abs(W[i][:, m].conj() @ H[i, i] @ F[i][:, m]) ** 2)


def test_single_user_joint_rate():
    H = crandn(stream_rng(2, 0, 0), 1, 1, 3, 4)
    F = random_unitary(np.random.default_rng(2), 4, 2)
    P, s2 = 20.0, 0.5
    A = H[0, 0] @ F
    want = np.log2(np.linalg.det(np.eye(3) + (P / 2) * A @ A.conj().T / s2).real)
    assert sum_rate_joint(H, [F], P, s2) == pytest.approx(want, rel=1e-12)


def test_joint_rate_without_interference_terms():
    # zero cross channels: the interference covariance degenerates to sigma2 I
    H = np.array(crandn(stream_rng(3, 0, 0), 2, 2, 2, 2))
    H[0, 1] = 0
    H[1, 0] = 0
    F = [np.eye(2, 1, dtype=complex)] * 2
    P, s2 = 10.0, 2.0
    want = sum(np.log2(1 + P * np.linalg.norm(H[i, i] @ F[i]) ** 2 / s2) for i in range(2))
    assert sum_rate_joint(H, F, P, s2) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_joint_dominates_zf_on_aligned_solution(seed):
    H, sol = aligned(seed)
    for P in (1.0, 1e3, 1e5):
        assert sum_rate_joint(H, sol.F, P, 1.0) >= sum_rate_zf(H, sol, P, 1.0).total - 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), snr_db=st.floats(0, 50))
def test_joint_dominates_zf_on_perturbed_csi(seed, snr_db):
    H = crandn(stream_rng(seed, 0, 0), 3, 3, 2, 2)
    H_hat = H + 0.1 * crandn(stream_rng(seed, 0, 3), *H.shape)
    try:
        sol = solve_ia(H_hat, (1, 1, 1), SolverOptions(init_seed=seed, max_iters=500))
    except IaConvergenceError as err:  # non-convergent draws still carry a usable solution
        sol = err.solution
    sol = IaSolution(F=sol.F, W=tuple(combiners(H_hat, sol.F)))
    P = 10 ** (snr_db / 10)
    zf = sum_rate_zf(H, sol, P, 1.0)
    assert np.all(zf.per_stream >= 0)
    assert sum_rate_joint(H, sol.F, P, 1.0) >= zf.total - 1e-9


def test_zf_needs_combiners():
    H, sol = aligned()
    with pytest.raises(ValueError):
        sum_rate_zf(H, IaSolution(F=sol.F), 10.0, 1.0)


# bounds


def test_bound_hand_value():
    # c2 = (16/12 + 60/45) / 11 = 8/33; each user adds 2 log2(1 + 2 (8/33) 2.5) = 2 log2(73/33)
    assert bound_constant(FIG4, 12, 45, "c2", high_snr=True) == pytest.approx(8 / 33)
    value = rate_loss_bound(FIG4, 12, 45, alpha=2.0, variant="c2", high_snr=True)
    assert value == pytest.approx(6 * math.log2(73 / 33), rel=1e-12)
    assert value == pytest.approx(6.873, abs=1e-3)


def test_finite_snr_correction():
    eps = 4 * FIG4.sigma2 / (12 * FIG4.Pf)
    want = (16 / 12 + 60 * (1 + eps) / 45) / 11
    assert bound_constant(FIG4, 12, 45, "c2") == pytest.approx(want, rel=1e-12)
    assert bound_constant(FIG4, 12, 45, "c") == pytest.approx(20 * want, rel=1e-12)


def test_bound_constant_per_node_modes():
    cfg = NetworkConfig(K=3, Nt=6, Nr=2, d=1)
    assert bound_constant(cfg, 6, 54, "c2", high_snr=True, mode="distributed") == pytest.approx((4 / 6 + 36 / 54) / 4)
    with pytest.raises(ConfigError):
        bound_constant(NetworkConfig(K=3, Nt=4, Nr=4, d=2), 12, 36, mode="distributed")
    with pytest.raises(ValueError):
        bound_constant(FIG4, 12, 45, variant="c3")


@settings(max_examples=50, deadline=None)
@given(
    tp=st.integers(12, 400),
    tc=st.integers(45, 800),
    alpha=st.floats(1e-3, 1e3),
    high=st.booleans(),
)
def test_bound_variants_ordered(tp, tc, alpha, high):
    c = rate_loss_bound(FIG4, tp, tc, alpha, "c", high_snr=high)
    c2 = rate_loss_bound(FIG4, tp, tc, alpha, "c2", high_snr=high)
    assert c >= c2 >= 0


def test_bound_vanishes_with_alpha():
    vals = [rate_loss_bound(FIG4, 12, 45, a) for a in (1e-2, 1e-6, 1e-12)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-8
    assert rate_loss_bound(FIG4, 12, 45, 0.0) == 0.0


# empirical loss and slope


def test_identical_rates_give_zero_loss():
    r = np.random.default_rng(0).uniform(10, 20, size=50)
    loss = empirical_rate_loss(perfect=r, imperfect=r)
    assert loss.mean == 0 and loss.half_width == 0
    assert loss.low == loss.high == 0


def test_loss_interval_is_paired():
    perfect = np.array([10.0, 12.0, 14.0, 16.0])
    imperfect = perfect - np.array([1.0, 1.2, 0.8, 1.0])
    loss = empirical_rate_loss(perfect=perfect, imperfect=imperfect)
    diff = perfect - imperfect
    assert loss.mean == pytest.approx(1.0)
    assert loss.half_width == pytest.approx(1.959963984540054 * diff.std(ddof=1) / 2)
    assert loss.n == 4


def test_loss_from_reports():
    reports = [
        RateReport(t, 30.0, "cooperative", 10.0 + t, 9.0 + t, 11.0 + t, 10.5 + t, 5.0, 1.0, 0.1)
        for t in range(3)
    ]
    assert empirical_rate_loss(reports=reports).mean == pytest.approx(1.0)
    assert empirical_rate_loss(reports=reports, decoder="joint").mean == pytest.approx(0.5)
    assert reports[0].delta_R == pytest.approx(1.0)
    assert tuple(reports[0].row()) == RATE_COLUMNS


def test_loss_needs_two_trials():
    with pytest.raises(InsufficientDataError):
        empirical_rate_loss(perfect=[1.0], imperfect=[0.5])


def test_slope_of_exact_law():
    snr = np.arange(35, 56, 5.0)
    rates = 6 * snr * math.log2(10) / 10 + 3.0
    assert multiplexing_gain_fit(snr, rates) == pytest.approx(6.0)


def test_slope_needs_points_and_span():
    with pytest.raises(InsufficientDataError, match="points"):
        multiplexing_gain_fit([40, 50], [1, 2])
    with pytest.raises(InsufficientDataError, match="span"):
        multiplexing_gain_fit([40, 44, 48], [1, 2, 3])


def test_perfect_csi_slope_at_high_snr():
    # finite-difference slope between 40 and 50 dB over a modest sample
    snr = np.array([40.0, 45.0, 50.0])
    mean = np.zeros(3)
    n = 40
    for t in range(n):
        H, sol = aligned(200 + t)
        for j, s in enumerate(snr):
            mean[j] += sum_rate_zf(H, sol, 10 ** (s / 10), 1.0).total / n
    assert multiplexing_gain_fit(snr, mean) == pytest.approx(6.0, abs=0.3)
