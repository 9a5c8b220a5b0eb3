"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are collected by ``conftest.py`` and printed in the terminal
summary. Monte Carlo sizes follow the criteria; the slowest test takes a
couple of minutes on one core.
"""

import numpy as np
import pytest
from scipy import stats

from analog_ia.channel import crandn, draw_channels, stream_rng
from analog_ia.config import NetworkConfig, db_to_linear
from analog_ia.experiments import Task, default_spec, run, simulate
from analog_ia.feedback import (
    FeedbackParams,
    feedback_csi,
    make_orthogonal_pilots,
    reverse_train,
    theoretical_mse,
)
from analog_ia.ia import IaConvergenceError, SolverOptions, solve_ia
from analog_ia.overhead import (
    OverheadModel,
    minimal_lengths,
    optimal_split,
    optimize_total_overhead,
)
from analog_ia.rates import sum_rate_joint, sum_rate_zf

pytestmark = pytest.mark.slow

FIG4 = NetworkConfig(K=3, Nt=5, Nr=4, d=2)
SMALL = NetworkConfig(K=3, Nt=2, Nr=2, d=1)
# Nt - Nr >= 2 keeps the per-node error variance finite
WIDE = NetworkConfig(K=3, Nt=6, Nr=2, d=1)


@pytest.fixture(scope="module")
def fig4_sweep():
    spec = default_spec(
        "sumrate-sweep",
        feedback_laws=[
            dict(kind="scaled", alpha=2.0),
            dict(kind="power-law", beta=0.5),
            dict(kind="fixed", Pf_dB=5.0),
        ],
        trials=500,
        master_seed=2024,
    )
    return run(spec).summary


def _within(x, target, tol):
    return x is not None and abs(x - target) <= tol


def test_criterion_01_multiplexing_gain(fig4_sweep, report):
    perfect = fig4_sweep["perfect"]
    scaled = fig4_sweep["curves"]["cooperative:scaled"]
    slopes = {
        "perfect_joint": perfect["slope_joint"],
        "perfect_zf": perfect["slope_zf"],
        "scaled_joint": scaled["slope_joint"],
        "scaled_zf": scaled["slope_zf"],
    }
    ok = all(_within(s, 6.0, 0.3) for s in slopes.values())
    detail = ", ".join(f"{k}={v:.3f}" for k, v in slopes.items())
    assert report(1, ok, f"slopes over 35-55 dB (target 6.0 +/- 0.3): {detail}")


def test_criterion_02_constant_rate_loss(fig4_sweep, report):
    points = fig4_sweep["curves"]["cooperative:scaled"]["points"]
    high = [p["delta_R"] for p in points if 40 <= p["snr_dB"] <= 55]
    spread = (max(high) - min(high)) / np.mean(high)
    below = [p["delta_R"] + p["delta_R_half_width"] < p["bound_c"] for p in points]
    ok = spread < 0.10 and all(below)
    worst = max(p["delta_R"] + p["delta_R_half_width"] - p["bound_c"] for p in points)
    assert report(
        2,
        ok,
        f"delta_R 40-55 dB in [{min(high):.3f}, {max(high):.3f}] (spread {spread:.1%} < 10%); "
        f"upper CI below bound c at {sum(below)}/{len(below)} points (max CI - bound {worst:.2f})",
    )


def test_criterion_03_beta_fraction(fig4_sweep, report):
    power = fig4_sweep["curves"]["cooperative:power-law"]
    fixed = fig4_sweep["curves"]["cooperative:fixed"]
    # the fraction result is a statement about the per-stream ZF receiver
    ok = _within(power["slope_zf"], 3.0, 0.3) and fixed["slope_zf"] < 0.5
    assert report(
        3,
        ok,
        f"Pf=sqrt(P) ZF slope {power['slope_zf']:.3f} (3.0 +/- 0.3; joint {power['slope_joint']:.3f}); "
        f"fixed 5 dB ZF slope {fixed['slope_zf']:.3f} < 0.5 (joint {fixed['slope_joint']:.3f})",
    )


CRITERION4 = {
    "cooperative": (FIG4, [(12, 45, 10.0), (24, 90, 100.0), (16, 60, 1000.0)]),
    "centralized": (WIDE, [(6, 54, 10.0), (12, 108, 100.0), (8, 72, 1000.0)]),
    "distributed": (WIDE, [(6, 54, 10.0), (12, 108, 100.0), (8, 72, 1000.0)]),
}


def test_criterion_04_feedback_error_formula(report):
    trials = 10_000
    worst = 0.0
    parts = []
    for mode, (cfg, triples) in CRITERION4.items():
        for tp, tc, Pf in triples:
            params = FeedbackParams(tp, tc, mode).validate(cfg)
            total = 0.0
            for t in range(trials):
                chan = draw_channels(cfg, stream_rng(404, t, 0))
                G_hat = reverse_train(chan, params, Pf, 1.0, stream_rng(404, t, 2))
                total += feedback_csi(chan, G_hat, params, Pf, 1.0, stream_rng(404, t, 3)).sigma_f2_empirical
            ratio = total / trials / theoretical_mse(cfg.K, cfg.Nt, cfg.Nr, tp, tc, Pf, 1.0, mode)
            worst = max(worst, abs(ratio - 1))
            parts.append(f"{mode[:4]}({tp},{tc},{Pf:g})={ratio:.3f}")
    ok = worst < 0.05
    assert report(4, ok, f"empirical/theoretical, max dev {worst:.2%} < 5%: " + " ".join(parts))


def test_criterion_05_exponential_desired_gain(report):
    # three streams per trial are conditionally independent given the cross channels
    trials = 3334
    snr = 30.0
    P = db_to_linear(snr)
    task = Task(snr, P / 10, 6, 18, "cooperative", "ks")
    records = simulate(SMALL, [task], trials, seed=55)
    perfect = np.concatenate([r[0].desired_perfect for r in records])
    imperfect = np.concatenate([r[0].desired_imperfect for r in records])
    p1 = stats.kstest(perfect, "expon").pvalue
    p2 = stats.kstest(imperfect, "expon").pvalue
    ok = p1 > 0.01 and p2 > 0.01
    assert report(5, ok, f"KS vs Exp(1) on {perfect.size} samples: perfect p={p1:.3f}, imperfect p={p2:.3f} (> 0.01)")


def test_criterion_06_rate_loss_vs_overhead(report):
    snr = 30.0
    P = db_to_linear(snr)
    tps = [6, 12, 24, 48]
    tcs = [18, 36, 72, 144]
    tasks = [Task(snr, P / 10, tp, tc, "cooperative", "grid") for tp in tps for tc in tcs]
    trials = 500
    records = simulate(SMALL, tasks, trials, seed=66)
    keep = [r for r in records if not any(x.excluded for x in r)]
    loss = np.array([[x.R_perfect_zf - x.R_imperfect_zf for x in r] for r in keep]).reshape(len(keep), 4, 4)
    mean = loss.mean(axis=0)
    violations = []

    def step(a, b):
        # paired: the same channels are reused at every grid point
        diff = loss[:, b[0], b[1]] - loss[:, a[0], a[1]]
        half = 1.959963984540054 * diff.std(ddof=1) / np.sqrt(diff.size)
        if diff.mean() - half > 0:
            violations.append((a, b, diff.mean()))

    for i in range(4):
        for j in range(4):
            if i + 1 < 4:
                step((i, j), (i + 1, j))
            if j + 1 < 4:
                step((i, j), (i, j + 1))
    ok = not violations
    grid = "; ".join(" ".join(f"{v:.2f}" for v in row) for row in mean)
    assert report(6, ok, f"{len(violations)} significant increases on the 4x4 grid; mean delta_R rows (tau_p) = {grid}")


def test_criterion_07_overhead_optimizer(report):
    # (a) stationarity residual at interior optima
    residuals = []
    for cfg, R in ((SMALL, 17.4), (FIG4, 60.0)):
        for T in (2e3, 1e4, 1e5):
            for alpha in (1.0, 10.0, 100.0):
                opt = optimize_total_overhead(OverheadModel(T, R, alpha, cfg))
                if not opt.boundary:
                    residuals.append(opt.residual)
    ok_a = len(residuals) > 0 and max(residuals) <= 1e-9

    # (b) optimal split against every integer split
    ok_b = True
    for cfg in (SMALL, FIG4):
        K, Nt, Nr = cfg.K, cfg.Nt, cfg.Nr
        tp_min, tc_min = minimal_lengths(K, Nt, Nr)
        for total in range(tp_min + tc_min, tp_min + tc_min + 400):
            s = optimal_split(total, K, Nt, Nr)
            grid = min((Nr * Nr / tp + K * Nt * Nr / (total - tp)) / (K * Nt - Nr) for tp in range(tp_min, total - tc_min + 1))
            ok_b &= s.c2 <= grid * (1 + 1e-12)

    # (c) square-root growth for the small system with Pf = P
    frame = run(default_spec("overhead-vs-frame", trials=200, master_seed=77)).summary
    slope = frame["sqrt_T_slope"]
    ok_c = slope is not None and abs(slope - 0.5) <= 0.05

    # (d) non-increasing in the achieved sum rate
    totals = [optimize_total_overhead(OverheadModel(1e4, R, 10.0, SMALL)).T_total_cont for R in np.linspace(5, 40, 36)]
    ok_d = bool(np.all(np.diff(totals) <= 1e-9))

    ok = ok_a and ok_b and ok_c and ok_d
    assert report(
        7,
        ok,
        f"(a) max residual {max(residuals):.1e} over {len(residuals)} interior optima; (b) split grid {'ok' if ok_b else 'beaten'}; "
        f"(c) sqrt(T) slope {slope:.3f} at R={frame['R_sum_mean']:.2f}; (d) non-increasing {'yes' if ok_d else 'no'}",
    )


def test_criterion_08_effective_throughput(report):
    grid = [45, 46, 47, 48, 49, 50, 55, 60, 70, 80, 100, 120, 150, 200, 250, 300]
    spec = default_spec(
        "effective-throughput",
        snr_grid_dB=[20, 30, 40],
        trials=100,
        master_seed=88,
        options=dict(T=2000, tau_p=12, tau_c_grid=grid),
    )
    summary = run(spec).summary
    minimal = summary["minimal_tau_c"]
    best = summary["argmax_tau_c_sim"]
    ok = all(v - minimal <= 2 for v in best.values())
    fmt = lambda d: ", ".join(f"{k} dB: {v}" for k, v in d.items())  # noqa: E731
    assert report(
        8,
        ok,
        f"argmax tau_c (minimal {minimal}, need <= {minimal + 2}) ZF sim {fmt(best)}; "
        f"joint sim {fmt(summary['argmax_tau_c_sim_joint'])}; model {fmt(summary['argmax_tau_c_model'])}",
    )


def test_criterion_09_distributed_feedback(report):
    spec = default_spec(
        "sumrate-sweep",
        snr_grid_dB=[35, 40, 45, 50, 55],
        feedback_laws=[dict(kind="scaled", alpha=2.0)],
        modes=["cooperative", "distributed"],
        trials=100,
        master_seed=99,
    )
    curves = run(spec).summary["curves"]
    coop, dist = curves["cooperative:scaled"], curves["distributed:scaled"]
    gaps = {}
    for key in ("joint", "zf"):
        g = [c[f"R_imperfect_{key}"] - d[f"R_imperfect_{key}"] for c, d in zip(coop["points"], dist["points"])]
        gaps[key] = (min(g), max(g), (max(g) - min(g)) / np.mean(g))
    ok = all(abs(coop[f"slope_{k}"] - dist[f"slope_{k}"]) <= 0.3 for k in ("joint", "zf"))
    ok = ok and all(v[2] <= 0.25 for v in gaps.values())
    assert report(
        9,
        ok,
        f"slopes joint {dist['slope_joint']:.3f} vs {coop['slope_joint']:.3f}, zf {dist['slope_zf']:.3f} vs {coop['slope_zf']:.3f}; "
        + "; ".join(f"{k} gap {lo:.2f}-{hi:.2f} (spread {s:.1%} <= 25%)" for k, (lo, hi, s) in gaps.items()),
    )


def test_criterion_10_property_suite(report):
    failures = []
    for t in range(60):
        cfg = (SMALL, FIG4)[t % 2]
        H = crandn(stream_rng(1010, t, 0), cfg.K, cfg.K, cfg.Nr, cfg.Nt)
        try:
            sol = solve_ia(H, cfg.d, SolverOptions(init_seed=t))
        except IaConvergenceError:
            continue
        if sol.residual_leakage > 1e-8:
            failures.append(f"leakage trial {t}")
        for F, W in zip(sol.F, sol.W):
            if np.abs(F.conj().T @ F - np.eye(F.shape[1])).max() > 1e-10:
                failures.append(f"unitarity trial {t}")
            if np.abs(np.linalg.norm(W, axis=0) - 1).max() > 1e-10:
                failures.append(f"combiner norm trial {t}")
        for P in (10.0, 1e3, 1e5):
            if sum_rate_joint(H, sol.F, P, 1.0) < sum_rate_zf(H, sol, P, 1.0).total - 1e-9:
                failures.append(f"joint < zf trial {t}")
    # spreading round trip
    for K, Nt, Nr, tc in ((3, 2, 2, 18), (3, 5, 4, 45), (4, 3, 2, 60)):
        Psi = make_orthogonal_pilots(K * Nt, tc, users=K)
        payload = crandn(stream_rng(1011, K, Nt), K, Nr, K * Nt)
        Y = np.einsum("irc,icl->rl", payload, Psi)
        for i in range(K):
            if np.abs(Y @ Psi[i].conj().T - payload[i]).max() > 1e-10:
                failures.append(f"spreading K={K} user {i}")
    # seed determinism
    task = Task(30.0, 100.0, 6, 18, "cooperative", "det")
    a = simulate(SMALL, [task], 3, seed=1012)
    b = simulate(SMALL, [task], 3, seed=1012)
    if any(x[0].R_imperfect_joint != y[0].R_imperfect_joint for x, y in zip(a, b)):
        failures.append("determinism")
    ok = not failures
    assert report(10, ok, "unitarity, leakage <= 1e-8, joint >= ZF, spreading round trip, determinism: " + (", ".join(failures[:5]) or "all hold"))
