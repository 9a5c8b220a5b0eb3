"""Reproducible Monte Carlo experiments and CSV output.

Every trial draws its randomness from substreams keyed by
``(master_seed, trial, stream label)``, so a trial's result does not
depend on which worker runs it or in what order. Per-trial results are
reduced in trial order.

The forward channels, reverse channels, training noise and feedback
noise of a trial are shared by all operating points (common random
numbers), which makes differences between SNR points and feedback laws
much less noisy than independent draws would.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import multiprocessing
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np

from . import channel as ch
from .config import (
    ConfigError,
    NetworkConfig,
    db_to_linear,
    network_config_from_mapping,
    read_config_file,
    validate_config,
)
from .feedback import (
    FeedbackParams,
    centralized_feedforward,
    feedback_csi,
    feedback_params_from_mapping,
    reverse_train,
)
from .ia.core import IaConvergenceError, SolverOptions, max_leakage, solve_ia
from .overhead import OverheadModel, effective_rate, minimal_lengths, optimize_total_overhead
from .rates import (
    RATE_COLUMNS,
    InsufficientDataError,
    empirical_rate_loss,
    multiplexing_gain_fit,
    rate_loss_bound,
    sum_rate_joint,
    sum_rate_zf,
)

__all__ = [
    "SCHEMA_VERSION",
    "SCENARIOS",
    "FeedbackLaw",
    "ExperimentSpec",
    "ExperimentResult",
    "Task",
    "TrialRecord",
    "simulate_trial",
    "simulate",
    "run",
    "emit_csv",
    "read_csv",
    "default_spec",
    "spec_from_mapping",
    "load_spec",
]

SCHEMA_VERSION = 1

SCENARIOS = (
    "sumrate-sweep",
    "rateloss-vs-overhead",
    "overhead-vs-frame",
    "overhead-vs-rate",
    "effective-throughput",
    "training-vs-feedback",
)

PERFECT_ATTEMPTS = 5


@dataclasses.dataclass(frozen=True)
class FeedbackLaw:
    """How feedback power follows forward power.

    ``scaled``: ``Pf = P / alpha``. ``power-law``: ``Pf = scale * P**beta``.
    ``fixed``: ``Pf`` is ``Pf_dB`` regardless of ``P``.
    """

    kind: str = "scaled"
    alpha: float = 1.0
    beta: float = 1.0
    scale: float = 1.0
    Pf_dB: float = 0.0

    def __post_init__(self):
        if self.kind not in ("scaled", "power-law", "fixed"):
            raise ConfigError(f"unknown feedback law {self.kind!r}")

    def feedback_power(self, P: float) -> float:
        if self.kind == "scaled":
            return P / self.alpha
        if self.kind == "power-law":
            return self.scale * P**self.beta
        return db_to_linear(self.Pf_dB)

    @property
    def label(self) -> str:
        return self.kind

    @classmethod
    def from_mapping(cls, data) -> "FeedbackLaw":
        if isinstance(data, str):
            return cls(kind=data)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown feedback law keys: {', '.join(sorted(extra))}")
        return cls(**{k: (v if k == "kind" else float(v)) for k, v in data.items()})


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to replay an experiment.

    ``options`` carries scenario-specific settings; see :func:`default_spec`
    for the keys each scenario understands.
    """

    scenario: str
    config: NetworkConfig
    feedback: FeedbackParams
    snr_grid: tuple[float, ...]
    feedback_laws: tuple[FeedbackLaw, ...]
    trials: int
    master_seed: int = 0
    modes: tuple[str, ...] = ("cooperative",)
    options: Mapping = dataclasses.field(default_factory=dict)

    def validate(self) -> "ExperimentSpec":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.trials < 1:
            raise ConfigError(f"trials >= 1 violated (trials={self.trials})")
        if not self.snr_grid:
            raise ConfigError("snr grid must not be empty")
        if list(self.snr_grid) != sorted(self.snr_grid):
            raise ConfigError("snr grid must be sorted")
        if not self.feedback_laws:
            raise ConfigError("at least one feedback law required")
        validate_config(self.config)
        for mode in self.modes:
            dataclasses.replace(self.feedback, mode=mode).validate(self.config)
        return self


@dataclasses.dataclass(frozen=True)
class Task:
    """One operating point evaluated on every trial."""

    snr_dB: float
    Pf: float
    tau_p: int
    tau_c: int
    mode: str
    label: str


@dataclasses.dataclass(frozen=True)
class TrialRecord:
    """Per-trial outcome of one :class:`Task`."""

    trial: int
    task: int
    R_perfect_zf: float
    R_imperfect_zf: float
    R_perfect_joint: float
    R_imperfect_joint: float
    max_leakage: float
    sigma_f2: float
    desired_perfect: np.ndarray
    desired_imperfect: np.ndarray
    excluded: bool
    converged: bool


@dataclasses.dataclass
class ExperimentResult:
    """Output table, its column names and a JSON-ready summary."""

    columns: tuple[str, ...]
    rows: list
    summary: dict


# ---------------------------------------------------------------- trials


def _solve_perfect(H, d, seed, trial):
    best = None
    for attempt in range(PERFECT_ATTEMPTS):
        init = np.random.SeedSequence(entropy=seed, spawn_key=(trial, ch.STREAM_IA_INIT, attempt))
        try:
            return solve_ia(H, d, SolverOptions(init_seed=init)), True
        except IaConvergenceError as err:
            if best is None or err.solution.residual_leakage < best.residual_leakage:
                best = err.solution
    return best, False


def _solve_estimate(H_hat, d, init):
    try:
        return solve_ia(H_hat, d, SolverOptions(init=init)), True
    except IaConvergenceError as err:
        return err.solution, False


def _imperfect_solution(channels, config, perfect, task, seed, trial):
    """Vectors actually used with imperfect CSI, plus bookkeeping."""
    params = FeedbackParams(task.tau_p, task.tau_c, task.mode)
    sigma2 = config.sigma2
    G_hat = reverse_train(channels, params, task.Pf, sigma2, ch.stream_rng(seed, trial, ch.STREAM_REVERSE_TRAINING))
    out = feedback_csi(channels, G_hat, params, task.Pf, sigma2, ch.stream_rng(seed, trial, ch.STREAM_FEEDBACK))
    d = config.d
    # warm start from the perfect-CSI precoders: picks the alignment
    # solution branch closest to the true one
    init = perfect.F
    if task.mode == "cooperative":
        sol, ok = _solve_estimate(out.H_hat, d, init)
    elif task.mode == "centralized":
        sol, ok = _solve_estimate(out.H_hat, d, init)
        fwd = centralized_feedforward(sol, task.Pf, sigma2, ch.stream_rng(seed, trial, ch.STREAM_FEEDFORWARD))
        sol = fwd.solution
    else:
        sols, ok = [], True
        for node in range(config.K):
            s, good = _solve_estimate(out.H_hat[node], d, init)
            sols.append(s)
            ok = ok and good
        # source k transmits with its own solution; sink i decodes with
        # the combiners computed at source node i
        F = tuple(sols[k].F[k] for k in range(config.K))
        W = tuple(sols[i].W[i] for i in range(config.K))
        sol = dataclasses.replace(sols[0], F=F, W=W, residual_leakage=None, min_desired=None)
    return sol, ok, out


def simulate_trial(config: NetworkConfig, tasks: Sequence[Task], seed: int, trial: int) -> list[TrialRecord]:
    """Evaluate every task on one channel realization."""
    channels = ch.draw_channels(config, ch.stream_rng(seed, trial, ch.STREAM_CHANNEL))
    H = channels.H
    sigma2 = config.sigma2
    perfect, perfect_ok = _solve_perfect(H, config.d, seed, trial)

    cache = {}
    records = []
    for index, task in enumerate(tasks):
        key = (task.Pf, task.tau_p, task.tau_c, task.mode)
        if key not in cache:
            cache[key] = _imperfect_solution(channels, config, perfect, task, seed, trial)
        sol, ok, out = cache[key]
        P = db_to_linear(task.snr_dB)
        zf_p = sum_rate_zf(H, perfect, P, sigma2)
        zf_i = sum_rate_zf(H, sol, P, sigma2)
        records.append(
            TrialRecord(
                trial=trial,
                task=index,
                R_perfect_zf=zf_p.total,
                R_imperfect_zf=zf_i.total,
                R_perfect_joint=sum_rate_joint(H, perfect.F, P, sigma2),
                R_imperfect_joint=sum_rate_joint(H, sol.F, P, sigma2),
                max_leakage=max_leakage(H, sol.F, sol.W),
                sigma_f2=out.sigma_f2_empirical,
                desired_perfect=_flat(zf_p.desired, config.d),
                desired_imperfect=_flat(zf_i.desired, config.d),
                excluded=out.ill_conditioned,
                converged=perfect_ok and ok,
            )
        )
    return records


def _flat(arr, d):
    return np.concatenate([arr[i, : d[i]] for i in range(len(d))])


def _trial_job(args):
    config, tasks, seed, trial = args
    return simulate_trial(config, tasks, seed, trial)


def simulate(config: NetworkConfig, tasks: Sequence[Task], trials: int, seed: int, workers: int = 1):
    """Run ``trials`` trials; returns records grouped as ``[trial][task]``.

    Results are identical for any ``workers`` count.
    """
    jobs = [(config, tuple(tasks), seed, t) for t in range(trials)]
    if workers <= 1 or trials <= 1:
        return [_trial_job(j) for j in jobs]
    ctx = multiprocessing.get_context("spawn")
    with ctx.Pool(workers) as pool:
        return list(pool.imap(_trial_job, jobs, chunksize=max(1, trials // (8 * workers))))


def _task_columns(records, index):
    """Arrays of every field for one task over the non-excluded trials."""
    rec = [r[index] for r in records if not r[index].excluded]
    return {
        name: np.array([getattr(x, name) for x in rec])
        for name in ("trial", "R_perfect_zf", "R_imperfect_zf", "R_perfect_joint", "R_imperfect_joint", "max_leakage")
    }, rec


def _counts(records):
    flat = [x for r in records for x in r]
    return {
        "excluded_records": int(sum(x.excluded for x in flat)),
        "excluded_trials": int(sum(any(x.excluded for x in r) for r in records)),
        "unconverged_trials": int(sum(any(not x.converged for x in r) for r in records)),
    }


# --------------------------------------------------------------- scenarios


def _mode_label(mode, law):
    return f"{mode}:{law.label}"


def _bounds(config, task, P):
    cfg = dataclasses.replace(config, P=P, Pf=task.Pf)
    alpha = P / task.Pf
    pair = []
    for variant in ("c", "c2"):
        try:
            pair.append(rate_loss_bound(cfg, task.tau_p, task.tau_c, alpha, variant=variant, mode=task.mode))
        except ConfigError:
            pair.append(float("nan"))
    return pair


def _safe_slope(x, y, lo, hi):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (x >= lo - 1e-9) & (x <= hi + 1e-9)
    try:
        return multiplexing_gain_fit(x[sel], y[sel])
    except InsufficientDataError:
        return None


def _sumrate_sweep(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    fb = spec.feedback
    tasks = []
    for mode in spec.modes:
        for law in spec.feedback_laws:
            for snr in spec.snr_grid:
                P = db_to_linear(snr)
                tasks.append(Task(snr, law.feedback_power(P), fb.tau_p, fb.tau_c, mode, _mode_label(mode, law)))
    records = simulate(cfg, tasks, spec.trials, spec.master_seed, workers)

    rows = []
    for r in records:
        for x in r:
            if x.excluded:
                continue
            task = tasks[x.task]
            bc, bc2 = _bounds(cfg, task, db_to_linear(task.snr_dB))
            rows.append(
                {
                    "trial": x.trial,
                    "snr_dB": task.snr_dB,
                    "mode": task.label,
                    "R_perfect_zf": x.R_perfect_zf,
                    "R_imperfect_zf": x.R_imperfect_zf,
                    "R_perfect_joint": x.R_perfect_joint,
                    "R_imperfect_joint": x.R_imperfect_joint,
                    "delta_R": x.R_perfect_zf - x.R_imperfect_zf,
                    "bound_c": bc,
                    "bound_c2": bc2,
                    "max_leakage": x.max_leakage,
                }
            )

    lo, hi = spec.options.get("fit_range_dB", (35.0, 55.0))
    curves = {}
    violations = 0
    perfect_curve = None
    for label in dict.fromkeys(t.label for t in tasks):
        idx = [i for i, t in enumerate(tasks) if t.label == label]
        points = []
        for i in idx:
            cols, _ = _task_columns(records, i)
            loss = empirical_rate_loss(perfect=cols["R_perfect_zf"], imperfect=cols["R_imperfect_zf"]) if len(cols["trial"]) >= 2 else None
            bc, bc2 = _bounds(cfg, tasks[i], db_to_linear(tasks[i].snr_dB))
            if loss is not None and loss.high > bc:
                violations += 1
            points.append(
                {
                    "snr_dB": tasks[i].snr_dB,
                    "trials": int(len(cols["trial"])),
                    "R_perfect_zf": float(np.mean(cols["R_perfect_zf"])),
                    "R_imperfect_zf": float(np.mean(cols["R_imperfect_zf"])),
                    "R_perfect_joint": float(np.mean(cols["R_perfect_joint"])),
                    "R_imperfect_joint": float(np.mean(cols["R_imperfect_joint"])),
                    "delta_R": None if loss is None else loss.mean,
                    "delta_R_half_width": None if loss is None else loss.half_width,
                    "bound_c": bc,
                    "bound_c2": bc2,
                }
            )
        snr = [p["snr_dB"] for p in points]
        curves[label] = {
            "points": points,
            "slope_joint": _safe_slope(snr, [p["R_imperfect_joint"] for p in points], lo, hi),
            "slope_zf": _safe_slope(snr, [p["R_imperfect_zf"] for p in points], lo, hi),
        }
        if perfect_curve is None:
            perfect_curve = {
                "slope_joint": _safe_slope(snr, [p["R_perfect_joint"] for p in points], lo, hi),
                "slope_zf": _safe_slope(snr, [p["R_perfect_zf"] for p in points], lo, hi),
            }
    summary = {
        "perfect": perfect_curve,
        "curves": curves,
        "fit_range_dB": [lo, hi],
        "bound_violations": violations,
        **_counts(records),
    }
    return ExperimentResult(RATE_COLUMNS, rows, summary)


def _rateloss_vs_overhead(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    snr = spec.snr_grid[0]
    P = db_to_linear(snr)
    law = spec.feedback_laws[0]
    Pf = law.feedback_power(P)
    tp_min, tc_min = minimal_lengths(cfg.K, cfg.Nt, cfg.Nr)
    tau_p_grid = [int(x) for x in spec.options.get("tau_p_grid", [tp_min, 2 * tp_min, 4 * tp_min, 8 * tp_min])]
    tau_c_grid = [int(x) for x in spec.options.get("tau_c_grid", [tc_min, 2 * tc_min, 4 * tc_min, 8 * tc_min])]
    mode = spec.modes[0]
    tasks = [Task(snr, Pf, tp, tc, mode, _mode_label(mode, law)) for tp in tau_p_grid for tc in tau_c_grid]
    records = simulate(cfg, tasks, spec.trials, spec.master_seed, workers)
    rows = []
    for i, t in enumerate(tasks):
        cols, _ = _task_columns(records, i)
        loss = empirical_rate_loss(perfect=cols["R_perfect_zf"], imperfect=cols["R_imperfect_zf"])
        bc, bc2 = _bounds(cfg, t, P)
        rows.append(
            {
                "tau_p": t.tau_p,
                "tau_c": t.tau_c,
                "snr_dB": snr,
                "delta_R": loss.mean,
                "delta_R_half_width": loss.half_width,
                "bound_c": bc,
                "bound_c2": bc2,
                "trials": loss.n,
            }
        )
    columns = ("tau_p", "tau_c", "snr_dB", "delta_R", "delta_R_half_width", "bound_c", "bound_c2", "trials")
    summary = {"snr_dB": snr, "alpha": P / Pf, "tau_p_grid": tau_p_grid, "tau_c_grid": tau_c_grid, **_counts(records)}
    return ExperimentResult(columns, rows, summary)


def _mean_perfect_rate(spec: ExperimentSpec, snr, workers):
    """Monte Carlo mean perfect-CSI ZF sum rate at ``snr`` dB."""
    cfg = spec.config
    tp_min, tc_min = minimal_lengths(cfg.K, cfg.Nt, cfg.Nr)
    P = db_to_linear(snr)
    task = Task(snr, P, tp_min, tc_min, "cooperative", "perfect")
    records = simulate(cfg, [task], spec.trials, spec.master_seed, workers)
    return float(np.mean([r[0].R_perfect_zf for r in records]))


OVERHEAD_COLUMNS = ("T", "R_sum_mean", "alpha", "T_total", "tau_p", "tau_c", "R_eff", "T_total_unconstrained", "boundary")


def _overhead_row(T, R, alpha, cfg, form):
    opt = optimize_total_overhead(OverheadModel(T, R, alpha, cfg), form=form)
    return {
        "T": T,
        "R_sum_mean": R,
        "alpha": alpha,
        "T_total": opt.T_total,
        "tau_p": opt.tau_p,
        "tau_c": opt.tau_c,
        "R_eff": opt.R_eff,
        "T_total_unconstrained": float("nan") if opt.T_total_unconstrained is None else opt.T_total_unconstrained,
        "boundary": int(opt.boundary),
    }


def _alpha_of(law: FeedbackLaw, P):
    return P / law.feedback_power(P)


def _overhead_vs_frame(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    snr = spec.snr_grid[0]
    P = db_to_linear(snr)
    alpha = _alpha_of(spec.feedback_laws[0], P)
    R = spec.options.get("R_sum_mean")
    R = float(R) if R is not None else _mean_perfect_rate(spec, snr, workers)
    frames = [float(x) for x in spec.options.get("frames", np.logspace(3, 6, 13))]
    form = spec.options.get("form", "exact")
    rows = [_overhead_row(T, R, alpha, cfg, form) for T in frames]
    free = [(r["T"], r["T_total_unconstrained"]) for r in rows if math.isfinite(r["T_total_unconstrained"])]
    slope = None
    if len(free) >= 2:
        slope = float(np.polyfit(np.log([f[0] for f in free]), np.log([f[1] for f in free]), 1)[0])
    summary = {"snr_dB": snr, "R_sum_mean": R, "alpha": alpha, "form": form, "sqrt_T_slope": slope}
    return ExperimentResult(OVERHEAD_COLUMNS, rows, summary)


def _overhead_vs_rate(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    T = float(spec.options.get("T", 1e4))
    form = spec.options.get("form", "exact")
    law = spec.feedback_laws[0]
    rates = spec.options.get("R_sum_grid")
    rows = []
    if rates is not None:
        snr = spec.snr_grid[0]
        alpha = _alpha_of(law, db_to_linear(snr))
        for R in rates:
            rows.append(_overhead_row(T, float(R), alpha, cfg, form))
    else:
        for snr in spec.snr_grid:
            alpha = _alpha_of(law, db_to_linear(snr))
            rows.append(_overhead_row(T, _mean_perfect_rate(spec, snr, workers), alpha, cfg, form))
    totals = [r["T_total_unconstrained"] for r in rows]
    summary = {
        "T": T,
        "form": form,
        "non_increasing": bool(all(b <= a + 1e-9 for a, b in zip(totals, totals[1:]))),
    }
    return ExperimentResult(OVERHEAD_COLUMNS, rows, summary)


THROUGHPUT_COLUMNS = (
    "snr_dB",
    "tau_p",
    "tau_c",
    "R_perfect_zf",
    "R_imperfect_zf",
    "R_imperfect_joint",
    "R_eff_sim",
    "R_eff_sim_joint",
    "R_eff_model",
    "trials",
)


def _throughput_rows(spec, tasks, records, T, alpha_of_task):
    cfg = spec.config
    rows = []
    for i, t in enumerate(tasks):
        cols, _ = _task_columns(records, i)
        Rp = float(np.mean(cols["R_perfect_zf"]))
        Ri = float(np.mean(cols["R_imperfect_zf"]))
        Rj = float(np.mean(cols["R_imperfect_joint"]))
        frac = (T - t.tau_p - t.tau_c) / T
        model = OverheadModel(T, Rp, alpha_of_task(t), cfg)
        rows.append(
            {
                "snr_dB": t.snr_dB,
                "tau_p": t.tau_p,
                "tau_c": t.tau_c,
                "R_perfect_zf": Rp,
                "R_imperfect_zf": Ri,
                "R_imperfect_joint": Rj,
                "R_eff_sim": frac * Ri,
                "R_eff_sim_joint": frac * Rj,
                "R_eff_model": effective_rate(t.tau_p, t.tau_c, model),
                "trials": int(len(cols["trial"])),
            }
        )
    return rows


def _argmax_by(rows, group_key, value_key, arg_key):
    out = {}
    for r in rows:
        g = r[group_key]
        if g not in out or r[value_key] > out[g][1]:
            out[g] = (r[arg_key], r[value_key])
    return {str(k): v[0] for k, v in out.items()}


def _effective_throughput(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    T = float(spec.options.get("T", 2000))
    law = spec.feedback_laws[0]
    tp_min, tc_min = minimal_lengths(cfg.K, cfg.Nt, cfg.Nr)
    tau_p = int(spec.options.get("tau_p", spec.feedback.tau_p))
    tau_c_grid = [int(x) for x in spec.options.get("tau_c_grid", range(tc_min, 4 * tc_min + 1, 5))]
    mode = spec.modes[0]
    tasks = []
    for snr in spec.snr_grid:
        Pf = law.feedback_power(db_to_linear(snr))
        tasks += [Task(snr, Pf, tau_p, tc, mode, _mode_label(mode, law)) for tc in tau_c_grid]
    records = simulate(cfg, tasks, spec.trials, spec.master_seed, workers)
    rows = _throughput_rows(spec, tasks, records, T, lambda t: db_to_linear(t.snr_dB) / t.Pf)
    summary = {
        "T": T,
        "tau_p": tau_p,
        "minimal_tau_c": tc_min,
        "argmax_tau_c_sim": _argmax_by(rows, "snr_dB", "R_eff_sim", "tau_c"),
        "argmax_tau_c_sim_joint": _argmax_by(rows, "snr_dB", "R_eff_sim_joint", "tau_c"),
        "argmax_tau_c_model": _argmax_by(rows, "snr_dB", "R_eff_model", "tau_c"),
        **_counts(records),
    }
    return ExperimentResult(THROUGHPUT_COLUMNS, rows, summary)


def _training_vs_feedback(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    T = float(spec.options.get("T", 10000))
    law = spec.feedback_laws[0]
    tp_min, tc_min = minimal_lengths(cfg.K, cfg.Nt, cfg.Nr)
    tau_p_grid = [int(x) for x in spec.options.get("tau_p_grid", [tp_min, 2 * tp_min, 4 * tp_min, 8 * tp_min])]
    tau_c_grid = [int(x) for x in spec.options.get("tau_c_grid", [tc_min, 2 * tc_min, 4 * tc_min, 8 * tc_min])]
    snr = spec.snr_grid[0]
    Pf = law.feedback_power(db_to_linear(snr))
    mode = spec.modes[0]
    tasks = [Task(snr, Pf, tp, tc, mode, _mode_label(mode, law)) for tp in tau_p_grid for tc in tau_c_grid]
    records = simulate(cfg, tasks, spec.trials, spec.master_seed, workers)
    rows = _throughput_rows(spec, tasks, records, T, lambda t: db_to_linear(t.snr_dB) / t.Pf)
    best = max(rows, key=lambda r: r["R_eff_sim_joint"])
    summary = {"T": T, "snr_dB": snr, "best_tau_p": best["tau_p"], "best_tau_c": best["tau_c"], **_counts(records)}
    return ExperimentResult(THROUGHPUT_COLUMNS, rows, summary)


_RUNNERS = {
    "sumrate-sweep": _sumrate_sweep,
    "rateloss-vs-overhead": _rateloss_vs_overhead,
    "overhead-vs-frame": _overhead_vs_frame,
    "overhead-vs-rate": _overhead_vs_rate,
    "effective-throughput": _effective_throughput,
    "training-vs-feedback": _training_vs_feedback,
}


def run(spec: ExperimentSpec, out: str | Path | None = None, workers: int = 1) -> ExperimentResult:
    """Execute ``spec``; when ``out`` is given write the CSV and ``<out>.json``."""
    spec.validate()
    result = _RUNNERS[spec.scenario](spec, workers)
    result.summary = {
        "scenario": spec.scenario,
        "schema_version": SCHEMA_VERSION,
        "trials": spec.trials,
        "master_seed": spec.master_seed,
        **result.summary,
    }
    if out is not None:
        out = Path(out)
        emit_csv(result.rows, out, result.columns)
        with open(out.with_suffix(out.suffix + ".json"), "w", encoding="utf-8") as fh:
            json.dump(_jsonable(result.summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return float(f"{value:.9g}") if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# --------------------------------------------------------------------- CSV


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def emit_csv(rows: Sequence[Mapping], path: str | Path, columns: Sequence[str] = RATE_COLUMNS) -> Path:
    """Write ``rows`` under a header of ``columns``; floats get 9 significant digits."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[dict]]:
    """Parse a file written by :func:`emit_csv`; numeric fields become floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            row = {}
            for name, text in zip(header, raw):
                try:
                    row[name] = float(text)
                except ValueError:
                    row[name] = text
            rows.append(row)
    return header, rows


# ------------------------------------------------------------ spec loading


_DEFAULTS = {
    "sumrate-sweep": dict(
        network=dict(K=3, Nt=5, Nr=4, d=2),
        feedback=dict(tau_p=12, tau_c=45, mode="cooperative"),
        snr_grid_dB=[10, 15, 20, 25, 30, 35, 40, 45, 50, 55],
        feedback_laws=[
            dict(kind="scaled", alpha=2.0),
            dict(kind="power-law", beta=0.5),
            dict(kind="fixed", Pf_dB=5.0),
        ],
        modes=["cooperative"],
        trials=500,
    ),
    "rateloss-vs-overhead": dict(
        network=dict(K=3, Nt=2, Nr=2, d=1),
        feedback=dict(tau_p=6, tau_c=18, mode="cooperative"),
        snr_grid_dB=[30],
        feedback_laws=[dict(kind="scaled", alpha=10.0)],
        trials=500,
        options=dict(tau_p_grid=[6, 12, 24, 48], tau_c_grid=[18, 36, 72, 144]),
    ),
    "overhead-vs-frame": dict(
        network=dict(K=3, Nt=2, Nr=2, d=1),
        feedback=dict(tau_p=6, tau_c=18, mode="cooperative"),
        snr_grid_dB=[20],
        feedback_laws=[dict(kind="scaled", alpha=1.0)],
        trials=200,
    ),
    "overhead-vs-rate": dict(
        network=dict(K=3, Nt=2, Nr=2, d=1),
        feedback=dict(tau_p=6, tau_c=18, mode="cooperative"),
        snr_grid_dB=[40],
        feedback_laws=[dict(kind="scaled", alpha=10.0)],
        trials=200,
        options=dict(T=10000, R_sum_grid=[5, 10, 15, 20, 25, 30, 35, 40]),
    ),
    "effective-throughput": dict(
        network=dict(K=3, Nt=5, Nr=4, d=2),
        feedback=dict(tau_p=12, tau_c=45, mode="cooperative"),
        snr_grid_dB=[20, 30, 40],
        feedback_laws=[dict(kind="scaled", alpha=100.0)],
        trials=200,
        options=dict(T=2000),
    ),
    "training-vs-feedback": dict(
        network=dict(K=3, Nt=5, Nr=4, d=2),
        feedback=dict(tau_p=12, tau_c=45, mode="cooperative"),
        snr_grid_dB=[35],
        feedback_laws=[dict(kind="fixed", Pf_dB=10.0)],
        trials=200,
        options=dict(T=10000),
    ),
}


def default_spec(scenario: str, **overrides) -> ExperimentSpec:
    """Built-in spec for ``scenario`` (the published figure settings)."""
    if scenario not in _DEFAULTS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    data = {"schema_version": SCHEMA_VERSION, "scenario": scenario, **_DEFAULTS[scenario]}
    data.update(overrides)
    return spec_from_mapping(data)


def spec_from_mapping(data: Mapping) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from a parsed config file."""
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    scenario = data.get("scenario")
    base = _DEFAULTS.get(scenario)
    if base is None:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    merged = {**base, **data}
    config = network_config_from_mapping(merged["network"])
    feedback = feedback_params_from_mapping(merged["feedback"])
    laws = merged.get("feedback_laws")
    if "feedback_law" in data:
        laws = [data["feedback_law"]]
    modes = merged.get("modes", [feedback.mode])
    return ExperimentSpec(
        scenario=scenario,
        config=config,
        feedback=feedback,
        snr_grid=tuple(float(x) for x in merged["snr_grid_dB"]),
        feedback_laws=tuple(FeedbackLaw.from_mapping(x) for x in laws),
        trials=int(merged.get("trials", 100)),
        master_seed=int(merged.get("master_seed", 0)),
        modes=tuple(modes),
        options=dict(merged.get("options", {})),
    )


def load_spec(path: str | Path) -> ExperimentSpec:
    """Read an experiment config file (YAML)."""
    return spec_from_mapping(read_config_file(path))
