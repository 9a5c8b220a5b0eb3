"""Throughput with training and feedback overhead, and its optimization.

Training, feedback and data share a frame of ``T`` symbols. Spending
``tau_p + tau_c`` symbols on overhead leaves the fraction
``(T - tau_p - tau_c) / T`` for data, which carries the perfect-CSI rate
minus the ``c2`` rate-loss bound.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import brentq

from .config import ConfigError, NetworkConfig
from .rates import bound_constant

__all__ = [
    "OverheadError",
    "InfeasibleTotalError",
    "OverheadModel",
    "EffectiveRate",
    "Split",
    "OverheadOptimum",
    "minimal_lengths",
    "effective_rate",
    "optimal_split",
    "stationarity",
    "optimize_total_overhead",
]


class OverheadError(ConfigError):
    """Overhead lengths do not fit the frame."""


class InfeasibleTotalError(OverheadError):
    """The optimal split is undefined (``K Nt <= Nr``)."""


def minimal_lengths(K: int, Nt: int, Nr: int) -> tuple[int, int]:
    """Shortest training and feedback epochs allowing orthogonality."""
    return K * Nr, K * K * Nt


def _split_constant(K, Nt, Nr):
    if K * Nt <= Nr:
        raise InfeasibleTotalError(f"K*Nt > Nr required ({K * Nt} <= {Nr})")
    root = math.sqrt(K * Nt * Nr)
    return root, (Nr + root) ** 2 / (K * Nt - Nr)


@dataclasses.dataclass(frozen=True)
class OverheadModel:
    """Frame length, operating point and network for overhead planning.

    Parameters
    ----------
    T : float
        Frame (coherence block) length in symbols.
    R_sum_mean : float
        Mean perfect-CSI sum rate at the operating point, bits/s/Hz.
    alpha : float
        Forward to feedback power ratio ``P / Pf``.
    config : NetworkConfig
    """

    T: float
    R_sum_mean: float
    alpha: float
    config: NetworkConfig

    def __post_init__(self):
        K, Nt, Nr = self.config.K, self.config.Nt, self.config.Nr
        tp, tc = minimal_lengths(K, Nt, Nr)
        if not self.T > tp + tc:
            raise OverheadError(f"T > K*Nr + K^2*Nt violated ({self.T} <= {tp + tc})")
        if not self.alpha > 0:
            raise OverheadError(f"alpha > 0 violated (alpha={self.alpha})")
        _split_constant(K, Nt, Nr)

    @property
    def gamma(self) -> np.ndarray:
        """Per-user constants ``alpha (K - 1/d_i) (Nr + sqrt(K Nt Nr))^2 / (K Nt - Nr)``."""
        K, Nt, Nr = self.config.K, self.config.Nt, self.config.Nr
        _, const = _split_constant(K, Nt, Nr)
        d = np.asarray(self.config.d, dtype=float)
        return self.alpha * (K - 1.0 / d) * const

    @property
    def minimal_total(self) -> int:
        return sum(minimal_lengths(self.config.K, self.config.Nt, self.config.Nr))


@dataclasses.dataclass(frozen=True)
class EffectiveRate:
    """Effective rate and whether the loss bound exceeded the rate."""

    value: float
    clamped: bool


def effective_rate(tau_p, tau_c, model: OverheadModel, high_snr=True, full=False):
    """Expected throughput net of overhead and bounded rate loss.

    ``((T - tau_c - tau_p)/T) * (R_sum_mean - sum_i d_i log2(1 + alpha c2 (K - 1/d_i)))``,
    clamped below at zero. ``high_snr=True`` (default) uses the
    noise-free ``c2``, the form the optimizer works with; ``False`` adds
    the finite-SNR correction from ``model.config.Pf``.

    Returns
    -------
    float, or :class:`EffectiveRate` when ``full`` is true.

    Raises
    ------
    OverheadError
        ``tau_p + tau_c > T``.
    """
    T = model.T
    if tau_p + tau_c > T:
        raise OverheadError(f"overhead {tau_p} + {tau_c} exceeds frame length {T}")
    cfg = model.config
    c2 = bound_constant(cfg, tau_p, tau_c, variant="c2", high_snr=high_snr)
    d = np.asarray(cfg.d, dtype=float)
    loss = float(np.sum(d * np.log2(1.0 + model.alpha * c2 * (cfg.K - 1.0 / d))))
    raw = (T - tau_c - tau_p) / T * (model.R_sum_mean - loss)
    value = max(raw, 0.0)
    if full:
        return EffectiveRate(value=value, clamped=raw < 0)
    return value


@dataclasses.dataclass(frozen=True)
class Split:
    """Training/feedback split of a fixed overhead budget.

    ``tau_p`` and ``tau_c`` are integers; ``tau_p_cont`` and
    ``tau_c_cont`` the continuous optimum. ``c_opt`` is ``c2`` at the
    continuous optimum and ``c2`` the value at the integer split.
    ``minimal`` flags a budget below the minimal lengths, in which case
    the minimal lengths are returned.
    """

    tau_p: int
    tau_c: int
    tau_p_cont: float
    tau_c_cont: float
    c_opt: float
    c2: float
    minimal: bool = False


def _c2_high(K, Nt, Nr, tau_p, tau_c):
    return (Nr * Nr / tau_p + K * Nt * Nr / tau_c) / (K * Nt - Nr)


def optimal_split(T_total, K, Nt, Nr) -> Split:
    """Split a budget of ``T_total`` symbols to minimize ``c2``.

    The continuous optimum puts ``Nr / (Nr + sqrt(K Nt Nr))`` of the
    budget on training. The integer split keeps ``tau_p + tau_c =
    floor(T_total)``, takes the better of the two roundings of the
    training share, and respects the minimal lengths.

    Raises
    ------
    InfeasibleTotalError
        ``K Nt <= Nr``.
    """
    root, const = _split_constant(K, Nt, Nr)
    tp_cont = T_total * Nr / (Nr + root)
    tc_cont = T_total * root / (Nr + root)
    c_opt = const / T_total
    tp_min, tc_min = minimal_lengths(K, Nt, Nr)
    budget = int(math.floor(T_total + 1e-9))
    if budget < tp_min + tc_min:
        c2 = _c2_high(K, Nt, Nr, tp_min, tc_min)
        return Split(tp_min, tc_min, tp_cont, tc_cont, c_opt, c2, minimal=True)
    best = None
    for tp in {math.floor(tp_cont), math.ceil(tp_cont)}:
        tp = min(max(tp, tp_min), budget - tc_min)
        tc = budget - tp
        c2 = _c2_high(K, Nt, Nr, tp, tc)
        if best is None or c2 < best[2]:
            best = (tp, tc, c2)
    return Split(best[0], best[1], tp_cont, tc_cont, c_opt, best[2])


def stationarity(T_total, model: OverheadModel, form="exact"):
    """Derivative of the relaxed objective with respect to ``T_total``.

    The relaxed objective is
    ``(1 - x/T) (R - sum_i d_i log2(1 + gamma_i/x))`` at ``x = T_total``
    with the optimal split substituted. ``form="exact"`` returns its true
    derivative. ``form="simplified"`` evaluates the variant that uses
    natural logarithms and ``d_i / (x (x + gamma_i))`` in the second
    term, kept for comparison with published curves.

    Returns
    -------
    value : float
    scale : float
        Sum of the magnitudes of the two terms, for relative residuals.
    """
    x = float(T_total)
    T = model.T
    d = np.asarray(model.config.d, dtype=float)
    g = model.gamma
    if form == "exact":
        loss = np.sum(d * np.log2(1.0 + g / x))
        slope = np.sum(d * g / (x * (x + g))) / math.log(2.0)
    elif form == "simplified":
        loss = np.sum(d * np.log(1.0 + g / x))
        slope = np.sum(d / (x * (x + g)))
    else:
        raise ValueError(f"form must be 'exact' or 'simplified', got {form!r}")
    first = -(model.R_sum_mean - loss) / T
    second = (1.0 - x / T) * slope
    return float(first + second), float(abs(first) + abs(second))


@dataclasses.dataclass(frozen=True)
class OverheadOptimum:
    """Result of :func:`optimize_total_overhead`.

    Attributes
    ----------
    T_total : int
        Integer overhead ``tau_p + tau_c`` of the returned point.
    tau_p, tau_c : int
    R_eff : float
        Effective rate at ``(tau_p, tau_c)``.
    T_total_cont : float
        Continuous optimum within ``[minimal, T)``.
    T_total_unconstrained : float or None
        Root of the stationarity condition on ``(0, T)`` ignoring the
        minimal lengths, ``None`` when the relaxed objective has no
        interior maximum.
    boundary : bool
        The optimum sits at the minimal overhead.
    residual : float
        Relative stationarity residual at ``T_total_cont`` (``nan`` on
        the boundary).
    """

    T_total: int
    tau_p: int
    tau_c: int
    R_eff: float
    T_total_cont: float
    T_total_unconstrained: float | None
    boundary: bool
    residual: float


def _root(model, lo, hi, form):
    f = lambda x: stationarity(x, model, form)[0]  # noqa: E731
    flo, fhi = f(lo), f(hi)
    if flo <= 0 or fhi >= 0:
        return None
    return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def _climb(best, model, high_snr):
    cfg = model.config
    lo, top = model.minimal_total, math.ceil(model.T) - 1
    for step in (1, -1):
        total = best[0] + best[1]
        while lo <= total + step <= top:
            total += step
            s = optimal_split(total, cfg.K, cfg.Nt, cfg.Nr)
            R = effective_rate(s.tau_p, s.tau_c, model, high_snr=high_snr)
            if not R > best[2]:
                break
            best = (s.tau_p, s.tau_c, R)
    return best


def optimize_total_overhead(model: OverheadModel, form="exact", high_snr=True) -> OverheadOptimum:
    """Best total overhead and split for ``model``.

    Solves the stationarity condition on the continuous relaxation by
    bracketed root finding, then evaluates integer points around the
    continuous optimum with :func:`effective_rate` and keeps the best.
    When the derivative is already non-positive at the minimal overhead
    the search starts from the minimal lengths and ``boundary=True``.

    The relaxation assumes an interior split, which stops holding near the
    minimal lengths where one of them is clamped. The integer result is
    therefore refined by stepping the total budget while the effective
    rate of its optimal split keeps improving.
    """
    cfg = model.config
    K, Nt, Nr = cfg.K, cfg.Nt, cfg.Nr
    T = model.T
    lo = float(model.minimal_total)
    hi = T * (1.0 - 1e-12)
    tiny = 1e-9 * max(1.0, float(np.min(model.gamma)))
    x_free = _root(model, tiny, hi, form)
    x_cont = _root(model, lo, hi, form)

    tp_min, tc_min = minimal_lengths(K, Nt, Nr)
    if x_cont is None:
        R = effective_rate(tp_min, tc_min, model, high_snr=high_snr)
        tp, tc, R = _climb((tp_min, tc_min, R), model, high_snr)
        return OverheadOptimum(tp + tc, tp, tc, R, lo, x_free, True, float("nan"))

    value, scale = stationarity(x_cont, model, form)
    residual = abs(value) / scale if scale > 0 else 0.0

    # integer neighbors of the continuous split, widened by a couple of
    # budgets on each side so rounding of the total is also covered
    split = optimal_split(x_cont, K, Nt, Nr)
    candidates = set()
    for tp in (math.floor(split.tau_p_cont), math.ceil(split.tau_p_cont)):
        for tc in (math.floor(split.tau_c_cont), math.ceil(split.tau_c_cont)):
            candidates.add((tp, tc))
    for budget in range(int(math.floor(x_cont)) - 2, int(math.ceil(x_cont)) + 3):
        if budget >= lo:
            s = optimal_split(budget, K, Nt, Nr)
            candidates.add((s.tau_p, s.tau_c))
    best = None
    for tp, tc in sorted(candidates):
        if tp < tp_min or tc < tc_min or tp + tc >= T:
            continue
        R = effective_rate(tp, tc, model, high_snr=high_snr)
        if best is None or R > best[2]:
            best = (tp, tc, R)
    if best is None:
        R = effective_rate(tp_min, tc_min, model, high_snr=high_snr)
        best = (tp_min, tc_min, R)
    tp, tc, R = _climb(best, model, high_snr)
    return OverheadOptimum(tp + tc, tp, tc, R, float(x_cont), x_free, False, float(residual))
