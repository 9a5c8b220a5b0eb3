"""Sum rates, rate loss under imperfect CSI and the analytical loss bounds."""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

import numpy as np

from .config import ConfigError, NetworkConfig
from .ia.core import IaSolution, cross_gains

__all__ = [
    "RATE_COLUMNS",
    "InsufficientDataError",
    "ZfRates",
    "RateReport",
    "RateLoss",
    "stream_powers",
    "sum_rate_zf",
    "sum_rate_joint",
    "bound_constant",
    "rate_loss_bound",
    "empirical_rate_loss",
    "multiplexing_gain_fit",
]

RATE_COLUMNS = (
    "trial",
    "snr_dB",
    "mode",
    "R_perfect_zf",
    "R_imperfect_zf",
    "R_perfect_joint",
    "R_imperfect_joint",
    "delta_R",
    "bound_c",
    "bound_c2",
    "max_leakage",
)


class InsufficientDataError(ValueError):
    """Too few trials or too narrow an SNR span for the requested statistic."""


@dataclasses.dataclass(frozen=True)
class ZfRates:
    """Per-stream zero-forcing rates.

    ``per_stream``, ``desired`` and ``leakage`` have shape ``(K, dmax)``
    with zeros in padded slots. ``desired`` is ``|w* H_ii f|^2``;
    ``leakage`` is the interference power seen by the stream.
    """

    per_stream: np.ndarray
    desired: np.ndarray
    leakage: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_stream.sum())


def stream_powers(H, F, W, P):
    """Desired gains and interference powers for every stream.

    Returns
    -------
    desired : ndarray, shape (K, dmax)
        ``|w_i^m* H_ii f_i^m|^2``.
    leakage : ndarray, shape (K, dmax)
        ``sum_{(k,l) != (i,m)} (P/d_k) |w_i^m* H_ik f_k^l|^2``, summed term
        by term.
    """
    d = [f.shape[1] for f in F]
    K = len(d)
    g2 = np.abs(cross_gains(H, F, W)) ** 2
    dmax = max(d)
    desired = np.zeros((K, dmax))
    leakage = np.zeros((K, dmax))
    for i in range(K):
        for m in range(d[i]):
            total = 0.0
            for k in range(K):
                scale = P / d[k]
                for l in range(d[k]):
                    if (k, l) != (i, m):
                        total += scale * g2[i, m, k, l]
            desired[i, m] = g2[i, m, i, m]
            leakage[i, m] = total
    return desired, leakage


def sum_rate_zf(H, solution: IaSolution, P: float, sigma2: float) -> ZfRates:
    """Per-stream rates treating residual interference as noise.

    Stream ``m`` of user ``i`` gets
    ``log2(1 + (P/d_i) |w* H_ii f|^2 / (leakage + sigma2))``.
    """
    if solution.W is None:
        raise ValueError("solution needs combiners")
    H = np.asarray(H)
    desired, leakage = stream_powers(H, solution.F, solution.W, P)
    d = np.asarray(solution.d, dtype=float)
    mask = np.arange(desired.shape[1])[None, :] < d[:, None]
    sinr = (P / d)[:, None] * desired / (leakage + sigma2)
    rates = np.where(mask, np.log2(1.0 + sinr), 0.0)
    return ZfRates(per_stream=rates, desired=desired, leakage=leakage)


def sum_rate_joint(H, F: Sequence[np.ndarray], P: float, sigma2: float) -> float:
    """Sum rate of joint decoders that whiten interference.

    ``sum_i log2 det(I + (P/d_i) H_ii F_i F_i* H_ii* R_i^-1)`` with
    ``R_i = sigma2 I + sum_{k != i} (P/d_k) H_ik F_k F_k* H_ik*``,
    evaluated as ``log det(R_i + S_i) - log det(R_i)`` through Cholesky
    factors since both matrices are Hermitian positive definite.
    """
    H = np.asarray(H)
    K, _, Nr, _ = H.shape
    d = [f.shape[1] for f in F]
    total = 0.0
    for i in range(K):
        cov = [(P / d[k]) * (H[i, k] @ F[k]) @ (H[i, k] @ F[k]).conj().T for k in range(K)]
        R = sigma2 * np.eye(Nr) + sum(cov[k] for k in range(K) if k != i)
        total += _logdet(R + cov[i]) - _logdet(R)
    return float(total / np.log(2.0))


def _logdet(A):
    L = np.linalg.cholesky(A)
    return 2.0 * np.sum(np.log(np.abs(np.diag(L))))


def bound_constant(config: NetworkConfig, tau_p, tau_c, variant="c", high_snr=False, mode="cooperative"):
    """Loss-bound constant ``c`` (Frobenius bound) or ``c2`` (unitarily invariant errors).

    ``c2 = (Nr^2/tau_p + K Nt Nr (1 + eps)/tau_c) / (M - Nr)`` and
    ``c = Nt Nr c2``, with ``eps = Nr sigma2 / (tau_p Pf)`` taken from
    ``config`` (``0`` when ``high_snr``) and ``M`` as in
    :func:`analog_ia.feedback.theoretical_mse`.
    """
    K, Nt, Nr = config.K, config.Nt, config.Nr
    M = K * Nt if mode == "cooperative" else Nt
    if M <= Nr:
        raise ConfigError(f"bound undefined for M = {M} <= Nr = {Nr}")
    eps = 0.0 if high_snr else Nr * config.sigma2 / (tau_p * config.Pf)
    c2 = (Nr * Nr / tau_p + K * Nt * Nr * (1.0 + eps) / tau_c) / (M - Nr)
    if variant == "c2":
        return c2
    if variant == "c":
        return Nt * Nr * c2
    raise ValueError(f"variant must be 'c' or 'c2', got {variant!r}")


def rate_loss_bound(config: NetworkConfig, tau_p, tau_c, alpha, variant="c", high_snr=False, mode="cooperative"):
    """Upper bound on the mean ZF sum-rate loss.

    ``sum_i d_i log2(1 + alpha c (K - 1/d_i))`` with ``c`` from
    :func:`bound_constant`.
    """
    c = bound_constant(config, tau_p, tau_c, variant=variant, high_snr=high_snr, mode=mode)
    d = np.asarray(config.d, dtype=float)
    return float(np.sum(d * np.log2(1.0 + alpha * c * (config.K - 1.0 / d))))


@dataclasses.dataclass(frozen=True)
class RateReport:
    """Rates of one trial at one operating point.

    ``desired`` holds ``|w* H f|^2`` for the imperfect-CSI vectors on the
    true channels and ``leakage`` the matching interference powers.
    """

    trial: int
    snr_dB: float
    mode: str
    R_perfect_zf: float
    R_imperfect_zf: float
    R_perfect_joint: float
    R_imperfect_joint: float
    bound_c: float
    bound_c2: float
    max_leakage: float
    desired: np.ndarray | None = None
    leakage: np.ndarray | None = None

    @property
    def delta_R(self) -> float:
        return self.R_perfect_zf - self.R_imperfect_zf

    def row(self) -> dict:
        return {name: getattr(self, name) for name in RATE_COLUMNS}


@dataclasses.dataclass(frozen=True)
class RateLoss:
    """Mean rate loss with a normal-approximation confidence interval."""

    mean: float
    half_width: float
    n: int

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width


def empirical_rate_loss(reports=None, perfect=None, imperfect=None, decoder="zf", z=1.959963984540054) -> RateLoss:
    """Mean perfect minus imperfect rate with a 95% interval.

    Pass either ``reports`` (a sequence of :class:`RateReport`) or the two
    rate arrays. Trials are paired, so the interval uses the spread of the
    per-trial differences.
    """
    if reports is not None:
        perfect = [getattr(r, f"R_perfect_{decoder}") for r in reports]
        imperfect = [getattr(r, f"R_imperfect_{decoder}") for r in reports]
    diff = np.asarray(perfect, dtype=float) - np.asarray(imperfect, dtype=float)
    n = diff.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 trials, got {n}")
    half = z * diff.std(ddof=1) / np.sqrt(n)
    return RateLoss(mean=float(diff.mean()), half_width=float(half), n=n)


def multiplexing_gain_fit(snr_db, rates, min_points=3, min_span_db=10.0) -> float:
    """Least-squares slope of rate against ``log2(P)``.

    ``snr_db`` are forward SNRs in dB relative to unit noise.
    """
    x = np.asarray(snr_db, dtype=float)
    y = np.asarray(rates, dtype=float)
    if x.size < min_points:
        raise InsufficientDataError(f"need at least {min_points} points, got {x.size}")
    if x.max() - x.min() < min_span_db:
        raise InsufficientDataError(f"SNR span {x.max() - x.min():g} dB below {min_span_db:g} dB")
    log2p = x * np.log2(10.0) / 10.0
    slope, _ = np.polyfit(log2p, y, 1)
    return float(slope)
