"""Two-phase analog feedback: reverse-link training, then spread CSI feedback.

Sinks first send orthogonal pilots so every source can estimate its
reverse channels (MMSE). Each sink then transmits its unquantized forward
channel row ``[H_i1 ... H_iK]``, spread by an orthogonal matrix so all
sinks can feed back at once, and the sources recover it by least squares.

Three ways of using the received feedback are modeled:

``cooperative``
    The whole received feedback matrix is shared among sources, which all
    hold one common estimate.
``centralized``
    One source (index ``central``, default 0) estimates from its own rows,
    solves the alignment problem and forwards the result over a noisy
    analog link (see :func:`centralized_feedforward`).
``distributed``
    Every source estimates from its own rows, so each holds a different
    estimate of the same channels.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Mapping

import numpy as np

from .channel import ChannelRealization, crandn
from .config import ConfigError, DimensionError, NetworkConfig
from .ia.core import IaSolution

__all__ = [
    "MODES",
    "FeedbackError",
    "InsufficientLengthError",
    "FeedbackParams",
    "FeedbackOutcome",
    "FeedforwardOutcome",
    "make_orthogonal_pilots",
    "reverse_train",
    "feedback_csi",
    "theoretical_mse",
    "centralized_feedforward",
    "feedback_params_from_mapping",
]

MODES = ("cooperative", "centralized", "distributed")

# Gram matrices above this condition number make the LS estimate unreliable.
GRAM_COND_LIMIT = 1e12


class FeedbackError(ConfigError):
    """Feedback parameters are inconsistent with the network."""


class InsufficientLengthError(FeedbackError):
    """A pilot or spreading epoch is too short for orthogonality."""


@dataclasses.dataclass(frozen=True)
class FeedbackParams:
    """Training length ``tau_p``, feedback length ``tau_c`` and mode."""

    tau_p: int
    tau_c: int
    mode: str = "cooperative"

    def validate(self, config: NetworkConfig) -> "FeedbackParams":
        """Check the minimal lengths and the mode's dimension condition."""
        K, Nt, Nr = config.K, config.Nt, config.Nr
        if self.mode not in MODES:
            raise FeedbackError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.tau_p < K * Nr:
            raise InsufficientLengthError(f"tau_p >= K*Nr violated ({self.tau_p} < {K * Nr})")
        if self.tau_c < K * K * Nt:
            raise InsufficientLengthError(f"tau_c >= K^2*Nt violated ({self.tau_c} < {K * K * Nt})")
        if self.mode == "cooperative":
            if K * Nt < Nr:
                raise DimensionError(f"K*Nt >= Nr violated ({K * Nt} < {Nr})")
        elif Nt < Nr:
            raise DimensionError(f"Nt >= Nr violated for {self.mode} mode ({Nt} < {Nr})")
        return self


def feedback_params_from_mapping(data: Mapping) -> FeedbackParams:
    """Read ``tau_p``, ``tau_c`` and ``mode`` from config-file keys."""
    missing = [k for k in ("tau_p", "tau_c") if k not in data]
    if missing:
        raise ConfigError(f"missing feedback keys: {', '.join(missing)}")
    return FeedbackParams(int(data["tau_p"]), int(data["tau_c"]), str(data.get("mode", "cooperative")))


@dataclasses.dataclass(frozen=True)
class FeedbackOutcome:
    """Result of one training and feedback round.

    Attributes
    ----------
    mode : str
    G_hat : ndarray, shape (K, K, Nt, Nr)
        MMSE reverse-channel estimates, ``G_hat[k, i]`` held by source ``i``.
    H_hat : ndarray
        Estimated forward channels with shape ``(K, K, Nr, Nt)``; in
        distributed mode one set per source node, shape
        ``(K, K, K, Nr, Nt)`` indexed by node first.
    H_err : ndarray
        ``H_hat - H``, same shape as ``H_hat``.
    sigma_f2_empirical : float
        Mean squared magnitude of the entries of ``H_err``.
    gram_cond : float
        Largest condition number among the Gram matrices inverted.
    ill_conditioned : bool
        ``gram_cond`` exceeded the reliability limit; callers should
        exclude or resample the trial.
    """

    mode: str
    G_hat: np.ndarray
    H_hat: np.ndarray
    H_err: np.ndarray
    sigma_f2_empirical: float
    gram_cond: float
    ill_conditioned: bool

    def estimate_for(self, node: int) -> np.ndarray:
        """Channel estimate set used by source ``node``."""
        if self.mode == "distributed":
            return self.H_hat[node]
        return self.H_hat


def make_orthogonal_pilots(rows: int, length: int, users: int = 1, seed=None) -> np.ndarray:
    """Per-user blocks of mutually orthonormal rows.

    Block ``k`` (``rows x length``) is taken from the rows of the unitary
    DFT matrix of size ``length``, so ``Phi_i Phi_k^* = delta_ik I``.

    Parameters
    ----------
    rows : int
        Rows per user block (antennas per user).
    length : int
        Epoch length in symbols.
    users : int
        Number of users sharing the epoch.
    seed : int, optional
        When given, the DFT rows are assigned to users in a seeded random
        order; otherwise in natural order.

    Returns
    -------
    ndarray, shape (users, rows, length)

    Raises
    ------
    InsufficientLengthError
        ``length < rows * users``.
    """
    if length < rows * users:
        raise InsufficientLengthError(f"length >= rows*users violated ({length} < {rows * users})")
    n = np.arange(length)
    dft = np.exp(-2j * np.pi * np.outer(n, n) / length) / np.sqrt(length)
    picks = np.arange(rows * users)
    if seed is not None:
        picks = np.random.default_rng(seed).permutation(length)[: rows * users]
    return dft[picks].reshape(users, rows, length)


def _training_amplitude(tau_p, Pf, Nr):
    return np.sqrt(tau_p * Pf / Nr)


def _feedback_amplitude(tau_c, Pf, K, Nt, Nr):
    return np.sqrt(tau_c * Pf / (K * Nt * Nr))


def reverse_train(channels: ChannelRealization, params: FeedbackParams, Pf: float, sigma2: float, rng) -> np.ndarray:
    """MMSE estimates of every reverse channel from orthogonal pilots.

    Source ``i`` receives ``Y_i = a sum_k G_ki Phi_k + V_i`` with
    ``a = sqrt(tau_p Pf / Nr)`` and estimates
    ``G_hat[k, i] = a / (sigma2 + a^2) * Y_i Phi_k^*``.

    Returns
    -------
    ndarray, shape (K, K, Nt, Nr)
    """
    G = channels.G
    K, _, Nt, Nr = G.shape
    Phi = make_orthogonal_pilots(Nr, params.tau_p, users=K)
    a = _training_amplitude(params.tau_p, Pf, Nr)
    V = np.sqrt(sigma2) * crandn(rng, K, Nt, params.tau_p)
    Y = a * np.einsum("kitr,krl->itl", G, Phi) + V
    gain = a / (sigma2 + a * a)
    return gain * np.einsum("itl,krl->kitr", Y, Phi.conj())


def _ls_estimate(G_rows, Z, b):
    """``(1/b) (G* G)^-1 G* Z`` and the condition number of ``G* G``."""
    gram = G_rows.conj().T @ G_rows
    cond = np.linalg.cond(gram)
    if not cond <= GRAM_COND_LIMIT:
        # flagged by the caller; minimum-norm solution keeps the trial finite
        return np.linalg.lstsq(G_rows, Z, rcond=None)[0] / b, np.inf if not np.isfinite(cond) else cond
    return np.linalg.solve(gram, G_rows.conj().T @ Z) / b, cond


def feedback_csi(
    channels: ChannelRealization,
    G_hat: np.ndarray,
    params: FeedbackParams,
    Pf: float,
    sigma2: float,
    rng,
    central: int = 0,
) -> FeedbackOutcome:
    """Spread analog feedback of the forward channels with LS recovery.

    Sink ``i`` sends ``b H_i Psi_i`` with ``b = sqrt(tau_c Pf / (K Nt Nr))``
    and ``H_i = [H_i1 ... H_iK]``. Source ``j`` receives its ``Nt`` rows of
    the stacked feedback ``Y_c``, and despreading ``Y_c Psi_i^*`` isolates
    the payload of sink ``i``.

    Returns
    -------
    FeedbackOutcome
    """
    if not Pf > 0:
        raise FeedbackError(f"Pf > 0 required for feedback (Pf={Pf})")
    H = channels.H
    G = channels.G
    K, _, Nr, Nt = H.shape
    Psi = make_orthogonal_pilots(K * Nt, params.tau_c, users=K)
    b = _feedback_amplitude(params.tau_c, Pf, K, Nt, Nr)

    # H_rows[i] = [H_i1 ... H_iK], Nr x K*Nt
    H_rows = H.transpose(0, 2, 1, 3).reshape(K, Nr, K * Nt)
    X = b * np.einsum("irc,icl->irl", H_rows, Psi)
    V = np.sqrt(sigma2) * crandn(rng, K, Nt, params.tau_c)
    # Y[j] = sum_i G_ij X_i + V_j, Nt x tau_c at source j
    Y = np.einsum("ijtr,irl->jtl", G, X) + V
    # Z[j, i] = Y_j Psi_i^*, Nt x K*Nt
    Z = np.einsum("jtl,icl->jitc", Y, Psi.conj())

    def unstack(rows):
        # Nr x K*Nt -> (K, Nr, Nt)
        return rows.reshape(Nr, K, Nt).transpose(1, 0, 2)

    worst = 0.0
    if params.mode == "cooperative":
        H_hat = np.empty_like(H)
        for i in range(K):
            G_stack = G_hat[i].reshape(K * Nt, Nr)
            Z_stack = Z[:, i].reshape(K * Nt, K * Nt)
            est, cond = _ls_estimate(G_stack, Z_stack, b)
            worst = max(worst, cond)
            H_hat[i] = unstack(est)
    else:
        nodes = range(K) if params.mode == "distributed" else [central]
        sets = []
        for j in nodes:
            Hj = np.empty_like(H)
            for i in range(K):
                est, cond = _ls_estimate(G_hat[i, j], Z[j, i], b)
                worst = max(worst, cond)
                Hj[i] = unstack(est)
            sets.append(Hj)
        H_hat = np.stack(sets) if params.mode == "distributed" else sets[0]

    H_err = H_hat - H
    return FeedbackOutcome(
        mode=params.mode,
        G_hat=G_hat,
        H_hat=H_hat,
        H_err=H_err,
        sigma_f2_empirical=float(np.mean(np.abs(H_err) ** 2)),
        gram_cond=float(worst),
        ill_conditioned=bool(worst > GRAM_COND_LIMIT),
    )


def theoretical_mse(K, Nt, Nr, tau_p, tau_c, Pf, sigma2, mode="cooperative", high_snr=False) -> float:
    """Per-entry mean squared error of the forward-channel estimates.

    ``sigma2 / ((M - Nr) Pf) * (Nr^2/tau_p + K Nt Nr/tau_c * (1 + eps))``
    with ``eps = Nr sigma2 / (tau_p Pf)``, where ``M = K Nt`` when the
    feedback is shared (cooperative) and ``M = Nt`` when a node only uses
    its own rows. ``high_snr=True`` drops ``eps``.

    Raises
    ------
    DimensionError
        ``M <= Nr``, where the expected error is unbounded.
    """
    if mode not in MODES:
        raise FeedbackError(f"mode must be one of {MODES}, got {mode!r}")
    M = K * Nt if mode == "cooperative" else Nt
    if M <= Nr:
        which = "K*Nt > Nr" if mode == "cooperative" else "Nt > Nr"
        raise DimensionError(f"{which} required for a finite error variance ({M} <= {Nr})")
    eps = 0.0 if high_snr else Nr * sigma2 / (tau_p * Pf)
    return sigma2 / ((M - Nr) * Pf) * (Nr * Nr / tau_p + K * Nt * Nr / tau_c * (1.0 + eps))


@dataclasses.dataclass(frozen=True)
class FeedforwardOutcome:
    """Solution as seen after analog feedforward from the central source.

    ``solution`` holds the precoders each source actually uses (the
    central one exact, the rest perturbed and re-orthonormalized) and the
    combiners the sinks received. ``F_noise`` and ``W_noise`` are the
    perturbations added before re-normalization.
    """

    solution: IaSolution
    F_noise: tuple[np.ndarray, ...]
    W_noise: tuple[np.ndarray, ...]


def _orthonormalize(A):
    Q, R = np.linalg.qr(A)
    diag = np.diag(R)
    mag = np.abs(diag)
    return Q * np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)


def centralized_feedforward(
    solution: IaSolution,
    Pf: float,
    sigma2: float,
    rng,
    central: int = 0,
    noise_var: float | None = None,
) -> FeedforwardOutcome:
    """Perturb a centrally computed solution by noisy analog feedforward.

    Each forwarded precoder and combiner entry gets independent
    ``CN(0, noise_var)`` noise, ``noise_var = sigma2 / Pf`` by default.
    Perturbed precoders are re-orthonormalized (QR with a positive
    diagonal), perturbed combiners rescaled to unit norm. The central
    source keeps its own precoder exact.
    """
    if solution.W is None:
        raise ValueError("solution needs combiners for feedforward")
    if noise_var is None:
        noise_var = sigma2 / Pf if np.isfinite(Pf) else 0.0
    scale = np.sqrt(noise_var)
    F_out, F_noise = [], []
    for k, F in enumerate(solution.F):
        noise = scale * crandn(rng, *F.shape)
        if k == central:
            noise = np.zeros_like(F)
        F_noise.append(noise)
        F_out.append(F if k == central or noise_var == 0 else _orthonormalize(F + noise))
    W_out, W_noise = [], []
    for W in solution.W:
        noise = scale * crandn(rng, *W.shape)
        W_noise.append(noise)
        if noise_var == 0:
            W_out.append(W)
        else:
            Wn = W + noise
            W_out.append(Wn / np.linalg.norm(Wn, axis=0, keepdims=True))
    perturbed = dataclasses.replace(
        solution, F=tuple(F_out), W=tuple(W_out), residual_leakage=None, min_desired=None
    )
    return FeedforwardOutcome(perturbed, tuple(F_noise), tuple(W_noise))
