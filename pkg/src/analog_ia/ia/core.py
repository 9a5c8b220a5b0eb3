"""Interference-aligning precoders and per-stream zero-forcing combiners."""

from __future__ import annotations

import dataclasses
import warnings
from collections.abc import Sequence

import numpy as np

from . import _backend

__all__ = [
    "IaConvergenceError",
    "DegenerateSpectrumWarning",
    "SolverOptions",
    "IaSolution",
    "canonical_phase",
    "random_unitary",
    "stack_columns",
    "solve_precoders",
    "zf_combiner",
    "combiners",
    "cross_gains",
    "max_leakage",
    "total_leakage",
    "solve_ia",
]

DEGENERATE_GAP = 1e-12


class IaConvergenceError(RuntimeError):
    """The solver did not reach the leakage tolerance.

    The best solution found is attached as ``solution`` so callers that
    can tolerate residual leakage may still use it.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class DegenerateSpectrumWarning(RuntimeWarning):
    """The two smallest singular values tie; the selection is a tie-break."""


@dataclasses.dataclass(frozen=True)
class SolverOptions:
    """Options for :func:`solve_precoders`.

    ``init`` overrides the random initialization with given precoders
    (one ``Nt x d_k`` matrix per source), e.g. to warm-start a solve on
    estimated channels from a perfect-CSI solution.
    """

    leakage_tol: float = 1e-8
    max_iters: int = 5000
    init_seed: object = 0
    init: Sequence[np.ndarray] | None = None
    kernel: str | None = None


@dataclasses.dataclass(frozen=True)
class IaSolution:
    """Precoders ``F[i]`` (Nt x d_i) and combiners ``W[i]`` (Nr x d_i).

    ``residual_leakage`` is the largest ``|w_i^m* H_ik f_k^l|`` over all
    ``(k, l) != (i, m)`` on the channels the solution was computed from.
    ``min_desired`` is the smallest ``|w_i^m* H_ii f_i^m|`` on the same
    channels. Both are ``None`` until combiners are filled in.
    """

    F: tuple[np.ndarray, ...]
    W: tuple[np.ndarray, ...] | None = None
    residual_leakage: float | None = None
    min_desired: float | None = None
    iterations: int = 0
    history: np.ndarray | None = None

    @property
    def K(self) -> int:
        return len(self.F)

    @property
    def d(self) -> tuple[int, ...]:
        return tuple(f.shape[1] for f in self.F)

    @property
    def F_stack(self) -> np.ndarray:
        return stack_columns(self.F)

    @property
    def W_stack(self) -> np.ndarray:
        if self.W is None:
            raise ValueError("combiners not computed")
        return stack_columns(self.W)


def stack_columns(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Stack per-user matrices into a zero-padded ``(K, rows, dmax)`` array."""
    K = len(mats)
    rows = mats[0].shape[0]
    dmax = max(m.shape[1] for m in mats)
    out = np.zeros((K, rows, dmax), dtype=complex)
    for k, m in enumerate(mats):
        out[k, :, : m.shape[1]] = m
    return out


def canonical_phase(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    V = np.array(V, dtype=complex, copy=True)
    if V.ndim == 1:
        return canonical_phase(V[:, None])[:, 0]
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    mag = np.abs(pivots)
    phase = np.where(mag > 0, np.conj(pivots) / np.where(mag > 0, mag, 1.0), 1.0)
    return V * phase


def random_unitary(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Haar-distributed ``n x d`` matrix with orthonormal columns."""
    z = rng.standard_normal((n, d, 2))
    Z = z[..., 0] + 1j * z[..., 1]
    Q, R = np.linalg.qr(Z)
    diag = np.diag(R)
    return Q * (diag / np.abs(diag))


def _check_channels(H, d):
    H = np.ascontiguousarray(H, dtype=complex)
    if H.ndim != 4 or H.shape[0] != H.shape[1]:
        raise ValueError(f"channels must have shape (K, K, Nr, Nt), got {H.shape}")
    K, _, Nr, Nt = H.shape
    d = tuple(int(x) for x in d)
    if len(d) != K:
        raise ValueError(f"expected {K} stream counts, got {len(d)}")
    if any(x < 1 or x > min(Nt, Nr) for x in d):
        raise ValueError(f"stream counts {d} must lie in [1, min(Nt, Nr)]")
    return H, d


def solve_precoders(H, d, options: SolverOptions = SolverOptions()) -> IaSolution:
    """Compute orthonormal aligning precoders by alternating minimization.

    Alternates between the least-interference receive subspace at each
    sink and the least-leakage transmit subspace at each source. Each
    half-step cannot increase the total leakage, which is recorded per
    iteration in ``history``.

    Raises
    ------
    IaConvergenceError
        Leakage is still above ``options.leakage_tol`` after
        ``options.max_iters`` iterations.
    """
    H, d = _check_channels(H, d)
    K, _, Nr, Nt = H.shape

    if K == 1:
        _, _, Vh = np.linalg.svd(H[0, 0])
        F = canonical_phase(Vh[: d[0]].conj().T)
        return IaSolution(F=(F,), iterations=0, history=np.zeros(0))

    if options.init is not None:
        F0 = stack_columns([np.asarray(f, dtype=complex) for f in options.init])
        if F0.shape != (K, Nt, max(d)):
            raise ValueError(f"init precoders have shape {F0.shape}, expected {(K, Nt, max(d))}")
    else:
        rng = np.random.default_rng(options.init_seed)
        F0 = stack_columns([random_unitary(rng, Nt, dk) for dk in d])
    F0 = np.ascontiguousarray(F0)

    kernel = _backend.get_kernel(options.kernel)
    n_iters, history, _ = kernel(H, F0, np.asarray(d, dtype=np.int64), int(options.max_iters), float(options.leakage_tol))
    F = tuple(canonical_phase(F0[k, :, : d[k]]) for k in range(K))
    solution = IaSolution(F=F, iterations=n_iters, history=history)
    final = float(np.sqrt(history[-1])) if len(history) else np.inf
    if not final <= options.leakage_tol:
        raise IaConvergenceError(
            f"leakage {final:.3g} above tolerance {options.leakage_tol:.3g} after {n_iters} iterations",
            solution,
        )
    return solution


def zf_combiner(H, F: Sequence[np.ndarray], i: int, m: int) -> np.ndarray:
    """Unit-norm zero-forcing combiner for stream ``m`` of sink ``i``.

    Returns the least dominant left singular vector of the interference
    matrix ``[H_i1 F_1, ..., H_ii F_i without column m, ..., H_iK F_K]``.
    When the matrix has no columns (a single user with a single stream)
    there is nothing to null and the matched filter is returned instead.
    """
    H = np.asarray(H)
    K = H.shape[0]
    blocks = []
    for k in range(K):
        HF = H[i, k] @ F[k]
        if k == i:
            HF = np.delete(HF, m, axis=1)
        blocks.append(HF)
    A = np.concatenate(blocks, axis=1)
    Nr = H.shape[2]
    if A.shape[1] == 0:
        v = H[i, i] @ F[i][:, m]
        return canonical_phase(v / np.linalg.norm(v))
    U, s, _ = np.linalg.svd(A, full_matrices=True)
    s_full = np.zeros(Nr)
    s_full[: min(len(s), Nr)] = s[:Nr]
    pick = Nr - 1
    if Nr > 1 and s_full[-2] - s_full[-1] <= DEGENERATE_GAP:
        warnings.warn(
            f"sink {i} stream {m}: smallest singular values tie within {DEGENERATE_GAP:g}",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
        pick = int(np.flatnonzero(s_full - s_full[-1] <= DEGENERATE_GAP)[0])
    return canonical_phase(U[:, pick])


def combiners(H, F: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    """Zero-forcing combiners for every stream of every sink."""
    K = len(F)
    W = []
    for i in range(K):
        cols = [zf_combiner(H, F, i, m) for m in range(F[i].shape[1])]
        W.append(np.stack(cols, axis=1))
    return tuple(W)


def cross_gains(H, F: Sequence[np.ndarray], W: Sequence[np.ndarray]) -> np.ndarray:
    """All effective gains ``G[i, m, k, l] = w_i^m* H_ik f_k^l``.

    Entries for padded (non-existent) streams are zero.
    """
    Fs = stack_columns(F)
    Ws = stack_columns(W)
    return np.einsum("irm,ikrt,ktl->imkl", Ws.conj(), np.asarray(H), Fs, optimize=True)


def _cross_mask(d):
    K = len(d)
    dmax = max(d)
    mask = np.zeros((K, dmax, K, dmax), dtype=bool)
    for i in range(K):
        for m in range(d[i]):
            for k in range(K):
                mask[i, m, k, : d[k]] = True
            mask[i, m, i, m] = False
    return mask


def max_leakage(H, F, W) -> float:
    """Largest cross gain magnitude over all ``(k, l) != (i, m)``."""
    g = cross_gains(H, F, W)
    d = tuple(f.shape[1] for f in F)
    return float(np.abs(g[_cross_mask(d)]).max(initial=0.0))


def total_leakage(H, F, W) -> float:
    """Sum of squared cross gain magnitudes."""
    g = cross_gains(H, F, W)
    d = tuple(f.shape[1] for f in F)
    return float((np.abs(g[_cross_mask(d)]) ** 2).sum())


def solve_ia(H, d, options: SolverOptions = SolverOptions()) -> IaSolution:
    """Precoders from :func:`solve_precoders` plus zero-forcing combiners.

    On non-convergence the raised error carries a solution with combiners
    filled in, so its residual leakage can be inspected.
    """
    H = np.asarray(H)
    try:
        pre = solve_precoders(H, d, options)
    except IaConvergenceError as err:
        err.solution = _with_combiners(H, err.solution)
        raise
    return _with_combiners(H, pre)


def _with_combiners(H, pre: IaSolution) -> IaSolution:
    W = combiners(H, pre.F)
    g = cross_gains(H, pre.F, W)
    d = pre.d
    mask = _cross_mask(d)
    leak = float(np.abs(g[mask]).max(initial=0.0))
    desired = [abs(g[i, m, i, m]) for i in range(len(d)) for m in range(d[i])]
    return dataclasses.replace(pre, W=W, residual_leakage=leak, min_desired=float(min(desired)))
