"""Reference numpy kernel for minimum-leakage alternating minimization.

Same contract as the compiled ``_kernel_cy.min_leakage``; used when the
extension is not built or when ``ANALOG_IA_KERNEL=python``.
"""

import numpy as np


def min_leakage(H, F, d, max_iters, tol):
    """Run leakage-minimizing iterations in place on ``F``.

    Parameters
    ----------
    H : complex ndarray, shape (K, K, Nr, Nt)
        ``H[i, k]`` maps source ``k`` to sink ``i``.
    F : complex ndarray, shape (K, Nt, dmax)
        Initial orthonormal precoders; overwritten with the result. Only
        the first ``d[k]`` columns of ``F[k]`` are read or written.
    d : int ndarray, shape (K,)
    max_iters : int
    tol : float
        Stop once the square root of the total leakage is ``<= tol``.

    Returns
    -------
    n_iters : int
    history : ndarray, shape (n_iters,)
        Total leakage ``sum_i sum_{k != i} ||W_i^* H_ik F_k||_F^2`` after
        each iteration.
    W : complex ndarray, shape (K, Nr, dmax)
        Minimum-interference receive subspaces from the last iteration.
    """
    K = H.shape[0]
    Nr = H.shape[2]
    W = np.zeros((K, Nr, F.shape[2]), dtype=complex)
    history = np.empty(max_iters)
    n = 0
    for it in range(max_iters):
        for i in range(K):
            Q = np.zeros((Nr, Nr), dtype=complex)
            for k in range(K):
                if k != i:
                    A = H[i, k] @ F[k, :, : d[k]]
                    Q += A @ A.conj().T
            _, V = np.linalg.eigh(Q)
            W[i, :, : d[i]] = V[:, : d[i]]
        for k in range(K):
            Nt = H.shape[3]
            Q = np.zeros((Nt, Nt), dtype=complex)
            for i in range(K):
                if i != k:
                    B = H[i, k].conj().T @ W[i, :, : d[i]]
                    Q += B @ B.conj().T
            _, V = np.linalg.eigh(Q)
            F[k, :, : d[k]] = V[:, : d[k]]
        cost = 0.0
        for i in range(K):
            for k in range(K):
                if k != i:
                    M = W[i, :, : d[i]].conj().T @ H[i, k] @ F[k, :, : d[k]]
                    cost += float(np.vdot(M, M).real)
        history[it] = cost
        n = it + 1
        if np.sqrt(cost) <= tol:
            break
    return n, history[:n].copy(), W
