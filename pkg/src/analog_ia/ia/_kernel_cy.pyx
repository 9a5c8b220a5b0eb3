# Compiled minimum-leakage kernel. Contract identical to _kernel_py.min_leakage.
#
# Matrices are a few antennas wide, so products are plain loops and the
# Hermitian eigenproblems use cyclic Jacobi rotations: for n <= 8 this is
# several times faster than LAPACK's blocked tridiagonal path per call.

import numpy as np

from libc.math cimport sqrt


cdef inline double abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex conj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef int jacobi_eigh(double complex* a, int n, double complex* v, double* w, int* order) noexcept nogil:
    # Diagonalize the row-major Hermitian n x n matrix ``a`` in place.
    # Eigenvectors go to the columns of row-major ``v``; ``order`` receives
    # eigenvalue indices in ascending order. Returns the sweep count, or -1
    # if the off-diagonal mass failed to vanish.
    cdef int p, q, r, sweep, tmp, rotations
    cdef double total, thresh, mag, tau, t, c, s
    cdef double complex ph, ap, aq, x, y
    for p in range(n):
        for q in range(n):
            v[p * n + q] = 1.0 if p == q else 0.0
    total = 0.0
    for p in range(n * n):
        total = total + abs2(a[p])
    # off-diagonal entries below this are rounding noise
    thresh = 1e-15 * sqrt(total)
    for sweep in range(50):
        rotations = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                mag = sqrt(abs2(a[p * n + q]))
                if mag <= thresh:
                    continue
                rotations = rotations + 1
                ph = a[p * n + q] / mag
                tau = (a[q * n + q].real - a[p * n + p].real) / (2.0 * mag)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # A <- A U with U[:, p] = c e_p - s conj(ph) e_q,
                #                U[:, q] = s e_p + c conj(ph) e_q
                for r in range(n):
                    ap = a[r * n + p]
                    aq = a[r * n + q] * conj(ph)
                    a[r * n + p] = c * ap - s * aq
                    a[r * n + q] = s * ap + c * aq
                    ap = v[r * n + p]
                    aq = v[r * n + q] * conj(ph)
                    v[r * n + p] = c * ap - s * aq
                    v[r * n + q] = s * ap + c * aq
                # A <- U^* A
                for r in range(n):
                    x = a[p * n + r]
                    y = a[q * n + r] * ph
                    a[p * n + r] = c * x - s * y
                    a[q * n + r] = s * x + c * y
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
        if rotations == 0:
            break
    else:
        return -1
    for p in range(n):
        w[p] = a[p * n + p].real
        order[p] = p
    for p in range(1, n):
        q = p
        while q > 0 and w[order[q - 1]] > w[order[q]]:
            tmp = order[q]
            order[q] = order[q - 1]
            order[q - 1] = tmp
            q -= 1
    return sweep


def eigh_small(a_in):
    """Jacobi eigendecomposition of a small Hermitian matrix (for tests)."""
    cdef int n = a_in.shape[0]
    a_arr = np.ascontiguousarray(a_in, dtype=np.complex128).copy()
    v_arr = np.zeros((n, n), dtype=np.complex128)
    w_arr = np.zeros(n, dtype=np.float64)
    o_arr = np.zeros(n, dtype=np.intc)
    cdef double complex[:, ::1] a = a_arr
    cdef double complex[:, ::1] v = v_arr
    cdef double[::1] w = w_arr
    cdef int[::1] order = o_arr
    cdef int status
    with nogil:
        status = jacobi_eigh(&a[0, 0], n, &v[0, 0], &w[0], &order[0])
    if status < 0:
        raise RuntimeError("Jacobi sweeps did not converge")
    return w_arr[o_arr], v_arr[:, o_arr], status


def min_leakage(const double complex[:, :, :, ::1] H,
                double complex[:, :, ::1] F,
                long[::1] d,
                int max_iters,
                double tol):
    cdef int K = H.shape[0]
    cdef int Nr = H.shape[2]
    cdef int Nt = H.shape[3]
    cdef int dmax = F.shape[2]
    cdef int nmax = Nr if Nr > Nt else Nt

    W_arr = np.zeros((K, Nr, dmax), dtype=np.complex128)
    hist_arr = np.empty(max(max_iters, 1), dtype=np.float64)
    cdef double complex[:, :, ::1] W = W_arr
    cdef double[::1] hist = hist_arr
    cdef double complex[::1] Q = np.zeros(nmax * nmax, dtype=np.complex128)
    cdef double complex[::1] A = np.zeros(nmax * dmax, dtype=np.complex128)
    cdef double complex[::1] V = np.zeros(nmax * nmax, dtype=np.complex128)
    cdef double[::1] evals = np.zeros(nmax, dtype=np.float64)
    cdef int[::1] order = np.zeros(nmax, dtype=np.intc)

    cdef int it, i, k, r, r2, t, t2, j, l, n
    cdef int info = 0
    cdef int n_iters = 0
    cdef double cost
    cdef double complex acc

    with nogil:
        for it in range(max_iters):
            # receive subspaces: least-interference eigenvectors per sink
            n = Nr
            for i in range(K):
                for r in range(n * n):
                    Q[r] = 0
                for k in range(K):
                    if k == i:
                        continue
                    for r in range(Nr):
                        for l in range(d[k]):
                            acc = 0
                            for t in range(Nt):
                                acc = acc + H[i, k, r, t] * F[k, t, l]
                            A[r * dmax + l] = acc
                    for r in range(Nr):
                        for r2 in range(Nr):
                            acc = 0
                            for l in range(d[k]):
                                acc = acc + A[r * dmax + l] * conj(A[r2 * dmax + l])
                            Q[r * n + r2] = Q[r * n + r2] + acc
                info = jacobi_eigh(&Q[0], n, &V[0], &evals[0], &order[0])
                if info < 0:
                    break
                for j in range(d[i]):
                    for r in range(Nr):
                        W[i, r, j] = V[r * n + order[j]]
            if info < 0:
                break

            # precoders: least-leakage eigenvectors of the reverse network
            n = Nt
            for k in range(K):
                for t in range(n * n):
                    Q[t] = 0
                for i in range(K):
                    if i == k:
                        continue
                    for t in range(Nt):
                        for j in range(d[i]):
                            acc = 0
                            for r in range(Nr):
                                acc = acc + conj(H[i, k, r, t]) * W[i, r, j]
                            A[t * dmax + j] = acc
                    for t in range(Nt):
                        for t2 in range(Nt):
                            acc = 0
                            for j in range(d[i]):
                                acc = acc + A[t * dmax + j] * conj(A[t2 * dmax + j])
                            Q[t * n + t2] = Q[t * n + t2] + acc
                info = jacobi_eigh(&Q[0], n, &V[0], &evals[0], &order[0])
                if info < 0:
                    break
                for l in range(d[k]):
                    for t in range(Nt):
                        F[k, t, l] = V[t * n + order[l]]
            if info < 0:
                break

            # total leakage, computed from the vectors (not the eigenvalues)
            cost = 0.0
            for i in range(K):
                for k in range(K):
                    if k == i:
                        continue
                    for r in range(Nr):
                        for l in range(d[k]):
                            acc = 0
                            for t in range(Nt):
                                acc = acc + H[i, k, r, t] * F[k, t, l]
                            A[r * dmax + l] = acc
                    for j in range(d[i]):
                        for l in range(d[k]):
                            acc = 0
                            for r in range(Nr):
                                acc = acc + conj(W[i, r, j]) * A[r * dmax + l]
                            cost = cost + abs2(acc)
            hist[it] = cost
            n_iters = it + 1
            if sqrt(cost) <= tol:
                break

    if info < 0:
        raise RuntimeError("Jacobi eigensolver did not converge")
    return n_iters, hist_arr[:n_iters].copy(), W_arr
