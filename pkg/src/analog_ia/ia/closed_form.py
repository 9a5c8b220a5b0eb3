"""Closed-form alignment for three users with square channels.

Used as an independent oracle for the iterative solver. Valid for
``K = 3``, ``Nt = Nr = M`` and ``d = M/2`` streams per user.
"""

import numpy as np


def closed_form_precoders(H, d=None):
    """All eigenvector-based aligning precoder sets.

    With ``E = H31^-1 H32 H12^-1 H13 H23^-1 H21`` (0-based indices below),
    ``F1`` spans ``d`` eigenvectors of ``E``, ``F2 = H32^-1 H31 F1`` and
    ``F3 = H23^-1 H21 F1``, each orthonormalized.

    Returns
    -------
    list of tuple
        One ``(F1, F2, F3)`` triple per choice of ``d`` eigenvectors.
    """
    import itertools

    H = np.asarray(H)
    if H.shape[:2] != (3, 3) or H.shape[2] != H.shape[3]:
        raise ValueError("closed form needs K=3 and square channels")
    M = H.shape[2]
    if d is None:
        d = M // 2
    inv = np.linalg.inv
    E = inv(H[2, 0]) @ H[2, 1] @ inv(H[0, 1]) @ H[0, 2] @ inv(H[1, 2]) @ H[1, 0]
    _, V = np.linalg.eig(E)
    out = []
    for cols in itertools.combinations(range(M), d):
        V1 = V[:, list(cols)]
        V2 = inv(H[2, 1]) @ H[2, 0] @ V1
        V3 = inv(H[1, 2]) @ H[1, 0] @ V1
        out.append(tuple(np.linalg.qr(v)[0] for v in (V1, V2, V3)))
    return out
