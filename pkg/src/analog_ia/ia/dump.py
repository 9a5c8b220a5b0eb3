"""Plain-text dump of an :class:`IaSolution` for debugging.

Format (one item per line)::

    analog-ia-solution 1
    K <K>
    iterations <n>
    residual_leakage <x | none>
    min_desired <x | none>
    F <user> <rows> <cols>
    <re> <im> <re> <im> ...      # one line per matrix row, row-major
    W <user> <rows> <cols>
    ...
"""

from __future__ import annotations

import numpy as np

from .core import IaSolution

_MAGIC = "analog-ia-solution 1"


def _fmt(x):
    return "none" if x is None else repr(float(x))


def _parse(x):
    return None if x == "none" else float(x)


def dump_solution(solution: IaSolution) -> str:
    lines = [
        _MAGIC,
        f"K {solution.K}",
        f"iterations {solution.iterations}",
        f"residual_leakage {_fmt(solution.residual_leakage)}",
        f"min_desired {_fmt(solution.min_desired)}",
    ]
    groups = [("F", solution.F)]
    if solution.W is not None:
        groups.append(("W", solution.W))
    for tag, mats in groups:
        for k, M in enumerate(mats):
            lines.append(f"{tag} {k} {M.shape[0]} {M.shape[1]}")
            for row in M:
                lines.append(" ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in row.astype(complex)))
    return "\n".join(lines) + "\n"


def load_solution(text: str) -> IaSolution:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ValueError("not an analog-ia solution dump")
    header = dict(line.split(None, 1) for line in lines[1:5])
    K = int(header["K"])
    mats = {"F": [None] * K, "W": [None] * K}
    pos = 5
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue
        tag, k, rows, cols = lines[pos].split()
        k, rows, cols = int(k), int(rows), int(cols)
        M = np.empty((rows, cols), dtype=complex)
        for r in range(rows):
            vals = [float(v) for v in lines[pos + 1 + r].split()]
            M[r] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
        mats[tag][k] = M
        pos += 1 + rows
    W = tuple(mats["W"]) if all(m is not None for m in mats["W"]) else None
    return IaSolution(
        F=tuple(mats["F"]),
        W=W,
        residual_leakage=_parse(header["residual_leakage"]),
        min_desired=_parse(header["min_desired"]),
        iterations=int(header["iterations"]),
    )
