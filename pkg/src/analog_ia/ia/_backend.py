"""Kernel selection.

The compiled kernel is used when importable. Set ``ANALOG_IA_KERNEL`` to
``python`` to force the numpy kernel, or to ``compiled`` to fail loudly
when the extension is missing.
"""

import os

from . import _kernel_py

_choice = os.environ.get("ANALOG_IA_KERNEL", "auto").lower()

_compiled = None
if _choice != "python":
    try:
        from . import _kernel_cy as _compiled
    except ImportError:
        if _choice == "compiled":
            raise
        _compiled = None

KERNELS = {"python": _kernel_py.min_leakage}
if _compiled is not None:
    KERNELS["compiled"] = _compiled.min_leakage

BACKEND = "compiled" if (_compiled is not None and _choice != "python") else "python"
min_leakage = KERNELS[BACKEND]


def get_kernel(name=None):
    """Return the kernel called ``name`` (default: the active one)."""
    if name is None:
        return min_leakage
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(KERNELS)}") from None
