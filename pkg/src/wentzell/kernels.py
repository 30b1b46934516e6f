"""Kernel backend selection.

The compiled extension ``_kernels_c`` is used when it has been built;
otherwise (or when ``WENTZELL_PURE_PYTHON=1``) the numpy implementation in
``_kernels_py`` is used. Both expose the same functions.
"""
import importlib
import os

from . import _kernels_py


def _load_compiled():
    try:
        return importlib.import_module(f"{__package__}._kernels_c")
    except ImportError:
        return None


_compiled = _load_compiled()

if _compiled is not None and os.environ.get("WENTZELL_PURE_PYTHON", "") in ("", "0"):
    _impl = _compiled
    BACKEND = "cython"
else:
    _impl = _kernels_py
    BACKEND = "python"

gradient_power_term = _impl.gradient_power_term


def available_backends():
    """Mapping of backend name to module, for parity tests and benchmarks."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
