"""Kernel backend selection: compiled Cython extension with numpy fallback.

Set DMC_PRUNE_FORCE_PYTHON=1 to force the pure-numpy kernels even when the
extension is built (used by the backend benchmark and equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

_force_python = os.environ.get("DMC_PRUNE_FORCE_PYTHON", "").strip() not in ("", "0")

_compiled = None
if not _force_python:
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py

BACKEND = "compiled" if _compiled is not None else "python"
HAVE_COMPILED = _compiled is not None

eval_state = _impl.eval_state
run_burst = _impl.run_burst
BIG = _impl.BIG


def get_backend(name: str):
    """Return a kernel module by name ('compiled' or 'python'); for benchmarks/tests."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            try:
                from . import _kernels
                return _kernels
            except ImportError as e:
                raise RuntimeError("compiled kernels are not available") from e
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
