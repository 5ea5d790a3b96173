"""Kernel backend selection.

The training and batch-evaluation kernels exist twice: a Cython extension
(``plrnet._kernels``) and a pure-numpy fallback (``plrnet._py_kernels``).
The compiled one is picked at import when present; set
``PLRNET_BACKEND=python`` or ``PLRNET_BACKEND=compiled`` to force a choice
(forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _py_kernels


def _select():
    choice = os.environ.get("PLRNET_BACKEND", "auto").strip().lower()
    if choice in ("python", "numpy"):
        return _py_kernels
    try:
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "PLRNET_BACKEND=compiled but the plrnet._kernels extension "
                "is not built; reinstall the package or unset the variable"
            ) from None
        return _py_kernels


_impl = _select()

batch_forward = _impl.batch_forward
train_mlp = _impl.train_mlp


def backend_name() -> str:
    """'compiled' when the Cython extension is active, else 'python'."""
    return "compiled" if getattr(_impl, "COMPILED", False) else "python"
