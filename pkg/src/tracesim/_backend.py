"""Kernel backend selection.

The compiled extension is used when importable; otherwise the pure-Python
fallback. Set TRACESIM_BACKEND=python (or =compiled) to force a choice.
"""

from __future__ import annotations

import os

_requested = os.environ.get("TRACESIM_BACKEND", "").strip().lower()

if _requested == "python":
    from . import _kernels_py as kernels
elif _requested == "compiled":
    from . import _kernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND_NAME = "compiled" if kernels.COMPILED else "python"

ed_matrix = kernels.ed_matrix
sed_matrix = kernels.sed_matrix
