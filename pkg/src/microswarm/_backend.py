"""Kernel selection: compiled extension when importable, else pure Python.

Set ``MICROSWARM_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

kernels = _kernels_py
if os.environ.get("MICROSWARM_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        pass

BACKEND = kernels.BACKEND
