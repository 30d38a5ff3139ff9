"""Kernel backend selection.

Prefers the compiled extension and falls back to the pure-Python kernels.
Set FINITEKEY_BACKEND=python to force the fallback (used by the benchmark
and the backend-parity tests).
"""

from __future__ import annotations

import os

from finitekey import _kernels_py

if os.environ.get("FINITEKEY_BACKEND", "").lower() == "python":
    kernels = _kernels_py
else:
    try:
        from finitekey import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND: str = kernels.BACKEND_NAME
