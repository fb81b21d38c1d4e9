"""Select the compiled kernels when available, else the numpy fallback.

Set ``FRACALC_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

kernels = _kernels_py
if os.environ.get("FRACALC_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _kernels_py

BACKEND: str = kernels.NAME
