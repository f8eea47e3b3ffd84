"""Backend selection: compiled kernels when available, numpy fallback otherwise.

``FEDWATT_BACKEND=python`` forces the fallback; ``FEDWATT_BACKEND=compiled``
insists on the extension and raises if it is missing.
"""

from __future__ import annotations

import os

from . import _pykernels

_FORCED = os.environ.get("FEDWATT_BACKEND", "").strip().lower()

if _FORCED == "python":
    kernels = _pykernels
elif _FORCED == "compiled":
    from . import _kernels as kernels  # noqa: F401 (ImportError is the point)
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND_NAME = "compiled" if kernels.COMPILED else "python"
