"""Select the numerical kernel backend at import time.

The compiled extension is preferred when present; the pure NumPy module is
the fallback and the reference for equivalence testing.  Set the environment
variable ``QES_SEXTIC_KERNEL`` to ``c`` or ``py`` to force a choice (forcing
``c`` raises if the extension is missing rather than silently degrading).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("QES_SEXTIC_KERNEL", "").strip().lower()

if _FORCED == "py":
    kernels = _kernels_py
elif _FORCED == "c":
    from . import _kernels as kernels  # noqa: F401  (ImportError is the contract)
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

KERNEL_IMPL: str = kernels.IMPL

RAY_MAXED: int = kernels.RAY_MAXED
RAY_CAPTURED: int = kernels.RAY_CAPTURED
RAY_ESCAPED: int = kernels.RAY_ESCAPED

aberth_iterate = kernels.aberth_iterate
charpoly_scaled = kernels.charpoly_scaled
charpoly_unscaled = kernels.charpoly_unscaled
trace_rays = kernels.trace_rays
horner_with_deriv = kernels.horner_with_deriv
