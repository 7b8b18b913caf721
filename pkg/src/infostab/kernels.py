"""Backend selection for the grid kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. Set ``INFOSTAB_KERNELS=python`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("INFOSTAB_KERNELS", "").lower() == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
noise = _impl.noise
eval_f = _impl.eval_f
defect_field = _impl.defect_field
max_abs_defect = _impl.max_abs_defect


def backends():
    """All importable backends, keyed by name (for benchmarks and cross-checks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
