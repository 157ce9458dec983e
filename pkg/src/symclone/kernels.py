"""Backend selection for the hot Monte Carlo kernel.

The compiled extension is used when it was built; ``SYMCLONE_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
sample_masks = _kernels_py.sample_masks

if os.environ.get("SYMCLONE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        sample_masks = _compiled.sample_masks


def backends() -> dict:
    """All importable implementations keyed by name."""
    out = {"python": _kernels_py.sample_masks}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["cython"] = _compiled.sample_masks
    return out
