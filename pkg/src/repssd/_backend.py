"""Select the compiled kernels when available, the numpy fallback otherwise.

Set ``REPSSD_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"

if os.environ.get("REPSSD_PURE_PYTHON", "") not in ("", "0"):
    from ._fallback import count_region_hits, standard_normals
else:
    try:
        from ._kernels import count_region_hits, standard_normals
        BACKEND = "cython"
    except ImportError:
        from ._fallback import count_region_hits, standard_normals

__all__ = ["BACKEND", "count_region_hits", "standard_normals"]
