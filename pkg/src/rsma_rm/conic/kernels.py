"""Selects the cone-kernel implementation at import time.

The compiled ``_ckernels`` module is used when it was built; setting
``RSMA_RM_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

IMPLEMENTATION = "python"

if not os.environ.get("RSMA_RM_PURE_PYTHON"):
    try:
        from ._ckernels import (  # noqa: F401
            apply_scaling,
            identity,
            jordan_div,
            jordan_prod,
            max_step,
            nt_scaling,
            shift_distance,
        )

        IMPLEMENTATION = "cython"
    except ImportError:
        pass

if IMPLEMENTATION == "python":
    from ._kernels import (  # noqa: F401
        apply_scaling,
        identity,
        jordan_div,
        jordan_prod,
        max_step,
        nt_scaling,
        shift_distance,
    )
