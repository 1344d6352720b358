"""Kernel backend selection.

The compiled extension is used when importable; set
``PPVCONVERSE_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

if os.environ.get("PPVCONVERSE_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import path_eval, path_integrand, power_table

    BACKEND = "python"
else:
    try:
        from ._kernels import path_eval, path_integrand, power_table

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._kernels_py import path_eval, path_integrand, power_table

        BACKEND = "python"

__all__ = ["BACKEND", "path_eval", "path_integrand", "power_table"]
