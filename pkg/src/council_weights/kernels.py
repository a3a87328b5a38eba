"""Kernel selection: the compiled extension when importable, else the pure-Python twin.

Set ``COUNCIL_WEIGHTS_PURE=1`` to force the fallback.
"""

import os

from . import _gibbs_py

BACKEND = "python"
heat_bath_sweeps = _gibbs_py.heat_bath_sweeps

if os.environ.get("COUNCIL_WEIGHTS_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._gibbs import heat_bath_sweeps  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

KERNELS = {"python": _gibbs_py.heat_bath_sweeps}
try:
    from ._gibbs import heat_bath_sweeps as _compiled
    KERNELS["cython"] = _compiled
except ImportError:
    pass
