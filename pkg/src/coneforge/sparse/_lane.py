"""Kernel lane selection: compiled extension when available, else Python.

CONEFORGE_PURE=1 forces the pure-Python lane.  Both lanes execute the
same floating-point operation sequence, so results are bit-identical.
"""

import os

if os.environ.get("CONEFORGE_PURE"):
    from . import pykernels as kernels
else:
    try:
        from . import _ckern as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import pykernels as kernels  # type: ignore[no-redef]

LANE = kernels.LANE
