"""Picks the statevector kernel implementation at import time.

The compiled extension is used when it is importable; setting
``CLUSTERCUT_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

if os.environ.get("CLUSTERCUT_PURE_PYTHON") == "1":
    from clustercut import _pykernels as _impl
else:
    try:
        from clustercut import _kernels as _impl
    except ImportError:  # extension not built
        from clustercut import _pykernels as _impl

apply_1q = _impl.apply_1q
apply_2q = _impl.apply_2q
measure_z = _impl.measure_z
run_program = _impl.run_program
IMPLEMENTATION = _impl.IMPLEMENTATION

OP_U1, OP_U2, OP_FULL, OP_MEASZ = 0, 1, 2, 3
