"""Selects the evaluation core at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``ZKLOGIN_KERNEL=python`` is set, the pure-Python
implementation with the identical interface is loaded.
"""

import os

if os.environ.get("ZKLOGIN_KERNEL", "").lower() == "python":
    from . import _pykernel as _impl
else:
    try:
        from . import _ckernel as _impl
    except ImportError:  # extension not built
        from . import _pykernel as _impl

Buffer = _impl.Buffer
Engine = _impl.Engine
IMPLEMENTATION = _impl.IMPLEMENTATION

OP_SOLVE = 1
OP_BITS = 2
OP_INV = 3
OP_HINT = 4


def load(name: str):
    """Return the named implementation module ("cython" or "python")."""
    if name == "python":
        from . import _pykernel
        return _pykernel
    from . import _ckernel
    return _ckernel
