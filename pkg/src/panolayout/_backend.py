"""Select the compiled kernels when available, else the numpy fallback.

Set ``PANOLAYOUT_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

NAME = "python"
kernels = _kernels_py

if os.environ.get("PANOLAYOUT_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        NAME = "cython"


def get(name: str):
    """Return a specific backend module (``"python"`` or ``"cython"``)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
