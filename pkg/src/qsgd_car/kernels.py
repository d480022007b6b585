"""Rollout kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python version.  Set ``QSGD_CAR_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py.episode_lengths}
try:
    from . import _kernels
except ImportError:  # extension not built
    pass
else:
    BACKENDS["cython"] = _kernels.episode_lengths

if os.environ.get("QSGD_CAR_BACKEND", "").lower() == "python" or "cython" not in BACKENDS:
    BACKEND = "python"
else:
    BACKEND = "cython"

episode_lengths = BACKENDS[BACKEND]
