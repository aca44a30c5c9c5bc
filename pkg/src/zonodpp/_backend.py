"""Kernel backend selection.

The compiled ``_core`` extension is used when importable; set
``ZONODPP_PURE_PYTHON=1`` to force the pure-Python kernels.
"""

from __future__ import annotations

import os

from . import _core_py

core_py = _core_py

if os.environ.get("ZONODPP_PURE_PYTHON", "") == "1":
    core = _core_py
    NAME = "python"
else:
    try:
        from . import _core as core  # type: ignore[no-redef]

        NAME = "cython"
    except ImportError:  # pragma: no cover - depends on build
        core = _core_py
        NAME = "python"

HAVE_COMPILED = NAME == "cython"
try:
    from . import _core as core_compiled  # noqa: F401
except ImportError:  # pragma: no cover
    core_compiled = None
