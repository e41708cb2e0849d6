"""Kernel selection: compiled extension when built, interpreted fallback otherwise.

``rcstream._kernel`` resolves to the C extension when setup.py compiled it
(the .so shadows the .py) and to the plain Python module otherwise.  Setting
``RCSTREAM_PURE=1`` forces the interpreted kernel even when the extension is
present; ``load_pure()`` gives tests and benchmarks explicit access to the
interpreted implementation alongside the compiled one.
"""

from __future__ import annotations

import importlib.util
import os
import sys
from pathlib import Path

_PURE_ENV = "RCSTREAM_PURE"


def load_pure():
    """Load the interpreted kernel from source, regardless of the extension."""
    name = "rcstream._kernel_pure"
    if name in sys.modules:
        return sys.modules[name]
    path = Path(__file__).with_name("_kernel.py")
    spec = importlib.util.spec_from_file_location(name, path)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    return mod


if os.environ.get(_PURE_ENV) == "1":
    _impl = load_pure()
else:
    from rcstream import _kernel as _impl

EngineCore = _impl.EngineCore
KERNEL_COMPILED = bool(_impl.is_compiled())
KERNEL_IMPL = "compiled" if KERNEL_COMPILED else "pure-python"
