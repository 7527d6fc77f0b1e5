"""Backend selection: compiled extension if available, numpy fallback otherwise.

Set CGB_BACKEND=python (or =compiled) to force a choice; forcing "compiled"
when the extension is absent raises at import time rather than silently
degrading.
"""

from __future__ import annotations

import os

from . import _slowpath

_forced = os.environ.get("CGB_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _slowpath
elif _forced == "compiled":
    from . import _fastpath as _impl
elif _forced == "":
    try:
        from . import _fastpath as _impl
    except ImportError:
        _impl = _slowpath
else:
    raise RuntimeError(f"CGB_BACKEND must be 'compiled' or 'python', got {_forced!r}")

BACKEND_NAME: str = _impl.BACKEND_NAME
condition_update = _impl.condition_update
variance_update = _impl.variance_update
select_epoch = _impl.select_epoch
