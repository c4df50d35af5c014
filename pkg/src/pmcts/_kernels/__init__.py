"""Kernel backend selection.

The hot selection loop has two implementations: a compiled Cython extension
(``_core``) and a pure-Python reference (``_ref``).  The compiled one is used
when importable; set ``PMCTS_KERNEL=python`` to force the fallback.  Both
produce bit-identical outputs (asserted by the test suite).
"""

from __future__ import annotations

import os

from . import _ref

if os.environ.get("PMCTS_KERNEL", "").lower() == "python":
    _impl = _ref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND
select_batch = _impl.select_batch
# step_policy is only needed at Python speed (root policies, reweighting).
step_policy = _ref.step_policy


def available_backends():
    names = ["python"]
    try:
        from . import _core  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the select_batch callable for an explicit backend name."""
    if name == "python":
        return _ref.select_batch
    if name == "compiled":
        from . import _core
        return _core.select_batch
    raise ValueError(f"unknown kernel backend {name!r}")
