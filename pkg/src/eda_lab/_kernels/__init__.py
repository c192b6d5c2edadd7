"""Kernel backend selection.

The compiled backend is preferred when its extension module imports; set
EDA_LAB_BACKEND=pure (or =fast) to force a choice.  Both backends share the
array layout in :mod:`.state` and consume identical random streams, so a
forced switch never changes results, only speed.
"""

import os

from .state import ChainState, CompiledModel  # noqa: F401

_requested = os.environ.get("EDA_LAB_BACKEND", "").lower()

if _requested == "pure":
    from . import _pure as kernels

    BACKEND = "pure"
elif _requested == "fast":
    from . import _fast as kernels  # may raise if the extension is absent

    BACKEND = "fast"
else:
    try:
        from . import _fast as kernels

        BACKEND = "fast"
    except ImportError:
        from . import _pure as kernels

        BACKEND = "pure"

PROP_RANDOM_TOGGLE = 0
PROP_TNT = 1


def get_backend(name=None):
    """Return a kernels module by name ('pure' or 'fast'); default: selected."""
    if name is None:
        return kernels
    if name == "pure":
        from . import _pure

        return _pure
    if name == "fast":
        from . import _fast

        return _fast
    raise ValueError(f"unknown backend {name!r}")
