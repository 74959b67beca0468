"""Kernel backend selection.

The planner's inner loops (free-window scan, crosstalk incidence counting,
sliding window maxima, nonlinear-interference neighbor sums) exist twice:
a compiled Cython extension (``_core``) and a pure numpy fallback
(``_fallback``) with identical semantics. The compiled backend is preferred
when importable; ``EONPLAN_PURE_PY=1`` forces the fallback. Call
:func:`set_backend` to switch at runtime (used by the benchmark and the
equivalence tests).
"""

import os

from . import _fallback

_BACKENDS = {"pure": _fallback}

if not os.environ.get("EONPLAN_PURE_PY"):
    try:
        from . import _core

        _BACKENDS["compiled"] = _core
    except ImportError:
        pass

_active = _BACKENDS.get("compiled", _fallback)


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def get_backend():
    """The active kernel module; exposes the four kernel functions."""
    return _active


def backend_name() -> str:
    return _active.BACKEND_NAME


def set_backend(name: str):
    """Switch the active backend ('pure' or 'compiled'). Returns the module."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = _BACKENDS[name]
    return _active
