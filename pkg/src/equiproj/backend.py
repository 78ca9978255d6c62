"""Selects the compiled kernel extension when available.

The compiled module is optional: if the extension was not built, the
pure-numpy twin in ``_kernels_py`` is used. ``set_backend`` exists for
benchmarks and backend-agreement tests; library behaviour is identical
either way (results agree to machine precision, not bitwise).
"""

from __future__ import annotations

from . import _kernels_py

try:  # pragma: no cover - exercised only when the extension is present
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

_active = _compiled if _compiled is not None else _kernels_py


def active_backend():
    """The module providing the hot kernels (compiled or python)."""
    return _active


def backend_name() -> str:
    return _active.BACKEND_NAME


def compiled_available() -> bool:
    return _compiled is not None


def available_backends() -> dict:
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["compiled"] = _compiled
    return backends


def set_backend(name: str) -> None:
    """Force 'python' or 'compiled'; raises if the extension is missing."""
    global _active
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"backend {name!r} not available (have {sorted(backends)})")
    _active = backends[name]
