"""Kernel backend selection: compiled extension with pure-NumPy fallback.

The compiled module :mod:`hybridfo._core` is preferred when importable.
Set ``HYBRIDFO_PURE=1`` in the environment (before import) to force the
pure path, or call :func:`set_backend` at runtime — the benchmark and the
parity tests do the latter.
"""

import os

from . import _pure

_COMPILED = None
if os.environ.get("HYBRIDFO_PURE", "") != "1":
    try:
        from . import _core as _COMPILED  # type: ignore[no-redef]
    except ImportError:
        _COMPILED = None

_active = _COMPILED if _COMPILED is not None else _pure

# Status and exit codes are shared constants; both implementations use
# the numbering defined by the pure module.
OPTIMAL = _pure.OPTIMAL
INFEASIBLE = _pure.INFEASIBLE
MAX_ITERATIONS = _pure.MAX_ITERATIONS
LOOP_RAN = _pure.LOOP_RAN
LOOP_CONVERGED = _pure.LOOP_CONVERGED
LOOP_INFEASIBLE = _pure.LOOP_INFEASIBLE
LOOP_STALLED = _pure.LOOP_STALLED
GAMMA_CHARGING = _pure.GAMMA_CHARGING
GAMMA_DISCHARGING = _pure.GAMMA_DISCHARGING
GAMMA_FIXED = _pure.GAMMA_FIXED
VIOLATION_TOL = _pure.VIOLATION_TOL


def backend_name() -> str:
    return "compiled" if _active is _COMPILED and _COMPILED is not None else "pure"


def compiled_available() -> bool:
    return _COMPILED is not None


def set_backend(name: str) -> None:
    """Switch the active kernel implementation ("compiled" or "pure")."""
    global _active
    if name == "pure":
        _active = _pure
    elif name == "compiled":
        if _COMPILED is None:
            raise RuntimeError("compiled backend requested but hybridfo._core is not built")
        _active = _COMPILED
    else:
        raise ValueError(f"unknown backend {name!r}")


def qp_kernel(*args, **kwargs):
    return _active.qp_kernel(*args, **kwargs)


def frozen_loop(*args, **kwargs):
    return _active.frozen_loop(*args, **kwargs)
