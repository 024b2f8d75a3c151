"""Backend selection for the time-stepping kernel.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``TWOPATCH_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.  Both have the same
signature and produce the same iterates up to floating-point reassociation.
"""
import os

from . import _kernel_py

DIRICHLET = _kernel_py.DIRICHLET
NEUMANN = _kernel_py.NEUMANN

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

_force_python = os.environ.get("TWOPATCH_PURE_PYTHON", "") not in ("", "0")

BACKENDS = {"python": _kernel_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if (_compiled is not None and not _force_python) else "python"


def advance(*args, backend: str | None = None):
    """Heun steps of the two-patch scheme, in place."""
    return BACKENDS[backend or BACKEND].advance(*args)


def rk4_wave(*args, backend: str | None = None):
    """RK4 integration of the travelling-wave ODE."""
    return BACKENDS[backend or BACKEND].rk4_wave(*args)
