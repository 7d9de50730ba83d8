"""Kernel backend selection.

The compiled core (``_kernels``) is used when it imports; otherwise the
pure-Python module takes over. ``STURM_ATTRACTOR_BACKEND=python`` forces
the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("STURM_ATTRACTOR_BACKEND", "").lower() == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

shoot_poly = _impl.shoot_poly
mol_advance_poly = _impl.mol_advance_poly
dopri_shoot = _pykernels.dopri_shoot
mol_advance = _pykernels.mol_advance

OK = _pykernels.OK
ESCAPE = _pykernels.ESCAPE
UNDERFLOW = _pykernels.UNDERFLOW
DOMAIN = _pykernels.DOMAIN
NONFINITE = _pykernels.NONFINITE
