"""Backend selection for the hot loops.

The compiled extension ``scrambling._ckernels`` is used when it imports;
otherwise, or when ``SCRAMBLING_PURE_PYTHON=1`` is set, the numpy versions
in ``scrambling._pykernels`` are used. Both take identical inputs (random
draws are made by the caller), so results agree bit for bit except for
floating-point evaluation order in ``evolve_tridiagonal``.
"""
from __future__ import annotations

import os

from . import _pykernels

python_backend = _pykernels

try:
    if os.environ.get("SCRAMBLING_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend forced")
    from . import _ckernels as _active
    compiled_backend = _active
    BACKEND = "cython"
except ImportError:
    _active = _pykernels
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None
    BACKEND = "python"

evolve_tridiagonal = _active.evolve_tridiagonal
propagate_support = _active.propagate_support
greedy_levels = _active.greedy_levels
apply_gates = _active.apply_gates
gf2_rank = _active.gf2_rank
weight_spectrum = _active.weight_spectrum
matching_growth = _active.matching_growth


def available_backends() -> dict:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
