"""Kernel backend selection.

The affine parts of jet propagation are plain BLAS matmuls and stay in numpy;
the fused elementwise tanh-jet kernels have two interchangeable
implementations:

* ``numpy`` -- the reference implementation (always available),
* ``cython`` -- the compiled extension ``pinnload.backends._jetkern``.

The compiled backend is selected automatically when importable.  Set
``PINNLOAD_BACKEND=numpy`` (or ``cython``) to force a choice; forcing
``cython`` fails loudly when the extension was not built.  Both backends
produce results that agree to floating-point round-off; run
``benchmarks/bench_backends.py`` for a timing comparison.
"""

from __future__ import annotations

import os

from . import numpy_ref

_FORCED = os.environ.get("PINNLOAD_BACKEND", "auto").lower()

if _FORCED not in ("auto", "numpy", "cython"):
    raise ImportError(f"PINNLOAD_BACKEND must be auto|numpy|cython, got {_FORCED!r}")

_impl = numpy_ref
_name = "numpy"

if _FORCED in ("auto", "cython"):
    try:
        from . import _jetkern  # type: ignore[attr-defined]

        _impl = _jetkern
        _name = "cython"
    except ImportError:
        if _FORCED == "cython":
            raise ImportError(
                "PINNLOAD_BACKEND=cython but the compiled extension is missing; "
                "reinstall the package or use PINNLOAD_BACKEND=numpy"
            )


def active_backend() -> str:
    """Name of the kernel implementation in use: 'numpy' or 'cython'."""
    return _name


tanh_jet_fwd = _impl.tanh_jet_fwd
tanh_jet_bwd = _impl.tanh_jet_bwd
mul_outer_sym_fwd = _impl.mul_outer_sym_fwd
mul_outer_sym_bwd = _impl.mul_outer_sym_bwd
