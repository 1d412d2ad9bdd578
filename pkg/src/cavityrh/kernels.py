"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
versions are used. Set ``CAVITYRH_BACKEND=python`` to force the fallback.
``conj_correlate`` always uses numpy, whose correlate beats the compiled
loop at the sizes the solver needs (see ``benchmarks/bench_kernels.py``).
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CAVITYRH_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"

charge_sums = _impl.charge_sums
horner = _impl.horner
conj_correlate = _kernels_py.conj_correlate
