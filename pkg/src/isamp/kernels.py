"""Backend selection for the log-posterior kernels.

Imports the compiled extension when it is available, otherwise falls back
to the NumPy implementation.  Set ``ISAMP_PURE_PYTHON=1`` to force the
fallback (useful for debugging and for the backend-comparison benchmark).
"""

import os

from . import _pykernels

if os.environ.get("ISAMP_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
    HAVE_COMPILED = False
else:
    try:
        from . import _ckernels as _impl

        HAVE_COMPILED = True
    except ImportError:
        _impl = _pykernels
        HAVE_COMPILED = False

BACKEND = "compiled" if HAVE_COMPILED else "python"

linear_full_logpost = _impl.linear_full_logpost
linear_full_grad = _impl.linear_full_grad
gauss_weighted_logpost = _impl.gauss_weighted_logpost
gauss_weighted_grad = _impl.gauss_weighted_grad
weights_only_logpost = _impl.weights_only_logpost
weights_only_grad = _impl.weights_only_grad
probit_full_logpost = _impl.probit_full_logpost
probit_full_grad = _impl.probit_full_grad
probit_weighted_logpost = _impl.probit_weighted_logpost
probit_weighted_grad = _impl.probit_weighted_grad
spline_full_logpost = _impl.spline_full_logpost
spline_full_grad = _impl.spline_full_grad
spline_weighted_logpost = _impl.spline_weighted_logpost
spline_weighted_grad = _impl.spline_weighted_grad
spline_nc_full_logpost = _impl.spline_nc_full_logpost
spline_nc_full_grad = _impl.spline_nc_full_grad
spline_nc_weighted_logpost = _impl.spline_nc_weighted_logpost
spline_nc_weighted_grad = _impl.spline_nc_weighted_grad
