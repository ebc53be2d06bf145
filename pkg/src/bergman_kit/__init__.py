"""Numerical operator theory on Bergman spaces of the polydisc."""

import os

__version__ = "0.1.0"

# BERGMAN_KIT_THREADS caps BLAS threads; it must be applied before numpy loads.
_threads = os.environ.get("BERGMAN_KIT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .geometry import PolyPoint, beta, mobius, mobius_apply, rho  # noqa: E402
from .measures import AtomicMeasure, lebesgue  # noqa: E402
from .operators import MonomialBasis, TruncatedOperator, operator_norm  # noqa: E402

__all__ = [
    "__version__", "PolyPoint", "beta", "mobius", "mobius_apply", "rho",
    "AtomicMeasure", "lebesgue", "MonomialBasis", "TruncatedOperator", "operator_norm",
]
