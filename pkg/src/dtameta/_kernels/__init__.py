"""Kernel backend selection: compiled extension if available, NumPy otherwise.

The compiled kernel covers the logistic link (the default and the hot
path); probit always routes to the NumPy implementation.
"""

import numpy as np

from ..links import LINK_LOGISTIC
from . import _fallback

try:
    from . import _core

    BACKEND = "cython"
except ImportError:  # extension not built
    _core = None
    BACKEND = "numpy"


def loglik_terms(n11, n01, n10, n00, theta, alpha, beta, sig_theta, sig_alpha, z, w, link):
    """Per-study adaptive-GH log-likelihood terms; see _fallback for semantics."""
    if _core is not None and link == LINK_LOGISTIC:
        return _core.loglik_terms_logistic(
            np.ascontiguousarray(n11, float),
            np.ascontiguousarray(n01, float),
            np.ascontiguousarray(n10, float),
            np.ascontiguousarray(n00, float),
            float(theta),
            float(alpha),
            float(beta),
            float(sig_theta),
            float(sig_alpha),
            np.ascontiguousarray(z, float),
            np.ascontiguousarray(w, float),
        )
    return _fallback.loglik_terms(
        n11, n01, n10, n00, theta, alpha, beta, sig_theta, sig_alpha, z, w, link
    )


def loglik_terms_numpy(*args, **kwargs):
    """Always-the-fallback entry point, used by tests and benchmarks."""
    return _fallback.loglik_terms(*args, **kwargs)
