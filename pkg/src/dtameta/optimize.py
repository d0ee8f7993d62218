"""Optimization and numerical-differentiation utilities.

The likelihoods are smooth but gradients are only available
numerically, so fits use a simplex search to locate the basin followed
by a quasi-Newton polish with central-difference gradients.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceFailureError, SingularInformationError

GRAD_REL_STEP = 1e-5
HESS_REL_STEP = 1e-4
F_TOL = 1e-9
X_TOL = 1e-7
MAX_ITER = 2000


def central_diff_grad(fn, x, rel_step=GRAD_REL_STEP):
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(len(x)):
        h = rel_step * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return grad


def central_diff_hessian(fn, x, rel_step=HESS_REL_STEP):
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = rel_step * np.maximum(1.0, np.abs(x))
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            val = (
                fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = val
            hess[j, i] = val
    return hess


def covariance_from_hessian(hess):
    """Invert an observed-information matrix, projecting to PSD if needed.

    Returns (covariance, projected_flag). Raises
    :class:`SingularInformationError` when inversion is hopeless.
    """
    hess = np.asarray(hess, dtype=float)
    if not np.all(np.isfinite(hess)):
        raise SingularInformationError(
            "observed information contains non-finite entries",
            condition_number=float("inf"),
        )
    hess = 0.5 * (hess + hess.T)
    eigvals, eigvecs = np.linalg.eigh(hess)
    emax = eigvals.max()
    if emax <= 0.0:
        raise SingularInformationError(
            "observed information is not positive along any direction",
            condition_number=float("inf"),
        )
    projected = False
    # flat or slightly concave directions (near-boundary or weakly
    # identified parameters) get floored, which caps the reported
    # variance along them instead of aborting the fit
    floor = 1e-10 * emax
    if eigvals.min() < floor:
        eigvals = np.maximum(eigvals, floor)
        projected = True
    cov = (eigvecs / eigvals) @ eigvecs.T
    return 0.5 * (cov + cov.T), projected


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    converged: bool
    n_eval: int


def hybrid_minimize(fn, x0, bounds=None, max_iter=MAX_ITER, raise_on_failure=False,
                    polish_first=False):
    """Simplex search for the basin, then quasi-Newton polish.

    ``bounds`` is a list of (low, high) pairs or None entries. The
    polish uses central-difference gradients; convergence requires both
    the objective improvement and the parameter step of the last polish
    to be small. With ``polish_first`` (for warm starts already inside
    the right basin) the quasi-Newton step runs straight from ``x0``
    and the simplex stage is skipped when it succeeds.
    """
    x0 = np.asarray(x0, dtype=float)
    if polish_first:
        res_qn = minimize(
            fn,
            x0,
            method="L-BFGS-B",
            jac=lambda x: central_diff_grad(fn, x),
            bounds=bounds,
            options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-8},
        )
        if res_qn.success:
            return OptimizeResult(
                x=res_qn.x, fun=float(res_qn.fun), converged=True, n_eval=int(res_qn.nfev)
            )
        x0 = res_qn.x if res_qn.fun < fn(x0) else x0
    res_nm = minimize(
        fn,
        x0,
        method="Nelder-Mead",
        bounds=bounds,
        # the simplex only needs to land in the right basin; the
        # quasi-Newton polish below supplies the final precision
        options={"maxiter": max_iter, "xatol": 1e-4, "fatol": 1e-6, "adaptive": True},
    )
    best_x, best_f = res_nm.x, res_nm.fun
    res_qn = minimize(
        fn,
        best_x,
        method="L-BFGS-B",
        jac=lambda x: central_diff_grad(fn, x),
        bounds=bounds,
        options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-8},
    )
    if res_qn.fun <= best_f:
        step = np.max(np.abs(res_qn.x - best_x))
        improve = best_f - res_qn.fun
        best_x, best_f = res_qn.x, res_qn.fun
    else:
        step, improve = 0.0, 0.0
    converged = bool(res_nm.success or res_qn.success or (improve < F_TOL and step < X_TOL))
    if not converged and raise_on_failure:
        gnorm = float(np.linalg.norm(central_diff_grad(fn, best_x)))
        raise ConvergenceFailureError(
            f"optimizer failed to converge within {max_iter} iterations "
            f"(gradient norm {gnorm:.3g})",
            best_point=best_x,
            gradient_norm=gnorm,
        )
    n_eval = int(res_nm.nfev + res_qn.nfev)
    return OptimizeResult(x=best_x, fun=float(best_f), converged=converged, n_eval=n_eval)
