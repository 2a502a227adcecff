"""Energy bookkeeping and steady-state theory for online kernel filters.

The mean square behavior of the KLMS family can be audited step by step
through an energy-conservation identity in the RKHS of a reference
width sigma*.  Writing ftilde = f_target - f for the weight error,
e_a for the a priori error, e_p for the a posteriori error and

    delta_i = kappa_sigma_i(u, .) - kappa_sigma*(u, .)

for the width-mismatch bump of step i, one update satisfies

    ||ftilde_i||^2 + e_a(i)^2 = ||ftilde_{i-1}||^2 + e_p(i)^2 + eps(i),
    eps(i) = eta^2 e(i)^2 ||delta_i||^2 - 2 eta e(i) <ftilde_{i-1}, delta_i>.

:func:`energy_ledger_step` evaluates both sides with every inner
product taken in closed form (:class:`~klms.kernels.RkhsContext`), so
the residual is a genuine numerical check of the reproducing property
across all accumulated centers rather than an algebraic restatement of
the update.  The remaining helpers cover the steady-state excess mean
square error of the small-mismatch limit, its width-mismatch
correction factor, windowed EMSE estimation, a regularized batch
solver used as a non-adaptive baseline, and a validation grid search
over fixed kernel sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from .filters import KLMS, RbfExpansion
from .kernels import RkhsContext, RkhsMembershipError, gaussian

__all__ = [
    "LedgerRecord",
    "NumericalError",
    "batch_solve",
    "emse_estimate",
    "energy_ledger_run",
    "energy_ledger_step",
    "error_decompose",
    "grid_search_sigma",
    "reference_width",
    "theoretical_emse",
    "varsigma_estimate",
]


class NumericalError(RuntimeError):
    """A computation left the representable or well-conditioned regime."""


@dataclass(frozen=True)
class LedgerRecord:
    """One row of the energy-conservation ledger.

    Attributes
    ----------
    e : float
        Instantaneous error y - f_{i-1}(u), including observation noise.
    e_a : float
        A priori error f_target(u) - f_{i-1}(u), evaluated pointwise.
    e_p : float
        A posteriori error f_target(u) - f_i(u), evaluated pointwise.
    lhs : float
        Energy change plus a priori energy,
        ||ftilde_i||^2 - ||ftilde_{i-1}||^2 + e_a^2.
    rhs : float
        A posteriori energy plus mismatch leak, e_p^2 + eps(i).
    epsilon_i : float
        Width-mismatch energy leak eps(i) of this step.
    delta_norm_sq : float
        ||kappa_sigma_i(u, .) - kappa_sigma*(u, .)||^2 in H_sigma*.
    """

    e: float
    e_a: float
    e_p: float
    lhs: float
    rhs: float
    epsilon_i: float
    delta_norm_sq: float


def _target_value(f_target, u) -> float:
    if hasattr(f_target, "predict_one"):
        return float(f_target.predict_one(u))
    return float(f_target(u))


def error_decompose(f_target, model_before, model_after, u, y: float, eta: float):
    """Pointwise error decomposition (e, e_a, e_p) of one update.

    All three errors are evaluated by prediction, not by rearranging the
    update rule, so the identity e_p = e_a - eta * e can be checked
    rather than assumed.  The model pair is validated to be one KLMS
    update apart: ``model_after`` must extend ``model_before`` by a
    single center at ``u`` with coefficient eta * e.

    Parameters
    ----------
    f_target : callable or RbfExpansion
        Noise-free target mapping; anything with ``predict_one`` or a
        plain callable of one input.
    model_before, model_after : RbfExpansion
        Model state before and after the update.
    u : array_like
        Input of this step.
    y : float
        Observed (noisy) output of this step.
    eta : float
        Step size used by the update.

    Returns
    -------
    tuple of float
        (e, e_a, e_p).
    """
    if len(model_after) != len(model_before) + 1:
        raise ValueError(
            "model_after must extend model_before by exactly one center, "
            f"got sizes {len(model_before)} -> {len(model_after)}"
        )
    f_before = model_before.predict_one(u)
    e = float(y) - f_before
    u_arr = np.asarray(u, dtype=float).ravel()
    if not np.array_equal(model_after.centers[-1].ravel(), u_arr):
        raise ValueError("model_after's newest center does not match u")
    coeff = model_after.coefficients[-1]
    if not math.isclose(coeff, eta * e, rel_tol=1e-9, abs_tol=1e-300):
        raise ValueError(
            f"model_after's newest coefficient {coeff!r} is not eta * e = {eta * e!r}"
        )
    t = _target_value(f_target, u)
    e_a = t - f_before
    e_p = t - model_after.predict_one(u)
    return e, e_a, e_p


def energy_ledger_step(
    f_target,
    model_before,
    model_after,
    u,
    y: float,
    eta: float,
    sigma_star: float,
) -> LedgerRecord:
    """Evaluate both sides of the energy identity for one update.

    The target must itself be a finite Gaussian expansion so the weight
    error lives in H_sigma*.  The energy change is assembled from
    closed-form inner products of the accumulated expansion against the
    kernel bump at ``u``; the pointwise errors enter independently, so
    ``lhs - rhs`` collapses to 2 eta e (e_a - <ftilde, kappa_sigma*(u, .)>)
    and vanishes only if the closed forms reproduce pointwise
    evaluation across every stored center.

    Parameters
    ----------
    f_target : RbfExpansion
        Target mapping as a finite Gaussian expansion.
    model_before, model_after : RbfExpansion
        Model state before and after the update.
    u : array_like
        Input of this step.
    y : float
        Observed output of this step.
    eta : float
        Step size used by the update.
    sigma_star : float
        Reference width; every width in the target and the model must
        exceed sqrt(2) * sigma_star / 2.

    Returns
    -------
    LedgerRecord
    """
    if not hasattr(f_target, "centers"):
        raise TypeError("f_target must be a finite Gaussian expansion")
    e, e_a, e_p = error_decompose(f_target, model_before, model_after, u, y, eta)
    dim = model_before.dim
    ctx = RkhsContext(sigma_star, dim)
    sigma_i = float(model_after.kernel_sizes[-1])

    def ftilde_inner(sigma_v):
        # <f_target - f_before, kappa_sigma_v(u, .)> in closed form
        t = ctx.expansion_inner(
            f_target.centers, f_target.kernel_sizes, f_target.coefficients, u, sigma_v
        )
        m = ctx.expansion_inner(
            model_before.centers,
            model_before.kernel_sizes,
            model_before.coefficients,
            u,
            sigma_v,
        )
        return t - m

    b_star = ftilde_inner(sigma_star)
    b_i = ftilde_inner(sigma_i)
    cross = b_i - b_star  # <ftilde_{i-1}, delta_i>
    dn = ctx.delta_norm_sq(sigma_i)
    ee = eta * e
    epsilon_i = ee * ee * dn - 2.0 * ee * cross
    # ||ftilde_i||^2 - ||ftilde_{i-1}||^2 from the closed-form expansion
    energy_change = -2.0 * ee * b_star - 2.0 * ee * cross + ee * ee * (1.0 + dn)
    lhs = energy_change + e_a * e_a
    rhs = e_p * e_p + epsilon_i
    return LedgerRecord(
        e=e,
        e_a=e_a,
        e_p=e_p,
        lhs=lhs,
        rhs=rhs,
        epsilon_i=epsilon_i,
        delta_norm_sq=dn,
    )


def energy_ledger_run(f_target, estimator, X, y, sigma_star: float | None = None):
    """Run an online filter and ledger every update.

    Drives a fresh clone of ``estimator`` sample by sample, snapshotting
    the expansion before each step.  Only filters that add a center at
    every step can be ledgered (plain and adaptive KLMS; quantized
    variants with merges are rejected).

    Parameters
    ----------
    f_target : RbfExpansion
        Target mapping as a finite Gaussian expansion.
    estimator : KLMS or AdaptiveKLMS
        Unfitted filter; a clone is driven, the argument is untouched.
    X : array_like of shape (n, m)
        Inputs in presentation order.
    y : array_like of shape (n,)
        Observed outputs.
    sigma_star : float, optional
        Reference width.  Defaults to :func:`reference_width` over all
        widths stored by the run plus the target's own.

    Returns
    -------
    list of LedgerRecord
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes {X.shape} and {y.shape}")
    if X.shape[0] == 0:
        raise ValueError("at least one sample is required")
    est = clone(estimator)
    est._initialize(X.shape[1])
    snapshots = []
    for i in range(X.shape[0]):
        snapshots.append(est.expansion_.copy())
        result = est.step(X[i], y[i])
        if not result.added_center:
            raise ValueError("energy ledger requires every step to add a center")
    if sigma_star is None:
        widths = np.concatenate(
            [est.expansion_.kernel_sizes, np.asarray(f_target.kernel_sizes)]
        )
        sigma_star = reference_width(widths)
    records = []
    n = X.shape[0]
    for i in range(n):
        after = snapshots[i + 1] if i + 1 < n else est.expansion_
        records.append(
            energy_ledger_step(
                f_target, snapshots[i], after, X[i], y[i], est.eta, sigma_star
            )
        )
    return records


def reference_width(sigmas) -> float:
    """Largest practical reference width for a set of stored widths.

    Membership of every width sigma_j in H_sigma* requires
    sigma* < sqrt(2) * min_j sigma_j; this returns 0.999 times that
    supremum, keeping the closed forms well away from the boundary
    where they degenerate.
    """
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    if sigmas.size == 0:
        raise ValueError("at least one width is required")
    if not np.all(sigmas > 0.0):
        raise ValueError("widths must be positive")
    return 0.999 * math.sqrt(2.0) * float(sigmas.min())


def theoretical_emse(eta: float, noise_variance: float) -> float:
    """Steady-state excess mean square error of the small-mismatch limit.

    For vanishing width mismatch the energy balance settles at
    eta * noise_variance / (2 - eta).  Requires 0 < eta < 2 (the mean
    square stability range) and a nonnegative noise variance.
    """
    if not 0.0 < eta < 2.0:
        raise ValueError(f"step size must lie in (0, 2), got {eta!r}")
    if noise_variance < 0.0:
        raise ValueError(f"noise variance must be >= 0, got {noise_variance!r}")
    return eta * noise_variance / (2.0 - eta)


def varsigma_estimate(sigmas, sigma_star: float, dim: int) -> float:
    """Average width-mismatch factor of a run's stored widths.

    Returns the mean of ||kappa_sigma_j(u, .)||^2 - 1 over the widths,
    i.e. the sample mean of

        (sigma_j^2 / (sigma* sqrt(2 sigma_j^2 - sigma*^2)))^dim - 1,

    which scales the mismatch contribution to the steady-state EMSE.
    Zero when every width equals the reference width.
    """
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    if sigmas.size == 0:
        raise ValueError("at least one width is required")
    ctx = RkhsContext(sigma_star, dim)
    if not np.all(sigmas > ctx.membership_bound):
        raise RkhsMembershipError(
            f"width {float(sigmas.min())!r} is not in the RKHS of reference "
            f"width {sigma_star!r}"
        )
    s2 = sigmas * sigmas
    ratio = s2 / (sigma_star * np.sqrt(2.0 * s2 - sigma_star**2))
    return float(np.mean(ratio**dim - 1.0))


def emse_estimate(traces, window: int) -> float:
    """Windowed EMSE: mean squared a priori error over final iterations.

    Parameters
    ----------
    traces : array_like of shape (runs, iterations) or (iterations,)
        A priori error trajectories.
    window : int
        Number of trailing iterations to average, 1 <= window <= n.

    Returns
    -------
    float
        Mean of the squared errors over the window, across runs.
    """
    arr = np.asarray(traces, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("traces must be a nonempty 1-D or 2-D array")
    if not 1 <= window <= arr.shape[1]:
        raise ValueError(
            f"window must lie in [1, {arr.shape[1]}], got {window!r}"
        )
    tail = arr[:, arr.shape[1] - window :]
    return float(np.mean(tail * tail))


def batch_solve(inputs, outputs, sigma: float, gamma: float = 0.0) -> RbfExpansion:
    """Regularized batch least squares over a fixed-width Gaussian basis.

    Solves (G + gamma I) alpha = y with G[i, j] =
    kappa_sigma(u_i, u_j) and returns the resulting expansion.  Used as
    a non-adaptive baseline and to construct target mappings for the
    energy ledger.

    Raises
    ------
    NumericalError
        If the system is singular or the solution is not finite.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    y = np.asarray(outputs, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError(f"incompatible shapes {X.shape} and {y.shape}")
    if not sigma > 0.0:
        raise ValueError(f"kernel size must be positive, got {sigma!r}")
    if gamma < 0.0:
        raise ValueError(f"regularization must be >= 0, got {gamma!r}")
    n = X.shape[0]
    G = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            G[i, j] = gaussian(X[i], X[j], sigma)
    try:
        alpha = np.linalg.solve(G + gamma * np.eye(n), y)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Gram system: {exc}") from exc
    if not np.all(np.isfinite(alpha)):
        raise NumericalError("Gram system produced non-finite coefficients")
    expansion = RbfExpansion(X.shape[1], capacity=n)
    for i in range(n):
        expansion.append(X[i], float(alpha[i]), sigma)
    return expansion


def grid_search_sigma(X_train, y_train, X_val, y_val, grid, eta: float = 0.5):
    """Validation-set grid search over fixed kernel sizes.

    Runs a fixed-width :class:`~klms.filters.KLMS` over the training
    sequence for each candidate width and scores mean squared error on
    the validation pairs.  Ties go to the smaller width.

    Returns
    -------
    tuple
        (best_sigma, losses) with ``losses`` a dict mapping each
        candidate width to its validation MSE.
    """
    candidates = sorted(float(s) for s in np.asarray(grid, dtype=float).ravel())
    if not candidates:
        raise ValueError("grid must contain at least one width")
    losses = {}
    best_sigma = None
    best_loss = math.inf
    for sigma in candidates:
        model = KLMS(eta=eta, sigma=sigma)
        model.fit(X_train, y_train)
        resid = np.asarray(y_val, dtype=float).ravel() - model.predict(X_val)
        loss = float(np.mean(resid * resid))
        losses[sigma] = loss
        if loss < best_loss:
            best_loss = loss
            best_sigma = sigma
    return best_sigma, losses
