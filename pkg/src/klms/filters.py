"""Online kernel least mean square filters with growing RBF networks.

Four online learners over the Gaussian kernel family:

- :class:`KLMS` -- fixed kernel size; every sample becomes a center.
- :class:`AdaptiveKLMS` -- the kernel size follows a stochastic gradient
  update driven by consecutive errors, so each center is stored with the
  width in force when it was added.
- :class:`QuantizedKLMS` -- fixed kernel size with online vector
  quantization: inputs within ``epsilon`` of an existing center merge
  into it (coefficient update only) instead of growing the network.
- :class:`QuantizedAdaptiveKLMS` -- quantization and width adaptation
  combined, with a choice of which sample pairs drive the width update.

All four share the same update rule: predict, form the instantaneous
error e, and add ``eta * e`` either as a new center's coefficient or
onto the nearest codeword.  Estimators follow the scikit-learn API
(``fit``/``partial_fit``/``predict``/``get_params``) and additionally
expose a single-sample :meth:`~KLMS.step` for step-by-step drivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .kernels import grad_sigma

__all__ = [
    "AdaptiveKLMS",
    "Codebook",
    "KLMS",
    "QuantizedAdaptiveKLMS",
    "QuantizedKLMS",
    "QuantizeResult",
    "RbfExpansion",
    "StepResult",
    "kernel_size_step",
]

DEFAULT_SIGMA_MIN = 1e-4
DEFAULT_SIGMA_MAX = 1e4


class RbfExpansion:
    """A growing radial basis function expansion with per-center widths.

    Represents f(u) = sum_j coefficients[j] * kappa_{kernel_sizes[j]}
    (centers[j], u).  Appends are amortized O(1) via doubling buffers;
    existing entries are never moved or rewritten by ``append``, so a
    center's (position, coefficient, width) triple is immutable unless
    explicitly merged into via :meth:`add_to_coefficient`.

    Parameters
    ----------
    dim : int
        Input dimension m.
    capacity : int, optional
        Initial buffer capacity.
    """

    def __init__(self, dim: int, capacity: int = 64):
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"input dimension must be >= 1, got {dim}")
        self.dim = dim
        cap = max(int(capacity), 1)
        self._n = 0
        self._centers = np.empty((cap, dim))
        self._coeffs = np.empty(cap)
        self._sigmas = np.empty(cap)
        self._two_s2 = np.empty(cap)  # cached 2*sigma^2, prediction hot path

    def __len__(self):
        return self._n

    def _view(self, buf):
        v = buf[: self._n]
        v.flags.writeable = False
        return v

    @property
    def centers(self):
        """Read-only (n, dim) view of the stored centers."""
        return self._view(self._centers)

    @property
    def coefficients(self):
        """Read-only (n,) view of the stored coefficients."""
        return self._view(self._coeffs)

    @property
    def kernel_sizes(self):
        """Read-only (n,) view of the per-center kernel sizes."""
        return self._view(self._sigmas)

    def _grow(self):
        cap = 2 * self._centers.shape[0]
        for name in ("_centers", "_coeffs", "_sigmas", "_two_s2"):
            old = getattr(self, name)
            shape = (cap,) + old.shape[1:]
            new = np.empty(shape)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)

    def append(self, center, coeff: float, sigma: float):
        """Append one center; earlier entries are untouched."""
        if not sigma > 0.0:
            raise ValueError(f"kernel size must be positive, got {sigma!r}")
        n = self._n
        if n == self._centers.shape[0]:
            self._grow()
        self._centers[n] = center
        self._coeffs[n] = coeff
        self._sigmas[n] = sigma
        self._two_s2[n] = 2.0 * sigma * sigma
        self._n = n + 1

    def add_to_coefficient(self, index: int, delta: float):
        """Merge an update into an existing center's coefficient."""
        if not 0 <= index < self._n:
            raise IndexError(f"center index {index} out of range")
        self._coeffs[index] += delta

    def _check_point(self, u):
        u = np.asarray(u, dtype=float).ravel()
        if u.size != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {u.size}")
        return u

    def predict_one(self, u) -> float:
        """Evaluate the expansion at a single point (empty model gives 0)."""
        u = self._check_point(u)
        n = self._n
        if n == 0:
            return 0.0
        diff = self._centers[:n] - u
        d2 = np.einsum("ij,ij->i", diff, diff)
        return float(np.exp(-d2 / self._two_s2[:n]) @ self._coeffs[:n])

    def nearest(self, u):
        """Index and Euclidean distance of the nearest center.

        Ties go to the smallest index; an empty expansion returns
        ``(-1, inf)``.
        """
        u = self._check_point(u)
        n = self._n
        if n == 0:
            return -1, math.inf
        diff = self._centers[:n] - u
        d2 = np.einsum("ij,ij->i", diff, diff)
        j = int(np.argmin(d2))
        return j, math.sqrt(float(d2[j]))

    def predict(self, X) -> np.ndarray:
        """Evaluate the expansion at each row of X."""
        X = np.asarray(X, dtype=float)
        return np.array([self.predict_one(x) for x in X])

    def copy(self) -> "RbfExpansion":
        """Deep copy (snapshot) of the current expansion."""
        out = RbfExpansion(self.dim, capacity=max(self._n, 1))
        out._n = self._n
        out._centers = self._centers[: self._n].copy()
        out._coeffs = self._coeffs[: self._n].copy()
        out._sigmas = self._sigmas[: self._n].copy()
        out._two_s2 = self._two_s2[: self._n].copy()
        return out


@dataclass(frozen=True)
class QuantizeResult:
    """Outcome of nearest-codeword lookup for one input."""

    index: int
    distance: float
    is_new: bool


class Codebook:
    """Online vector quantization codebook over an RBF expansion.

    A new input becomes a codeword only when its distance to every
    existing codeword exceeds ``epsilon`` (so distinct codewords are
    always more than ``epsilon`` apart by construction); otherwise it
    merges into the nearest codeword.  ``last_add_error`` records the
    prediction error at the iteration when the most recent codeword was
    added, which the codeword-paired width update consumes.

    Parameters
    ----------
    dim : int
        Input dimension m.
    epsilon : float
        Quantization size, >= 0.  Zero keeps every distinct input.
    """

    def __init__(self, dim: int, epsilon: float, capacity: int = 64):
        if epsilon < 0.0:
            raise ValueError(f"quantization size must be >= 0, got {epsilon!r}")
        self.expansion = RbfExpansion(dim, capacity)
        self.epsilon = float(epsilon)
        self.last_add_error = 0.0

    def __len__(self):
        return len(self.expansion)

    @property
    def codewords(self):
        return self.expansion.centers

    @property
    def coefficients(self):
        return self.expansion.coefficients

    @property
    def kernel_sizes(self):
        return self.expansion.kernel_sizes

    def quantize(self, u) -> QuantizeResult:
        """Nearest codeword and whether ``u`` would start a new one."""
        j, dist = self.expansion.nearest(u)
        return QuantizeResult(index=j, distance=dist, is_new=dist > self.epsilon)

    def predict_one(self, u) -> float:
        return self.expansion.predict_one(u)


@dataclass(frozen=True)
class StepResult:
    """Per-step observables returned by the online filters."""

    error: float
    sigma_after: float
    network_size: int
    added_center: bool


def kernel_size_step(
    sigma_prev: float,
    e_prev: float,
    e_curr: float,
    u_prev,
    u_curr,
    rho: float,
    sigma_min: float = DEFAULT_SIGMA_MIN,
    sigma_max: float = DEFAULT_SIGMA_MAX,
) -> float:
    """One stochastic gradient update of the kernel size.

    Moves ``sigma_prev`` along rho * e_prev * e_curr *
    ``grad_sigma(u_prev, u_curr, sigma_prev)`` and clamps the result to
    [sigma_min, sigma_max].  Correlated consecutive errors over distant
    inputs push the width up; anticorrelated errors push it down.

    Examples
    --------
    >>> kernel_size_step(1.0, 1.0, 1.0, [0.0], [1.0], 0.025)
    1.0151632664928159
    """
    if not rho > 0.0:
        raise ValueError(f"kernel size step must be positive, got {rho!r}")
    if not sigma_prev > 0.0:
        raise ValueError(f"kernel size must be positive, got {sigma_prev!r}")
    s = sigma_prev + rho * e_prev * e_curr * grad_sigma(u_prev, u_curr, sigma_prev)
    return min(max(s, sigma_min), sigma_max)


class _BaseKlms(RegressorMixin, BaseEstimator):
    """Shared fit/predict plumbing for the online filters."""

    def _new_model(self, dim: int):
        raise NotImplementedError

    def _reset_state(self):
        pass

    def step(self, u, y: float) -> StepResult:
        raise NotImplementedError

    def _initialize(self, dim: int):
        self._new_model(dim)
        self._reset_state()
        self.n_features_in_ = dim
        self.errors_ = np.empty(0)
        self.sigmas_ = np.empty(0)
        self.added_ = np.empty(0, dtype=bool)

    def fit(self, X, y):
        """Run the online filter once over (X, y) from an empty model."""
        for attr in ("expansion_", "errors_", "sigmas_", "added_", "n_features_in_"):
            if hasattr(self, attr):
                delattr(self, attr)
        if hasattr(self, "codebook_"):
            delattr(self, "codebook_")
        return self.partial_fit(X, y)

    def partial_fit(self, X, y):
        """Continue the online filter over additional samples."""
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if not hasattr(self, "expansion_"):
            self._initialize(X.shape[1])
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        n = X.shape[0]
        errors = np.empty(n)
        sigmas = np.empty(n)
        added = np.empty(n, dtype=bool)
        step = self.step
        for i in range(n):
            r = step(X[i], y[i])
            errors[i] = r.error
            sigmas[i] = r.sigma_after
            added[i] = r.added_center
        self.errors_ = np.concatenate([self.errors_, errors])
        self.sigmas_ = np.concatenate([self.sigmas_, sigmas])
        self.added_ = np.concatenate([self.added_, added])
        return self

    def predict(self, X):
        """Evaluate the learned mapping at each row of X."""
        check_is_fitted(self, "expansion_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return self.expansion_.predict(X)

    @property
    def n_centers_(self) -> int:
        check_is_fitted(self, "expansion_")
        return len(self.expansion_)


class KLMS(_BaseKlms):
    """Kernel least mean square filter with a fixed kernel size.

    Starting from the zero mapping, each step predicts, forms the error
    e = y - f(u), and appends u as a new center with coefficient
    ``eta * e``.  The network therefore grows by one center per sample.

    Parameters
    ----------
    eta : float, optional
        Step size, 0 < eta < 2 for stable mean square behavior.
    sigma : float, optional
        Gaussian kernel size shared by all centers.
    """

    def __init__(self, eta: float = 0.5, sigma: float = 1.0):
        self.eta = eta
        self.sigma = sigma

    def _new_model(self, dim: int):
        self.expansion_ = RbfExpansion(dim)

    def step(self, u, y: float) -> StepResult:
        model = self.expansion_
        e = y - model.predict_one(u)
        model.append(u, self.eta * e, self.sigma)
        return StepResult(e, self.sigma, len(model), True)


class AdaptiveKLMS(_BaseKlms):
    """KLMS with an online, error-driven kernel size.

    The width used for the center added at step i follows

        sigma_i = sigma_{i-1} + rho * e(i-1) * e(i)
                  * ||u(i-1) - u(i)||^2 * kappa_{sigma_{i-1}}(u(i-1), u(i))
                  / sigma_{i-1}^3

    clamped to [sigma_min, sigma_max].  The update needs the previous
    error, so adaptation starts at the second sample and the first
    center keeps ``sigma0``.  Every center retains the width in force
    when it was added; prediction mixes kernel widths accordingly.

    Parameters
    ----------
    eta : float, optional
        Step size for the coefficients.
    rho : float, optional
        Step size for the kernel size update.
    sigma0 : float, optional
        Initial kernel size.
    sigma_min, sigma_max : float, optional
        Clamp bounds keeping the width positive and finite.
    """

    def __init__(
        self,
        eta: float = 0.5,
        rho: float = 0.025,
        sigma0: float = 1.0,
        sigma_min: float = DEFAULT_SIGMA_MIN,
        sigma_max: float = DEFAULT_SIGMA_MAX,
    ):
        self.eta = eta
        self.rho = rho
        self.sigma0 = sigma0
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max

    def _new_model(self, dim: int):
        self.expansion_ = RbfExpansion(dim)

    def _reset_state(self):
        self.sigma_ = self.sigma0
        self._e_prev = 0.0
        self._u_prev = None

    def step(self, u, y: float) -> StepResult:
        model = self.expansion_
        e = y - model.predict_one(u)
        if self._u_prev is None:
            s = self.sigma0
        elif self.rho == 0.0:
            s = self.sigma_
        else:
            s = kernel_size_step(
                self.sigma_,
                self._e_prev,
                e,
                self._u_prev,
                u,
                self.rho,
                self.sigma_min,
                self.sigma_max,
            )
        model.append(u, self.eta * e, s)
        self.sigma_ = s
        self._e_prev = e
        self._u_prev = np.array(u, dtype=float, copy=True)
        return StepResult(e, s, len(model), True)


class QuantizedKLMS(_BaseKlms):
    """Fixed-size KLMS with online vector quantization.

    An input farther than ``epsilon`` from every codeword is added as a
    new codeword with coefficient ``eta * e``; otherwise the update
    ``eta * e`` merges into the nearest codeword's coefficient and the
    network does not grow.  With ``epsilon = 0`` and distinct inputs the
    trajectory is identical to :class:`KLMS`.

    Parameters
    ----------
    eta : float, optional
        Step size.
    sigma : float, optional
        Gaussian kernel size shared by all codewords.
    epsilon : float, optional
        Quantization size, >= 0.
    """

    def __init__(self, eta: float = 0.5, sigma: float = 1.0, epsilon: float = 0.0):
        self.eta = eta
        self.sigma = sigma
        self.epsilon = epsilon

    def _new_model(self, dim: int):
        self.codebook_ = Codebook(dim, self.epsilon)
        self.expansion_ = self.codebook_.expansion

    def step(self, u, y: float) -> StepResult:
        cb = self.codebook_
        model = cb.expansion
        e = y - model.predict_one(u)
        q = cb.quantize(u)
        if q.is_new:
            model.append(u, self.eta * e, self.sigma)
            cb.last_add_error = e
            return StepResult(e, self.sigma, len(model), True)
        model.add_to_coefficient(q.index, self.eta * e)
        return StepResult(e, self.sigma, len(model), False)


class QuantizedAdaptiveKLMS(_BaseKlms):
    """Quantized KLMS with an online, error-driven kernel size.

    Merges behave exactly as in :class:`QuantizedKLMS`: the nearest
    codeword's coefficient absorbs ``eta * e`` and no kernel size
    changes.  New codewords are stored with the current width of the
    adaptation chain, and each codeword keeps its width forever.  The
    ``pairing`` parameter selects which (error, input) pairs drive the
    chain:

    - ``"sample"`` (default): the chain advances every step from
      consecutive samples, exactly as in :class:`AdaptiveKLMS`; the
      quantizer only decides where the coefficient update lands.  This
      keeps the width responsive on dense streams.
    - ``"codeword"``: the chain advances only when a codeword is added,
      pairing the new codeword with the previous one and the errors
      recorded at their two add events.  Merged samples leave the width
      untouched.  Because consecutive codewords are farther than
      ``epsilon`` apart, the kernel factor in the update can be
      vanishingly small at small widths, which can freeze the chain on
      coarse codebooks; see the package notes before choosing it.

    With ``epsilon = 0`` and distinct inputs both pairings reduce to the
    same trajectory as :class:`AdaptiveKLMS`, bitwise.

    Parameters
    ----------
    eta : float, optional
        Step size for the coefficients.
    rho : float, optional
        Step size for the kernel size update.
    sigma0 : float, optional
        Initial kernel size.
    epsilon : float, optional
        Quantization size, >= 0.
    pairing : {"sample", "codeword"}, optional
        Which pairs drive the kernel size chain.
    sigma_min, sigma_max : float, optional
        Clamp bounds for the width.
    """

    def __init__(
        self,
        eta: float = 0.5,
        rho: float = 0.025,
        sigma0: float = 1.0,
        epsilon: float = 0.0,
        pairing: str = "sample",
        sigma_min: float = DEFAULT_SIGMA_MIN,
        sigma_max: float = DEFAULT_SIGMA_MAX,
    ):
        self.eta = eta
        self.rho = rho
        self.sigma0 = sigma0
        self.epsilon = epsilon
        self.pairing = pairing
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max

    def _new_model(self, dim: int):
        if self.pairing not in ("sample", "codeword"):
            raise ValueError(f"unknown pairing {self.pairing!r}")
        self.codebook_ = Codebook(dim, self.epsilon)
        self.expansion_ = self.codebook_.expansion

    def _reset_state(self):
        self.sigma_ = self.sigma0
        self._e_prev = 0.0
        self._u_prev = None

    def _step_sample_paired(self, u, y: float) -> StepResult:
        cb = self.codebook_
        model = cb.expansion
        e = y - model.predict_one(u)
        if self._u_prev is None:
            s = self.sigma0
        elif self.rho == 0.0:
            s = self.sigma_
        else:
            s = kernel_size_step(
                self.sigma_,
                self._e_prev,
                e,
                self._u_prev,
                u,
                self.rho,
                self.sigma_min,
                self.sigma_max,
            )
        self.sigma_ = s
        self._e_prev = e
        self._u_prev = np.array(u, dtype=float, copy=True)
        q = cb.quantize(u)
        if q.is_new:
            model.append(u, self.eta * e, s)
            cb.last_add_error = e
            return StepResult(e, s, len(model), True)
        model.add_to_coefficient(q.index, self.eta * e)
        return StepResult(e, s, len(model), False)

    def _step_codeword_paired(self, u, y: float) -> StepResult:
        cb = self.codebook_
        model = cb.expansion
        e = y - model.predict_one(u)
        q = cb.quantize(u)
        if not q.is_new:
            model.add_to_coefficient(q.index, self.eta * e)
            return StepResult(e, self.sigma_, len(model), False)
        if len(model) == 0:
            s = self.sigma0
        elif self.rho == 0.0:
            s = self.sigma_
        else:
            s = kernel_size_step(
                self.sigma_,
                cb.last_add_error,
                e,
                model.centers[-1],
                u,
                self.rho,
                self.sigma_min,
                self.sigma_max,
            )
        model.append(u, self.eta * e, s)
        cb.last_add_error = e
        self.sigma_ = s
        return StepResult(e, s, len(model), True)

    def step(self, u, y: float) -> StepResult:
        if self.pairing == "sample":
            return self._step_sample_paired(u, y)
        return self._step_codeword_paired(u, y)
