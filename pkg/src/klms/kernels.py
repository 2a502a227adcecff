"""Gaussian kernel primitives and RKHS geometry across kernel widths.

The normalized Gaussian kernel

    kappa_sigma(u, v) = exp(-||u - v||^2 / (2 sigma^2))

induces a reproducing kernel Hilbert space H_sigma for every width
sigma > 0.  A Gaussian of width sigma belongs to the space H_sigma*
of a reference width sigma* if and only if sigma > sqrt(2)*sigma*/2,
in which case its H_sigma* norm and the inner products between
Gaussians of differing widths have closed forms (computed here via
Gaussian Fourier transforms).  These closed forms are what make the
energy bookkeeping in :mod:`klms.analysis` tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GaussianKernelSpec",
    "RkhsContext",
    "RkhsMembershipError",
    "gaussian",
    "grad_sigma",
    "squared_distance",
]


class RkhsMembershipError(ValueError):
    """A Gaussian of the requested width is not a member of the reference RKHS."""


def _check_sigma(sigma):
    if not sigma > 0.0:
        raise ValueError(f"kernel size must be positive, got {sigma!r}")


def _check_pair(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"input dimensions differ: {u.shape} vs {v.shape}")
    return u, v


def squared_distance(u, v):
    """Squared Euclidean distance ||u - v||^2, accumulated in double precision."""
    u, v = _check_pair(u, v)
    d = u - v
    return float(np.dot(d.ravel(), d.ravel()))


def gaussian(u, v, sigma):
    """Evaluate the Gaussian kernel kappa_sigma(u, v).

    Parameters
    ----------
    u, v : array_like
        Points of equal dimension.
    sigma : float
        Kernel size, must be positive.

    Returns
    -------
    float
        exp(-||u - v||^2 / (2 sigma^2)), in (0, 1].
    """
    _check_sigma(sigma)
    return math.exp(-squared_distance(u, v) / (2.0 * sigma * sigma))


def grad_sigma(u, v, sigma):
    """Partial derivative of ``gaussian(u, v, sigma)`` with respect to sigma.

    Equals ||u - v||^2 * kappa_sigma(u, v) / sigma^3.  This is the factor
    that drives the online kernel size update in :mod:`klms.filters`.
    """
    _check_sigma(sigma)
    d2 = squared_distance(u, v)
    return d2 * math.exp(-d2 / (2.0 * sigma * sigma)) / sigma**3


@dataclass(frozen=True)
class GaussianKernelSpec:
    """A Gaussian kernel of fixed size on an m-dimensional input space."""

    sigma: float
    dim: int

    def __post_init__(self):
        _check_sigma(self.sigma)
        if self.dim < 1:
            raise ValueError(f"input dimension must be >= 1, got {self.dim}")

    def __call__(self, u, v):
        u, v = _check_pair(u, v)
        if u.size != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {u.size}")
        return gaussian(u, v, self.sigma)


@dataclass(frozen=True)
class RkhsContext:
    """The RKHS of a reference Gaussian width, with cross-width geometry.

    Parameters
    ----------
    sigma_star : float
        Reference kernel size sigma*.  All norms and inner products are
        taken in H_sigma*.
    dim : int
        Input dimension m.

    Notes
    -----
    A Gaussian bump kappa_sigma(u, .) lies in H_sigma* iff
    sigma > sqrt(2)*sigma*/2.  For member widths,

        ||kappa_sigma(u, .)||   = (sigma^2 / (sigma* sqrt(2 sigma^2 - sigma*^2)))^(m/2)

    and for two member bumps with widths s, t and centers u, v,

        <kappa_s(u, .), kappa_t(v, .)> = (s^2 t^2 / (sigma*^2 a))^(m/2)
                                         * exp(-||u - v||^2 / (2 a)),
        a = s^2 + t^2 - sigma*^2 > 0.

    The cross-width form follows from dividing the Fourier transforms of
    the two bumps by the transform of the reference kernel; it reduces to
    the reproducing property when s = t = sigma* and to the squared norm
    when s = t and u = v.  Widths at or below the membership bound raise
    :class:`RkhsMembershipError` (no approximation is attempted).
    """

    sigma_star: float
    dim: int

    def __post_init__(self):
        _check_sigma(self.sigma_star)
        if self.dim < 1:
            raise ValueError(f"input dimension must be >= 1, got {self.dim}")

    @property
    def membership_bound(self):
        """Widths must exceed sqrt(2)*sigma*/2 to belong to H_sigma*."""
        return math.sqrt(2.0) * self.sigma_star / 2.0

    def contains(self, sigma):
        """Whether kappa_sigma(u, .) is a member of H_sigma*."""
        _check_sigma(sigma)
        return sigma > self.membership_bound

    def _require_member(self, sigma):
        _check_sigma(sigma)
        if not sigma > self.membership_bound:
            raise RkhsMembershipError(
                f"width {sigma!r} is not in the RKHS of reference width "
                f"{self.sigma_star!r} (requires sigma > {self.membership_bound!r})"
            )

    def norm_of(self, sigma):
        """H_sigma* norm of a Gaussian bump of width sigma (center-independent)."""
        self._require_member(sigma)
        s2 = sigma * sigma
        ratio = s2 / (self.sigma_star * math.sqrt(2.0 * s2 - self.sigma_star**2))
        return ratio ** (self.dim / 2.0)

    def inner(self, u, sigma_u, v, sigma_v):
        """H_sigma* inner product of two Gaussian bumps of (possibly) different widths."""
        self._require_member(sigma_u)
        self._require_member(sigma_v)
        u, v = _check_pair(u, v)
        su2 = sigma_u * sigma_u
        sv2 = sigma_v * sigma_v
        a = su2 + sv2 - self.sigma_star**2
        scale = (su2 * sv2 / (self.sigma_star**2 * a)) ** (self.dim / 2.0)
        d = (u - v).ravel()
        return scale * math.exp(-float(np.dot(d, d)) / (2.0 * a))

    def expansion_inner(self, centers, sigmas, coeffs, v, sigma_v):
        """Inner product of a finite Gaussian expansion with one bump.

        Computes <sum_k coeffs[k] kappa_sigmas[k](centers[k], .),
        kappa_sigma_v(v, .)> in H_sigma*, vectorized over the expansion
        terms.  Every width involved must satisfy the membership bound.
        """
        self._require_member(sigma_v)
        centers = np.asarray(centers, dtype=float)
        sigmas = np.asarray(sigmas, dtype=float)
        coeffs = np.asarray(coeffs, dtype=float)
        if centers.ndim != 2:
            centers = centers.reshape(len(sigmas), -1)
        if sigmas.size == 0:
            return 0.0
        if not np.all(sigmas > self.membership_bound):
            bad = float(sigmas.min())
            raise RkhsMembershipError(
                f"expansion width {bad!r} is not in the RKHS of reference width "
                f"{self.sigma_star!r}"
            )
        v = np.asarray(v, dtype=float).ravel()
        s2 = sigmas * sigmas
        sv2 = sigma_v * sigma_v
        a = s2 + sv2 - self.sigma_star**2
        scale = (s2 * sv2 / (self.sigma_star**2 * a)) ** (self.dim / 2.0)
        diff = centers - v
        d2 = np.einsum("ij,ij->i", diff, diff)
        vals = scale * np.exp(-d2 / (2.0 * a))
        return float(np.dot(vals, coeffs))

    def delta_norm_sq(self, sigma, u=None):
        """Squared norm of kappa_sigma(u, .) - kappa_sigma*(u, .) in H_sigma*.

        Center-independent; expands to norm_of(sigma)^2 - 2 <., .> + 1 with
        the cross term evaluated in closed form.
        """
        self._require_member(sigma)
        point = np.zeros(self.dim) if u is None else np.asarray(u, dtype=float)
        cross = self.inner(point, sigma, point, self.sigma_star)
        return self.norm_of(sigma) ** 2 - 2.0 * cross + 1.0
