"""Independent reference computations the test suite checks against.

Everything here deliberately takes a different route than the package:
frequency-domain quadrature instead of closed-form inner products,
central differences instead of derivative formulas, plain Python term
sums instead of vectorized prediction, a generic scalar minimizer
instead of the least mean square update, hand-inverted 2x2 systems
instead of a linear solver, and a locally written integrator for the
chaotic flow.
"""

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar


def kernel_value(u, v, sigma):
    """Gaussian kernel evaluated term by term in plain Python."""
    d2 = sum((float(a) - float(b)) ** 2 for a, b in zip(np.ravel(u), np.ravel(v)))
    return math.exp(-d2 / (2.0 * sigma * sigma))


def fd_grad_sigma(u, v, sigma, h=None):
    """Central-difference width derivative of the Gaussian kernel."""
    if h is None:
        h = 1e-6 * sigma
    up = kernel_value(u, v, sigma + h)
    dn = kernel_value(u, v, sigma - h)
    return (up - dn) / (2.0 * h)


def quad_inner(u, sigma_u, v, sigma_v, sigma_star):
    """Cross-width RKHS inner product by 1-D frequency-domain quadrature.

    The inner product of two isotropic Gaussian bumps in the space of
    reference width sigma_star factorizes over coordinates; each factor
    is

        (sigma_u sigma_v / (sigma_star sqrt(2 pi)))
        * integral of exp(-a w^2 / 2) cos(w delta_j) dw over the line,

    with a = sigma_u^2 + sigma_v^2 - sigma_star^2 > 0.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    a = sigma_u * sigma_u + sigma_v * sigma_v - sigma_star * sigma_star
    if not a > 0.0:
        raise ValueError("widths are outside the membership region")
    # exp(-a w^2 / 2) < 1e-300 beyond the cutoff; integrand is smooth
    cutoff = 40.0 / math.sqrt(a)
    total = 1.0
    for delta in u - v:
        val, _ = quad(
            lambda w: math.exp(-0.5 * a * w * w) * math.cos(w * delta),
            0.0,
            cutoff,
            limit=400,
            epsabs=1e-14,
            epsrel=1e-13,
        )
        total *= 2.0 * val * sigma_u * sigma_v / (sigma_star * math.sqrt(2.0 * math.pi))
    return total


def naive_predict(centers, coefficients, kernel_sizes, u):
    """Expansion value as an explicit term-by-term sum."""
    total = 0.0
    for c, w, s in zip(centers, coefficients, kernel_sizes):
        total += float(w) * kernel_value(c, u, float(s))
    return total


def minimize_coefficient(e, eta):
    """Coefficient minimizing (e - a)^2 + ((1 - eta)/eta) a^2 numerically.

    Brent locates the minimum, then one three-point parabolic
    interpolation polishes it; the objective is an exact parabola, so
    the polish is machine precise without using any update formula.
    """
    lam = (1.0 - eta) / eta

    def J(a):
        return (e - a) ** 2 + lam * a * a

    x = float(minimize_scalar(J, method="brent", options={"xtol": 1e-12}).x)
    h = 0.01 * (1.0 + abs(x))
    num = J(x - h) - J(x + h)
    den = J(x - h) - 2.0 * J(x) + J(x + h)
    return x + 0.5 * h * num / den


def lorenz_deriv(state, beta, delta, rho):
    """Right-hand side of the chaotic flow, written out locally."""
    x, y, z = state
    return np.array(
        [
            -beta * x + y * z,
            delta * (z - y),
            -x * y + rho * y - z,
        ]
    )


def rk4_step(state, dt, beta, delta, rho):
    """One classical fourth order Runge-Kutta step of the flow."""
    k1 = lorenz_deriv(state, beta, delta, rho)
    k2 = lorenz_deriv(state + 0.5 * dt * k1, beta, delta, rho)
    k3 = lorenz_deriv(state + 0.5 * dt * k2, beta, delta, rho)
    k4 = lorenz_deriv(state + dt * k3, beta, delta, rho)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def hand_solve_2x2(G, y, gamma=0.0):
    """Solve (G + gamma I) alpha = y for a 2x2 system by the inverse formula."""
    a = G[0][0] + gamma
    b = G[0][1]
    c = G[1][0]
    d = G[1][1] + gamma
    det = a * d - b * c
    return np.array([(d * y[0] - b * y[1]) / det, (a * y[1] - c * y[0]) / det])


def grad_cases(n, rng):
    """Random (u, v, sigma) cases with a nondegenerate width gradient."""
    cases = []
    for _ in range(n):
        dim = int(rng.integers(1, 4))
        sigma = float(10.0 ** rng.uniform(math.log10(0.05), math.log10(5.0)))
        u = rng.normal(0.0, 1.0, dim)
        direction = rng.normal(0.0, 1.0, dim)
        direction /= np.linalg.norm(direction)
        v = u + direction * sigma * rng.uniform(0.3, 3.0)
        cases.append((u, v, sigma))
    return cases


def inner_cases(n, rng):
    """Random (u, sigma_u, v, sigma_v, sigma_star) member-width cases."""
    cases = []
    for _ in range(n):
        dim = int(rng.integers(1, 3))
        sigma_star = float(rng.uniform(0.5, 1.5))
        bound = math.sqrt(2.0) * sigma_star / 2.0
        sigma_u = float(rng.uniform(1.1 * bound, 3.0 * bound))
        sigma_v = float(rng.uniform(1.1 * bound, 3.0 * bound))
        u = rng.uniform(-2.0, 2.0, dim)
        v = rng.uniform(-2.0, 2.0, dim)
        cases.append((u, sigma_u, v, sigma_v, sigma_star))
    return cases
