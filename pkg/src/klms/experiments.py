"""Benchmark experiments: static regression and chaotic series prediction.

Two standard testbeds for the online filters in :mod:`klms.filters`:

- ``static``: learn y = cos(8 u) + v from uniform inputs on [-pi, pi]
  with white Gaussian observation noise, one independently drawn stream
  per Monte Carlo run.
- ``lorenz``: short-term prediction of the second state of a chaotic
  Lorenz-type flow, integrated by fixed-step RK4, time-delay embedded,
  and split into consecutive non-overlapping per-run blocks so Monte
  Carlo runs never share samples.

:func:`run_monte_carlo` drives either experiment from a single
:class:`ExperimentConfig` and returns per-run trajectories plus finals.
Runs are reproducible: one master seed spawns independent per-run
streams, and results are bitwise identical across repeats and across
the serial and multiprocess paths.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .analysis import NumericalError
from .filters import (
    KLMS,
    AdaptiveKLMS,
    QuantizedAdaptiveKLMS,
    QuantizedKLMS,
)

__all__ = [
    "ExperimentConfig",
    "LorenzParams",
    "embed",
    "gen_static",
    "lorenz_series",
    "make_filter",
    "run_monte_carlo",
    "silverman_init",
    "static_target",
]

MAX_WORKERS_ENV = "KLMS_MAX_WORKERS"


@dataclass(frozen=True)
class LorenzParams:
    """Parameters of the Lorenz-type flow and its integration.

    The flow is

        dx/dt = -beta x + y z
        dy/dt = delta (z - y)
        dz/dt = -x y + rho_lorenz y - z

    integrated by fixed-step fourth order Runge-Kutta from
    ``initial_state``; the first ``transient`` steps are discarded so
    sampling starts on the attractor.
    """

    beta: float = 4.0
    delta: float = 30.0
    rho_lorenz: float = 45.92
    dt: float = 0.01
    transient: int = 1000
    initial_state: tuple = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one Monte Carlo experiment.

    Parameters
    ----------
    experiment : {"static", "lorenz"}
        Which testbed to run.
    eta : float
        Filter step size.
    rho : float
        Kernel size step (adaptive policies).
    sigma0 : float
        Initial kernel size (adaptive policies).
    sigma : float
        Kernel size (fixed policy).
    sigma_policy : {"fixed", "adaptive", "silverman"}
        Fixed width, adaptive width from ``sigma0``, or adaptive width
        initialized by Silverman's rule on the run's training inputs.
    epsilon : float
        Quantization size; 0 disables quantization.
    pairing : {"sample", "codeword"}
        Pair selection for the quantized adaptive width update.
    iterations : int
        Training samples per run.
    mc_runs : int
        Number of independent Monte Carlo runs.
    noise_variance : float
        Observation noise variance (static experiment).
    seed : int
        Master seed; per-run streams are spawned from it.
    test_size : int
        Held-out samples per run (lorenz experiment).
    emse_window : int
        Trailing window for steady-state EMSE summaries.
    taps : int
        Time-delay embedding length (lorenz experiment).
    horizon : int
        Prediction horizon in samples (lorenz experiment).
    curve_stride : int
        Training iterations between test-set evaluations (lorenz).
    lorenz : LorenzParams
        Flow and integration parameters (lorenz experiment).
    """

    experiment: str = "static"
    eta: float = 0.5
    rho: float = 0.025
    sigma0: float = 1.0
    sigma: float = 1.0
    sigma_policy: str = "fixed"
    epsilon: float = 0.0
    pairing: str = "sample"
    iterations: int = 5000
    mc_runs: int = 200
    noise_variance: float = 1e-4
    seed: int = 12345
    test_size: int = 100
    emse_window: int = 2000
    taps: int = 5
    horizon: int = 3
    curve_stride: int = 50
    lorenz: LorenzParams = field(default_factory=LorenzParams)


def static_target(u):
    """Noise-free static regression target cos(8 u)."""
    return np.cos(8.0 * np.asarray(u, dtype=float))


def gen_static(n: int, noise_variance: float, rng=None):
    """Draw one static-regression stream.

    Inputs are uniform on [-pi, pi], outputs are cos(8 u) plus white
    Gaussian noise.  The inputs are drawn before the noise, so the
    input stream for a given generator state does not depend on the
    noise variance.

    Parameters
    ----------
    n : int
        Number of samples.
    noise_variance : float
        Observation noise variance, >= 0.
    rng : numpy.random.Generator or seed-like, optional

    Returns
    -------
    tuple
        (X, y, v) with X of shape (n, 1), y = cos(8 X[:, 0]) + v.
    """
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n!r}")
    if noise_variance < 0.0:
        raise ValueError(f"noise variance must be >= 0, got {noise_variance!r}")
    rng = np.random.default_rng(rng)
    X = rng.uniform(-np.pi, np.pi, (n, 1))
    v = rng.normal(0.0, np.sqrt(noise_variance), n)
    y = np.cos(8.0 * X[:, 0]) + v
    return X, y, v


def _lorenz_deriv(state, p: LorenzParams):
    x, y, z = state
    return np.array(
        [
            -p.beta * x + y * z,
            p.delta * (z - y),
            -x * y + p.rho_lorenz * y - z,
        ]
    )


def _rk4_step(state, dt: float, p: LorenzParams):
    k1 = _lorenz_deriv(state, p)
    k2 = _lorenz_deriv(state + 0.5 * dt * k1, p)
    k3 = _lorenz_deriv(state + 0.5 * dt * k2, p)
    k4 = _lorenz_deriv(state + dt * k3, p)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def lorenz_series(params: LorenzParams, n: int) -> np.ndarray:
    """Integrate the flow and sample its second state.

    Runs ``params.transient`` RK4 steps from ``params.initial_state``,
    then records the second state component before each of the next
    ``n`` steps.

    Raises
    ------
    NumericalError
        If the state leaves the finite range during integration, which
        fixed-step RK4 does when ``dt`` is too large for this flow.
    """
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n!r}")
    if not params.dt > 0.0:
        raise ValueError(f"time step must be positive, got {params.dt!r}")
    if params.transient < 0:
        raise ValueError(f"transient must be >= 0, got {params.transient!r}")
    state = np.asarray(params.initial_state, dtype=float)
    if state.shape != (3,):
        raise ValueError(f"initial state must have 3 components, got {state.shape}")
    series = np.empty(n)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(params.transient):
            state = _rk4_step(state, params.dt, params)
            if not np.all(np.isfinite(state)):
                raise NumericalError(
                    f"integration diverged at transient step {step + 1}; "
                    f"reduce dt (got {params.dt!r})"
                )
        for i in range(n):
            series[i] = state[1]
            state = _rk4_step(state, params.dt, params)
            if not np.all(np.isfinite(state)):
                raise NumericalError(
                    f"integration diverged at sample step {i + 1}; "
                    f"reduce dt (got {params.dt!r})"
                )
    return series


def embed(series, taps: int = 5, horizon: int = 1):
    """Time-delay embedding with a prediction horizon.

    Pairs each window of ``taps`` consecutive samples with the sample
    ``horizon`` steps after the window's last element:

        X[i] = series[i : i + taps],  y[i] = series[i + taps - 1 + horizon].

    Returns
    -------
    tuple
        (X, y) with X of shape (n - taps - horizon + 1, taps).
    """
    series = np.asarray(series, dtype=float).ravel()
    if taps < 1:
        raise ValueError(f"taps must be >= 1, got {taps!r}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon!r}")
    n_pairs = series.size - (taps - 1) - horizon
    if n_pairs < 1:
        raise ValueError(
            f"series of length {series.size} is too short for taps={taps}, "
            f"horizon={horizon}"
        )
    X = sliding_window_view(series, taps)[:n_pairs].copy()
    y = series[taps - 1 + horizon :][:n_pairs].copy()
    return X, y


def silverman_init(X) -> float:
    """Kernel size from Silverman's density-estimation rule.

    For N samples in m dimensions, returns

        sigma_data * (4 / ((2 m + 1) N)) ** (1 / (m + 4))

    with ``sigma_data`` the mean per-coordinate standard deviation.
    A data-driven starting point for the adaptive width.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"X must be an (N >= 2, m) array, got shape {X.shape}")
    n, m = X.shape
    sigma_data = float(np.mean(np.std(X, axis=0)))
    if not sigma_data > 0.0:
        raise ValueError("inputs have zero variance; no width scale available")
    return sigma_data * (4.0 / ((2.0 * m + 1.0) * n)) ** (1.0 / (m + 4.0))


def make_filter(config: ExperimentConfig, X_train=None):
    """Construct the filter an experiment config describes.

    The ``silverman`` policy resolves its initial width from
    ``X_train``, so each Monte Carlo run gets a starting width fit to
    its own inputs.
    """
    policy = config.sigma_policy
    quantized = config.epsilon > 0.0
    if policy == "fixed":
        if quantized:
            return QuantizedKLMS(
                eta=config.eta, sigma=config.sigma, epsilon=config.epsilon
            )
        return KLMS(eta=config.eta, sigma=config.sigma)
    if policy in ("adaptive", "silverman"):
        if policy == "silverman":
            if X_train is None:
                raise ValueError("silverman policy needs training inputs")
            sigma0 = silverman_init(X_train)
        else:
            sigma0 = config.sigma0
        if quantized:
            return QuantizedAdaptiveKLMS(
                eta=config.eta,
                rho=config.rho,
                sigma0=sigma0,
                epsilon=config.epsilon,
                pairing=config.pairing,
            )
        return AdaptiveKLMS(eta=config.eta, rho=config.rho, sigma0=sigma0)
    raise ValueError(f"unknown sigma policy {policy!r}")


def _curve_boundaries(iterations: int, stride: int):
    bounds = list(range(stride, iterations + 1, stride))
    if not bounds or bounds[-1] != iterations:
        bounds.append(iterations)
    return bounds


def _run_static_once(config: ExperimentConfig, child_seed):
    rng = np.random.default_rng(child_seed)
    X, y, v = gen_static(config.iterations, config.noise_variance, rng)
    model = make_filter(config, X)
    model.fit(X, y)
    sigma0 = getattr(model, "sigma0", getattr(model, "sigma", None))
    return (
        model.errors_,
        model.errors_ - v,
        model.sigmas_,
        model.added_,
        len(model.expansion_),
        float(sigma0),
    )


def _run_lorenz_once(config: ExperimentConfig, block):
    X, y = embed(block, config.taps, config.horizon)
    X_train = X[: config.iterations]
    y_train = y[: config.iterations]
    X_test = X[config.iterations : config.iterations + config.test_size]
    y_test = y[config.iterations : config.iterations + config.test_size]
    model = make_filter(config, X_train)
    bounds = _curve_boundaries(config.iterations, config.curve_stride)
    mses = np.empty(len(bounds))
    start = 0
    for k, b in enumerate(bounds):
        model.partial_fit(X_train[start:b], y_train[start:b])
        start = b
        resid = y_test - model.predict(X_test)
        mses[k] = float(np.mean(resid * resid))
    sigma0 = getattr(model, "sigma0", getattr(model, "sigma", None))
    return (
        model.errors_,
        mses,
        model.sigmas_,
        model.added_,
        len(model.expansion_),
        float(sigma0),
    )


def _max_workers() -> int:
    raw = os.environ.get(MAX_WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"{MAX_WORKERS_ENV} must be an integer, got {raw!r}")
    return max(workers, 1)


def _map_runs(fn, config, per_run_args):
    workers = _max_workers()
    if workers == 1 or len(per_run_args) <= 1:
        return [fn(config, a) for a in per_run_args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [config] * len(per_run_args), per_run_args))


def run_monte_carlo(config: ExperimentConfig) -> dict:
    """Run every Monte Carlo repetition of an experiment.

    Static runs draw independent streams from seeds spawned off
    ``config.seed``.  Lorenz runs carve one long deterministic series
    into consecutive non-overlapping blocks, one private block per run,
    each long enough for embedding, training and testing.

    Returns
    -------
    dict
        Per-run arrays keyed by name.  Both experiments provide
        ``errors`` (runs, iterations) training errors, ``sigmas``
        (runs, iterations) width after each step, ``network_sizes``
        (runs,) final center counts, ``added`` (runs, iterations)
        growth flags, ``final_sigmas`` (runs,) and ``sigma0s`` (runs,)
        resolved initial widths.  The static experiment adds ``ea``
        (runs, iterations) a priori errors (training error minus the
        noise).  The lorenz experiment adds ``mse_curves``
        (runs, points) held-out MSE after every ``curve_stride``
        training samples, ``curve_iterations`` (points,) and
        ``final_mse`` (runs,).
    """
    if config.mc_runs < 1:
        raise ValueError(f"mc_runs must be >= 1, got {config.mc_runs!r}")
    if config.iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {config.iterations!r}")
    if config.experiment == "static":
        children = np.random.SeedSequence(config.seed).spawn(config.mc_runs)
        rows = _map_runs(_run_static_once, config, children)
        errors = np.stack([r[0] for r in rows])
        ea = np.stack([r[1] for r in rows])
        sigmas = np.stack([r[2] for r in rows])
        added = np.stack([r[3] for r in rows])
        return {
            "errors": errors,
            "ea": ea,
            "sigmas": sigmas,
            "added": added,
            "network_sizes": np.array([r[4] for r in rows]),
            "final_sigmas": sigmas[:, -1].copy(),
            "sigma0s": np.array([r[5] for r in rows]),
        }
    if config.experiment == "lorenz":
        if config.test_size < 1:
            raise ValueError(f"test_size must be >= 1, got {config.test_size!r}")
        block = config.taps - 1 + config.horizon + config.iterations + config.test_size
        series = lorenz_series(config.lorenz, config.mc_runs * block)
        blocks = [series[r * block : (r + 1) * block] for r in range(config.mc_runs)]
        rows = _map_runs(_run_lorenz_once, config, blocks)
        errors = np.stack([r[0] for r in rows])
        mse_curves = np.stack([r[1] for r in rows])
        sigmas = np.stack([r[2] for r in rows])
        added = np.stack([r[3] for r in rows])
        return {
            "errors": errors,
            "sigmas": sigmas,
            "added": added,
            "network_sizes": np.array([r[4] for r in rows]),
            "final_sigmas": sigmas[:, -1].copy(),
            "sigma0s": np.array([r[5] for r in rows]),
            "mse_curves": mse_curves,
            "curve_iterations": np.array(
                _curve_boundaries(config.iterations, config.curve_stride)
            ),
            "final_mse": mse_curves[:, -1].copy(),
        }
    raise ValueError(f"unknown experiment {config.experiment!r}")
