"""Command line entry points for running experiments.

Two subcommands:

- ``klms run CONFIG [--out DIR]``: run the configured Monte Carlo
  experiment for one or several kernel size policies and write
  ``convergence.csv``, ``sigma_evolution.csv``, ``network_size.csv``,
  ``summary.csv`` and ``manifest.json`` into DIR (default
  ``klms_out``).  Given the same config and seed, the CSV artifacts
  are byte-identical across reruns.
- ``klms theory CONFIG``: run a static experiment and print the
  simulated steady-state EMSE next to its theoretical value.

Config files are ``key = value`` lines with ``#`` comments; any key can
be overridden on the command line with ``--override key=value``.  Exit
status is 0 on success, 1 for configuration errors and 2 for numerical
failures such as a diverging integration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .analysis import NumericalError, emse_estimate, theoretical_emse
from .experiments import ExperimentConfig, LorenzParams, run_monte_carlo

__all__ = ["ConfigError", "build_configs", "main"]

CSV_ARTIFACTS = (
    "convergence.csv",
    "sigma_evolution.csv",
    "network_size.csv",
    "summary.csv",
)

_CONFIG_INT = {
    "iterations",
    "mc_runs",
    "seed",
    "test_size",
    "emse_window",
    "taps",
    "horizon",
    "curve_stride",
}
_CONFIG_FLOAT = {"eta", "rho", "sigma0", "sigma", "epsilon", "noise_variance"}
_CONFIG_STR = {"experiment", "sigma_policy", "pairing"}
_LORENZ_FLOAT = {
    "lorenz_beta": "beta",
    "lorenz_delta": "delta",
    "lorenz_rho": "rho_lorenz",
    "lorenz_dt": "dt",
}
_LORENZ_INT = {"lorenz_transient": "transient"}


class ConfigError(ValueError):
    """The configuration cannot be parsed or describes no valid run."""


def _to_int(key: str, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {token!r}") from None


def _to_float(key: str, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {token!r}") from None


def read_config(path: str) -> dict:
    """Parse a key = value config file into a string-to-string dict."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def _policy_label(config: ExperimentConfig) -> str:
    if config.sigma_policy == "fixed":
        return f"{config.sigma:g}"
    return config.sigma_policy


def build_configs(entries: dict):
    """Turn raw config entries into labeled experiment configs.

    The optional ``policies`` key lists kernel size policies to run
    side by side: numeric tokens become fixed widths, ``adaptive`` and
    ``silverman`` select the corresponding policies.  All other keys
    are shared across policies.

    Returns
    -------
    list of (str, ExperimentConfig)
        One (label, config) pair per policy, in config order.
    """
    entries = dict(entries)
    policy_tokens = None
    if "policies" in entries:
        raw = entries.pop("policies")
        policy_tokens = [t.strip() for t in raw.split(",") if t.strip()]
        if not policy_tokens:
            raise ConfigError("policies must list at least one policy")
    kwargs = {}
    lorenz_kwargs = {}
    for key, token in entries.items():
        if key in _CONFIG_INT:
            kwargs[key] = _to_int(key, token)
        elif key in _CONFIG_FLOAT:
            kwargs[key] = _to_float(key, token)
        elif key in _CONFIG_STR:
            kwargs[key] = token
        elif key in _LORENZ_FLOAT:
            lorenz_kwargs[_LORENZ_FLOAT[key]] = _to_float(key, token)
        elif key in _LORENZ_INT:
            lorenz_kwargs[_LORENZ_INT[key]] = _to_int(key, token)
        elif key == "lorenz_initial_state":
            parts = [p.strip() for p in token.split(",") if p.strip()]
            if len(parts) != 3:
                raise ConfigError(
                    f"lorenz_initial_state needs 3 components, got {token!r}"
                )
            lorenz_kwargs["initial_state"] = tuple(_to_float(key, p) for p in parts)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if lorenz_kwargs:
        kwargs["lorenz"] = LorenzParams(**lorenz_kwargs)
    try:
        base = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if policy_tokens is None:
        return [(_policy_label(base), base)]
    labeled = []
    for token in policy_tokens:
        if token in ("adaptive", "silverman"):
            config = replace(base, sigma_policy=token)
        else:
            try:
                sigma = float(token)
            except ValueError:
                raise ConfigError(f"unknown policy {token!r}") from None
            config = replace(base, sigma_policy="fixed", sigma=sigma)
        label = _policy_label(config)
        if any(label == seen for seen, _ in labeled):
            raise ConfigError(f"duplicate policy {token!r}")
        labeled.append((label, config))
    return labeled


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.9g" % float(value)


def _write_csv(path: str, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def _curve_rows(label, iterations, values):
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    for i, it in enumerate(iterations):
        yield (label, int(it), mean[i], std[i])


def _summary_row(label, config, result):
    if config.experiment == "static":
        window = min(config.emse_window, config.iterations)
        per_run = np.array([emse_estimate(t, window) for t in result["ea"]])
        theory = theoretical_emse(config.eta, config.noise_variance)
    else:
        per_run = result["final_mse"]
        theory = None
    return (
        label,
        config.experiment,
        int(config.mc_runs),
        int(config.iterations),
        per_run.mean(),
        per_run.std(),
        theory,
        result["network_sizes"].mean(),
        result["network_sizes"].std(),
        result["final_sigmas"].mean(),
        result["final_sigmas"].std(),
        result["sigma0s"].mean(),
    )


def cmd_run(args) -> int:
    entries = read_config(args.config)
    for spec in args.override:
        if "=" not in spec:
            raise ConfigError(f"--override expects key=value, got {spec!r}")
        key, value = spec.split("=", 1)
        entries[key.strip()] = value.strip()
    labeled = build_configs(entries)
    os.makedirs(args.out, exist_ok=True)
    started = time.monotonic()
    convergence_rows = []
    sigma_rows = []
    network_rows = []
    summary_rows = []
    for label, config in labeled:
        result = run_monte_carlo(config)
        if config.experiment == "static":
            ea = result["ea"]
            convergence_rows.extend(
                _curve_rows(label, np.arange(1, config.iterations + 1), ea * ea)
            )
        else:
            convergence_rows.extend(
                _curve_rows(label, result["curve_iterations"], result["mse_curves"])
            )
        if config.sigma_policy in ("adaptive", "silverman"):
            sigma_rows.extend(
                _curve_rows(
                    label, np.arange(1, config.iterations + 1), result["sigmas"]
                )
            )
        if config.epsilon > 0.0:
            sizes = np.cumsum(result["added"], axis=1)
            network_rows.extend(
                _curve_rows(label, np.arange(1, config.iterations + 1), sizes)
            )
        summary_rows.append(_summary_row(label, config, result))
        print(f"{label}: mean final metric {_fmt(summary_rows[-1][4])}")
    _write_csv(
        os.path.join(args.out, "convergence.csv"),
        ("policy", "iteration", "mean", "std"),
        convergence_rows,
    )
    _write_csv(
        os.path.join(args.out, "sigma_evolution.csv"),
        ("policy", "iteration", "mean", "std"),
        sigma_rows,
    )
    _write_csv(
        os.path.join(args.out, "network_size.csv"),
        ("policy", "iteration", "mean", "std"),
        network_rows,
    )
    _write_csv(
        os.path.join(args.out, "summary.csv"),
        (
            "policy",
            "experiment",
            "mc_runs",
            "iterations",
            "emse",
            "emse_std",
            "theoretical_emse",
            "network_size_mean",
            "network_size_std",
            "final_sigma_mean",
            "final_sigma_std",
            "sigma0_mean",
        ),
        summary_rows,
    )
    manifest = {
        "version": __version__,
        "config": {label: asdict(config) for label, config in labeled},
        "seed": labeled[0][1].seed,
        "artifacts": list(CSV_ARTIFACTS),
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}")
    return 0


def cmd_theory(args) -> int:
    entries = read_config(args.config)
    for spec in args.override:
        if "=" not in spec:
            raise ConfigError(f"--override expects key=value, got {spec!r}")
        key, value = spec.split("=", 1)
        entries[key.strip()] = value.strip()
    labeled = build_configs(entries)
    if len(labeled) != 1:
        raise ConfigError("theory requires a single policy")
    label, config = labeled[0]
    if config.experiment != "static":
        raise ConfigError("theory applies to the static experiment only")
    if config.epsilon <= 0.0 and config.iterations > 100_000:
        raise ConfigError(
            "unquantized runs beyond 100000 iterations are outside the "
            "supported budget; quantize or reduce iterations"
        )
    result = run_monte_carlo(config)
    window = min(config.emse_window, config.iterations)
    simulated = emse_estimate(result["ea"], window)
    theory = theoretical_emse(config.eta, config.noise_variance)
    ratio = simulated / theory if theory > 0.0 else math.inf
    print(f"policy = {label}")
    print(f"simulated_emse = {_fmt(simulated)}")
    print(f"theoretical_emse = {_fmt(theory)}")
    print(f"ratio = {_fmt(ratio)}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="klms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write CSV artifacts")
    run.add_argument("config", help="path to a key=value config file")
    run.add_argument("--out", default="klms_out", help="output directory")
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry (repeatable)",
    )
    run.set_defaults(func=cmd_run)
    theory = sub.add_parser(
        "theory", help="compare simulated steady-state EMSE with theory"
    )
    theory.add_argument("config", help="path to a key=value config file")
    theory.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry (repeatable)",
    )
    theory.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
