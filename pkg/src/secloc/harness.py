"""Monte-Carlo engine: trials, aggregation, sweeps, and CSV output.

Every trial derives its own random streams from (master_seed, trial index),
so results are bit-identical regardless of execution order or worker count.
Within a trial all enabled estimators see the same measurement matrix, making
the comparison paired.  Estimator failures (eliminations leaving too few
anchors, non-convergence) are counted per estimator and never abort a trial.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import crlb as crlb_mod
from .attacks import (
    MeasurementMatrix,
    Topology,
    load_topology,
    random_topology,
    select_malicious,
    simulate_measurements,
)
from .channel import distance_from_rssi
from .config import ExperimentConfig, apply_axis
from .estimators import (
    build_linear_system,
    grad_desc_estimate,
    lmds_estimate,
    ls_estimate,
    ml_estimate,
    swls_estimate,
    wls_estimate,
)
from .exceptions import ConfigError, SecLocError
from .planefit import ln1_estimate, ln1e_estimate

CSV_HEADER = (
    "axis_value",
    "estimator",
    "rmse_m",
    "crlb_m",
    "trials_ok",
    "trials_failed",
    "mean_tp",
    "mean_fp",
)

# spawn_key namespaces: (0, trial, k) for per-trial streams, (1,) for the
# fixed topology shared by all trials.
_STREAM_TOPOLOGY = 0
_STREAM_MALICIOUS = 1
_STREAM_NOISE = 2
_STREAM_LMDS = 3


@dataclass(frozen=True)
class EstimatorOutcome:
    """One estimator's result on one trial."""

    error: float | None
    converged: bool
    n_eliminated: int
    tp: int
    fp: int
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None and self.converged


@dataclass(frozen=True)
class TrialResult:
    index: int
    n_malicious: int
    n_anchors: int
    crlb: float | None
    outcomes: dict


@dataclass(frozen=True)
class EstimatorSummary:
    rmse: float | None
    trials_ok: int
    trials_failed: int
    mean_tp: float
    mean_fp: float
    recall: float | None
    false_rate: float | None


@dataclass(frozen=True)
class MonteCarloSummary:
    trials: int
    crlb: float | None
    per_estimator: dict


def _trial_rng(master_seed: int, trial_index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(0, trial_index, stream))
    )


def base_topology(config: ExperimentConfig) -> Topology:
    """The topology shared by all trials (ignoring per-trial regeneration)."""
    if config.topology_file is not None:
        return load_topology(config.topology_file)
    seed = np.random.SeedSequence(config.master_seed, spawn_key=(1,))
    return random_topology(config.n_anchors, config.area, target=config.target, seed=seed)


def _trial_topology(config: ExperimentConfig, trial_index: int, base: Topology) -> Topology:
    if config.topology_per_trial:
        return random_topology(
            config.n_anchors,
            config.area,
            target=config.target,
            seed=_trial_rng(config.master_seed, trial_index, _STREAM_TOPOLOGY),
        )
    return base


def _trial_malicious(config: ExperimentConfig, trial_index: int, topology: Topology) -> frozenset:
    if config.topology_file is not None and config.malicious_fraction == 0.0:
        return topology.malicious  # labels fixed by the file
    eligible = config.placement.eligible(topology.anchors, topology.target)
    return select_malicious(
        topology.n_anchors,
        config.malicious_fraction,
        seed=_trial_rng(config.master_seed, trial_index, _STREAM_MALICIOUS),
        eligible=eligible,
    )


def _trial_crlb(config: ExperimentConfig, topology: Topology) -> float | None:
    try:
        if config.attack_kind == "coordinated":
            fim = crlb_mod.fim_coordinated(
                topology,
                config.params(),
                config.resolve_t_att(topology.target),
                config.packets,
            )
        else:
            sigma_att = config.sigma_att if config.attack_kind == "uncoordinated" else 0.0
            fim = crlb_mod.fim_uncoordinated(
                topology, config.params(), sigma_att, config.packets
            )
        return crlb_mod.crlb_bound(fim)
    except SecLocError:
        return None


def _run_estimator(name, config, topology, measurements, system, lmds_seed):
    params = config.params()
    if name == "ls":
        return ls_estimate(system)
    if name == "wls":
        return wls_estimate(measurements, topology.anchors, params)
    if name == "swls":
        return swls_estimate(measurements, topology.anchors, params, zeta=config.zeta)
    if name == "ml":
        return ml_estimate(measurements, topology.anchors, params, init=topology.target)
    if name == "lmds":
        return lmds_estimate(
            measurements,
            topology.anchors,
            params,
            n_subsets=config.lmds.n_subsets,
            subset_size=config.lmds.subset_size,
            seed=lmds_seed,
        )
    if name == "grad_desc":
        return grad_desc_estimate(
            measurements,
            topology.anchors,
            params,
            step=config.grad_desc.step,
            max_iters=config.grad_desc.max_iters,
            keep_fraction=config.grad_desc.keep_fraction,
        )
    if name == "ln1":
        return ln1_estimate(system, config.admm)
    if name == "ln1e":
        return ln1e_estimate(system, config.admm)
    raise ConfigError(f"unknown estimator {name!r}")


def run_trial(
    config: ExperimentConfig, trial_index: int, topology: Topology | None = None
) -> TrialResult:
    """Simulate one measurement matrix and run every enabled estimator on it.

    ``topology`` may carry the precomputed shared topology; when omitted it is
    regenerated from the config, so the call is self-contained and
    deterministic in (config, trial_index).
    """
    base = topology if topology is not None else base_topology(config)
    topo = _trial_topology(config, trial_index, base)
    topo = topo.with_malicious(_trial_malicious(config, trial_index, topo))
    attack = config.attack_spec(topo.target)
    measurements = simulate_measurements(
        topo,
        config.params(),
        attack,
        config.packets,
        seed=_trial_rng(config.master_seed, trial_index, _STREAM_NOISE),
    )
    mean_d = distance_from_rssi(config.params(), measurements.rssi.mean(axis=1))
    system = build_linear_system(topo.anchors, mean_d)
    lmds_seed = _trial_rng(config.master_seed, trial_index, _STREAM_LMDS)
    malicious = topo.malicious
    outcomes = {}
    for name in config.estimators:
        try:
            est = _run_estimator(name, config, topo, measurements, system, lmds_seed)
        except SecLocError as exc:
            outcomes[name] = EstimatorOutcome(
                error=None,
                converged=False,
                n_eliminated=0,
                tp=0,
                fp=0,
                failure=type(exc).__name__,
            )
            continue
        error = float(np.linalg.norm(est.position - topo.target))
        eliminated = est.eliminated
        outcomes[name] = EstimatorOutcome(
            error=error,
            converged=est.converged,
            n_eliminated=len(eliminated),
            tp=len(eliminated & malicious),
            fp=len(eliminated - malicious),
            failure=None if est.converged else "non-convergence",
        )
    return TrialResult(
        index=trial_index,
        n_malicious=len(malicious),
        n_anchors=topo.n_anchors,
        crlb=_trial_crlb(config, topo),
        outcomes=outcomes,
    )


def resolve_workers(env: dict | None = None) -> int:
    """Worker count from SECLOC_THREADS (0 or unset = auto)."""
    env = os.environ if env is None else env
    raw = env.get("SECLOC_THREADS", "0").strip()
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"SECLOC_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ConfigError("SECLOC_THREADS must be >= 0")
    if value == 0:
        return min(8, os.cpu_count() or 1)
    return value


def run_monte_carlo(config: ExperimentConfig, workers: int | None = None) -> MonteCarloSummary:
    """Run config.trials independent trials and aggregate by trial index."""
    if workers is None:
        workers = resolve_workers()
    topology = base_topology(config)
    indices = range(config.trials)
    if workers <= 1:
        results = [run_trial(config, i, topology) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: run_trial(config, i, topology), indices))
    return summarize(config, results)


def summarize(config: ExperimentConfig, results: list) -> MonteCarloSummary:
    """Aggregate trial results in stable (index) order."""
    results = sorted(results, key=lambda r: r.index)
    per_estimator = {}
    for name in config.estimators:
        sq_sum = 0.0
        ok = failed = 0
        tp_sum = fp_sum = 0
        mal_sum = honest_sum = 0
        for res in results:
            outcome = res.outcomes[name]
            if outcome.ok:
                ok += 1
                sq_sum += outcome.error**2
                tp_sum += outcome.tp
                fp_sum += outcome.fp
                mal_sum += res.n_malicious
                honest_sum += res.n_anchors - res.n_malicious
            else:
                failed += 1
        per_estimator[name] = EstimatorSummary(
            rmse=math.sqrt(sq_sum / ok) if ok else None,
            trials_ok=ok,
            trials_failed=failed,
            mean_tp=tp_sum / ok if ok else 0.0,
            mean_fp=fp_sum / ok if ok else 0.0,
            recall=tp_sum / mal_sum if mal_sum else None,
            false_rate=fp_sum / honest_sum if honest_sum else None,
        )
    bounds = [res.crlb for res in results if res.crlb is not None]
    return MonteCarloSummary(
        trials=len(results),
        crlb=sum(bounds) / len(bounds) if bounds else None,
        per_estimator=per_estimator,
    )


def sweep(config: ExperimentConfig, axis: str, values, workers: int | None = None) -> list:
    """Run one Monte-Carlo summary per axis value.

    Returns [(value, MonteCarloSummary), ...] in the given order.
    """
    if workers is None:
        workers = resolve_workers()
    out = []
    for value in values:
        point = apply_axis(config, axis, value)
        out.append((value, run_monte_carlo(point, workers=workers)))
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_rows(axis_value, config: ExperimentConfig, summary: MonteCarloSummary) -> list:
    """CSV rows for one summary: one row per estimator plus a crlb row."""
    rows = []
    for name in config.estimators:
        est = summary.per_estimator[name]
        rows.append(
            [
                _fmt(axis_value),
                name,
                _fmt(est.rmse),
                "",
                _fmt(est.trials_ok),
                _fmt(est.trials_failed),
                _fmt(est.mean_tp),
                _fmt(est.mean_fp),
            ]
        )
    rows.append([_fmt(axis_value), "crlb", "", _fmt(summary.crlb), "", "", "", ""])
    return rows


def emit_csv(rows: list, path) -> None:
    """Write rows under the fixed header; floats use repr so parsing the file
    back reproduces the summary exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)


def sweep_to_csv(
    config: ExperimentConfig, axis: str, values, path, workers: int | None = None
) -> list:
    results = sweep(config, axis, values, workers=workers)
    rows = []
    for value, summary in results:
        rows.extend(summary_rows(value, config, summary))
    emit_csv(rows, path)
    return results
