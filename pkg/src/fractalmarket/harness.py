"""Seeded experiment orchestration and machine-readable reporting.

Seeding scheme: every random draw in a run comes from
numpy SeedSequence(master_seed, spawn_key=(seed_index, STREAM)) where the
stream constants below separate the modulator noise, the volatility
driver, the random clock and auxiliary processes. Substreams are
independent of execution order, so ensembles are reproducible under any
parallel schedule; report rows are sorted before writing.

(seed, level) work units follow joint refinement: the modulator and the
volatility are simulated once per seed at the finest configured level and
subsampled, and each level then builds its own left-point integral,
market and portfolio.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import (
    PHI_FUNCTIONS,
    SCALAR_FIELDS,
    abel_identity_gap,
    cross_quadratic_sum,
    function_of_z_integral,
    integral_qv_residual,
    ito_formula_residual,
    quadratic_variation,
)
from .config import ExperimentConfig, config_echo
from .errors import ConfigError, FractalMarketError, InternalConsistencyError
from .fbm import FbmSpec, TimeChange, generate_fbm, time_change_compose
from .market import price_path
from .paths import Partition, SamplePath, count_increases, loglog_slope
from .strategy import arbitrage_certificate, portfolio_value
from .volatility import FunctionOfModulatorVol, integrability_check, simulate_volatility
from . import _kernels

__all__ = [
    "RunReport",
    "run_experiment",
    "run_calculus_suite",
    "write_report",
    "substream",
    "derive_seed",
    "EXIT_PASS",
    "EXIT_STATISTICAL_FAILURE",
    "EXIT_INTERNAL_FAILURE",
    "EXIT_CONFIG_ERROR",
]

STREAM_MODULATOR = 0
STREAM_VOLATILITY = 1
STREAM_TIME_CHANGE = 2
STREAM_AUX = 3

EXIT_PASS = 0
EXIT_STATISTICAL_FAILURE = 2
EXIT_INTERNAL_FAILURE = 3
EXIT_CONFIG_ERROR = 4

ITO_EXACT_FIELDS = ("z", "t")
ITO_REFINEMENT_FIELDS = ("z_squared", "tz", "exp_z", "t2_plus_sin_z")
FOZ_FIELDS = ("identity", "cos")


def substream(master_seed: int, seed_index: int, stream: int) -> np.random.SeedSequence:
    """The documented substream of (master_seed, seed_index, stream)."""
    return np.random.SeedSequence(master_seed, spawn_key=(seed_index, stream))


def derive_seed(master_seed: int, seed_index: int, stream: int) -> int:
    """A 64-bit sub-seed drawn from the substream (for seed-taking APIs)."""
    return int(substream(master_seed, seed_index, stream).generate_state(1, np.uint64)[0])


@dataclass
class RunReport:
    """Everything one run produced, ready for CSV/JSON serialization."""

    kind: str  # "experiment" | "calculus"
    config: dict
    terminal_rows: list = field(default_factory=list)
    residual_rows: list = field(default_factory=list)
    calculus_rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    version: str = __version__
    wall_time: float = 0.0

    def exit_code(self) -> int:
        if self.errors:
            return EXIT_INTERNAL_FAILURE
        if not all(self.verdicts.values()):
            return EXIT_STATISTICAL_FAILURE
        return EXIT_PASS

    def check_completeness(self, num_seeds: int, levels) -> None:
        """Every seed in [0, num_seeds) exactly once per level (clean runs)."""
        if self.errors:
            return
        seen = {}
        for row in self.terminal_rows:
            seen.setdefault(row["level"], []).append(row["seed"])
        for level in levels:
            got = sorted(seen.get(level, []))
            if got != list(range(num_seeds)):
                raise InternalConsistencyError(
                    f"level {level}: seeds are not exactly 0..{num_seeds - 1}"
                )


def _build_clock(config: ExperimentConfig, partition: Partition,
                 seed_index: int) -> TimeChange:
    tc_conf = config.modulator.time_change
    times = partition.times
    if tc_conf.kind == "identity":
        return TimeChange.identity(times)
    if tc_conf.kind == "power":
        return TimeChange.power(times, tc_conf.p)
    # integrated CIR clock: A_t = left Riemann sum of the truncated rate.
    seed = derive_seed(config.master_seed, seed_index, STREAM_TIME_CHANGE)
    rng = np.random.default_rng(seed)
    dt = np.diff(times)
    db = rng.standard_normal(len(dt)) * np.sqrt(dt)
    v, _, _ = _kernels.heston_full_truncation(
        tc_conf.v0, tc_conf.kappa, tc_conf.theta, tc_conf.xi, dt, db
    )
    a = np.empty(len(times), dtype=np.float64)
    a[0] = 0.0
    np.cumsum(np.maximum(v[:-1], 0.0) * dt, out=a[1:])
    return TimeChange(SamplePath(times, a))


def build_modulator(config: ExperimentConfig, partition: Partition,
                    seed_index: int) -> SamplePath:
    """The fine-grid modulator path for one ensemble member."""
    mod = config.modulator
    seed = derive_seed(config.master_seed, seed_index, STREAM_MODULATOR)
    if mod.kind == "fbm":
        spec = FbmSpec(
            hurst=mod.hurst,
            horizon=partition.horizon,
            num_steps=partition.num_intervals,
            seed=seed,
        )
        return generate_fbm(spec)
    clock = _build_clock(config, partition, seed_index)
    return time_change_compose(clock, mod.hurst, seed)


def build_volatility(config: ExperimentConfig, partition: Partition,
                     seed_index: int, z_path: SamplePath):
    seed = derive_seed(config.master_seed, seed_index, STREAM_VOLATILITY)
    if isinstance(config.volatility, FunctionOfModulatorVol):
        return simulate_volatility(config.volatility, partition, seed, z_path=z_path)
    return simulate_volatility(config.volatility, partition, seed)


def _experiment_seed_task(config: ExperimentConfig, seed_index: int):
    levels = config.grid_levels
    max_level = levels[-1]
    fine = Partition.dyadic(max_level, config.market.horizon)
    z_fine = build_modulator(config, fine, seed_index)
    vol_fine = build_volatility(config, fine, seed_index, z_fine)
    thresholds = config.thresholds
    if not integrability_check(
        vol_fine,
        thresholds.integrability_mu_bound,
        thresholds.integrability_sigma2_bound,
    ):
        return {"rejected": True, "seed": seed_index}

    terminal_rows = []
    stats_rows = []
    for level in levels:
        stride = 2 ** (max_level - level)
        z = z_fine.subsample(stride)
        vol = vol_fine.subsample(stride)
        paths = price_path(config.market, vol, z)
        traj = portfolio_value(paths, config.market, config.strategy)
        cert = arbitrage_certificate(traj)
        terminal_rows.append(
            {
                "seed": seed_index,
                "level": level,
                "P_T": traj.terminal_value,
                "exponent": traj.terminal_exponent,
                "cert_pass": cert.passed,
            }
        )
        stats_rows.append(
            {
                "seed": seed_index,
                "level": level,
                "maxabs": traj.max_abs_residual(),
                "qv_integral": quadratic_variation(paths.log_integral),
            }
        )
    return {"rejected": False, "terminal": terminal_rows, "stats": stats_rows}


def _map_seeds(task, config: ExperimentConfig, threads: int):
    indices = range(config.num_seeds)
    if threads == 0:
        import os

        threads = os.cpu_count() or 1
    if threads <= 1:
        return [task(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: task(config, i), indices))


def run_experiment(config: ExperimentConfig, threads: int = 1) -> RunReport:
    """Simulate, trade and certify every (seed, level); aggregate and judge.

    Deterministic given (config, master_seed) regardless of thread count.
    """
    if not 0.5 < config.modulator.hurst < 1.0:
        raise ConfigError(
            ["modulator.hurst: arbitrage experiments require hurst in (1/2, 1); "
             f"got {config.modulator.hurst}"]
        )
    start = time.perf_counter()
    report = RunReport(kind="experiment", config=config_echo(config))
    try:
        results = _map_seeds(_experiment_seed_task, config, threads)
    except FractalMarketError as exc:
        report.errors.append({"stage": "simulation", "error": f"{type(exc).__name__}: {exc}"})
        report.wall_time = time.perf_counter() - start
        return report

    per_level_maxabs = {level: [] for level in config.grid_levels}
    per_level_qv = {level: [] for level in config.grid_levels}
    for seed_index, outcome in enumerate(results):
        if outcome.get("rejected"):
            report.errors.append(
                {"seed": seed_index, "error": "integrability check rejected the draw"}
            )
            continue
        report.terminal_rows.extend(outcome["terminal"])
        for row in outcome["stats"]:
            per_level_maxabs[row["level"]].append(row["maxabs"])
            per_level_qv[row["level"]].append(row["qv_integral"])

    report.terminal_rows.sort(key=lambda r: (r["seed"], r["level"]))
    for level in config.grid_levels:
        maxabs = np.asarray(per_level_maxabs[level])
        qv = np.asarray(per_level_qv[level])
        if len(maxabs) == 0:
            continue
        report.residual_rows.append(
            {
                "level": level,
                "mean_maxabs": float(np.mean(maxabs)),
                "median_maxabs": float(np.median(maxabs)),
                "max_maxabs": float(np.max(maxabs)),
                "qv_of_integral": float(np.mean(qv)),
            }
        )

    ns = [2**row["level"] for row in report.residual_rows]
    means = [row["mean_maxabs"] for row in report.residual_rows]
    qv_means = [row["qv_of_integral"] for row in report.residual_rows]
    report.slopes = {
        "self_financing_mean_maxabs": loglog_slope(ns, means),
        "qv_of_integral": loglog_slope(ns, qv_means),
    }
    report.verdicts = _experiment_verdicts(config, report, means, qv_means)
    report.check_completeness(config.num_seeds, config.grid_levels)
    report.wall_time = time.perf_counter() - start
    return report


def _decreasing_or_degenerate(values, allowed, degenerate_tol) -> bool:
    values = list(values)
    if not values:
        return False
    if max(values) <= degenerate_tol:
        return True
    return count_increases(values) <= allowed


def _experiment_verdicts(config, report, sf_means, qv_means) -> dict:
    thresholds = config.thresholds
    certs = [row["cert_pass"] for row in report.terminal_rows]
    pass_rate = float(np.mean(certs)) if certs else 0.0
    verdicts = {
        "certificates_pass": pass_rate >= thresholds.cert_pass_rate_min,
        "no_rejected_seeds": not report.errors,
        "self_financing_refinement": _decreasing_or_degenerate(
            sf_means,
            thresholds.monotone_violations_allowed,
            thresholds.degenerate_residual_tol,
        ),
    }
    if len(qv_means) >= 2:
        degenerate = qv_means[0] <= thresholds.degenerate_residual_tol
        verdicts["qv_integral_ratio"] = degenerate or (
            qv_means[-1] <= thresholds.qv_integral_ratio_max * qv_means[0]
        )
    return verdicts


def _calculus_seed_task(config: ExperimentConfig, seed_index: int):
    levels = config.grid_levels
    max_level = levels[-1]
    fine = Partition.dyadic(max_level, config.market.horizon)
    z_fine = build_modulator(config, fine, seed_index)
    vol_fine = build_volatility(config, fine, seed_index, z_fine)

    # Independent Brownian companion for the integration-by-parts checks.
    rng = np.random.default_rng(derive_seed(config.master_seed, seed_index, STREAM_AUX))
    dw = rng.standard_normal(fine.num_intervals) * np.sqrt(np.diff(fine.times))
    w_values = np.empty(len(fine.times))
    w_values[0] = 0.0
    np.cumsum(dw, out=w_values[1:])
    w_fine = SamplePath(fine.times, w_values)

    rows = {}
    for level in levels:
        stride = 2 ** (max_level - level)
        z = z_fine.subsample(stride)
        w = w_fine.subsample(stride)
        for name in ITO_EXACT_FIELDS + ITO_REFINEMENT_FIELDS:
            rows[(f"ito_{name}", level)] = ito_formula_residual(SCALAR_FIELDS[name], z)
        rows[("ibp_abel_gap", level)] = abel_identity_gap(w, z)
        rows[("ibp_cross_term", level)] = abs(cross_quadratic_sum(w, z))
        rows[("qv_modulator", level)] = quadratic_variation(z)
        for name in FOZ_FIELDS:
            result = function_of_z_integral(PHI_FUNCTIONS[name], z)
            rows[(f"foz_{name}", level)] = abs(
                result.integral.terminal - result.closed_form.terminal
            )
    qv_report = integral_qv_residual(
        vol_fine.path,
        z_fine,
        [Partition.dyadic(level, config.market.horizon) for level in levels],
    )
    for level, value in zip(levels, qv_report.residuals):
        rows[("qv_integral", level)] = value
    return rows


def run_calculus_suite(config: ExperimentConfig, threads: int = 1) -> RunReport:
    """Refinement tables for the chain-rule, integration-by-parts,
    zero-QV and closed-form integral checks."""
    start = time.perf_counter()
    report = RunReport(kind="calculus", config=config_echo(config))
    try:
        results = _map_seeds(_calculus_seed_task, config, threads)
    except FractalMarketError as exc:
        report.errors.append({"stage": "simulation", "error": f"{type(exc).__name__}: {exc}"})
        report.wall_time = time.perf_counter() - start
        return report

    verifiers = sorted({key[0] for key in results[0]})
    levels = config.grid_levels
    means = {}
    maxima = {}
    for verifier in verifiers:
        for level in levels:
            samples = np.asarray([res[(verifier, level)] for res in results])
            means[(verifier, level)] = float(np.mean(samples))
            maxima[(verifier, level)] = float(np.max(samples))

    for verifier in verifiers:
        ns, so_far = [], []
        for level in levels:
            ns.append(2**level)
            so_far.append(means[(verifier, level)])
            report.calculus_rows.append(
                {
                    "verifier": verifier,
                    "level": level,
                    "mean_residual": means[(verifier, level)],
                    "slope_so_far": loglog_slope(ns, so_far),
                }
            )
        report.slopes[verifier] = loglog_slope(ns, so_far)

    report.verdicts = _calculus_verdicts(config, means, maxima, report.slopes)
    report.wall_time = time.perf_counter() - start
    return report


def _calculus_verdicts(config, means, maxima, slopes) -> dict:
    thresholds = config.thresholds
    levels = config.grid_levels
    allowed = thresholds.monotone_violations_allowed
    degenerate_tol = thresholds.degenerate_residual_tol

    def series(verifier):
        return [means[(verifier, level)] for level in levels]

    verdicts = {}
    exact_ceiling = max(
        maxima[(f"ito_{name}", level)]
        for name in ITO_EXACT_FIELDS
        for level in levels
    )
    verdicts["ito_exact_fields"] = exact_ceiling <= thresholds.exact_identity_tol
    for name in ITO_REFINEMENT_FIELDS:
        verdicts[f"ito_{name}_refinement"] = _decreasing_or_degenerate(
            series(f"ito_{name}"), allowed, degenerate_tol
        )
    abel_ceiling = max(maxima[("ibp_abel_gap", level)] for level in levels)
    verdicts["ibp_abel_exact"] = abel_ceiling <= thresholds.exact_identity_tol
    verdicts["ibp_cross_refinement"] = _decreasing_or_degenerate(
        series("ibp_cross_term"), allowed, degenerate_tol
    )
    for name in FOZ_FIELDS:
        verdicts[f"foz_{name}_refinement"] = _decreasing_or_degenerate(
            series(f"foz_{name}"), allowed, degenerate_tol
        )
    target = 1.0 - 2.0 * config.modulator.hurst
    slope = slopes["qv_modulator"]
    verdicts["qv_modulator_slope"] = bool(
        np.isfinite(slope) and abs(slope - target) <= thresholds.qv_slope_tol
    )
    qv_series = series("qv_integral")
    if len(qv_series) >= 2:
        degenerate = qv_series[0] <= degenerate_tol
        verdicts["qv_integral_ratio"] = degenerate or (
            qv_series[-1] <= thresholds.qv_integral_ratio_max * qv_series[0]
        )
    return verdicts


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in columns))
    path.write_text("\n".join(lines) + "\n")


def write_report(report: RunReport, output_dir) -> list:
    """Write the CSV tables and JSON summary; returns the written paths.

    CSV content is a pure function of the numeric results (repr round-trip
    floats, sorted rows); summary.json additionally carries wall time.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if report.kind == "experiment":
        terminal = out / "terminal.csv"
        _write_csv(
            terminal,
            ["seed", "level", "P_T", "exponent", "cert_pass"],
            report.terminal_rows,
        )
        written.append(terminal)
        residuals = out / "residuals.csv"
        _write_csv(
            residuals,
            ["level", "mean_maxabs", "median_maxabs", "max_maxabs", "qv_of_integral"],
            report.residual_rows,
        )
        written.append(residuals)
    else:
        calculus = out / "calculus.csv"
        _write_csv(
            calculus,
            ["verifier", "level", "mean_residual", "slope_so_far"],
            report.calculus_rows,
        )
        written.append(calculus)
    summary = out / "summary.json"
    payload = {
        "kind": report.kind,
        "config": report.config,
        "slopes": report.slopes,
        "verdicts": report.verdicts,
        "errors": report.errors,
        "version": report.version,
        "kernels": _kernels.IMPLEMENTATION,
        "wall_time_seconds": report.wall_time,
        "exit_code": report.exit_code(),
    }
    summary.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(summary)
    return written
