"""Parameter sweeps and end-to-end statistical validations.

Everything here drives one shared chunked pipeline: generate Poisson pulses,
apply dead time, extract bits, accumulate statistics; memory stays constant
no matter how long the run.  Sweep grid points derive their seeds from
(master seed, point index, replicate index), so each point is independent
and individually re-runnable, and identical specs give identical results.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import (AnalysisReport, BitStats, a_asymptotic, bias_model,
                       eta_asymptotic, oracle_restartable)
from .errors import ConfigurationError, UnderpoweredRunError
from .events import iter_poisson_times, dead_time_filter
from .extraction import (CONTINUOUS, RESTARTABLE, BasicBitStream, ClockConfig,
                         ClockedBitStream, ExtractionStats)

BASIC = "basic"

DEFAULT_X_GRID = tuple(np.geomspace(0.02, 20.0, 20))


def derive_seed(master: int, *path: int) -> int:
    """Deterministic child seed for (master, index...) paths."""
    ss = np.random.SeedSequence((int(master),) + tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def efficiency_sigma(eta: float, events: int) -> float:
    """Per-event binomial standard error of a bits-per-event estimate."""
    if events <= 0:
        return float("inf")
    return math.sqrt(max(eta * (1.0 - eta), 0.0) / events)


@dataclass(frozen=True)
class PointMeasurement:
    report: AnalysisReport
    stats: ExtractionStats


def run_extraction_pipeline(*, method: str = "clocked", mode: str = RESTARTABLE,
                            period: float | None = None, tau: float = 1.0,
                            n_events: int | None = None, n_bits: int | None = None,
                            dead_time: float = 0.0, skew: float = 0.0,
                            phase: float = 0.0, seed: int = 0, k_max: int = 8,
                            chunk: int = 2_000_000) -> PointMeasurement:
    """Chunked simulate -> dead time -> extract -> accumulate pipeline.

    Stops after exactly ``n_events`` detected (post-dead-time) events, or
    after the chunk in which ``n_bits`` emitted bits is reached.  All
    quantities are in seconds (use tau = 1.0 for dimensionless studies).
    """
    if (n_events is None) == (n_bits is None):
        raise ConfigurationError("specify exactly one of n_events / n_bits")
    if method == "clocked":
        if period is None:
            raise ConfigurationError("clocked extraction needs a period")
        engine = ClockedBitStream(ClockConfig(period, mode, phase, skew))
    elif method == BASIC:
        engine = BasicBitStream()
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    acc = BitStats(k_max)
    kept_total = 0
    last_kept = None
    for raw in iter_poisson_times(tau, seed, chunk):
        if dead_time > 0:
            kept = dead_time_filter(raw, dead_time, last_kept)
            if kept.size == 0:
                continue
            last_kept = float(kept[-1])
        else:
            kept = raw
        if n_events is not None and kept_total + kept.size >= n_events:
            kept = kept[:n_events - kept_total]
            kept_total += kept.size
            acc.update(engine.feed(kept))
            break
        kept_total += kept.size
        acc.update(engine.feed(kept))
        if n_bits is not None and engine.stats.bits_emitted >= n_bits:
            break
    stats = engine.stats
    return PointMeasurement(acc.finalize(stats), stats)


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    """Grid sweep over x = T/tau; dead_time and skew are in units of tau."""

    method: str
    x_grid: tuple
    events_per_point: int = 10_000_000
    dead_time: float = 0.0
    skew: float = 0.0
    seed: int = 0
    replicates: int = 1

    def validate(self) -> None:
        if self.method not in (CONTINUOUS, RESTARTABLE):
            raise ConfigurationError(f"unknown sweep method {self.method!r}")
        grid = tuple(self.x_grid)
        if not grid or any(x <= 0 for x in grid):
            raise ConfigurationError("x grid must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("x grid must be ascending")
        if self.events_per_point < 100_000:
            raise ConfigurationError("events_per_point must be >= 1e5")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if self.dead_time < 0 or self.skew < 0:
            raise ConfigurationError("dead_time and skew must be >= 0")


@dataclass(frozen=True)
class SweepPoint:
    x: float
    replicate: int
    a1: float
    a1_sigma: float
    bias: float
    bias_sigma: float
    eta: float
    ref_a: float | None
    ref_eta: float | None
    passed: bool


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple


def _sweep_point(args) -> SweepPoint:
    (method, x, dead_time, skew, events, seed, replicate) = args
    m = run_extraction_pipeline(
        mode=method, period=x, tau=1.0, n_events=events,
        dead_time=dead_time, skew=skew, seed=seed, k_max=1)
    rep = m.report
    a1 = rep.autocorr[0].a if rep.autocorr else float("nan")
    a1_sigma = rep.autocorr[0].stderr if rep.autocorr else float("nan")
    eta = m.stats.efficiency
    if method == RESTARTABLE:
        ref_a: float | None = 0.0
        ref_eta: float | None = oracle_restartable(x).eta_exact
        ok = (abs(a1) <= 3 * a1_sigma
              and abs(rep.bias) <= 3 * rep.bias_stderr
              and abs(eta - ref_eta) <= 3 * efficiency_sigma(
                  ref_eta, m.stats.events_consumed))
    else:
        # the reference curve is attached for plotting; the pass flag only
        # asserts the null properties that hold for the continuous method
        # (non-negative correlation, zero bias)
        ref_a = a_asymptotic(x) if x <= 0.2 else None
        ref_eta = eta_asymptotic(x)
        ok = (a1 >= -3 * a1_sigma and abs(rep.bias) <= 3 * rep.bias_stderr)
    return SweepPoint(x=x, replicate=replicate, a1=a1, a1_sigma=a1_sigma,
                      bias=rep.bias, bias_sigma=rep.bias_stderr, eta=eta,
                      ref_a=ref_a, ref_eta=ref_eta, passed=ok)


def sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Run a sweep; points are ordered by (x index, replicate) regardless of
    completion order, so output is deterministic for a given spec."""
    spec.validate()
    grid = tuple(float(x) for x in spec.x_grid)
    tasks = [
        (spec.method, x, spec.dead_time, spec.skew, spec.events_per_point,
         derive_seed(spec.seed, i, r), r)
        for i, x in enumerate(grid)
        for r in range(spec.replicates)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_sweep_point, tasks))
    else:
        points = [_sweep_point(t) for t in tasks]
    return SweepResult(spec=spec, points=tuple(points))


# --------------------------------------------------------------------------
# validations

def _null_checks(label: str, rep: AnalysisReport, k_max: int) -> list[dict]:
    checks = [{
        "name": f"{label}:bias",
        "value": rep.bias,
        "sigma": rep.bias_stderr,
        "passed": bool(abs(rep.bias) <= 3 * rep.bias_stderr),
    }]
    for c in rep.autocorr[:k_max]:
        checks.append({
            "name": f"{label}:a{c.lag}",
            "value": c.a,
            "sigma": c.stderr,
            "passed": bool(abs(c.a) <= 3 * c.stderr),
        })
    return checks


def validate_dead_time_cancellation(x: float, dead_times, n_bits: int = 2_000_000,
                                    seed: int = 0, k_max: int = 8) -> dict:
    """Dead-time immunity of the basic and restartable methods.

    For those two methods every dead time must leave bias and a_1..a_k
    consistent with zero at 3 sigma.  For the continuous method the report
    quantifies how significantly a_1 moves away from its d = 0 value.
    """
    dead_times = [float(d) for d in dead_times]
    if not x > 0:
        raise ConfigurationError("x must be > 0")
    if 0.0 not in dead_times:
        raise ConfigurationError("dead_times must include 0")
    checks: list[dict] = []
    for method in (RESTARTABLE, BASIC):
        for i, d in enumerate(dead_times):
            kwargs = dict(tau=1.0, n_bits=n_bits, dead_time=d,
                          seed=derive_seed(seed, 0 if method == RESTARTABLE else 1, i),
                          k_max=k_max)
            if method == RESTARTABLE:
                m = run_extraction_pipeline(mode=RESTARTABLE, period=x, **kwargs)
            else:
                m = run_extraction_pipeline(method=BASIC, **kwargs)
            checks.extend(_null_checks(f"{method}:d={d}", m.report, k_max))
    continuous = []
    base = None
    for i, d in enumerate(dead_times):
        m = run_extraction_pipeline(mode=CONTINUOUS, period=x, tau=1.0,
                                    n_bits=n_bits, dead_time=d,
                                    seed=derive_seed(seed, 2, i), k_max=1)
        a1 = m.report.autocorr[0].a
        sig = m.report.autocorr[0].stderr
        if d == 0.0:
            base = (a1, sig)
        continuous.append({"dead_time": d, "a1": a1, "sigma": sig})
    for row in continuous:
        if row["dead_time"] == 0.0:
            row["significance_vs_d0"] = 0.0
            continue
        comb = math.hypot(row["sigma"], base[1])
        row["significance_vs_d0"] = abs(row["a1"] - base[0]) / comb
    return {
        "x": x,
        "n_bits": n_bits,
        "checks": checks,
        "continuous_a1": continuous,
        "passed": all(c["passed"] for c in checks),
    }


def required_bias_n(b_pred: float) -> int:
    """Smallest N with 3/(2 sqrt(N)) < b_pred / 3."""
    return int(math.ceil((4.5 / b_pred) ** 2)) + 1


def validate_bias_model(x_grid, dt_grid, n_bits: int, seed: int = 0) -> dict:
    """Measured skew bias of restartable extraction against the quadratic law.

    Refuses to run when ``n_bits`` cannot resolve the smallest predicted bias
    (3/(2 sqrt N) must stay below a third of the prediction).  Includes a
    tau-halving scaling check at fixed clock period and skew, which the law
    predicts to be a factor ~4.
    """
    x_grid = [float(x) for x in x_grid]
    dt_grid = [float(dt) for dt in dt_grid]
    if any(x <= 0 for x in x_grid) or any(dt < 0 for dt in dt_grid):
        raise ConfigurationError("grids must be positive (dt may include 0)")
    needed = [required_bias_n(bias_model(x, dt))
              for x in x_grid for dt in dt_grid if dt > 0]
    if needed and n_bits < max(needed):
        raise UnderpoweredRunError(
            f"n_bits={n_bits} cannot resolve the smallest predicted bias; "
            f"need at least {max(needed)} bits", required_n=max(needed))
    checks = []
    idx = 0
    for x in x_grid:
        for dt in dt_grid:
            m = run_extraction_pipeline(mode=RESTARTABLE, period=x, tau=1.0,
                                        n_bits=n_bits, skew=dt,
                                        seed=derive_seed(seed, 3, idx), k_max=1)
            idx += 1
            b = m.report.bias
            sig = m.report.bias_stderr
            pred = bias_model(x, dt)
            if dt == 0:
                ok = abs(b) <= 3 * sig
                tol = 3 * sig
            else:
                tol = max(0.25 * pred, 3 * sig)
                ok = abs(b - pred) <= tol
            checks.append({"name": f"bias:x={x}:dt={dt}", "x": x, "dt": dt,
                           "measured": b, "sigma": sig, "predicted": pred,
                           "tolerance": tol, "passed": bool(ok)})
    scaling = None
    first = next(((x, dt) for x in x_grid for dt in dt_grid if dt > 0), None)
    if first is not None:
        x0, dt0 = first
        b1 = next(c["measured"] for c in checks
                  if c.get("x") == x0 and c.get("dt") == dt0)
        m2 = run_extraction_pipeline(mode=RESTARTABLE, period=2 * x0, tau=1.0,
                                     n_bits=n_bits, skew=2 * dt0,
                                     seed=derive_seed(seed, 4, 0), k_max=1)
        ratio = m2.report.bias / b1 if b1 else float("nan")
        scaling = {
            "x": x0, "dt": dt0,
            "bias_tau": b1,
            "bias_half_tau": m2.report.bias,
            "ratio": ratio,
            "passed": bool(3.0 <= ratio <= 5.0),
        }
    passed = all(c["passed"] for c in checks) and (scaling is None or
                                                   scaling["passed"])
    return {"n_bits": n_bits, "checks": checks, "scaling": scaling,
            "passed": passed}


PROTOTYPE_TAU = 500e-9           # 2 MHz mean pulse rate
PROTOTYPE_CLOCK_HZ = 48e6
PROTOTYPE_DEAD_TIME = 25e-9
PROTOTYPE_TARGET_BIAS = 1e-4


def reproduce_prototype(n_events: int = 100_000_000, seed: int = 0) -> dict:
    """Full pipeline at the reference operating point.

    tau = 500 ns, 48 MHz restartable clock, 25 ns dead time, and the skew
    set so the quadratic bias law predicts a bias of 1e-4.  Returns a report
    dict with the statistics battery and pass flags for efficiency, bias and
    the correlation nulls.
    """
    if n_events < 1_000_000:
        raise ConfigurationError("prototype run needs at least 1e6 events")
    tau = PROTOTYPE_TAU
    period = 1.0 / PROTOTYPE_CLOCK_HZ
    x = period / tau
    dt_over_tau = 2 * PROTOTYPE_TARGET_BIAS / x
    m = run_extraction_pipeline(
        mode=RESTARTABLE, period=period, tau=tau, n_events=n_events,
        dead_time=PROTOTYPE_DEAD_TIME, skew=dt_over_tau * tau,
        seed=seed, k_max=8)
    rep = m.report
    checks = [{
        "name": "efficiency_band",
        "value": m.stats.efficiency,
        "low": 0.485, "high": 0.494,
        "passed": bool(0.485 <= m.stats.efficiency <= 0.494),
    }, {
        "name": "bias_vs_target",
        "value": rep.bias,
        "target": PROTOTYPE_TARGET_BIAS,
        "sigma": rep.bias_stderr,
        "passed": bool(abs(rep.bias - PROTOTYPE_TARGET_BIAS) <= 3 * rep.bias_stderr),
    }]
    for c in rep.autocorr:
        checks.append({
            "name": f"a{c.lag}_null",
            "value": c.a, "sigma": c.stderr,
            "passed": bool(abs(c.a) <= 3 * c.stderr),
        })
    return {
        "config": {
            "tau": tau, "clock_hz": PROTOTYPE_CLOCK_HZ, "x": x,
            "dead_time": PROTOTYPE_DEAD_TIME, "skew": dt_over_tau * tau,
            "n_events": n_events, "seed": seed,
        },
        "report": rep.to_json_dict(),
        "stats": m.stats.as_dict(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "_report_obj": rep,
    }
