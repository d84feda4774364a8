"""Prognostic indexes, KDE-based risk-group splitting, Kaplan-Meier curves, log-rank test."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .coxlasso import CoxFit

logger = logging.getLogger(__name__)

KDE_GRID_POINTS = 512


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    values: np.ndarray  # the underlying observations (median fallback needs them)


@dataclass(frozen=True)
class RiskStratification:
    sample_ids: tuple
    pi: np.ndarray
    threshold: float
    group: tuple  # "Low" / "High" per sample
    threshold_source: str  # "kde_local_min" or "median_fallback"


@dataclass(frozen=True)
class SurvivalCurve:
    event_times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    n_events: np.ndarray


@dataclass(frozen=True)
class LogRankResult:
    statistic: float
    p_value: float
    df: int = 1


def prognostic_index(X, fit: CoxFit, gene_ids=None) -> np.ndarray:
    """Linear predictor X . beta on the original covariate scale.

    ``gene_ids`` names the columns of X; they must match ``fit.gene_ids``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if gene_ids is not None and tuple(gene_ids) != tuple(fit.gene_ids):
        raise ValueError("column gene ids do not match the fitted coefficients")
    if X.shape[1] != len(fit.gene_ids):
        raise ValueError("X has %d columns, fit expects %d" % (X.shape[1], len(fit.gene_ids)))
    return X @ fit.beta


def nrd0_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), with the usual fallbacks for flat spreads."""
    n = values.size
    sd = values.std(ddof=1)
    q75, q25 = np.percentile(values, [75, 25])
    iqr = q75 - q25
    lo = min(sd, iqr / 1.34)
    if lo == 0.0:
        lo = sd or abs(values[0]) or 1.0
    return 0.9 * lo * n ** (-0.2)


def kde(values, bandwidth: float | None = None) -> DensityCurve:
    """Gaussian-kernel density on a 512-point grid spanning min-3h to max+3h."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("kde needs at least 2 values")
    if values.std(ddof=1) == 0.0:
        raise ValueError("degenerate PI distribution: zero variance")
    h = float(bandwidth) if bandwidth is not None else nrd0_bandwidth(values)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(values.min() - 3 * h, values.max() + 3 * h, KDE_GRID_POINTS)
    z = (grid[:, None] - values[None, :]) / h
    density = np.exp(-0.5 * z ** 2).sum(axis=1) / (values.size * h * math.sqrt(2 * math.pi))
    return DensityCurve(grid, density, h, values.copy())


def _strict_local_maxima(density: np.ndarray) -> list:
    d = density
    return [i for i in range(1, len(d) - 1) if d[i] > d[i - 1] and d[i] > d[i + 1]]


def split_threshold(curve: DensityCurve) -> tuple[float, str]:
    """Grid point of minimum density between the two highest local maxima.

    Falls back to the median of the underlying values when the curve has
    fewer than two local maxima (unimodal PI distribution).
    """
    maxima = _strict_local_maxima(curve.density)
    if len(maxima) >= 2:
        top = sorted(sorted(maxima, key=lambda i: curve.density[i])[-2:])
        lo, hi = top
        if hi - lo > 1:
            between = np.arange(lo + 1, hi)
            cut = between[np.argmin(curve.density[between])]
            return float(curve.grid[cut]), "kde_local_min"
    logger.warning("PI density has fewer than two separated peaks; using median split")
    return float(np.median(curve.values)), "median_fallback"


def stratify(pi, threshold: float, sample_ids=None) -> RiskStratification:
    """Low-risk group: PI <= threshold; high-risk: PI > threshold."""
    pi = np.asarray(pi, dtype=float)
    if sample_ids is None:
        sample_ids = tuple("s%d" % i for i in range(pi.size))
    group = tuple("Low" if v <= threshold else "High" for v in pi)
    n_low = group.count("Low")
    if n_low == 0 or n_low == len(group):
        raise ValueError("degenerate stratification: one risk group is empty")
    return RiskStratification(tuple(sample_ids), pi, float(threshold), group, "kde_local_min")


def stratify_from_fit(X, fit: CoxFit, sample_ids=None) -> RiskStratification:
    """PI computation, KDE threshold (with median fallback) and group assignment."""
    pi = prognostic_index(X, fit)
    curve = kde(pi)
    threshold, source = split_threshold(curve)
    strat = stratify(pi, threshold, sample_ids)
    return RiskStratification(strat.sample_ids, strat.pi, strat.threshold, strat.group, source)


def kaplan_meier(time, event) -> SurvivalCurve:
    """Product-limit estimator; steps only at observed event times."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=int)
    if time.size < 1:
        raise ValueError("kaplan_meier needs at least 1 sample")
    event_times = np.unique(time[event == 1])
    at_risk = np.empty(event_times.size, dtype=int)
    n_events = np.empty(event_times.size, dtype=int)
    surv = np.empty(event_times.size)
    s = 1.0
    for k, t in enumerate(event_times):
        n_k = int((time >= t).sum())
        d_k = int(((time == t) & (event == 1)).sum())
        s *= 1.0 - d_k / n_k
        at_risk[k] = n_k
        n_events[k] = d_k
        surv[k] = s
    return SurvivalCurve(event_times, surv, at_risk, n_events)


def logrank(time_a, event_a, time_b, event_b) -> LogRankResult:
    """Two-group log-rank chi-square test with 1 degree of freedom."""
    time_a = np.asarray(time_a, dtype=float)
    event_a = np.asarray(event_a, dtype=int)
    time_b = np.asarray(time_b, dtype=float)
    event_b = np.asarray(event_b, dtype=int)
    if time_a.size == 0 or time_b.size == 0:
        raise ValueError("both groups must be nonempty")
    if event_a.sum() + event_b.sum() < 1:
        raise ValueError("log-rank needs at least one event")
    pooled = np.unique(np.concatenate([time_a[event_a == 1], time_b[event_b == 1]]))
    o_minus_e = 0.0
    var = 0.0
    for t in pooled:
        n1 = int((time_a >= t).sum())
        n2 = int((time_b >= t).sum())
        d1 = int(((time_a == t) & (event_a == 1)).sum())
        d2 = int(((time_b == t) & (event_b == 1)).sum())
        n = n1 + n2
        d = d1 + d2
        if n1 == 0 or n2 == 0:
            continue
        e1 = d * n1 / n
        o_minus_e += d1 - e1
        if n > 1:
            var += d * (n1 / n) * (n2 / n) * (n - d) / (n - 1)
    if var <= 0.0:
        raise ValueError("log-rank variance is zero: groups share no comparable risk sets")
    stat = o_minus_e ** 2 / var
    return LogRankResult(float(stat), float(stats.chi2.sf(stat, df=1)), 1)


def write_survival_curve(curve: SurvivalCurve, path, sep: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sep.join(("time", "survival", "at_risk", "events")) + "\n")
        for k in range(curve.event_times.size):
            fh.write(sep.join((
                repr(float(curve.event_times[k])),
                repr(float(curve.survival[k])),
                str(int(curve.at_risk[k])),
                str(int(curve.n_events[k])),
            )) + "\n")


def write_step_plot_data(curve: SurvivalCurve, path, sep: str = "\t") -> None:
    """Step-function vertices for external plotting tools."""
    xs = [0.0]
    ys = [1.0]
    s_prev = 1.0
    for t, s in zip(curve.event_times, curve.survival):
        xs.extend([float(t), float(t)])
        ys.extend([s_prev, float(s)])
        s_prev = float(s)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sep.join(("x", "y")) + "\n")
        for x, y in zip(xs, ys):
            fh.write(sep.join((repr(x), repr(y))) + "\n")


def write_stratification(strat: RiskStratification, path, sep: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# threshold=%s source=%s\n" % (repr(strat.threshold), strat.threshold_source))
        fh.write(sep.join(("sample_id", "pi", "group")) + "\n")
        for sid, pi, g in zip(strat.sample_ids, strat.pi, strat.group):
            fh.write(sep.join((str(sid), repr(float(pi)), g)) + "\n")


def write_logrank(result: LogRankResult, path, sep: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sep.join(("statistic", "df", "p")) + "\n")
        fh.write(sep.join((repr(result.statistic), str(result.df), repr(result.p_value))) + "\n")
