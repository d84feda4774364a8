"""Seeded synthetic cohorts with known precision structure and survival ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .corpus import ClinicalTable, ExpressionMatrix


@dataclass(frozen=True)
class SyntheticTruth:
    theta_true: np.ndarray
    edges: frozenset          # (i, j) with i < j
    hub_ids: tuple            # top-degree genes
    beta_true: np.ndarray
    censor_rate: float
    seed: int


def _gene_ids(p: int) -> tuple:
    return tuple("g%03d" % j for j in range(p))


def _sample_ids(n: int) -> tuple:
    return tuple("s%04d" % i for i in range(n))


def sample_sparse_precision(p: int, edge_density: float, seed: int) -> np.ndarray:
    """Random sparse symmetric PD matrix via diagonal dominance.

    Off-diagonal support is Bernoulli(edge_density) on the upper triangle with
    weights uniform in +-[0.2, 0.6]; the diagonal is the absolute row sum
    plus 0.5, which guarantees positive definiteness.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    if not 0 < edge_density < 1:
        raise ValueError("edge_density must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    theta = np.zeros((p, p))
    iu = np.triu_indices(p, 1)
    present = rng.random(iu[0].size) < edge_density
    mags = rng.uniform(0.2, 0.6, size=iu[0].size)
    signs = rng.choice((-1.0, 1.0), size=iu[0].size)
    vals = np.where(present, mags * signs, 0.0)
    theta[iu] = vals
    theta = theta + theta.T
    np.fill_diagonal(theta, np.abs(theta).sum(axis=1) + 0.5)
    return theta


def planted_block_precision(p: int, block_size: int, weight: float = 0.5,
                            seed: int = 0) -> np.ndarray:
    """Precision matrix with a connected ring of ``block_size`` genes among noise.

    Ring edges keep the per-node degree low so the implied partial
    correlations stay strong under the diagonal-dominance construction.
    """
    if not 2 <= block_size <= p:
        raise ValueError("block_size must lie in [2, p]")
    rng = np.random.default_rng(seed)
    theta = np.zeros((p, p))
    for k in range(block_size):
        i, j = k, (k + 1) % block_size
        if i == j:
            continue
        a, b = min(i, j), max(i, j)
        theta[a, b] = weight * rng.choice((-1.0, 1.0))
    theta = theta + theta.T
    np.fill_diagonal(theta, np.abs(theta).sum(axis=1) + 0.5)
    return theta


def precision_edges(theta: np.ndarray, zero_epsilon: float = 1e-12) -> frozenset:
    p = theta.shape[0]
    return frozenset((i, j) for i in range(p) for j in range(i + 1, p)
                     if abs(theta[i, j]) >= zero_epsilon)


def sample_expression(n: int, theta_true: np.ndarray, seed: int,
                      gene_ids=None) -> ExpressionMatrix:
    """n draws from the zero-mean Gaussian with covariance theta_true^-1."""
    theta_true = np.asarray(theta_true, dtype=float)
    p = theta_true.shape[0]
    try:
        chol_theta = linalg.cholesky(theta_true, lower=True)
    except linalg.LinAlgError:
        raise ValueError("theta_true is not positive definite") from None
    cov = linalg.cho_solve((chol_theta, True), np.eye(p))
    cov = (cov + cov.T) / 2.0
    chol_cov = linalg.cholesky(cov, lower=True)
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((n, p)) @ chol_cov.T
    return ExpressionMatrix(_sample_ids(n), gene_ids or _gene_ids(p), values)


def sample_survival(X, beta_true, baseline_scale: float = 1.0,
                    censor_rate: float = 0.0, seed: int = 0):
    """Exponential proportional-hazards event times with uniform censoring.

    Event time for sample i is exponential with rate
    baseline_scale * exp(X_i . beta_true). Censoring times are uniform on
    (0, u) with u calibrated on the drawn event times so the realized censor
    fraction approximates ``censor_rate``.
    """
    if not 0 <= censor_rate < 1:
        raise ValueError("censor_rate must lie in [0, 1)")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    beta_true = np.asarray(beta_true, dtype=float)
    rng = np.random.default_rng(seed)
    rate = baseline_scale * np.exp(X @ beta_true)
    t_event = rng.exponential(1.0 / rate)
    if censor_rate == 0.0:
        return t_event, np.ones(X.shape[0], dtype=int)
    u = _calibrate_censor_bound(t_event, censor_rate)
    c = rng.uniform(0.0, u, size=t_event.size)
    time = np.minimum(t_event, c)
    event = (t_event <= c).astype(int)
    return time, event


def _calibrate_censor_bound(t_event: np.ndarray, censor_rate: float) -> float:
    # With C ~ U(0, u): P(C < T | T = t) = min(t, u)/u, so the expected
    # censored fraction is E[min(T, u)/u], decreasing in u; bisect on u.
    lo, hi = 1e-9, float(t_event.max()) * 10.0 + 1e-9
    for _ in range(200):
        mid = (lo + hi) / 2.0
        frac = float(np.mean(np.minimum(t_event, mid) / mid))
        if frac > censor_rate:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def make_prognostic_cohort(n: int = 300, p: int = 100, block_size: int = 10,
                           block_weight: float = 0.5, beta_scale: float = 1.0,
                           group_shift: float = 3.0, censor_rate: float = 0.2,
                           baseline_scale: float = 0.01, seed: int = 0,
                           label: str = "Astro"):
    """Full synthetic cohort: planted-block expression, two latent risk groups,
    proportional-hazards survival.

    Half the samples receive a mean shift of ``group_shift`` on the block
    genes, which makes the prognostic index bimodal by construction. Returns
    (ExpressionMatrix, ClinicalTable, SyntheticTruth).
    """
    theta = planted_block_precision(p, block_size, block_weight, seed)
    expr = sample_expression(n, theta, seed + 1)
    rng = np.random.default_rng(seed + 2)
    values = expr.values.copy()
    high = rng.random(n) < 0.5
    values[np.ix_(high, np.arange(block_size))] += group_shift
    beta_true = np.zeros(p)
    beta_true[:block_size] = beta_scale
    time, event = sample_survival(values, beta_true, baseline_scale, censor_rate, seed + 3)
    clin = ClinicalTable(
        expr.sample_ids, time, event,
        (label,) * n if label in ("Astro", "Oligo", "GBM") else ("Unknown",) * n,
        (label,) * n if label in ("Astro", "Oligo", "GBM") else ("Unknown",) * n,
    )
    deg = (np.abs(theta) >= 1e-12).sum(axis=1) - 1
    hub_ids = tuple(expr.gene_ids[i] for i in np.argsort(-deg)[: max(1, block_size // 2)])
    truth = SyntheticTruth(theta, precision_edges(theta), hub_ids, beta_true,
                           censor_rate, seed)
    return ExpressionMatrix(expr.sample_ids, expr.gene_ids, values), clin, truth


def write_cohort(expr: ExpressionMatrix, clin: ClinicalTable, expr_path, clin_path) -> None:
    """Write a cohort in the delimiter-separated formats the loaders accept."""
    from .corpus import write_expression

    write_expression(expr, expr_path)
    with open(clin_path, "w", encoding="utf-8") as fh:
        fh.write("sample_id,time,event,label_2016,label_2021\n")
        for i, sid in enumerate(clin.sample_ids):
            fh.write("%s,%s,%d,%s,%s\n" % (sid, repr(float(clin.time[i])),
                                           int(clin.event[i]), clin.label_2016[i],
                                           clin.label_2021[i]))
