"""Gaussianization via the nonparanormal transform and Jarque-Bera normality filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .corpus import ExpressionMatrix


@dataclass(frozen=True)
class NormalityReport:
    gene_id: str
    jb_statistic: float
    p_value: float
    kept: bool


def _average_ranks(x: np.ndarray) -> np.ndarray:
    # 1-based ranks, ties averaged
    return stats.rankdata(x, method="average")


def npn_truncation(n: int) -> float:
    """Truncation level for the shrunken empirical CDF."""
    return 1.0 / (4.0 * n ** 0.25 * math.sqrt(math.pi * math.log(n)))


def npn_transform(expr: ExpressionMatrix) -> ExpressionMatrix:
    """Map each gene column through the shrunken-ECDF nonparanormal transform.

    Ranks -> empirical CDF values clipped to [delta_n, 1 - delta_n] ->
    standard-normal quantiles, then centered and rescaled to unit sample
    variance. The output depends on the input only through its ranks, so any
    strictly increasing per-column transform of the input leaves it unchanged.
    """
    n = expr.n_samples
    if n < 3:
        raise ValueError("nonparanormal transform needs at least 3 samples, got %d" % n)
    delta = npn_truncation(n)
    out = np.empty_like(expr.values)
    for j in range(expr.n_genes):
        col = expr.values[:, j]
        if np.ptp(col) == 0.0:
            raise ValueError("constant column for gene %r: ranks degenerate" % (expr.gene_ids[j],))
        u = _average_ranks(col) / (n + 1.0)
        z = ndtri(np.clip(u, delta, 1.0 - delta))
        z = z - z.mean()
        sd = z.std(ddof=1)
        if sd == 0.0:
            raise ValueError("constant column for gene %r: ranks degenerate" % (expr.gene_ids[j],))
        out[:, j] = z / sd
    return ExpressionMatrix(expr.sample_ids, expr.gene_ids, out)


def jarque_bera(x) -> tuple[float, float]:
    """Jarque-Bera statistic and its chi-square(2) p-value.

    JB = (n/6) * (skewness^2 + excess_kurtosis^2 / 4), with moment-based
    skewness and kurtosis (1/n central moments).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 8:
        raise ValueError("Jarque-Bera needs at least 8 observations, got %d" % n)
    c = x - x.mean()
    m2 = np.mean(c ** 2)
    if m2 == 0.0:
        raise ValueError("zero sample variance")
    skew = np.mean(c ** 3) / m2 ** 1.5
    kurt = np.mean(c ** 4) / m2 ** 2 - 3.0
    jb = n / 6.0 * (skew ** 2 + kurt ** 2 / 4.0)
    return float(jb), float(stats.chi2.sf(jb, df=2))


def filter_normal(expr: ExpressionMatrix, alpha: float = 0.05):
    """Keep the gene columns whose JB p-value exceeds ``alpha``.

    Returns the filtered matrix (original column order) and the per-gene
    reports. No multiple-testing correction is applied.
    """
    reports = []
    keep = []
    for j, gene in enumerate(expr.gene_ids):
        jb, p = jarque_bera(expr.values[:, j])
        kept = p > alpha
        reports.append(NormalityReport(gene, jb, p, kept))
        if kept:
            keep.append(j)
    if not keep:
        raise ValueError("no variables pass normality filter at alpha=%g" % alpha)
    filtered = ExpressionMatrix(
        expr.sample_ids,
        tuple(expr.gene_ids[j] for j in keep),
        expr.values[:, keep],
    )
    return filtered, reports


def empirical_covariance(expr: ExpressionMatrix, ddof: int = 0) -> np.ndarray:
    """Covariance of the columns, 1/n divisor by default (ddof=0).

    The 1/n divisor matches the maximum-likelihood setting of the penalized
    log-likelihood the precision matrix is fitted against.
    """
    n = expr.n_samples
    if n < 2:
        raise ValueError("covariance needs at least 2 samples, got %d" % n)
    xc = expr.values - expr.values.mean(axis=0)
    s = xc.T @ xc / (n - ddof)
    # computed once, mirrored: exact symmetry
    s = np.triu(s) + np.triu(s, 1).T
    return s


def write_normality_report(reports, path, sep: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sep.join(("gene_id", "jb", "p", "kept")) + "\n")
        for r in reports:
            fh.write(sep.join((r.gene_id, repr(r.jb_statistic), repr(r.p_value),
                               "1" if r.kept else "0")) + "\n")
