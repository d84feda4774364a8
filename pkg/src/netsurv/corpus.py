"""Loading and alignment of expression and clinical data into per-cohort datasets."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SCHEMES = ("WHO2016", "WHO2021")
GLIOMA_TYPES = ("Astro", "Oligo", "GBM")
LABELS = GLIOMA_TYPES + ("Unknown",)

_SCHEME_COLUMN = {"WHO2016": "label_2016", "WHO2021": "label_2021"}


@dataclass(frozen=True)
class ExpressionMatrix:
    """Dense samples x genes matrix with identifiers."""

    sample_ids: tuple
    gene_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        if values.ndim != 2:
            raise ValueError("expression values must be a 2-d matrix")
        if values.shape != (len(self.sample_ids), len(self.gene_ids)):
            raise ValueError(
                "matrix shape %s does not match %d samples x %d genes"
                % (values.shape, len(self.sample_ids), len(self.gene_ids))
            )
        _check_unique(self.sample_ids, "sample")
        _check_unique(self.gene_ids, "gene")
        if not np.isfinite(values).all():
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(
                "missing or non-finite value at sample %r, gene %r"
                % (self.sample_ids[i], self.gene_ids[j])
            )

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def n_genes(self) -> int:
        return len(self.gene_ids)

    def restrict_genes(self, gene_ids) -> "ExpressionMatrix":
        """Column subset in the given order."""
        index = {g: k for k, g in enumerate(self.gene_ids)}
        missing = [g for g in gene_ids if g not in index]
        if missing:
            raise ValueError("genes not in matrix: %s" % ", ".join(map(str, missing[:5])))
        cols = [index[g] for g in gene_ids]
        return ExpressionMatrix(self.sample_ids, tuple(gene_ids), self.values[:, cols])

    def restrict_samples(self, sample_ids) -> "ExpressionMatrix":
        """Row subset in the given order."""
        index = {s: k for k, s in enumerate(self.sample_ids)}
        missing = [s for s in sample_ids if s not in index]
        if missing:
            raise ValueError("samples not in matrix: %s" % ", ".join(map(str, missing[:5])))
        rows = [index[s] for s in sample_ids]
        return ExpressionMatrix(tuple(sample_ids), self.gene_ids, self.values[rows, :])


@dataclass(frozen=True)
class ClinicalTable:
    """Per-sample survival time, event indicator and WHO labels."""

    sample_ids: tuple
    time: np.ndarray
    event: np.ndarray
    label_2016: tuple
    label_2021: tuple

    def __post_init__(self):
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "time", np.asarray(self.time, dtype=float))
        object.__setattr__(self, "event", np.asarray(self.event, dtype=int))
        object.__setattr__(self, "label_2016", tuple(self.label_2016))
        object.__setattr__(self, "label_2021", tuple(self.label_2021))
        n = len(self.sample_ids)
        if not (len(self.time) == len(self.event) == len(self.label_2016) == len(self.label_2021) == n):
            raise ValueError("clinical columns have inconsistent lengths")
        _check_unique(self.sample_ids, "sample")
        if np.any(~np.isfinite(self.time)) or np.any(self.time < 0):
            bad = self.sample_ids[int(np.flatnonzero((~np.isfinite(self.time)) | (self.time < 0))[0])]
            raise ValueError("negative survival time for sample %r" % (bad,))
        if not np.isin(self.event, (0, 1)).all():
            bad = self.sample_ids[int(np.flatnonzero(~np.isin(self.event, (0, 1)))[0])]
            raise ValueError("event must be 0 or 1 for sample %r" % (bad,))
        for labels in (self.label_2016, self.label_2021):
            for lab in labels:
                if lab not in LABELS:
                    raise ValueError("unknown label %r (expected one of %s)" % (lab, ", ".join(LABELS)))

    def __len__(self) -> int:
        return len(self.sample_ids)

    def labels(self, scheme: str) -> tuple:
        if scheme not in SCHEMES:
            raise ValueError("unknown scheme %r" % (scheme,))
        return self.label_2016 if scheme == "WHO2016" else self.label_2021

    def restrict_samples(self, sample_ids) -> "ClinicalTable":
        index = {s: k for k, s in enumerate(self.sample_ids)}
        rows = [index[s] for s in sample_ids]
        return ClinicalTable(
            tuple(sample_ids),
            self.time[rows],
            self.event[rows],
            tuple(self.label_2016[r] for r in rows),
            tuple(self.label_2021[r] for r in rows),
        )


@dataclass(frozen=True)
class CohortDataset:
    """Expression and clinical data aligned on the same samples, in the same order."""

    expression: ExpressionMatrix
    clinical: ClinicalTable
    scheme: str
    glioma_type: str

    def __post_init__(self):
        if self.expression.sample_ids != self.clinical.sample_ids:
            raise ValueError("expression and clinical sample order differ")

    @property
    def n_samples(self) -> int:
        return self.expression.n_samples


def _check_unique(ids, kind: str) -> None:
    seen = set()
    for x in ids:
        if x in seen:
            raise ValueError("duplicate %s identifier %r" % (kind, x))
        seen.add(x)


def _sniff_sep(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
    return "\t" if "\t" in header else ","


def load_expression(path, orientation: str = "samples_by_genes") -> ExpressionMatrix:
    """Load a delimiter-separated expression table.

    The first column holds row identifiers and the header holds column
    identifiers. ``orientation`` says whether rows are samples or genes;
    the result is always samples x genes.
    """
    if orientation not in ("samples_by_genes", "genes_by_samples"):
        raise ValueError("unknown orientation %r" % (orientation,))
    sep = _sniff_sep(path)
    with open(path, "r", encoding="utf-8") as fh:
        header_ids = fh.readline().rstrip("\n").split(sep)[1:]
    kind = "gene" if orientation == "samples_by_genes" else "sample"
    _check_unique(header_ids, kind)
    df = pd.read_csv(path, sep=sep, index_col=0, dtype=str, float_precision="round_trip")
    row_ids = [str(x) for x in df.index]
    col_ids = [str(x) for x in df.columns]
    try:
        values = df.to_numpy(dtype=float)
    except ValueError:
        for j, col in enumerate(df.columns):
            bad = pd.to_numeric(df[col], errors="coerce")
            if bad.isna().any() and not df[col].isna().all():
                i = int(np.flatnonzero(bad.isna().to_numpy())[0])
                raise ValueError(
                    "non-numeric cell at row %r, column %r" % (row_ids[i], col_ids[j])
                ) from None
        raise
    if np.isnan(values).any():
        i, j = np.argwhere(np.isnan(values))[0]
        raise ValueError("missing cell at row %r, column %r" % (row_ids[i], col_ids[j]))
    if orientation == "genes_by_samples":
        values = values.T
        row_ids, col_ids = col_ids, row_ids
    try:
        return ExpressionMatrix(tuple(row_ids), tuple(col_ids), values)
    except ValueError as exc:
        raise ValueError(str(exc)) from None


def load_clinical(path) -> ClinicalTable:
    """Load a clinical table with columns sample_id, time, event and optional labels."""
    sep = _sniff_sep(path)
    df = pd.read_csv(path, sep=sep, dtype=str)
    required = ("sample_id", "time", "event")
    for col in required:
        if col not in df.columns:
            raise ValueError("clinical file misses required column %r" % (col,))
    for col in ("label_2016", "label_2021"):
        if col not in df.columns:
            df[col] = "Unknown"
        df[col] = df[col].fillna("Unknown")
    sample_ids = tuple(str(x) for x in df["sample_id"])
    time = df["time"].to_numpy(dtype=str).astype(float)
    event_raw = df["event"].to_numpy(dtype=str).astype(float)
    if not np.isin(event_raw, (0.0, 1.0)).all():
        bad = sample_ids[int(np.flatnonzero(~np.isin(event_raw, (0.0, 1.0)))[0])]
        raise ValueError("event must be 0 or 1 for sample %r" % (bad,))
    return ClinicalTable(
        sample_ids,
        time,
        event_raw.astype(int),
        tuple(str(x) for x in df["label_2016"]),
        tuple(str(x) for x in df["label_2021"]),
    )


def write_expression(expr: ExpressionMatrix, path, sep: str = ",") -> None:
    """Write a samples x genes table in the format ``load_expression`` accepts."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sample_id" + sep + sep.join(map(str, expr.gene_ids)) + "\n")
        for i, sid in enumerate(expr.sample_ids):
            fh.write(str(sid) + sep + sep.join(repr(float(v)) for v in expr.values[i]) + "\n")


def build_cohort(
    expr: ExpressionMatrix,
    clin: ClinicalTable,
    scheme: str,
    glioma_type: str,
    strict: bool = True,
) -> CohortDataset:
    """Intersect samples of ``expr`` and ``clin`` carrying the requested label.

    Sample order follows the clinical file. ``glioma_type`` may be one of the
    three types or ``"PanGlioma"``, which retains every labeled sample of the
    scheme (and, with ``strict=False``, Unknown-labeled samples as well).
    """
    if scheme not in SCHEMES:
        raise ValueError("unknown scheme %r" % (scheme,))
    if glioma_type not in GLIOMA_TYPES + ("PanGlioma",):
        raise ValueError("unknown glioma type %r" % (glioma_type,))
    labels = clin.labels(scheme)
    expr_samples = set(expr.sample_ids)
    keep = []
    n_unknown = 0
    for sid, lab in zip(clin.sample_ids, labels):
        if sid not in expr_samples:
            continue
        if glioma_type == "PanGlioma":
            if lab == "Unknown":
                n_unknown += 1
                if strict:
                    continue
        elif lab != glioma_type:
            if lab == "Unknown":
                n_unknown += 1
            continue
        keep.append(sid)
    if n_unknown:
        logger.info("build_cohort(%s, %s): dropped %d Unknown-labeled samples",
                    scheme, glioma_type, n_unknown)
    if len(keep) < 3:
        raise ValueError(
            "cohort too small: %d samples match (%s, %s), need at least 3"
            % (len(keep), scheme, glioma_type)
        )
    return CohortDataset(
        expression=expr.restrict_samples(keep),
        clinical=clin.restrict_samples(keep),
        scheme=scheme,
        glioma_type=glioma_type,
    )
