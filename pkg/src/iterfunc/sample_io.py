"""Samples of (quantity, price, covariate) observations and their CSV form."""
import csv
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import SampleError

ROLES = ("quantity", "price", "covariate")
DEFAULT_COLUMNS = {"q": "quantity", "p": "price", "x": "covariate"}


@dataclass(frozen=True, eq=False)
class Sample:
    """One cross-section of consumers facing a common price schedule.

    ``offset`` is ``None`` for raw data and holds the subtracted lower
    quantity once :func:`normalize_sample` has run.
    """

    quantities: np.ndarray
    prices: np.ndarray | None = None
    covariates: np.ndarray | None = None
    period_label: int = 1
    offset: float | None = None

    def __post_init__(self):
        q = np.array(self.quantities, dtype=float).ravel()
        if q.size == 0:
            raise SampleError("sample has no observations")
        if not np.all(np.isfinite(q)):
            raise SampleError("quantities must be finite")
        if np.any(q < 0):
            raise SampleError(f"negative quantity at row {int(np.argmax(q < 0)) + 1}")
        object.__setattr__(self, "quantities", q)
        for name, dtype in (("prices", float), ("covariates", np.int64)):
            val = getattr(self, name)
            if val is not None:
                arr = np.array(val, dtype=dtype).ravel()
                if arr.shape != q.shape:
                    raise SampleError(f"{name} length {arr.size} differs from quantities length {q.size}")
                object.__setattr__(self, name, arr)
        if self.period_label not in (1, 2):
            raise SampleError("period_label must be 1 or 2")
        if self.covariates is not None and np.any(self.covariates < 0):
            raise SampleError("covariate codes must be nonnegative")

    @property
    def n(self):
        return self.quantities.size

    def subset(self, mask):
        mask = np.asarray(mask)
        return replace(
            self,
            quantities=self.quantities[mask],
            prices=None if self.prices is None else self.prices[mask],
            covariates=None if self.covariates is None else self.covariates[mask],
        )


def _parse(cell, row, column, integer=False):
    try:
        value = float(cell)
    except ValueError:
        raise SampleError(f"row {row}, column {column!r}: cannot parse {cell!r} as a number") from None
    if integer:
        if value != int(value):
            raise SampleError(f"row {row}, column {column!r}: covariate {cell!r} is not an integer")
        return int(value)
    return value


def load_sample(path, column_map=None, period_label=1):
    """Read a comma-separated file with a header row.

    ``column_map`` maps column names to roles (``quantity``, ``price``,
    ``covariate``); by default the columns ``q``, ``p`` and ``x`` are used
    when present. Rows are numbered from 1 after the header. Rows with an
    empty quantity cell are skipped.
    """
    if not os.path.isfile(path):
        raise SampleError(f"sample file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if column_map is None:
            column_map = {c: r for c, r in DEFAULT_COLUMNS.items() if c in header}
        by_role = {}
        for col, role in column_map.items():
            if role not in ROLES:
                raise SampleError(f"unknown column role {role!r}")
            if col not in header:
                raise SampleError(f"column {col!r} missing from {path}")
            by_role[role] = col
        if "quantity" not in by_role:
            raise SampleError("no column mapped to the quantity role")
        cols = {role: [] for role in by_role}
        for row, rec in enumerate(reader, start=1):
            qcell = (rec.get(by_role["quantity"]) or "").strip()
            if qcell == "":
                continue
            q = _parse(qcell, row, by_role["quantity"])
            if not np.isfinite(q) or q < 0:
                raise SampleError(f"row {row}: quantity {qcell} is negative or not finite")
            cols["quantity"].append(q)
            for role in ("price", "covariate"):
                if role in by_role:
                    cell = (rec.get(by_role[role]) or "").strip()
                    cols[role].append(_parse(cell, row, by_role[role], integer=role == "covariate"))
    if not cols["quantity"]:
        raise SampleError(f"{path} contains no observations")
    return Sample(
        np.array(cols["quantity"]),
        np.array(cols["price"]) if "price" in cols else None,
        np.array(cols["covariate"]) if "covariate" in cols else None,
        period_label,
    )


def write_sample(sample, path):
    """Write ``q`` (and ``p``, ``x`` when present) with round-trip exact floats."""
    names = ["q"]
    columns = [sample.quantities]
    if sample.prices is not None:
        names.append("p")
        columns.append(sample.prices)
    if sample.covariates is not None:
        names.append("x")
        columns.append(sample.covariates)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*columns):
            writer.writerow([repr(float(v)) if n != "x" else str(int(v)) for n, v in zip(names, row)])


def normalize_sample(sample, q_lower=None):
    """Drop zero quantities and shift the rest so the lower bound is 0.

    Parameters
    ----------
    sample : Sample
    q_lower : float, optional
        Shift to apply. Defaults to the smallest positive quantity. Passing
        a common value keeps two samples on the same quantity scale.

    Returns
    -------
    (Sample, zero_share, q_lower)
        A sample that is already normalized is returned unchanged with
        ``zero_share = 0`` and ``q_lower = 0``.
    """
    if sample.offset is not None:
        return sample, 0.0, 0.0
    positive = sample.quantities > 0
    if not positive.any():
        raise SampleError("all quantities are zero; the conditional sample is empty")
    zero_share = 1.0 - positive.mean()
    kept = sample.subset(positive)
    if q_lower is None:
        q_lower = float(kept.quantities.min())
    if q_lower < 0 or q_lower > kept.quantities.min():
        raise SampleError("q_lower must lie between 0 and the smallest positive quantity")
    shifted = replace(kept, quantities=kept.quantities - q_lower, offset=float(q_lower))
    return shifted, float(zero_share), float(q_lower)


def normalize_pair(s1, s2):
    """Normalize two samples with the common shift ``min`` over both."""
    lows = [s.quantities[s.quantities > 0].min() for s in (s1, s2) if (s.quantities > 0).any()]
    if len(lows) < 2:
        raise SampleError("all quantities are zero in at least one sample")
    q_lower = float(min(lows))
    n1, z1, _ = normalize_sample(s1, q_lower)
    n2, z2, _ = normalize_sample(s2, q_lower)
    return n1, n2, (z1, z2), q_lower
