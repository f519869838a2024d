#  Copyright (c) 2024 pufentropy developers
"""
Entropy reports and their JSON/CSV forms.
"""

import csv
import datetime
import io
import json
import numbers
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from pufentropy.estimators import (DEFAULT_CONFIDENCE, EntropyEstimate, EntropyOrder, check_ordering,
                                   estimate_all)
from pufentropy.sampler import ClassMap, merge
from pufentropy.tables import max_entropy

FORMAT_NAME = "pufentropy-report"
FORMAT_VERSION = 1

_FIELDS = ("order", "value", "ci_low", "ci_high", "confidence", "sample_size", "method", "bias_bound")
_FLOAT_FIELDS = ("value", "ci_low", "ci_high", "bias_bound")
FIG1_COLUMNS = ("n", "H0", "H1_lo", "H1_hi", "H2_lo", "H2_hi", "Hinf_lo", "Hinf_hi")


class Report:
    """
    The entropy estimates of one ``n`` together with the metadata of the data they were computed from.
    Numbers are printed with a fixed number of decimals (see :meth:`print_precision`).
    """

    _print_precision = 6

    @classmethod
    def print_precision(cls, precision=None):
        """
        Get or set the number of decimals used when rendering reports.
        """
        if precision is not None:
            if not isinstance(precision, numbers.Integral) or precision < 0:
                raise ValueError(f"precision has to be a non-negative integer, got {precision}")
            cls._print_precision = int(precision)
        return cls._print_precision

    def __init__(self, n: int, estimates: Mapping[EntropyOrder, EntropyEstimate], metadata: Optional[dict] = None,
                 timestamp: Optional[str] = None):
        self.n = int(n)
        self.estimates = {EntropyOrder(order): est for order, est in estimates.items()}
        self.metadata = dict(metadata or {})
        if timestamp is None:
            timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        self.timestamp = timestamp

    @classmethod
    def from_maps(cls, maps: Sequence[ClassMap], orders: Iterable = tuple(EntropyOrder),
                  confidence: float = DEFAULT_CONFIDENCE, h2_fallback: bool = False):
        """
        Estimate the requested orders from one map or a set of batches.
        """
        maps = list(maps)
        estimates = estimate_all(maps, orders, confidence, h2_fallback=h2_fallback)
        check_ordering(estimates)
        metadata = merge(maps).metadata()
        metadata["batches"] = len(maps)
        return cls(maps[0].n, estimates, metadata)

    @classmethod
    def _format(cls, x):
        return np.format_float_positional(x, precision=cls._print_precision, unique=False, fractional=True,
                                          trim='k')

    def _rounded(self, x):
        return None if x is None else float(self._format(x))

    def _records(self):
        for order, est in self.estimates.items():
            record = est.as_dict()
            for name in _FLOAT_FIELDS:
                record[name] = self._rounded(record[name])
            yield order, record

    def to_json(self) -> str:
        """
        Render as JSON document (includes the timestamp and format version).
        """
        doc = dict(format=FORMAT_NAME, version=FORMAT_VERSION, n=self.n, timestamp=self.timestamp,
                   metadata=self.metadata, estimates=[record for _, record in self._records()])
        return json.dumps(doc, indent=2)

    def to_csv(self) -> str:
        """
        Render as CSV with one row per order (without timestamp).
        """
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("n",) + _FIELDS)
        for order, record in self._records():
            row = [self.n]
            for name in _FIELDS:
                value = record[name]
                if value is None:
                    row.append("")
                elif name in _FLOAT_FIELDS:
                    row.append(self._format(value))
                else:
                    row.append(value)
            writer.writerow(row)
        return out.getvalue()

    def render(self, fmt: str = "json") -> str:
        if fmt == "json":
            return self.to_json()
        elif fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown report format '{fmt}'")

    @staticmethod
    def _estimate_from_record(record):
        bias = record.get("bias_bound")
        return EntropyEstimate(record["order"], float(record["value"]), float(record["ci_low"]),
                               float(record["ci_high"]), float(record["confidence"]), int(record["sample_size"]),
                               record["method"], None if bias in (None, "") else float(bias))

    @classmethod
    def from_json(cls, text: str):
        doc = json.loads(text)
        if doc.get("format") != FORMAT_NAME or doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"not a version {FORMAT_VERSION} {FORMAT_NAME} document")
        estimates = {}
        for record in doc["estimates"]:
            est = cls._estimate_from_record(record)
            estimates[est.order] = est
        return cls(doc["n"], estimates, doc.get("metadata"), doc.get("timestamp"))

    @classmethod
    def from_csv(cls, text: str):
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("CSV report has no rows")
        estimates = {}
        for row in rows:
            est = cls._estimate_from_record(row)
            estimates[est.order] = est
        return cls(int(rows[0]["n"]), estimates, timestamp="")

    def fig1_row(self) -> Dict[str, Optional[float]]:
        """
        The row of this report in the entropy-versus-``n`` table: H0 (published value where known,
        otherwise the observed lower bound) and the interval ends of the other orders.
        """
        h0 = max_entropy(self.n)
        if h0 is None and EntropyOrder.H0 in self.estimates:
            h0 = self.estimates[EntropyOrder.H0].value
        row = dict(n=self.n, H0=h0)
        for order in (EntropyOrder.H1, EntropyOrder.H2, EntropyOrder.HINF):
            est = self.estimates.get(order)
            row[f"{order.label}_lo"] = None if est is None else est.ci_low
            row[f"{order.label}_hi"] = None if est is None else est.ci_high
        return row

    def __repr__(self):
        return f"Report(n={self.n}, orders={[str(o) for o in self.estimates]})"


def fig1_csv(reports: Iterable[Report]) -> str:
    """
    CSV table ``n,H0,H1_lo,H1_hi,H2_lo,H2_hi,Hinf_lo,Hinf_hi`` with one row per report, ascending in ``n``.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FIG1_COLUMNS)
    for report in sorted(reports, key=lambda r: r.n):
        row = report.fig1_row()
        writer.writerow([row["n"]] + ["" if row[c] is None else Report._format(row[c]) for c in FIG1_COLUMNS[1:]])
    return out.getvalue()
