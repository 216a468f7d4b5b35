"""Result records and their CSV, JSON-lines and markdown renderings."""
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional


def rel_error_pct(approx, reference):
    """Percent relative error ``100 |approx - reference| / |reference|``."""
    if reference == 0:
        return 0.0 if approx == 0 else math.inf
    return 100.0 * abs(approx - reference) / abs(reference)


@dataclass(frozen=True)
class ApproxReport:
    """Oracle value and named approximations for one measure."""

    measure: str
    oracle: Optional[float]
    approx: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)
    notes: tuple = ()

    def errors(self):
        if self.oracle is None:
            return {}
        return {k: rel_error_pct(v, self.oracle) for k, v in self.approx.items()}

    def records(self):
        """Flat rows ``(measure, quantity, value, rel_error_pct)``."""
        out = []
        if self.oracle is not None:
            out.append((self.measure, "exact", self.oracle, None))
        errs = self.errors()
        for k, v in self.approx.items():
            out.append((self.measure, k, v, errs.get(k)))
        for k, v in self.terms.items():
            out.append((self.measure, "term." + k, v, None))
        return out


RECORD_HEADER = ("measure", "quantity", "value", "rel_error_pct")


def render_records(records, fmt):
    """Render ``ApproxReport.records()`` rows as csv, json-lines or markdown."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(RECORD_HEADER)
        for m, q, v, e in records:
            w.writerow((m, q, repr(v), "" if e is None else repr(e)))
        return buf.getvalue()
    if fmt == "json-lines":
        return "".join(json.dumps(dict(zip(RECORD_HEADER, rec))) + "\n" for rec in records)
    if fmt == "markdown":
        rows = [(m, q, "%.10g" % v, "" if e is None else "%.4f" % e) for m, q, v, e in records]
        return markdown_table(RECORD_HEADER, rows)
    raise ValueError("unknown format %r" % (fmt,))


def markdown_table(header, rows):
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
