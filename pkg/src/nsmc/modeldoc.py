"""Plain-text model documents.

A document is a sequence of lines. ``#`` starts a comment. Scalars and
vectors are written ``key = value ...``; matrices are blocks::

    matrix base
      0.5 0.5
      0.2 0.8
    end

Numbers are decimal literals or ratios such as ``1/3``; they are parsed
exactly and rounded once to the nearest double. Repeated ``matrix step``
blocks give an explicit sequence ``P_1, P_2, ...``.
"""
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

MEASURES = ("discounted", "hitting", "transient", "cumulative", "jump")
GENERATORS = ("inventory", "birth_death")
SCALAR_KEYS = {
    "measure": str, "generator": str, "variant": str, "initial": str, "form": str,
    "alpha": float, "t": float, "h": float, "precision": float, "m": float, "eps": float,
    "n": int, "fd_index": int, "s": int, "S": int,
    "hold_last": bool,
}
VECTOR_KEYS = ("reward", "mu", "C", "p_up", "p_down")
MATRIX_KEYS = ("base", "e1", "e2", "step", "Q", "f1", "f2")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+(\.\d*)?)?$")


class ModelDocError(ValueError):
    """Parse or validation failure anchored at a line of the document."""

    def __init__(self, message, line=None, source="<model>"):
        self.line = line
        self.source = source
        where = "%s:%d: " % (source, line) if line else "%s: " % source
        super().__init__(where + message)


def parse_number(tok, line=None, source="<model>"):
    if not _NUMBER.match(tok):
        raise ModelDocError("not a number: %r" % tok, line, source)
    num, _, den = tok.partition("/")
    value = Fraction(num)
    if den:
        d = Fraction(den)
        if d == 0:
            raise ModelDocError("zero denominator in %r" % tok, line, source)
        value /= d
    return float(value)


@dataclass
class MatrixBlock:
    rows: np.ndarray
    line: int
    row_lines: list


@dataclass
class ModelDoc:
    """Parsed document: raw values with the lines they came from."""

    source: str = "<model>"
    scalars: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    lines: dict = field(default_factory=dict)

    def get(self, key, default=None):
        if key in self.scalars:
            return self.scalars[key]
        return self.vectors.get(key, default)

    def line_of(self, key):
        return self.lines.get(key)

    def error(self, message, key=None, line=None):
        return ModelDocError(message, line if line is not None else self.line_of(key), self.source)

    @property
    def measure(self):
        return self.scalars["measure"]


def _parse_bool(tok, line, source):
    low = tok.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ModelDocError("expected true or false, got %r" % tok, line, source)


def parse_text(text, source="<model>"):
    """Parse a model document.

    Raises
    ------
    ModelDocError
        On unknown keys, malformed numbers, ragged or non-square matrices,
        duplicates, or a missing/unknown ``measure``.
    """
    doc = ModelDoc(source=source)
    block = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if block is not None:
            name, start, rows, row_lines = block
            if line == "end":
                widths = {len(r) for r in rows}
                if not rows:
                    raise ModelDocError("matrix %s is empty" % name, start, source)
                if len(widths) != 1:
                    raise ModelDocError("matrix %s has rows of unequal length" % name, start, source)
                if widths.pop() != len(rows):
                    raise ModelDocError("matrix %s is not square" % name, start, source)
                mb = MatrixBlock(np.array(rows), start, row_lines)
                if name == "step":
                    doc.steps.append(mb)
                else:
                    doc.matrices[name] = mb
                block = None
            else:
                rows.append([parse_number(tok, lineno, source) for tok in line.split()])
                row_lines.append(lineno)
            continue
        if line.startswith("matrix"):
            parts = line.split()
            if len(parts) != 2 or parts[1] not in MATRIX_KEYS:
                raise ModelDocError("expected 'matrix NAME' with NAME in %s" % ", ".join(MATRIX_KEYS),
                                    lineno, source)
            name = parts[1]
            if name != "step" and name in doc.matrices:
                raise ModelDocError("duplicate matrix %s" % name, lineno, source)
            block = (name, lineno, [], [])
            continue
        if "=" not in line:
            raise ModelDocError("expected 'key = value' or a matrix block", lineno, source)
        key, _, value = (part.strip() for part in line.partition("="))
        if key in doc.lines:
            raise ModelDocError("duplicate key %r" % key, lineno, source)
        toks = value.split()
        if key in SCALAR_KEYS:
            kind = SCALAR_KEYS[key]
            if len(toks) != 1:
                raise ModelDocError("%s takes a single value" % key, lineno, source)
            if kind is str:
                doc.scalars[key] = toks[0]
            elif kind is bool:
                doc.scalars[key] = _parse_bool(toks[0], lineno, source)
            elif kind is int:
                if not re.match(r"^[+-]?\d+$", toks[0]):
                    raise ModelDocError("%s must be an integer" % key, lineno, source)
                doc.scalars[key] = int(toks[0])
            else:
                doc.scalars[key] = parse_number(toks[0], lineno, source)
        elif key in VECTOR_KEYS:
            if not toks:
                raise ModelDocError("%s needs values" % key, lineno, source)
            if key == "mu" and len(toks) == 1 and not _NUMBER.match(toks[0]):
                doc.scalars["mu"] = toks[0]
            elif key == "C":
                if not all(re.match(r"^\d+$", t) for t in toks):
                    raise ModelDocError("C lists nonnegative state indices", lineno, source)
                doc.vectors[key] = [int(t) for t in toks]
            else:
                doc.vectors[key] = np.array([parse_number(t, lineno, source) for t in toks])
        else:
            raise ModelDocError("unknown key %r" % key, lineno, source)
        doc.lines[key] = lineno
    if block is not None:
        raise ModelDocError("matrix %s is missing 'end'" % block[0], block[1], source)
    if "measure" not in doc.scalars:
        raise ModelDocError("missing 'measure = ...' (one of %s)" % ", ".join(MEASURES), None, source)
    if doc.measure not in MEASURES:
        raise doc.error("unknown measure %r (one of %s)" % (doc.measure, ", ".join(MEASURES)), "measure")
    gen = doc.scalars.get("generator")
    if gen is not None and gen not in GENERATORS:
        raise doc.error("unknown generator %r (one of %s)" % (gen, ", ".join(GENERATORS)), "generator")
    return doc


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), source=str(path))
