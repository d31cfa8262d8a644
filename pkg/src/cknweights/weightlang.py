"""Parser for the weight mini-language used on the command line.

Grammar::

    spec   := "pow(" num ")"
            | "expinv(" num "," sign ")"
            | "scale(" num "," spec ")"
            | "prod(" spec "," spec ")"
            | "table(" path ")"
    sign   := "+" | "-"

Whitespace between tokens is ignored.  Table files are CSV with a ``t,w``
header and strictly increasing ``t``.
"""
from __future__ import annotations

import csv
import re
from pathlib import Path

from . import weights
from .errors import ParseError, SpecError

_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?|[+-]?inf")


def load_table(path, eta=None) -> weights.WeightSpec:
    """Read a ``t,w`` CSV into a table weight."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["t", "w"]:
            raise SpecError(f"{path}: header must be 't,w', got {','.join(header)!r}")
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    try:
        knots = [float(r[0]) for r in rows]
        values = [float(r[1]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise SpecError(f"{path}: malformed row ({exc})") from None
    return weights.table(knots, values, eta=eta, source=str(path))


class _Parser:
    def __init__(self, text, eta, base_dir):
        self.text = text
        self.pos = 0
        self.eta = 1.0 if eta is None else eta
        self.table_eta = None if eta is None or eta == float("inf") else eta
        self.node_eta = eta
        self.base_dir = base_dir

    def fail(self, message, pos=None):
        raise ParseError(message, self.text, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, token):
        self.skip()
        if not self.text.startswith(token, self.pos):
            self.fail(f"expected {token!r}")
        self.pos += len(token)

    def number(self):
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            self.fail("expected a number")
        self.pos = m.end()
        return float(m.group())

    def name(self):
        self.skip()
        m = re.compile(r"[a-z]+").match(self.text, self.pos)
        if not m:
            self.fail("expected a weight name (pow, expinv, scale, prod, table)")
        self.pos = m.end()
        return m.group(), m.start()

    def spec(self):
        name, start = self.name()
        self.expect("(")
        try:
            if name == "pow":
                gamma = self.number()
                self.expect(")")
                return weights.power(gamma, self.eta)
            if name == "expinv":
                alpha = self.number()
                self.expect(",")
                self.skip()
                sign_pos = self.pos
                if self.text[self.pos:self.pos + 1] not in ("+", "-"):
                    self.fail("expected sign '+' or '-'")
                sign = 1 if self.text[self.pos] == "+" else -1
                self.pos += 1
                self.expect(")")
                try:
                    return weights.exp_inv_power(sign, alpha, self.eta)
                except SpecError as exc:
                    self.fail(str(exc), sign_pos)
            if name == "scale":
                c = self.number()
                self.expect(",")
                inner = self.spec()
                self.expect(")")
                return weights.scale(c, inner, self.node_eta)
            if name == "prod":
                left = self.spec()
                self.expect(",")
                right = self.spec()
                self.expect(")")
                return weights.product(left, right, self.node_eta)
            if name == "table":
                end = self.text.find(")", self.pos)
                if end < 0:
                    self.fail("unterminated table(...)")
                raw = self.text[self.pos:end].strip()
                if not raw:
                    self.fail("table() needs a CSV path")
                path = Path(raw)
                if self.base_dir is not None and not path.is_absolute():
                    path = Path(self.base_dir) / path
                self.pos = end + 1
                return load_table(path, eta=self.table_eta)
        except ParseError:
            raise
        except (SpecError, OSError) as exc:
            self.fail(str(exc), start)
        self.fail(f"unknown weight {name!r}", start)

    def parse(self):
        spec = self.spec()
        self.skip()
        if self.pos != len(self.text):
            self.fail("unexpected trailing input")
        return spec


def parse_weight(text: str, eta: float | None = 1.0, base_dir=None) -> weights.WeightSpec:
    """Parse a mini-language string such as ``prod(pow(2),expinv(1,+))``.

    Every node gets the cutoff ``eta``; with ``eta=None`` built-ins use 1 and
    tables end at their last knot.  Raises :class:`ParseError` carrying
    the character offset of the problem.
    """
    return _Parser(text, None if eta is None else float(eta), base_dir).parse()
