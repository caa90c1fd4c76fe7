"""Barcodes: finite multisets of half-open intervals ``[birth, death)``."""

import math
from dataclasses import dataclass

__all__ = [
    "Bar",
    "Barcode",
    "BarcodeParseError",
    "length",
    "sorted_lengths",
    "hilbert_function",
    "parse_barcode",
    "format_barcode",
    "load_barcode",
    "save_barcode",
]


@dataclass(frozen=True, order=True)
class Bar:
    birth: float
    death: float = math.inf

    def __post_init__(self):
        if math.isnan(self.birth) or math.isnan(self.death):
            raise ValueError("bar endpoints must not be NaN")
        if self.death < self.birth:
            raise ValueError(f"death {self.death} precedes birth {self.birth}")

    @property
    def length(self):
        return length(self)

    @property
    def is_finite(self):
        return math.isfinite(self.death)

    def contains(self, t):
        return self.birth <= t < self.death


class Barcode:
    """Immutable multiset of :class:`Bar`.

    Bars keep their input order so that matching plans can refer to them
    by index; equality is multiset equality.
    """

    __slots__ = ("_bars",)

    def __init__(self, bars=()):
        out = []
        for b in bars:
            if isinstance(b, Bar):
                out.append(b)
            else:
                birth, death = b
                out.append(Bar(float(birth), float(death)))
        self._bars = tuple(out)

    @property
    def bars(self):
        return self._bars

    def __iter__(self):
        return iter(self._bars)

    def __len__(self):
        return len(self._bars)

    def __getitem__(self, i):
        return self._bars[i]

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return sorted(self._bars) == sorted(other._bars)

    def __hash__(self):
        return hash(tuple(sorted(self._bars)))

    def __repr__(self):
        inner = ", ".join(f"[{b.birth:g},{b.death:g})" for b in self._bars)
        return f"Barcode({{{inner}}})"

    def __add__(self, other):
        return Barcode(self._bars + tuple(other))

    @property
    def births(self):
        return [b.birth for b in self._bars]

    @property
    def deaths(self):
        return [b.death for b in self._bars]

    def finite_part(self):
        return Barcode(b for b in self._bars if b.is_finite)

    def infinite_part(self):
        return Barcode(b for b in self._bars if not b.is_finite)

    def to_pairs(self):
        return [(b.birth, b.death) for b in self._bars]


def length(b):
    if b.death == b.birth:
        return 0.0
    return b.death - b.birth


def sorted_lengths(bc):
    return sorted((length(b) for b in bc), reverse=True)


def hilbert_function(bc, t):
    return sum(1 for b in bc if b.birth <= t < b.death)


class BarcodeParseError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _parse_number(token, lineno):
    low = token.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        value = float(token)
    except ValueError:
        raise BarcodeParseError(lineno, f"not a number: {token!r}") from None
    if math.isnan(value):
        raise BarcodeParseError(lineno, "NaN endpoint")
    return value


def parse_barcode(text):
    """Parse the text format: one ``birth<TAB>death`` pair per line."""
    bars = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise BarcodeParseError(lineno, f"expected 2 fields, got {len(parts)}")
        birth = _parse_number(parts[0], lineno)
        death = _parse_number(parts[1], lineno)
        try:
            bars.append(Bar(birth, death))
        except ValueError as exc:
            raise BarcodeParseError(lineno, str(exc)) from None
    return Barcode(bars)


def _fmt(x):
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return f"{x:.17g}"


def format_barcode(bc):
    return "".join(f"{_fmt(b.birth)}\t{_fmt(b.death)}\n" for b in bc)


def load_barcode(path):
    with open(path, encoding="utf-8") as fh:
        return parse_barcode(fh.read())


def save_barcode(bc, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_barcode(bc))
