"""Exact rational linear combinations and elimination routines.

Two deliberately independent elimination paths are provided: a sparse
rational Gaussian elimination (dict-of-column vectors, used for span
membership and expressions) and a dense fraction-free elimination over the
integers (Bareiss pivoting with exact divisions).  Rank answers from the two
must agree; the test suite enforces this on every generated system.
"""

from __future__ import annotations

from fractions import Fraction
import math

from .errors import ParseError


class LinearCombination:
    """Mapping from canonical digests to exact rational coefficients.

    Zero coefficients are never stored.  Instances are treated as immutable
    values by the engine; the arithmetic helpers return new objects.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for digest, coeff in (terms.items() if isinstance(terms, dict) else terms):
                coeff = Fraction(coeff)
                if coeff:
                    acc = self.terms.get(digest, 0) + coeff
                    if acc:
                        self.terms[digest] = acc
                    else:
                        self.terms.pop(digest, None)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, LinearCombination) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        out = dict(self.terms)
        for digest, coeff in other.terms.items():
            acc = out.get(digest, 0) + coeff
            if acc:
                out[digest] = acc
            else:
                out.pop(digest, None)
        return LinearCombination(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, factor):
        factor = Fraction(factor)
        if not factor:
            return LinearCombination()
        return LinearCombination({d: c * factor for d, c in self.terms.items()})

    def get(self, digest):
        return self.terms.get(digest, Fraction(0))

    def support(self):
        return sorted(self.terms)

    def serialize(self):
        """``digest: p/q, ...`` with digest-sorted terms; the empty sum is ``0``."""
        if not self.terms:
            return "0"
        parts = []
        for digest in sorted(self.terms):
            c = self.terms[digest]
            parts.append("%s: %d/%d" % (digest, c.numerator, c.denominator))
        return ", ".join(parts)

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text == "0" or text == "":
            return cls()
        terms = []
        for chunk in text.split(", "):
            if ": " not in chunk:
                raise ParseError("bad combination term %r" % chunk)
            digest, coeff = chunk.rsplit(": ", 1)
            try:
                num, den = coeff.split("/")
                terms.append((digest, Fraction(int(num), int(den))))
            except (ValueError, ZeroDivisionError) as exc:
                raise ParseError("bad coefficient %r" % coeff) from exc
        return cls(terms)


def unit(digest):
    return LinearCombination({digest: Fraction(1)})


# -- sparse rational elimination ---------------------------------------------


class SparseEchelon:
    """Reduced row echelon accumulator with row-combination tracking.

    Columns are compared through ``column_rank`` (digest -> position); the
    pivot of a row is its smallest column.  Every inserted row remembers how
    it was formed from the original inputs, so span membership produces
    explicit coefficients.
    """

    def __init__(self, column_rank):
        self.column_rank = column_rank
        self.pivots = {}            # pivot column -> (vector, combo)
        self.count = 0

    def _key(self, col):
        return self.column_rank[col]

    def reduce(self, vector, combo=None):
        """Eliminate all pivot columns from ``vector``; return (vec, combo)."""
        vec = dict(vector)
        combo = dict(combo or {})
        while True:
            hit = None
            for col in vec:
                if col in self.pivots and (hit is None or self._key(col) < self._key(hit)):
                    hit = col
            if hit is None:
                return vec, combo
            pvec, pcombo = self.pivots[hit]
            factor = vec[hit] / pvec[hit]
            for col, val in pvec.items():
                acc = vec.get(col, 0) - factor * val
                if acc:
                    vec[col] = acc
                else:
                    vec.pop(col, None)
            for idx, val in pcombo.items():
                acc = combo.get(idx, 0) - factor * val
                if acc:
                    combo[idx] = acc
                else:
                    combo.pop(idx, None)

    def insert(self, vector, tag):
        """Reduce ``vector`` and add it as a new pivot row when independent."""
        vec, combo = self.reduce(vector, {tag: Fraction(1)})
        if not vec:
            return False
        pivot = min(vec, key=self._key)
        # keep earlier pivot rows clean: eliminate the new pivot column above
        for col, (pvec, pcombo) in list(self.pivots.items()):
            if pivot in pvec:
                factor = pvec[pivot] / vec[pivot]
                for c, val in vec.items():
                    acc = pvec.get(c, 0) - factor * val
                    if acc:
                        pvec[c] = acc
                    else:
                        pvec.pop(c, None)
                for idx, val in combo.items():
                    acc = pcombo.get(idx, 0) - factor * val
                    if acc:
                        pcombo[idx] = acc
                    else:
                        pcombo.pop(idx, None)
        self.pivots[pivot] = (vec, combo)
        self.count += 1
        return True

    @property
    def rank(self):
        return self.count


def sparse_rank(rows, column_order):
    rank_of = {col: i for i, col in enumerate(column_order)}
    ech = SparseEchelon(rank_of)
    for i, row in enumerate(rows):
        ech.insert(dict(row), i)
    return ech.rank


def solve_in_rowspan(rows, column_order, target):
    """Coefficients expressing ``target`` as a combination of ``rows``.

    Returns a dict row_index -> Fraction, or None when the target is not in
    the row span.  Deterministic: rows are inserted in order, pivots are the
    smallest columns under ``column_order``.
    """
    rank_of = {col: i for i, col in enumerate(column_order)}
    ech = SparseEchelon(rank_of)
    for i, row in enumerate(rows):
        ech.insert(dict(row), i)
    residual, combo = ech.reduce(dict(target))
    if residual:
        return None
    return {idx: -val for idx, val in combo.items()}


# -- dense fraction-free elimination ------------------------------------------


def _integer_rows(rows, column_order):
    index = {col: i for i, col in enumerate(column_order)}
    out = []
    for row in rows:
        dense = [0] * len(column_order)
        scale = 1
        for val in row.values():
            den = Fraction(val).denominator
            scale = scale * den // math.gcd(scale, den)
        for col, val in row.items():
            v = Fraction(val) * scale
            dense[index[col]] = v.numerator
        out.append(dense)
    return out


def dense_rank(rows, column_order):
    """Rank by one-step fraction-free (Bareiss) elimination over the integers."""
    m = _integer_rows(rows, column_order)
    if not m:
        return 0
    ncols = len(column_order)
    rank = 0
    prev = 1
    for col in range(ncols):
        pivot_row = None
        for r in range(rank, len(m)):
            if m[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        m[rank], m[pivot_row] = m[pivot_row], m[rank]
        p = m[rank][col]
        for r in range(rank + 1, len(m)):
            factor = m[r][col]
            for c in range(col, ncols):
                num = p * m[r][c] - factor * m[rank][c]
                q, rem = divmod(num, prev)
                if rem != 0:
                    raise AssertionError("fraction-free elimination lost exactness")
                m[r][c] = q
        prev = p
        rank += 1
    return rank
