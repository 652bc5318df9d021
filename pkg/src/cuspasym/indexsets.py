"""Index sets for polyhomogeneous expansions.

An index set prescribes which terms x^z (log x)^k may occur in an
asymptotic expansion at x = 0.  Sets are kept closed under the two
generation rules

    (z, k) present  =>  (z + p, k) present for every integer p >= 1,
    (z, k) present  =>  (z, j) present for every 0 <= j <= k,

and enumerated only up to a finite cutoff order, since the full sets are
infinite.  Exponents are exact ``fractions.Fraction`` values whenever the
input data is rational and stays rational, and floats otherwise; float
exponents are compared with an absolute tolerance so that coincidence
decisions (which drive log-term stacking) are not corrupted by roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Union

Exponent = Union[Fraction, float]

#: Tolerance for deciding that two float exponents coincide.
EXPONENT_TOL = 1e-12


def as_exponent(value) -> Exponent:
    """Normalize a number to an exact Fraction when possible, else float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"exponent must be finite, got {value!r}")
    return value


def is_exact(value: Exponent) -> bool:
    return isinstance(value, Fraction)


def exponents_equal(a: Exponent, b: Exponent) -> bool:
    """Exact comparison on rationals, tolerance comparison otherwise."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= EXPONENT_TOL


def exponent_gt(a, b) -> bool:
    """Strict a > b, treating within-tolerance float values as equal."""
    a, b = as_exponent(a), as_exponent(b)
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a > b
    if abs(float(a) - float(b)) <= EXPONENT_TOL:
        return False
    return float(a) > float(b)


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if q < 0:
        raise ValueError("rational_sqrt requires a nonnegative argument")
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class IndexTerm:
    """One admissible term x^z (log x)^k: exponent z and log power k >= 0."""

    z: Exponent
    k: int

    def __post_init__(self):
        object.__setattr__(self, "z", as_exponent(self.z))
        if not isinstance(self.k, int) or self.k < 0:
            raise ValueError(f"log power k must be a nonnegative integer, got {self.k!r}")

    def sort_key(self):
        return (float(self.z), self.k)


def _canonical_terms(terms: Iterable[IndexTerm]) -> tuple[IndexTerm, ...]:
    """Sort, merge exponents that coincide within tolerance, and dedup."""
    items = sorted(terms, key=IndexTerm.sort_key)
    # Cluster exponents by a left-to-right sweep; exact values win as the
    # cluster representative so downstream arithmetic stays rational.
    reps: list[Exponent] = []
    out: dict[tuple[int, int], IndexTerm] = {}
    for tm in items:
        for i, rep in enumerate(reps):
            if exponents_equal(rep, tm.z):
                if is_exact(tm.z) and not is_exact(rep):
                    reps[i] = tm.z
                    # re-key existing terms of this cluster
                    for (ci, k), old in list(out.items()):
                        if ci == i:
                            out[(ci, k)] = IndexTerm(tm.z, k)
                cluster = i
                break
        else:
            reps.append(tm.z)
            cluster = len(reps) - 1
        out.setdefault((cluster, tm.k), IndexTerm(reps[cluster], tm.k))
    return tuple(sorted(out.values(), key=IndexTerm.sort_key))


@dataclass(frozen=True)
class IndexSet:
    """A finite enumeration of admissible (z, k) pairs up to a cutoff order.

    ``terms`` is the canonical sorted enumeration.  Sets produced by
    :func:`closure`, :func:`extended_union` and the indicial-root machinery
    satisfy both closure rules up to the cutoff; the raw pole enumeration
    (see ``index_set_Eplus``) is deliberately not closed and says so.
    """

    terms: tuple[IndexTerm, ...]
    cutoff: Exponent

    def __post_init__(self):
        object.__setattr__(self, "cutoff", as_exponent(self.cutoff))
        object.__setattr__(self, "terms", _canonical_terms(self.terms))
        for tm in self.terms:
            if exponent_gt(tm.z, self.cutoff):
                raise ValueError(
                    f"term {tm} exceeds the enumeration cutoff {self.cutoff}")

    @classmethod
    def from_pairs(cls, pairs, cutoff) -> "IndexSet":
        return cls(tuple(IndexTerm(as_exponent(z), int(k)) for z, k in pairs), cutoff)

    def __iter__(self) -> Iterator[IndexTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def contains(self, z, k: int) -> bool:
        z = as_exponent(z)
        return any(tm.k == k and exponents_equal(tm.z, z) for tm in self.terms)

    def pairs(self) -> list[tuple[float, int]]:
        return [(float(tm.z), tm.k) for tm in self.terms]

    def is_closed(self) -> bool:
        """Check both closure rules on the enumeration up to the cutoff."""
        for tm in self.terms:
            if tm.k > 0 and not self.contains(tm.z, tm.k - 1):
                return False
            shifted = tm.z + 1
            if not exponent_gt(shifted, self.cutoff) and not self.contains(shifted, tm.k):
                return False
        return True

    def generators(self) -> tuple[IndexTerm, ...]:
        """Minimal terms: those not implied by another term via the rules."""
        gens = []
        for tm in self.terms:
            if self.contains(tm.z - 1, tm.k):
                continue
            if self.contains(tm.z, tm.k + 1):
                continue
            gens.append(tm)
        return tuple(gens)

    def to_json_dict(self) -> dict:
        return {
            "cutoff": float(self.cutoff),
            "terms": [{"z": float(tm.z), "k": tm.k} for tm in self.terms],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "IndexSet":
        terms = tuple(IndexTerm(as_exponent(item["z"]), int(item["k"]))
                      for item in data["terms"])
        return cls(terms, as_exponent(data["cutoff"]))


def closure(terms: Iterable[IndexTerm], cutoff) -> IndexSet:
    """Smallest index set containing ``terms``, enumerated up to ``cutoff``.

    Applies both generation rules exhaustively: integer upward shifts of the
    exponent until the cutoff is passed, and all lower log powers.
    """
    cutoff = as_exponent(cutoff)
    out: list[IndexTerm] = []
    for tm in terms:
        z = tm.z
        p = 0
        while not exponent_gt(z + p, cutoff):
            for j in range(tm.k + 1):
                out.append(IndexTerm(z + p, j))
            p += 1
    return IndexSet(tuple(out), cutoff)


def extended_union(E: IndexSet, F: IndexSet) -> IndexSet:
    """Union of two index sets plus log-stacked terms at shared exponents.

    Wherever an exponent z occurs in both sets, with log powers l1 and l2,
    the term (z, l1 + l2 + 1) is added; the result is re-closed up to the
    common cutoff.  Commutative, and always contains the plain union.
    """
    if not exponents_equal(E.cutoff, F.cutoff):
        raise ValueError(
            f"extended_union requires a common cutoff, got {E.cutoff} and {F.cutoff}")
    stacked = []
    for te in E.terms:
        for tf in F.terms:
            if exponents_equal(te.z, tf.z):
                z = te.z if is_exact(te.z) else tf.z
                stacked.append(IndexTerm(z, te.k + tf.k + 1))
    return closure(tuple(E.terms) + tuple(F.terms) + tuple(stacked), E.cutoff)
