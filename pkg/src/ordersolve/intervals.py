"""Closed intervals over the extended reals and their componentwise order.

Scalars are IEEE floats: ``-inf`` and ``+inf`` are first-class endpoint
values, NaN is rejected at every constructor.  Only the order structure is
provided (join, meet, width); there is deliberately no interval arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


def ext_real(value: float) -> float:
    """Coerce to an extended real; NaN is not representable."""
    x = float(value)
    if math.isnan(x):
        raise ValueError("NaN is not an extended real")
    return x


def ext_width(lo: float, hi: float) -> float:
    """hi - lo, with equal endpoints (including equal infinities) giving 0."""
    if lo == hi:
        return 0.0
    return hi - lo


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with extended-real endpoints.

    A degenerate interval (lo == hi) stands for the point lo.  Construction
    with lo > hi is an error, never a silent swap.
    """

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", ext_real(self.lo))
        object.__setattr__(self, "hi", ext_real(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value)

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __le__(self, other: "Interval") -> bool:
        return leq(self, other)

    def __ge__(self, other: "Interval") -> bool:
        return leq(other, self)

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


def leq(a: Interval, b: Interval) -> bool:
    """Componentwise partial order: a.lo <= b.lo and a.hi <= b.hi."""
    return a.lo <= b.lo and a.hi <= b.hi


def join(a: Interval, b: Interval) -> Interval:
    """Least upper bound under ``leq`` (componentwise max)."""
    return Interval(max(a.lo, b.lo), max(a.hi, b.hi))


def meet(a: Interval, b: Interval) -> Interval:
    """Greatest lower bound under ``leq`` (componentwise min)."""
    return Interval(min(a.lo, b.lo), min(a.hi, b.hi))


def width(a: Interval) -> float:
    """Gap hi - lo; 0 for degenerate intervals, +inf for half/fully infinite ones."""
    return ext_width(a.lo, a.hi)


def _endpoint_out(x: float):
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    return x


def _endpoint_in(v) -> float:
    if isinstance(v, str):
        s = v.strip()
        if s in ("+inf", "inf"):
            return INF
        if s == "-inf":
            return -INF
        return ext_real(float(s))
    return ext_real(v)


def interval_to_json(a: Interval) -> list:
    """Two-element array; infinite endpoints are spelled "-inf"/"+inf"."""
    return [_endpoint_out(a.lo), _endpoint_out(a.hi)]


def interval_from_json(data) -> Interval:
    if len(data) != 2:
        raise ValueError(f"interval serialization must have two entries, got {data!r}")
    return Interval(_endpoint_in(data[0]), _endpoint_in(data[1]))
