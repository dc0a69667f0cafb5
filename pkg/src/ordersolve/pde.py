"""Problem definitions for nonlinear PDEs F(x, u, ..., D^p u, ...) = f.

Jets collect a function's value and partial derivatives up to a given order;
polynomials are carried in Taylor form around a center with exact symbolic
derivative evaluation (no finite differencing).  Evaluators are pure and
vectorized: F(points, jets) and f(points) map (k, n) and (k, d) arrays to
(k,) arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import catalog
from .grids import Box
from .intervals import Interval


class ProblemFileError(ValueError):
    """Malformed problem file; the message carries the line number."""


@dataclass(frozen=True)
class MultiIndexSet:
    """All p in N^n with |p| <= m, graded-lexicographically ordered.

    The zero index (the function-value slot) always comes first; the count is
    C(n + m, m).
    """

    dims: int
    order: int
    indices: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dimension must be at least 1")
        if self.order < 0:
            raise ValueError("order must be nonnegative")
        ranges = itertools.product(range(self.order + 1), repeat=self.dims)
        idx = sorted((p for p in ranges if sum(p) <= self.order), key=lambda p: (sum(p), p))
        object.__setattr__(self, "indices", tuple(idx))

    def __len__(self) -> int:
        return len(self.indices)

    def position(self, p: tuple[int, ...]) -> int:
        return self.indices.index(tuple(p))

    def column_map(self) -> dict:
        return {p: i for i, p in enumerate(self.indices)}

    @property
    def pivot(self) -> tuple[int, ...]:
        """Highest-order pure derivative along the first axis (the default
        coordinate for one-dimensional root solving)."""
        p = [0] * self.dims
        p[0] = self.order
        return tuple(p)


@dataclass(frozen=True)
class Jet:
    """Value and partial derivatives aligned with a multi-index set."""

    midx: MultiIndexSet
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(self.midx):
            raise ValueError(f"jet needs {len(self.midx)} entries, got {len(vals)}")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, p) -> float:
        return self.values[self.midx.position(p)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, float)


def _factorial_prod(p: tuple[int, ...]) -> float:
    out = 1.0
    for k in p:
        out *= math.factorial(k)
    return out


@dataclass(frozen=True)
class Polynomial:
    """Taylor-form polynomial around a center point.

    ``partials[p]`` is the exact derivative D^p P(center); evaluation and
    derivatives use the factorial-weighted monomial expansion, so the jet at
    the center reproduces the stored data bit-exactly.
    """

    center: tuple[float, ...]
    midx: MultiIndexSet
    partials: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        vals = tuple(float(v) for v in self.partials)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "partials", vals)
        if len(c) != self.midx.dims:
            raise ValueError("center dimension mismatch")
        if len(vals) != len(self.midx):
            raise ValueError(f"need {len(self.midx)} coefficients, got {len(vals)}")

    @classmethod
    def from_jet(cls, center, jet: Jet) -> "Polynomial":
        return cls(tuple(center), jet.midx, jet.values)

    @classmethod
    def constant(cls, center, value: float, dims: int = None) -> "Polynomial":
        dims = len(center) if dims is None else dims
        return cls(tuple(center), MultiIndexSet(dims, 0), (value,))

    def derivative_values(self, points: np.ndarray, q: tuple[int, ...]) -> np.ndarray:
        """Exact D^q P at an array of points of shape (k, n)."""
        points = np.atleast_2d(np.asarray(points, float))
        dx = points - np.asarray(self.center)
        out = np.zeros(points.shape[0])
        for p, coeff in zip(self.midx.indices, self.partials):
            if coeff == 0.0 or any(pi < qi for pi, qi in zip(p, q)):
                continue
            term = np.full(points.shape[0], coeff / _factorial_prod(tuple(pi - qi for pi, qi in zip(p, q))))
            for axis, (pi, qi) in enumerate(zip(p, q)):
                if pi - qi:
                    term = term * dx[:, axis] ** (pi - qi)
            out += term
        return out

    def evaluate(self, points) -> np.ndarray:
        return self.derivative_values(points, (0,) * self.midx.dims)

    def jet_table(self, points, midx: MultiIndexSet = None) -> np.ndarray:
        """Jets at many points: array of shape (k, len(midx))."""
        midx = midx or self.midx
        points = np.atleast_2d(np.asarray(points, float))
        cols = [self.derivative_values(points, q) for q in midx.indices]
        return np.stack(cols, axis=-1)

    def jet_at(self, point, midx: MultiIndexSet = None) -> Jet:
        midx = midx or self.midx
        table = self.jet_table(np.asarray(point, float).reshape(1, -1), midx)
        return Jet(midx, tuple(table[0]))


def poly_jet_at(polynomial: Polynomial, point, midx: MultiIndexSet = None) -> Jet:
    """Exact derivatives D^p P(point) for every p in the index set."""
    return polynomial.jet_at(point, midx)


@dataclass(frozen=True)
class PdeProblem:
    """Domain box, jet layout, and the two evaluators of the equation.

    ``operator(points, jets)`` and ``rhs(points)`` must be pure, total on the
    closed box, and vectorized over the leading axis.
    """

    domain: Box
    midx: MultiIndexSet
    operator: Callable
    rhs: Callable

    def __post_init__(self):
        if self.domain.dims != self.midx.dims:
            raise ValueError("domain and multi-index dimensions differ")

    @property
    def dims(self) -> int:
        return self.midx.dims

    def rhs_at(self, points) -> np.ndarray:
        return np.asarray(self.rhs(np.atleast_2d(np.asarray(points, float))), float)


def apply_operator(problem: PdeProblem, polynomial: Polynomial, point) -> float:
    """Evaluate the differential operator induced by F on the polynomial's jet."""
    pts = np.asarray(point, float).reshape(1, -1)
    table = polynomial.jet_table(pts, problem.midx)
    return float(np.asarray(problem.operator(pts, table), float)[0])


def apply_operator_many(problem: PdeProblem, polynomial: Polynomial, points) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, float))
    table = polynomial.jet_table(points, problem.midx)
    return np.asarray(problem.operator(points, table), float)


@dataclass(frozen=True)
class RangeEnclosure:
    """Inner enclosure of the attainable operator values at a fixed point.

    The interval is a sampled [min, max] and therefore contained in the true
    attainable range; the flags mark sides that kept growing when the
    sampling box was last doubled.
    """

    lo: float
    hi: float
    lo_unbounded: bool
    hi_unbounded: bool
    steps: tuple[tuple[float, float], ...]

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)


_GROWTH = 0.01


def range_probe(
    problem: PdeProblem,
    point,
    budget: int = 8,
    samples_per_step: int = 512,
    seed: int = 0,
) -> RangeEnclosure:
    """Sample jets over an expanding box [-K, K]^d, K doubling per step.

    The zero jet and axis sweeps are always included, so ranges touching
    F(x, 0) are enclosed exactly; enclosures are nested as the budget grows.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    d = len(problem.midx)
    pts = np.asarray(point, float).reshape(1, -1)
    lo = math.inf
    hi = -math.inf
    steps = []
    for step in range(budget):
        k_box = 2.0**step
        rng = np.random.default_rng((seed, step))
        blocks = [np.zeros((1, d))]
        sweep = np.linspace(-k_box, k_box, 33)
        for axis in range(d):
            block = np.zeros((sweep.size, d))
            block[:, axis] = sweep
            blocks.append(block)
        blocks.append(rng.uniform(-k_box, k_box, size=(samples_per_step, d)))
        jets = np.concatenate(blocks, axis=0)
        x = np.broadcast_to(pts, (jets.shape[0], pts.shape[1]))
        values = np.asarray(problem.operator(x, jets), float)
        if np.isnan(values).any():
            raise ValueError("operator returned NaN during range probing")
        lo = min(lo, float(values.min()))
        hi = max(hi, float(values.max()))
        steps.append((lo, hi))
    if len(steps) >= 2:
        (plo, phi), (clo, chi) = steps[-2], steps[-1]
        lo_unbounded = (plo - clo) > _GROWTH * (1.0 + abs(plo))
        hi_unbounded = (chi - phi) > _GROWTH * (1.0 + abs(phi))
    else:
        lo_unbounded = hi_unbounded = False
    return RangeEnclosure(lo, hi, lo_unbounded, hi_unbounded, tuple(steps))


@dataclass(frozen=True)
class RangeVerdict:
    point: tuple[float, ...]
    holds: bool
    rhs_value: float
    enclosure: RangeEnclosure
    margin: float


def check_range_interior(
    problem: PdeProblem,
    points,
    budget: int = 8,
    samples_per_step: int = 512,
    eta: float = None,
    seed: int = 0,
) -> list[RangeVerdict]:
    """Per point, whether the right-hand value sits strictly inside the
    attainable operator range.

    The margin defaults to 1e-6 * (1 + |f(x)|); a side flagged unbounded
    needs no margin on that side.
    """
    points = np.atleast_2d(np.asarray(points, float))
    rhs_values = problem.rhs_at(points)
    out = []
    for row, fx in zip(points, rhs_values):
        enc = range_probe(problem, row, budget=budget, samples_per_step=samples_per_step, seed=seed)
        margin = 1e-6 * (1.0 + abs(float(fx))) if eta is None else float(eta)
        ok_lo = enc.lo_unbounded or fx >= enc.lo + margin
        ok_hi = enc.hi_unbounded or fx <= enc.hi - margin
        out.append(
            RangeVerdict(
                point=tuple(float(v) for v in row),
                holds=bool(ok_lo and ok_hi),
                rhs_value=float(fx),
                enclosure=enc,
                margin=margin,
            )
        )
    return out


def probe_lattice(box: Box, per_axis: int) -> np.ndarray:
    """Interior lattice of probe points, offset half a step from the faces."""
    axes = [
        lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis
        for lo, hi in zip(box.lower, box.upper)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


_PROBLEM_KEYS = ("dimension", "order", "lower", "upper", "operator", "rhs")


def parse_problem_text(text: str, origin: str = "<problem>") -> PdeProblem:
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProblemFileError(f"{origin}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _PROBLEM_KEYS:
            raise ProblemFileError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in fields:
            raise ProblemFileError(f"{origin}:{lineno}: duplicate key {key!r}")
        fields[key] = (value.strip(), lineno)
    missing = [k for k in _PROBLEM_KEYS if k not in fields]
    if missing:
        raise ProblemFileError(f"{origin}: missing keys {missing}")

    def numbers(key, cast):
        value, lineno = fields[key]
        try:
            return [cast(v) for v in value.split()]
        except ValueError as exc:
            raise ProblemFileError(f"{origin}:{lineno}: bad {key}: {exc}") from None

    dims = numbers("dimension", int)
    order = numbers("order", int)
    if len(dims) != 1 or len(order) != 1:
        raise ProblemFileError(f"{origin}: dimension and order must be single integers")
    midx = MultiIndexSet(dims[0], order[0])
    lower = numbers("lower", float)
    upper = numbers("upper", float)
    box = Box(tuple(lower), tuple(upper))
    try:
        operator = catalog.compile_operator(fields["operator"][0], midx.dims, midx.column_map())
    except catalog.CatalogSyntaxError as exc:
        raise ProblemFileError(f"{origin}:{fields['operator'][1]}: {exc}") from None
    try:
        rhs = catalog.compile_rhs(fields["rhs"][0], midx.dims)
    except catalog.CatalogSyntaxError as exc:
        raise ProblemFileError(f"{origin}:{fields['rhs'][1]}: {exc}") from None
    return PdeProblem(domain=box, midx=midx, operator=operator, rhs=rhs)


def read_problem(path) -> PdeProblem:
    """Key-value problem file: dimension, order, lower, upper, operator, rhs."""
    with open(path, encoding="utf-8") as fh:
        return parse_problem_text(fh.read(), origin=str(path))
