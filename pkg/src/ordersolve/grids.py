"""Interval-valued functions sampled on uniform grids over open boxes.

A grid function stores one closed interval per interior lattice node plus a
boolean "dense" mask.  Masked nodes carry reliable values; the unmasked
complement is the discrete stand-in for a closed, nowhere dense singular set
and may hold arbitrary placeholder values.  The discrete density criterion:
the unmasked set must not contain any full grid cell (a 2 x ... x 2 block of
adjacent nodes).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .intervals import Interval


class DomainMismatchError(ValueError):
    """Two grid functions live on different grids."""


class MaskDensityError(ValueError):
    """A node set meant to be nowhere dense covers a whole grid cell."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with finite corners, lower < upper componentwise."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box corners must be nonempty and of equal length")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ValueError("box corners must be finite")
            if not a < b:
                raise ValueError(f"box requires lower < upper, got [{a}, {b}]")

    @property
    def dims(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (a + b) for a, b in zip(self.lower, self.upper))

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def diagonal(self) -> float:
        return float(np.hypot.reduce([b - a for a, b in zip(self.lower, self.upper)]))

    def contains(self, point) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lower, point, self.upper))

    def split(self, axis: int) -> tuple["Box", "Box"]:
        mid = 0.5 * (self.lower[axis] + self.upper[axis])
        lo1 = list(self.upper)
        lo1[axis] = mid
        hi0 = list(self.upper)
        hi0[axis] = mid
        left = Box(self.lower, tuple(hi0))
        lo = list(self.lower)
        lo[axis] = mid
        right = Box(tuple(lo), self.upper)
        return left, right


@dataclass(frozen=True)
class GridDomain:
    """Uniform lattice of interior nodes of an open box in R^n, n <= 3.

    The box faces themselves carry no nodes: axis i holds resolution[i] nodes
    at lower[i] + k*h_i for k = 1..resolution[i], with spacing
    h_i = (upper[i] - lower[i]) / (resolution[i] + 1).
    """

    box: Box
    resolution: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "resolution", res)
        if self.box.dims > 3:
            raise ValueError("grids support at most 3 dimensions")
        if len(res) != self.box.dims:
            raise ValueError("resolution length must match box dimension")
        if any(r < 3 for r in res):
            raise ValueError("need at least 3 nodes per axis")

    @property
    def dims(self) -> int:
        return self.box.dims

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (r + 1)
            for a, b, r in zip(self.box.lower, self.box.upper, self.resolution)
        )

    def axis_coords(self, axis: int) -> np.ndarray:
        a = self.box.lower[axis]
        h = self.spacing[axis]
        return a + h * np.arange(1, self.resolution[axis] + 1)

    def coords(self) -> list[np.ndarray]:
        """Node coordinates as an 'ij'-indexed meshgrid, one array per axis."""
        axes = [self.axis_coords(i) for i in range(self.dims)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """All node coordinates as a (node_count, dims) array, row-major order."""
        grids = self.coords()
        return np.stack([g.ravel() for g in grids], axis=-1)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))


def _full_cell_blocks(flags: np.ndarray) -> np.ndarray:
    """Per grid cell, whether all 2^n corner nodes have ``flags`` set."""
    out = None
    n = flags.ndim
    for offsets in itertools.product((0, 1), repeat=n):
        view = flags[tuple(slice(o, flags.shape[i] - 1 + o) for i, o in enumerate(offsets))]
        out = view if out is None else out & view
    return out


def mask_is_dense(mask: np.ndarray) -> bool:
    """True when the unmasked complement contains no full grid cell."""
    return not bool(_full_cell_blocks(~np.asarray(mask, bool)).any())


def set_is_nowhere_dense(node_set: np.ndarray) -> bool:
    """True when the node set contains no full grid cell."""
    return not bool(_full_cell_blocks(np.asarray(node_set, bool)).any())


class GridIntervalFunction:
    """Interval values [lo, hi] per node plus a dense-subset mask.

    Immutable after construction; the backing arrays are write-locked.
    """

    __slots__ = ("domain", "lo", "hi", "dense_mask")

    def __init__(self, domain: GridDomain, lo, hi, dense_mask=None):
        lo = np.array(lo, dtype=float)
        hi = np.array(hi, dtype=float)
        if lo.shape != domain.shape or hi.shape != domain.shape:
            raise ValueError(f"value arrays must have shape {domain.shape}")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("NaN endpoints are not representable")
        if (lo > hi).any():
            raise ValueError("lo > hi at some node")
        if dense_mask is None:
            mask = np.ones(domain.shape, dtype=bool)
        else:
            mask = np.array(dense_mask, dtype=bool)
            if mask.shape != domain.shape:
                raise ValueError(f"mask must have shape {domain.shape}")
        if not mask_is_dense(mask):
            raise MaskDensityError("unmasked node set contains a full grid cell")
        for arr in (lo, hi, mask):
            arr.flags.writeable = False
        self.domain = domain
        self.lo = lo
        self.hi = hi
        self.dense_mask = mask

    @classmethod
    def from_point_values(cls, domain: GridDomain, values, dense_mask=None):
        values = np.asarray(values, dtype=float)
        return cls(domain, values, values, dense_mask)

    @classmethod
    def constant(cls, domain: GridDomain, interval: Interval, dense_mask=None):
        lo = np.full(domain.shape, interval.lo)
        hi = np.full(domain.shape, interval.hi)
        return cls(domain, lo, hi, dense_mask)

    def value_at(self, index) -> Interval:
        return Interval(float(self.lo[index]), float(self.hi[index]))

    def widths(self) -> np.ndarray:
        """Nodewise hi - lo with equal endpoints (even infinite) giving 0."""
        return np.where(self.lo == self.hi, 0.0, self.hi - self.lo)

    def is_degenerate_on_mask(self) -> bool:
        return bool((self.lo[self.dense_mask] == self.hi[self.dense_mask]).all())

    def is_degenerate(self) -> bool:
        return bool((self.lo == self.hi).all())

    def same_values(self, other: "GridIntervalFunction") -> bool:
        """Exact nodewise equality of both endpoint arrays."""
        return (
            self.domain == other.domain
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )


def _require_same_domain(f: GridIntervalFunction, g: GridIntervalFunction):
    if f.domain != g.domain:
        raise DomainMismatchError("grid functions live on different domains")


def pointwise_leq(f: GridIntervalFunction, g: GridIntervalFunction) -> bool:
    """Componentwise interval order at every node (mask ignored)."""
    _require_same_domain(f, g)
    return bool((f.lo <= g.lo).all() and (f.hi <= g.hi).all())


def _combined_mask(u: GridIntervalFunction, v: GridIntervalFunction) -> np.ndarray:
    for name, fn in (("first", u), ("second", v)):
        if not fn.is_degenerate_on_mask():
            raise ValueError(f"{name} argument is not point-valued on its dense mask")
    combined = u.dense_mask & v.dense_mask
    if not mask_is_dense(combined):
        raise MaskDensityError(
            "combined unmasked set contains a full grid cell; "
            "the excluded sets are not jointly nowhere dense at this resolution"
        )
    return combined


def nd_equivalent(u: GridIntervalFunction, v: GridIntervalFunction, tol: float = 0.0) -> bool:
    """Equality off a jointly nowhere dense excluded set.

    Both functions must be point-valued on their masks; they are compared on
    the intersection of the masks, exactly by default (``tol`` admits
    floating-point pipelines).
    """
    _require_same_domain(u, v)
    m = _combined_mask(u, v)
    if tol == 0.0:
        return bool((u.lo[m] == v.lo[m]).all() and (u.hi[m] == v.hi[m]).all())
    return bool(
        (np.abs(u.lo[m] - v.lo[m]) <= tol).all()
        and (np.abs(u.hi[m] - v.hi[m]) <= tol).all()
    )


def nd_leq(u: GridIntervalFunction, v: GridIntervalFunction, tol: float = 0.0) -> bool:
    """Componentwise order off a jointly nowhere dense excluded set."""
    _require_same_domain(u, v)
    m = _combined_mask(u, v)
    return bool((u.lo[m] <= v.lo[m] + tol).all() and (u.hi[m] <= v.hi[m] + tol).all())


def restrict_to_mask(f: GridIntervalFunction, mask) -> GridIntervalFunction:
    """Same values with the dense mask replaced by the conjunction of masks."""
    mask = np.asarray(mask, bool)
    return GridIntervalFunction(f.domain, f.lo, f.hi, f.dense_mask & mask)


@dataclass(frozen=True)
class SkeletonSet:
    """Finite union of axis-aligned hyperplanes {x_axis = coord} clipped to a box.

    Thickness zero by construction, hence Lebesgue measure zero; finitely many
    planes per compact box.
    """

    planes: tuple[tuple[int, float], ...]

    def __post_init__(self):
        canon = tuple(sorted({(int(a), float(c)) for a, c in self.planes}))
        object.__setattr__(self, "planes", canon)

    @property
    def plane_count(self) -> int:
        return len(self.planes)

    def merge(self, other: "SkeletonSet") -> "SkeletonSet":
        return SkeletonSet(self.planes + other.planes)

    def node_mask(self, domain: GridDomain) -> np.ndarray:
        """Mask that is False at nodes within half a cell of some plane."""
        mask = np.ones(domain.shape, dtype=bool)
        h = domain.spacing
        for axis, coord in self.planes:
            if axis >= domain.dims:
                raise ValueError(f"plane axis {axis} outside domain dimension")
            near = np.abs(domain.axis_coords(axis) - coord) <= 0.5 * h[axis]
            idx = [None] * domain.dims
            idx[axis] = slice(None)
            shaped = near[tuple(idx)] if domain.dims > 1 else near
            mask &= ~shaped
        return mask


def _fmt(x: float) -> str:
    if x == np.inf:
        return "+inf"
    if x == -np.inf:
        return "-inf"
    return repr(float(x))


def write_grid_function(f: GridIntervalFunction, path):
    """Plain-text format: header (dims, corners, resolution) then one
    row-major record "lo hi maskbit" per node."""
    d = f.domain
    lines = [
        "gridfn 1",
        f"dims {d.dims}",
        "lower " + " ".join(repr(v) for v in d.box.lower),
        "upper " + " ".join(repr(v) for v in d.box.upper),
        "resolution " + " ".join(str(r) for r in d.resolution),
    ]
    for lo, hi, m in zip(f.lo.ravel(), f.hi.ravel(), f.dense_mask.ravel()):
        lines.append(f"{_fmt(lo)} {_fmt(hi)} {1 if m else 0}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid_function(path) -> GridIntervalFunction:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split() != ["gridfn", "1"]:
        raise ValueError(f"{path}: not a gridfn v1 file")

    def field(i, key):
        parts = lines[i].split()
        if parts[0] != key:
            raise ValueError(f"{path}: expected '{key}' on line {i + 1}")
        return parts[1:]

    dims = int(field(1, "dims")[0])
    lower = tuple(float(v) for v in field(2, "lower"))
    upper = tuple(float(v) for v in field(3, "upper"))
    resolution = tuple(int(v) for v in field(4, "resolution"))
    if len(lower) != dims or len(upper) != dims or len(resolution) != dims:
        raise ValueError(f"{path}: header lengths do not match dims={dims}")
    domain = GridDomain(Box(lower, upper), resolution)
    n = domain.node_count
    records = lines[5:]
    if len(records) != n:
        raise ValueError(f"{path}: expected {n} records, found {len(records)}")
    lo = np.empty(n)
    hi = np.empty(n)
    mask = np.empty(n, dtype=bool)
    for i, rec in enumerate(records):
        parts = rec.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: bad record on line {i + 6}: {rec!r}")
        lo[i] = float(parts[0])
        hi[i] = float(parts[1])
        mask[i] = parts[2] == "1"
    shape = domain.shape
    return GridIntervalFunction(domain, lo.reshape(shape), hi.reshape(shape), mask.reshape(shape))
