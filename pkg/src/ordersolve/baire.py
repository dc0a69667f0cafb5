"""Semicontinuous envelope operators and the interval-function calculus.

The lower/upper Baire operators are realized on grids with closed Chebyshev
node balls of radius d = 0, 1, 2, ... cells: at each node the ball grows from
the node itself until it meets the dense set D, and the envelope takes the
extreme of the reliable endpoint values over that smallest nonempty ball.
With this family, graph completion is exactly idempotent and restricts to the
identity on nodes of D, which is what the Hausdorff-continuity and
dense-determination checks below rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grids import (
    GridIntervalFunction,
    MaskDensityError,
    mask_is_dense,
    set_is_nowhere_dense,
)


class EmptyDenseSetError(ValueError):
    """No dense node available within the whole grid extent."""


def _resolve_mask(f: GridIntervalFunction, dense_mask) -> np.ndarray:
    if dense_mask is None:
        return f.dense_mask
    mask = np.asarray(dense_mask, bool)
    if mask.shape != f.domain.shape:
        raise ValueError("dense mask has wrong shape")
    if not mask_is_dense(mask):
        raise MaskDensityError("dense mask excludes a full grid cell")
    return mask


def _envelope(values: np.ndarray, dense: np.ndarray, minimize: bool) -> np.ndarray:
    """Extreme of ``values`` over the smallest ball around each node meeting
    the dense set; boundary balls are clipped, never padded."""
    fill = np.inf if minimize else -np.inf
    filt = ndimage.minimum_filter if minimize else ndimage.maximum_filter
    masked = np.where(dense, values, fill)
    out = masked.copy()
    resolved = dense.copy()
    radius = 1
    max_radius = max(values.shape)
    while not resolved.all():
        if radius > max_radius:
            raise EmptyDenseSetError("dense set is empty on the grid")
        size = 2 * radius + 1
        extreme = filt(masked, size=size, mode="constant", cval=fill)
        reachable = ndimage.maximum_filter(
            dense.astype(np.uint8), size=size, mode="constant", cval=0
        ).astype(bool)
        newly = ~resolved & reachable
        out[newly] = extreme[newly]
        resolved |= newly
        radius += 1
    return out


def baire_lower(f: GridIntervalFunction, dense_mask=None) -> GridIntervalFunction:
    """Lower envelope: smallest-ball infimum of the lo endpoints over the
    dense set.  Point-valued output carrying the same dense mask."""
    mask = _resolve_mask(f, dense_mask)
    vals = _envelope(f.lo, mask, minimize=True)
    return GridIntervalFunction.from_point_values(f.domain, vals, mask)


def baire_upper(f: GridIntervalFunction, dense_mask=None) -> GridIntervalFunction:
    """Upper envelope: smallest-ball supremum of the hi endpoints (dual of
    :func:`baire_lower`)."""
    mask = _resolve_mask(f, dense_mask)
    vals = _envelope(f.hi, mask, minimize=False)
    return GridIntervalFunction.from_point_values(f.domain, vals, mask)


def graph_completion(f: GridIntervalFunction, dense_mask=None) -> GridIntervalFunction:
    """Interval function [lower envelope, upper envelope] nodewise."""
    mask = _resolve_mask(f, dense_mask)
    lo = _envelope(f.lo, mask, minimize=True)
    hi = _envelope(f.hi, mask, minimize=False)
    return GridIntervalFunction(f.domain, lo, hi, mask)


@dataclass(frozen=True)
class BaireResult:
    """Lower/upper envelopes and their pairing into the completed function."""

    lower: GridIntervalFunction
    upper: GridIntervalFunction
    completed: GridIntervalFunction


def complete_with_envelopes(f: GridIntervalFunction, dense_mask=None) -> BaireResult:
    mask = _resolve_mask(f, dense_mask)
    lower = baire_lower(f, mask)
    upper = baire_upper(f, mask)
    completed = GridIntervalFunction(f.domain, lower.lo, upper.hi, mask)
    return BaireResult(lower, upper, completed)


def is_h_continuous(f: GridIntervalFunction) -> bool:
    """Minimality test: both extreme endpoint selections re-complete to f.

    Any selection inside f is sandwiched between the lo- and hi-endpoint
    selections, and completion is monotone, so the two extremes decide.
    Completion is taken over f's own dense mask.
    """
    mask = f.dense_mask
    for sel in (f.lo, f.hi):
        g = GridIntervalFunction.from_point_values(f.domain, sel, mask)
        if not graph_completion(g, mask).same_values(f):
            return False
    return True


def is_nearly_finite(f: GridIntervalFunction) -> bool:
    """H-continuous f is nearly finite when its non-finite node set is
    discretely nowhere dense (leaves no full grid cell)."""
    finite = np.isfinite(f.lo) & np.isfinite(f.hi)
    return set_is_nowhere_dense(~finite)


@dataclass(frozen=True)
class DiscontinuityReport:
    """Width-threshold structure of an interval-valued grid function.

    ``nodes`` flags every node with a non-degenerate value; ``thresholds``
    maps eps to the node set of width >= eps.  On a finite grid every node
    set is topologically closed; the ``closed`` verdict certifies the
    definitional identity of each threshold set (an upper-semicontinuity
    proxy), while ``nowhere_dense`` certifies that no full grid cell is
    covered.
    """

    widths: np.ndarray
    nodes: np.ndarray
    eps_list: tuple[float, ...]
    thresholds: dict
    nowhere_dense: dict
    closed: dict
    max_width: dict

    def node_count(self, eps: float) -> int:
        return int(self.thresholds[eps].sum())

    def all_nowhere_dense(self) -> bool:
        return all(self.nowhere_dense.values())

    def all_closed(self) -> bool:
        return all(self.closed.values())

    def to_text(self) -> str:
        lines = [
            "discontinuity report",
            f"nondegenerate_nodes {int(self.nodes.sum())}",
        ]
        for eps in self.eps_list:
            nd = "yes" if self.nowhere_dense[eps] else "NO"
            cl = "yes" if self.closed[eps] else "NO"
            mw = self.max_width[eps]
            lines.append(
                f"eps {eps!r} nodes {self.node_count(eps)} "
                f"nowhere_dense {nd} closed {cl} max_width {mw!r}"
            )
        return "\n".join(lines) + "\n"


def is_discretely_closed(node_set: np.ndarray, widths: np.ndarray, eps: float) -> bool:
    """Whether a reported threshold set coincides with {width >= eps} exactly.

    On a finite grid every node set is topologically closed; what can fail is
    a reported set missing nodes that meet its own defining threshold (or
    holding extras that do not).  Both inclusions are certified.
    """
    node_set = np.asarray(node_set, bool)
    return bool((widths[~node_set] < eps).all() and (widths[node_set] >= eps).all())


def discontinuity_report(f: GridIntervalFunction, eps_list) -> DiscontinuityReport:
    """Per-eps width-threshold node sets with nowhere-density verdicts."""
    eps_list = tuple(sorted({float(e) for e in eps_list}, reverse=True))
    if any(e <= 0 for e in eps_list):
        raise ValueError("thresholds must be positive")
    widths = f.widths()
    nodes = widths > 0
    thresholds = {}
    nowhere_dense = {}
    closed = {}
    max_width = {}
    for eps in eps_list:
        s = widths >= eps
        thresholds[eps] = s
        nowhere_dense[eps] = set_is_nowhere_dense(s)
        closed[eps] = is_discretely_closed(s, widths, eps)
        max_width[eps] = float(widths[s].max()) if s.any() else 0.0
    return DiscontinuityReport(
        widths=widths,
        nodes=nodes,
        eps_list=eps_list,
        thresholds=thresholds,
        nowhere_dense=nowhere_dense,
        closed=closed,
        max_width=max_width,
    )


def assimilate(u: GridIntervalFunction) -> GridIntervalFunction:
    """Embed point-valued data with a nowhere dense singular set into the
    interval-valued functions by graph completion over the data's own mask.

    The input must be degenerate and finite at masked nodes; the output is
    H-continuous and nearly finite by construction, and depends only on the
    reliable values, so equivalent inputs produce identical outputs.
    """
    m = u.dense_mask
    if not u.is_degenerate_on_mask():
        raise ValueError("input must be point-valued on its dense mask")
    if not np.isfinite(u.lo[m]).all():
        raise ValueError("input must be finite on its dense mask")
    return graph_completion(u, m)


def dense_determination_check(
    f: GridIntervalFunction, g: GridIntervalFunction, dense_mask
) -> bool:
    """Instance check that agreement on a dense set determines the function.

    If f and g disagree at some node of the dense set the premise is vacuous
    and the check passes.  Otherwise both are re-completed from the dense set
    alone and compared exactly: the completions coincide because they only
    consume the shared reliable values.
    """
    mask = np.asarray(dense_mask, bool)
    if not mask_is_dense(mask):
        raise MaskDensityError("dense mask excludes a full grid cell")
    agree = (f.lo[mask] == g.lo[mask]).all() and (f.hi[mask] == g.hi[mask]).all()
    if not agree:
        return True
    rf = graph_completion(f, mask)
    rg = graph_completion(g, mask)
    return rf.same_values(rg)
