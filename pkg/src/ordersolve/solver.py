"""One-sided piecewise-polynomial subsolutions with sampled certificates.

Local step: solve the jet equation F(x0, jet) = f(x0) -/+ eps/2 along a pivot
coordinate, anchor a Taylor polynomial there, and shrink its validity radius
until the one-sided residual inequality holds on a verification lattice.
Global step: bisect the domain box until every box is covered by its own
center patch; the solution is the per-box polynomial off the skeleton of box
faces.  Certificates are sampling-based, never interval-arithmetic rigorous,
and every report header says so.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from . import baire
from .grids import Box, GridDomain, GridIntervalFunction, SkeletonSet
from .pde import Jet, MultiIndexSet, PdeProblem, Polynomial

MIN_EPS = 1e-10
SAFETY_SLACK = 1e-12

DISCLAIMER = "certificate is sampling-based, not interval-arithmetic-rigorous"


class JetBracketError(RuntimeError):
    """No sign change found for the jet equation; the right-hand value may
    sit outside the operator's attainable range."""


class PatchRadiusError(RuntimeError):
    """Patch radius underflow: continuity scale too fine at the given center."""


class AssemblyDepthError(RuntimeError):
    """Box bisection exceeded the depth limit."""


def _bisect(g, lo: float, hi: float, target_tol: float, max_iter: int = 200) -> float:
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gmid = g(mid)
        if abs(gmid) <= target_tol or hi - lo <= 4 * math.ulp(mid):
            return mid
        if (gmid < 0) == (glo < 0):
            lo, glo = mid, gmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_bracket(g, max_doublings: int = 60):
    """Probe t = 0, +1, -1, +2, -2, ... and return the first sign-changing
    pair of neighboring probes in t-order (smallest-|t| root wins)."""
    v0 = g(0.0)
    if v0 == 0.0:
        return 0.0, 0.0
    ts = [0.0]
    vals = [v0]
    step = 1.0
    for _ in range(max_doublings):
        for t in (step, -step):
            v = g(t)
            if math.isnan(v):
                continue
            j = bisect.bisect_left(ts, t)
            for nb in (j - 1, j):
                if 0 <= nb < len(ts) and ((vals[nb] < 0) != (v < 0) or v == 0.0):
                    return (ts[nb], t) if ts[nb] < t else (t, ts[nb])
            ts.insert(j, t)
            vals.insert(j, v)
        step *= 2.0
    return None


def jet_solve(
    problem: PdeProblem,
    x0,
    target: float,
    seed: int = 0,
    multistart: int = 64,
) -> Jet:
    """Jet with F(x0, jet) = target to relative tolerance 1e-10.

    All coordinates are pinned to 0 except a pivot (the highest-order pure
    derivative along the first axis), which is bracketed by outward scanning
    and bisected.  If that coordinate cannot bracket, every other coordinate
    is tried, then seeded random base jets.
    """
    midx = problem.midx
    d = len(midx)
    x = np.asarray(x0, float).reshape(1, -1)
    tol = 1e-10 * (1.0 + abs(target))

    def solve_along(base: np.ndarray, col: int):
        def g(t):
            jet_row = base.copy()
            jet_row[col] = t
            return float(problem.operator(x, jet_row.reshape(1, -1))[0]) - target

        bracket = _scan_bracket(g)
        if bracket is None:
            return None
        root = _bisect(g, bracket[0], bracket[1], tol)
        if abs(g(root)) > tol:
            return None
        jet_row = base.copy()
        jet_row[col] = root
        return jet_row

    pivot_col = midx.position(midx.pivot)
    columns = [pivot_col] + [c for c in range(d) if c != pivot_col]
    for col in columns:
        result = solve_along(np.zeros(d), col)
        if result is not None:
            return Jet(midx, tuple(result))
    rng = np.random.default_rng(seed)
    for trial in range(multistart):
        scale = 2.0 ** (trial % 12)
        base = rng.uniform(-scale, scale, size=d)
        for col in columns:
            result = solve_along(base, col)
            if result is not None:
                return Jet(midx, tuple(result))
    raise JetBracketError(
        f"could not bracket F(x0, jet) = {target} at x0 = {tuple(np.ravel(x0))}"
    )


def _verification_lattice_points(box: Box, per_axis: int) -> np.ndarray:
    axes = [
        lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis
        for lo, hi in zip(box.lower, box.upper)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _lattice_per_axis(dims: int) -> int:
    # at least 3^n * 27 verification points
    return math.ceil((3**dims * 27) ** (1.0 / dims))


def _residuals(problem: PdeProblem, polynomial: Polynomial, points: np.ndarray) -> np.ndarray:
    table = polynomial.jet_table(points, problem.midx)
    return np.asarray(problem.operator(points, table), float) - problem.rhs_at(points)


def _side_bounds(eps: float, side: str, margin_fraction: float) -> tuple[float, float]:
    """Enforced residual window; a margin keeps sampled certificates clear of
    the one-sided boundary so fresh audits stay violation-free."""
    pad = margin_fraction * eps
    if side == "lower":
        return -eps + pad, -pad
    return pad, eps - pad


def _check_side(res: np.ndarray, lo: float, hi: float) -> bool:
    return bool((res >= lo - SAFETY_SLACK).all() and (res <= hi + SAFETY_SLACK).all())


@dataclass(frozen=True)
class LocalPatch:
    """Polynomial certified on a box around its center for one side."""

    center: tuple[float, ...]
    radius: float
    polynomial: Polynomial
    side: str
    eps: float
    residual_range: tuple[float, float]


def _validate_side(side: str):
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def _validate_eps(eps: float):
    if not eps > MIN_EPS:
        raise ValueError(f"eps must exceed {MIN_EPS}")


def local_patch(
    problem: PdeProblem,
    x0,
    eps: float,
    side: str = "lower",
    initial_radius: float = None,
    margin_fraction: float = 0.1,
    seed: int = 0,
) -> LocalPatch:
    """Patch at x0: jet-match the target f(x0) -/+ eps/2, then halve the
    radius until the one-sided inequality holds on the verification lattice.

    Radius underflow below 1e-8 of the domain diagonal reports the offending
    center.
    """
    _validate_side(side)
    _validate_eps(eps)
    x0 = tuple(float(v) for v in np.ravel(x0))
    fx0 = float(problem.rhs_at(np.asarray(x0).reshape(1, -1))[0])
    target = fx0 - 0.5 * eps if side == "lower" else fx0 + 0.5 * eps
    jet = jet_solve(problem, x0, target, seed=seed)
    polynomial = Polynomial.from_jet(x0, jet)
    lo_bound, hi_bound = _side_bounds(eps, side, margin_fraction)
    per_axis = _lattice_per_axis(problem.dims)
    diag = problem.domain.diagonal
    radius = initial_radius if initial_radius is not None else 0.5 * diag
    floor = 1e-8 * diag
    while True:
        if radius < floor:
            raise PatchRadiusError(
                f"patch radius underflow at center {x0}; "
                "the operator or right-hand side varies too fast at this scale"
            )
        ball = Box(
            tuple(max(l, c - radius) for l, c in zip(problem.domain.lower, x0)),
            tuple(min(u, c + radius) for u, c in zip(problem.domain.upper, x0)),
        )
        pts = _verification_lattice_points(ball, per_axis)
        res = _residuals(problem, polynomial, pts)
        if _check_side(res, lo_bound, hi_bound):
            return LocalPatch(
                center=x0,
                radius=radius,
                polynomial=polynomial,
                side=side,
                eps=eps,
                residual_range=(float(res.min()), float(res.max())),
            )
        radius *= 0.5


@dataclass(frozen=True)
class BoxCertificate:
    box: Box
    residual_min: float
    residual_max: float
    samples: int


@dataclass(frozen=True)
class PiecewiseSolution:
    """Per-box polynomials off a closed, measure-zero skeleton of box faces.

    Box interiors are pairwise disjoint and their closures cover the domain
    box; the solution is undefined on the skeleton.
    """

    problem_domain: Box
    midx: MultiIndexSet
    eps: float
    side: str
    boxes: tuple[Box, ...]
    polynomials: tuple[Polynomial, ...]
    skeleton: SkeletonSet
    certificate: tuple[BoxCertificate, ...]

    def box_count(self) -> int:
        return len(self.boxes)

    def locate(self, point) -> int:
        """Index of the box whose closure contains the point (-1 outside)."""
        for i, b in enumerate(self.boxes):
            if b.contains(point):
                return i
        return -1

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Polynomial values at points; points on no box get NaN (skeleton
        points take the value of one adjacent box, consistent with evaluating
        closures in box order)."""
        points = np.atleast_2d(np.asarray(points, float))
        out = np.full(points.shape[0], np.nan)
        todo = np.ones(points.shape[0], bool)
        for b, poly in zip(self.boxes, self.polynomials):
            inside = todo.copy()
            for axis in range(points.shape[1]):
                inside &= (points[:, axis] >= b.lower[axis]) & (points[:, axis] <= b.upper[axis])
            if inside.any():
                out[inside] = poly.evaluate(points[inside])
                todo &= ~inside
        return out


def _skeleton_from_boxes(domain: Box, boxes) -> SkeletonSet:
    planes = []
    for b in boxes:
        for axis in range(domain.dims):
            for coord in (b.lower[axis], b.upper[axis]):
                if coord not in (domain.lower[axis], domain.upper[axis]):
                    planes.append((axis, coord))
    return SkeletonSet(tuple(planes))


def assemble_global(
    problem: PdeProblem,
    eps: float,
    side: str = "lower",
    margin_fraction: float = 0.1,
    max_depth: int = 20,
    seed: int = 0,
) -> PiecewiseSolution:
    """Bisect the domain box until each box is covered by its center patch.

    Every accepted box records the residual range of its certification
    lattice; the skeleton collects all interior box faces.
    """
    _validate_side(side)
    _validate_eps(eps)
    lo_bound, hi_bound = _side_bounds(eps, side, margin_fraction)
    per_axis = _lattice_per_axis(problem.dims)
    accepted: list[tuple[Box, Polynomial, BoxCertificate]] = []
    stack: list[tuple[Box, int]] = [(problem.domain, 0)]
    while stack:
        box, depth = stack.pop()
        center = box.center
        fx0 = float(problem.rhs_at(np.asarray(center).reshape(1, -1))[0])
        target = fx0 - 0.5 * eps if side == "lower" else fx0 + 0.5 * eps
        jet = jet_solve(problem, center, target, seed=seed)
        polynomial = Polynomial.from_jet(center, jet)
        pts = _verification_lattice_points(box, per_axis)
        res = _residuals(problem, polynomial, pts)
        if _check_side(res, lo_bound, hi_bound):
            cert = BoxCertificate(box, float(res.min()), float(res.max()), res.size)
            accepted.append((box, polynomial, cert))
            continue
        if depth >= max_depth:
            raise AssemblyDepthError(
                f"bisection depth {max_depth} exceeded at box {box.lower}..{box.upper}"
            )
        axis = int(np.argmax(box.widths))
        left, right = box.split(axis)
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    accepted.sort(key=lambda item: item[0].lower)
    boxes = tuple(item[0] for item in accepted)
    polys = tuple(item[1] for item in accepted)
    certs = tuple(item[2] for item in accepted)
    return PiecewiseSolution(
        problem_domain=problem.domain,
        midx=problem.midx,
        eps=eps,
        side=side,
        boxes=boxes,
        polynomials=polys,
        skeleton=_skeleton_from_boxes(problem.domain, boxes),
        certificate=certs,
    )


def wrap_polynomial(
    problem: PdeProblem,
    polynomial: Polynomial,
    eps: float,
    side: str = "lower",
) -> PiecewiseSolution:
    """Single-box solution certifying a given (e.g. classical) polynomial
    against the one-sided inequality, with no interior margin."""
    _validate_side(side)
    _validate_eps(eps)
    per_axis = _lattice_per_axis(problem.dims)
    pts = _verification_lattice_points(problem.domain, per_axis)
    res = _residuals(problem, polynomial, pts)
    lo_bound, hi_bound = (-eps, 0.0) if side == "lower" else (0.0, eps)
    if not _check_side(res, lo_bound, hi_bound):
        raise ValueError(
            f"polynomial violates the {side}-side inequality: "
            f"residual range [{res.min()}, {res.max()}] vs [{lo_bound}, {hi_bound}]"
        )
    cert = BoxCertificate(problem.domain, float(res.min()), float(res.max()), res.size)
    return PiecewiseSolution(
        problem_domain=problem.domain,
        midx=problem.midx,
        eps=eps,
        side=side,
        boxes=(problem.domain,),
        polynomials=(polynomial,),
        skeleton=SkeletonSet(()),
        certificate=(cert,),
    )


@dataclass(frozen=True)
class Violation:
    box_index: int
    point: tuple[float, ...]
    residual: float


@dataclass(frozen=True)
class CertificateReport:
    """Fresh-sample audit of a piecewise solution."""

    side: str
    eps: float
    samples_per_box: int
    seed: int
    residual_min: float
    residual_max: float
    violations: tuple[Violation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def sup_abs_residual(self) -> float:
        return max(abs(self.residual_min), abs(self.residual_max))

    def to_text(self) -> str:
        lines = [
            f"certificate audit ({DISCLAIMER})",
            f"side {self.side}",
            f"eps {self.eps!r}",
            f"samples_per_box {self.samples_per_box}",
            f"seed {self.seed}",
            f"residual_range [{self.residual_min!r}, {self.residual_max!r}]",
            f"violations {len(self.violations)}",
        ]
        for v in self.violations[:50]:
            lines.append(f"violation box {v.box_index} at {v.point} residual {v.residual!r}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def verify_certificate(
    problem: PdeProblem,
    solution: PiecewiseSolution,
    samples_per_box: int = 2000,
    seed: int = 0,
) -> CertificateReport:
    """Recompute residuals at fresh random interior samples of every box and
    confirm the sharp one-sided bounds; violations are report content."""
    rng = np.random.default_rng(seed)
    lo_bound, hi_bound = (-solution.eps, 0.0) if solution.side == "lower" else (0.0, solution.eps)
    res_min = math.inf
    res_max = -math.inf
    violations = []
    for i, (box, poly) in enumerate(zip(solution.boxes, solution.polynomials)):
        u = rng.random((samples_per_box, box.dims))
        pts = np.asarray(box.lower) + np.asarray(box.widths) * u
        pts = np.maximum(pts, np.nextafter(np.asarray(box.lower), np.asarray(box.upper)))
        res = _residuals(problem, poly, pts)
        res_min = min(res_min, float(res.min()))
        res_max = max(res_max, float(res.max()))
        bad = (res < lo_bound) | (res > hi_bound)
        for j in np.nonzero(bad)[0][:10]:
            violations.append(
                Violation(box_index=i, point=tuple(float(v) for v in pts[j]), residual=float(res[j]))
            )
    if not solution.boxes:
        res_min = res_max = 0.0
    return CertificateReport(
        side=solution.side,
        eps=solution.eps,
        samples_per_box=samples_per_box,
        seed=seed,
        residual_min=res_min,
        residual_max=res_max,
        violations=tuple(violations),
    )


def grid_for_solution(solution: PiecewiseSolution, base_resolution: int = 129) -> GridDomain:
    """Grid fine enough that skeleton planes stay isolated node hyperplanes."""
    if solution.boxes:
        min_width = min(w for b in solution.boxes for w in b.widths)
    else:
        min_width = min(solution.problem_domain.widths)
    resolution = []
    for axis in range(solution.problem_domain.dims):
        extent = solution.problem_domain.widths[axis]
        need = int(math.ceil(4.0 * extent / min_width))
        resolution.append(max(base_resolution, need))
    return GridDomain(solution.problem_domain, tuple(resolution))


def sample_on_grid(solution: PiecewiseSolution, domain: GridDomain) -> GridIntervalFunction:
    """Point-valued samples of the solution; face-adjacent nodes unmasked."""
    mask = solution.skeleton.node_mask(domain)
    pts = domain.points()
    values = solution.evaluate_many(pts)
    values = np.where(np.isnan(values), 0.0, values).reshape(domain.shape)
    return GridIntervalFunction.from_point_values(domain, values, mask)


def sample_residual_on_grid(
    problem: PdeProblem, solution: PiecewiseSolution, domain: GridDomain
) -> GridIntervalFunction:
    mask = solution.skeleton.node_mask(domain)
    pts = domain.points()
    out = np.zeros(pts.shape[0])
    for b, poly in zip(solution.boxes, solution.polynomials):
        inside = np.ones(pts.shape[0], bool)
        for axis in range(domain.dims):
            inside &= (pts[:, axis] >= b.lower[axis]) & (pts[:, axis] <= b.upper[axis])
        if inside.any():
            out[inside] = _residuals(problem, poly, pts[inside])
    return GridIntervalFunction.from_point_values(domain, out.reshape(domain.shape), mask)


@dataclass(frozen=True)
class RefinementLevel:
    level: int
    eps: float
    lower: PiecewiseSolution
    upper: PiecewiseSolution
    lower_report: CertificateReport
    upper_report: CertificateReport
    residual_envelope_lower: GridIntervalFunction
    residual_envelope_upper: GridIntervalFunction
    solution_envelope: GridIntervalFunction
    residual_envelopes_h_continuous: bool
    envelope_max_width: float

    @property
    def sup_abs_residual(self) -> float:
        return max(self.lower_report.sup_abs_residual, self.upper_report.sup_abs_residual)

    @property
    def box_count(self) -> int:
        return self.lower.box_count() + self.upper.box_count()


@dataclass(frozen=True)
class RefinementRun:
    eps0: float
    levels: tuple[RefinementLevel, ...]

    def to_csv(self) -> str:
        rows = ["level,eps,box_count,min_residual,max_residual,assimilated_max_width"]
        for lv in self.levels:
            res_min = min(lv.lower_report.residual_min, lv.upper_report.residual_min)
            res_max = max(lv.lower_report.residual_max, lv.upper_report.residual_max)
            rows.append(
                f"{lv.level},{lv.eps!r},{lv.box_count},"
                f"{res_min!r},{res_max!r},{lv.envelope_max_width!r}"
            )
        return "\n".join(rows) + "\n"


def refine(
    problem: PdeProblem,
    eps0: float,
    levels: int,
    base_resolution: int = 129,
    samples_per_box: int = 2000,
    margin_fraction: float = 0.1,
    seed: int = 0,
) -> RefinementRun:
    """Halving-eps sequence of certified lower/upper solution pairs.

    Per level, both solutions are audited, their residual and value samples
    are embedded into interval-valued functions over a grid that excludes the
    skeleton nodes, and the width of the joint solution envelope is reported.
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    out = []
    for k in range(levels):
        eps = eps0 * 2.0**-k
        lower = assemble_global(problem, eps, "lower", margin_fraction=margin_fraction, seed=seed)
        upper = assemble_global(problem, eps, "upper", margin_fraction=margin_fraction, seed=seed)
        lower_report = verify_certificate(problem, lower, samples_per_box, seed=seed)
        upper_report = verify_certificate(problem, upper, samples_per_box, seed=seed)
        res_l = grid_for_solution(lower, base_resolution).resolution
        res_u = grid_for_solution(upper, base_resolution).resolution
        domain = GridDomain(problem.domain, tuple(max(a, b) for a, b in zip(res_l, res_u)))
        res_lo_grid = sample_residual_on_grid(problem, lower, domain)
        res_up_grid = sample_residual_on_grid(problem, upper, domain)
        env_res_lower = baire.assimilate(res_lo_grid)
        env_res_upper = baire.assimilate(res_up_grid)
        h_ok = baire.is_h_continuous(env_res_lower) and baire.is_h_continuous(env_res_upper)
        u_lower = baire.assimilate(sample_on_grid(lower, domain))
        u_upper = baire.assimilate(sample_on_grid(upper, domain))
        env_lo = np.minimum(u_lower.lo, u_upper.lo)
        env_hi = np.maximum(u_lower.hi, u_upper.hi)
        env_mask = u_lower.dense_mask & u_upper.dense_mask
        envelope = GridIntervalFunction(domain, env_lo, env_hi, env_mask)
        width = float(envelope.widths().max())
        out.append(
            RefinementLevel(
                level=k,
                eps=eps,
                lower=lower,
                upper=upper,
                lower_report=lower_report,
                upper_report=upper_report,
                residual_envelope_lower=env_res_lower,
                residual_envelope_upper=env_res_upper,
                solution_envelope=envelope,
                residual_envelopes_h_continuous=h_ok,
                envelope_max_width=width,
            )
        )
    return RefinementRun(eps0=eps0, levels=tuple(out))


def write_solution(solution: PiecewiseSolution, path):
    """Plain-text solution file: header, then one box record per line with
    corners, center, and the polynomial's derivative coefficients."""
    d = solution.problem_domain.dims
    lines = [
        "subsolution 1",
        f"side {solution.side}",
        f"eps {solution.eps!r}",
        f"dims {d}",
        f"order {solution.midx.order}",
        "domain "
        + " ".join(repr(v) for v in solution.problem_domain.lower)
        + " "
        + " ".join(repr(v) for v in solution.problem_domain.upper),
        f"boxes {len(solution.boxes)}",
    ]
    for b, poly in zip(solution.boxes, solution.polynomials):
        rec = ["box"]
        rec += [repr(v) for v in b.lower]
        rec += [repr(v) for v in b.upper]
        rec.append("center")
        rec += [repr(v) for v in poly.center]
        rec.append("partials")
        rec += [repr(v) for v in poly.partials]
        lines.append(" ".join(rec))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_solution(path) -> PiecewiseSolution:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split() != ["subsolution", "1"]:
        raise ValueError(f"{path}: not a subsolution v1 file")

    def field(i, key):
        parts = lines[i].split()
        if parts[0] != key:
            raise ValueError(f"{path}: expected '{key}' on line {i + 1}")
        return parts[1:]

    side = field(1, "side")[0]
    eps = float(field(2, "eps")[0])
    dims = int(field(3, "dims")[0])
    order = int(field(4, "order")[0])
    dom = [float(v) for v in field(5, "domain")]
    domain = Box(tuple(dom[:dims]), tuple(dom[dims:]))
    n_boxes = int(field(6, "boxes")[0])
    midx = MultiIndexSet(dims, order)
    boxes = []
    polys = []
    for i, line in enumerate(lines[7:]):
        parts = line.split()
        if parts[0] != "box":
            raise ValueError(f"{path}: expected box record on line {i + 8}")
        ci = parts.index("center")
        pi = parts.index("partials")
        corners = [float(v) for v in parts[1:ci]]
        center = tuple(float(v) for v in parts[ci + 1 : pi])
        partials = tuple(float(v) for v in parts[pi + 1 :])
        boxes.append(Box(tuple(corners[:dims]), tuple(corners[dims:])))
        poly_midx = midx
        if len(partials) != len(midx):
            degree = order
            while len(MultiIndexSet(dims, degree)) < len(partials):
                degree += 1
            poly_midx = MultiIndexSet(dims, degree)
        polys.append(Polynomial(center, poly_midx, partials))
    if len(boxes) != n_boxes:
        raise ValueError(f"{path}: expected {n_boxes} boxes, found {len(boxes)}")
    certs = tuple(BoxCertificate(b, 0.0, 0.0, 0) for b in boxes)
    return PiecewiseSolution(
        problem_domain=domain,
        midx=midx,
        eps=eps,
        side=side,
        boxes=tuple(boxes),
        polynomials=tuple(polys),
        skeleton=_skeleton_from_boxes(domain, boxes),
        certificate=certs,
    )
