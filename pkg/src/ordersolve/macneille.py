"""Dedekind-MacNeille completion of finite posets and an order-theoretic
solvability criterion for abstract equations T(A) = F.

Cuts are pairs (A, B) with B the upper bounds of A and A the lower bounds of
B; lower sets are carried as integer bitmasks for speed.  Enumeration runs
the lower-bounds-of-upper-bounds closure over all subsets, which is the
honest oracle at desk scale and is capped at 16 elements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class PosetError(ValueError):
    """The supplied relation is not a partial order."""


MAX_COMPLETION_SIZE = 16


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class FinitePoset:
    """Finite partially ordered set over opaque hashable labels.

    The relation is validated (reflexive, antisymmetric, transitive) at
    construction.
    """

    __slots__ = ("elements", "_index", "_up", "_down")

    def __init__(self, elements, leq_matrix):
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise PosetError("duplicate element labels")
        n = len(self.elements)
        m = np.asarray(leq_matrix, dtype=bool)
        if m.shape != (n, n):
            raise PosetError(f"relation matrix must be {n} x {n}")
        if not np.diag(m).all():
            raise PosetError("relation is not reflexive")
        if (m & m.T & ~np.eye(n, dtype=bool)).any():
            raise PosetError("relation is not antisymmetric")
        closure = m @ m
        if (closure & ~m).any():
            raise PosetError("relation is not transitive")
        self._index = {x: i for i, x in enumerate(self.elements)}
        # up[i] = bitmask of {j : i <= j}; down[i] = bitmask of {j : j <= i}
        self._up = [0] * n
        self._down = [0] * n
        for i in range(n):
            for j in range(n):
                if m[i, j]:
                    self._up[i] |= 1 << j
                    self._down[j] |= 1 << i

    @classmethod
    def from_pairs(cls, elements, pairs, close: bool = True) -> "FinitePoset":
        """Build from strict/nonstrict <= pairs of labels; by default the
        reflexive-transitive closure is taken before validation."""
        elements = tuple(elements)
        index = {x: i for i, x in enumerate(elements)}
        n = len(elements)
        m = np.eye(n, dtype=bool)
        for a, b in pairs:
            if a not in index or b not in index:
                raise PosetError(f"pair ({a!r}, {b!r}) uses unknown elements")
            m[index[a], index[b]] = True
        if close:
            for k in range(n):
                m |= np.outer(m[:, k], m[k, :])
        return cls(elements, m)

    @classmethod
    def antichain(cls, elements) -> "FinitePoset":
        return cls.from_pairs(elements, [])

    @classmethod
    def chain(cls, elements) -> "FinitePoset":
        elements = tuple(elements)
        return cls.from_pairs(elements, list(zip(elements, elements[1:])))

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, label) -> int:
        return self._index[label]

    def leq(self, a, b) -> bool:
        return bool(self._up[self._index[a]] & (1 << self._index[b]))

    def leq_idx(self, i: int, j: int) -> bool:
        return bool(self._up[i] & (1 << j))

    @property
    def full_mask(self) -> int:
        return (1 << len(self.elements)) - 1

    def upper_bounds(self, subset_mask: int) -> int:
        acc = self.full_mask
        for i in _bits(subset_mask):
            acc &= self._up[i]
        return acc

    def lower_bounds(self, subset_mask: int) -> int:
        acc = self.full_mask
        for i in _bits(subset_mask):
            acc &= self._down[i]
        return acc

    def cut_closure(self, subset_mask: int) -> int:
        """Lower bounds of the upper bounds: the MacNeille closure."""
        return self.lower_bounds(self.upper_bounds(subset_mask))

    def principal_down(self, i: int) -> int:
        return self._down[i]

    def sup_idx(self, subset_mask: int):
        """Index of the least upper bound when it exists, else None."""
        ub = self.upper_bounds(subset_mask)
        for i in _bits(ub):
            if all(self.leq_idx(i, j) for j in _bits(ub)):
                return i
        return None

    def inf_idx(self, subset_mask: int):
        lb = self.lower_bounds(subset_mask)
        for i in _bits(lb):
            if all(self.leq_idx(j, i) for j in _bits(lb)):
                return i
        return None

    def labels_of(self, mask: int) -> frozenset:
        return frozenset(self.elements[i] for i in _bits(mask))


@dataclass(frozen=True)
class Cut:
    """MacNeille cut: lower set A and upper set B as bitmasks over the base."""

    lower: int
    upper: int

    def size(self) -> int:
        return bin(self.lower).count("1")


class CutLattice:
    """Complete lattice of MacNeille cuts, ordered by lower-set inclusion."""

    __slots__ = ("base", "cuts", "_pos", "embedding", "bottom", "top")

    def __init__(self, base: FinitePoset, cuts: list[Cut]):
        self.base = base
        self.cuts = tuple(sorted(cuts, key=lambda c: (c.size(), c.lower)))
        self._pos = {c.lower: k for k, c in enumerate(self.cuts)}
        self.embedding = {
            x: self._pos[base.principal_down(i)] for i, x in enumerate(base.elements)
        }
        self.bottom = 0
        self.top = len(self.cuts) - 1

    def __len__(self) -> int:
        return len(self.cuts)

    def index_of(self, lower_mask: int):
        return self._pos.get(lower_mask)

    def embed(self, label) -> int:
        """Cut index of the principal cut of a base element."""
        return self.embedding[label]

    def leq(self, i: int, j: int) -> bool:
        a, b = self.cuts[i].lower, self.cuts[j].lower
        return a & b == a

    def meet(self, i: int, j: int) -> int:
        return self._pos[self.cuts[i].lower & self.cuts[j].lower]

    def join(self, i: int, j: int) -> int:
        return self._pos[self.base.cut_closure(self.cuts[i].lower | self.cuts[j].lower)]

    def meet_all(self, indices) -> int:
        acc = self.base.full_mask
        any_seen = False
        for i in indices:
            acc &= self.cuts[i].lower
            any_seen = True
        if not any_seen:
            return self.top
        return self._pos[self.base.cut_closure(acc)]

    def join_all(self, indices) -> int:
        acc = 0
        any_seen = False
        for i in indices:
            acc |= self.cuts[i].lower
            any_seen = True
        if not any_seen:
            return self.bottom
        return self._pos[self.base.cut_closure(acc)]

    @property
    def principal_indices(self) -> frozenset:
        return frozenset(self.embedding.values())

    @property
    def adjoined_bottom(self) -> bool:
        """Bottom cut added by completion rather than embedded from the base."""
        return self.bottom not in self.principal_indices

    @property
    def adjoined_top(self) -> bool:
        return self.top not in self.principal_indices

    def lower_labels(self, i: int) -> frozenset:
        return self.base.labels_of(self.cuts[i].lower)

    def covers(self) -> list[tuple[int, int]]:
        """Hasse edges (i covered by j) of the cut order."""
        n = len(self.cuts)
        out = []
        for i in range(n):
            for j in range(n):
                if i == j or not self.leq(i, j):
                    continue
                if any(
                    k != i and k != j and self.leq(i, k) and self.leq(k, j)
                    for k in range(n)
                ):
                    continue
                out.append((i, j))
        return out


def macneille_complete(poset: FinitePoset) -> CutLattice:
    """Cut lattice with the inf/sup-preserving order embedding of the base.

    Closure-based enumeration over all subsets; raises on bases larger than
    16 elements, where subsampling the poset is the intended workaround.
    """
    n = len(poset)
    if n > MAX_COMPLETION_SIZE:
        raise PosetError(
            f"completion is enumerated over 2^{n} subsets; "
            f"restrict to at most {MAX_COMPLETION_SIZE} elements or sample subposets"
        )
    seen = {}
    for subset in range(1 << n):
        lower = poset.cut_closure(subset)
        if lower not in seen:
            seen[lower] = Cut(lower=lower, upper=poset.upper_bounds(lower))
    return CutLattice(poset, list(seen.values()))


def preserves_bounds_check(poset: FinitePoset, lattice: CutLattice, max_exhaustive: int = 10, samples: int = 1024, seed: int = 0) -> bool:
    """Every existing subset sup/inf of the base maps to the sup/inf of the
    embedded cuts.  Exhaustive over subsets up to ``max_exhaustive`` elements,
    seeded random subsets beyond."""
    n = len(poset)
    if n <= max_exhaustive:
        subset_masks = range(1 << n)
    else:
        rng = np.random.default_rng(seed)
        subset_masks = (int(rng.integers(0, 1 << n)) for _ in range(samples))
    for subset in subset_masks:
        embedded = [lattice.embedding[poset.elements[i]] for i in _bits(subset)]
        s = poset.sup_idx(subset)
        if s is not None:
            if lattice.join_all(embedded) != lattice.embedding[poset.elements[s]]:
                return False
        t = poset.inf_idx(subset)
        if t is not None:
            if lattice.meet_all(embedded) != lattice.embedding[poset.elements[t]]:
                return False
    return True


def is_complete_lattice(lattice: CutLattice, subset_samples: int = 64, seed: int = 0) -> bool:
    """Finite completeness check: bounds exist, all pairs have meet/join in
    the cut family, plus sampled arbitrary subsets (a finite lattice with all
    pairwise bounds and top/bottom is complete)."""
    n = len(lattice)
    if n == 0:
        return False
    for i in range(n):
        if not lattice.leq(lattice.bottom, i) or not lattice.leq(i, lattice.top):
            return False
    base = lattice.base
    for i in range(n):
        for j in range(i, n):
            if lattice.index_of(lattice.cuts[i].lower & lattice.cuts[j].lower) is None:
                return False
            joined = base.cut_closure(lattice.cuts[i].lower | lattice.cuts[j].lower)
            if lattice.index_of(joined) is None:
                return False
    rng = np.random.default_rng(seed)
    for _ in range(subset_samples):
        k = int(rng.integers(0, n + 1))
        idx = rng.choice(n, size=k, replace=False) if k else []
        acc_meet = base.full_mask
        acc_join = 0
        for i in idx:
            acc_meet &= lattice.cuts[int(i)].lower
            acc_join |= lattice.cuts[int(i)].lower
        if k:
            if lattice.index_of(base.cut_closure(acc_meet)) is None:
                return False
            if lattice.index_of(base.cut_closure(acc_join)) is None:
                return False
    return True


@dataclass(frozen=True)
class AbstractEquation:
    """Equation T(A) = F for a total map T from a bare set X into a poset Y."""

    domain: tuple
    codomain: FinitePoset
    mapping: dict

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        if len(set(self.domain)) != len(self.domain):
            raise PosetError("duplicate domain labels")
        missing = [x for x in self.domain if x not in self.mapping]
        if missing:
            raise PosetError(f"mapping is not total; missing {missing!r}")
        bad = [x for x in self.domain if self.mapping[x] not in self.codomain._index]
        if bad:
            raise PosetError(f"mapping leaves the codomain at {bad!r}")


def pullback_order(eq: AbstractEquation) -> FinitePoset:
    """Quotient of the domain by equal images, ordered by comparing images.

    Elements of the result are frozensets of original labels; the order is
    inherited from the codomain through the map, so the result is isomorphic
    to the image sub-poset.
    """
    classes: dict = {}
    for x in eq.domain:
        classes.setdefault(eq.mapping[x], []).append(x)
    labels = [frozenset(v) for v in classes.values()]
    images = list(classes.keys())
    pairs = []
    for a, ya in zip(labels, images):
        for b, yb in zip(labels, images):
            if eq.codomain.leq(ya, yb):
                pairs.append((a, b))
    return FinitePoset.from_pairs(labels, pairs, close=False)


def _pullback_with_images(eq: AbstractEquation):
    poset = pullback_order(eq)
    images = {cls: eq.mapping[next(iter(cls))] for cls in poset.elements}
    return poset, images


@dataclass(frozen=True)
class SolvabilityResult:
    solvable: bool
    sup_cut: int
    inf_cut: int
    witness: Cut | None
    domain_completion: CutLattice
    codomain_completion: CutLattice


def _extend_map(xt: FinitePoset, images: dict, y: FinitePoset, yl: CutLattice, cut: Cut) -> int:
    """Direct image of a domain cut, closed to a codomain cut."""
    mask = 0
    for i in _bits(cut.lower):
        mask |= 1 << y.index(images[xt.elements[i]])
    return yl.index_of(y.cut_closure(mask))


def solvability_criterion(eq: AbstractEquation, rhs_lower_labels) -> SolvabilityResult:
    """Order-completion solvability test for T(A) = F.

    F is a cut of the completed codomain, given by its lower set of labels.
    The criterion compares the supremum of extended images below F with the
    infimum of extended images above F; empty families default to the lattice
    bottom and top.  When the two agree a witness cut with exact image F is
    searched for and returned.
    """
    y = eq.codomain
    yl = macneille_complete(y)
    rhs_mask = 0
    for label in rhs_lower_labels:
        rhs_mask |= 1 << y.index(label)
    f_idx = yl.index_of(rhs_mask)
    if f_idx is None:
        raise PosetError("right-hand side is not a cut of the completed codomain")

    xt, images = _pullback_with_images(eq)
    xtl = macneille_complete(xt)

    below = []
    above = []
    image_of = {}
    for k, cut in enumerate(xtl.cuts):
        img = _extend_map(xt, images, y, yl, cut)
        image_of[k] = img
        if yl.leq(img, f_idx):
            below.append(img)
        if yl.leq(f_idx, img):
            above.append(img)
    sup_cut = yl.join_all(below)
    inf_cut = yl.meet_all(above)
    solvable = sup_cut == inf_cut
    witness = None
    if solvable:
        for k, cut in enumerate(xtl.cuts):
            if image_of[k] == f_idx:
                witness = cut
                break
    return SolvabilityResult(
        solvable=solvable,
        sup_cut=sup_cut,
        inf_cut=inf_cut,
        witness=witness,
        domain_completion=xtl,
        codomain_completion=yl,
    )


def read_poset(path) -> FinitePoset:
    """Adjacency-list text format: one ``element: below1 below2 ...`` line per
    element, listing the elements immediately below it.  Blank lines and
    ``#`` comments are ignored."""
    elements = []
    covers = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise PosetError(f"{path}:{lineno}: expected 'element: covers...'")
            name, _, rest = line.partition(":")
            name = name.strip()
            if not name:
                raise PosetError(f"{path}:{lineno}: empty element name")
            elements.append(name)
            for below in rest.split():
                covers.append((below, name))
    for a, _ in covers:
        if a not in elements:
            raise PosetError(f"{path}: cover references unknown element {a!r}")
    return FinitePoset.from_pairs(elements, covers, close=True)


def lattice_to_dot(lattice: CutLattice) -> str:
    """Dot-style cover edge list for external rendering."""

    def name(i: int) -> str:
        labels = sorted(map(str, lattice.lower_labels(i)))
        return "{" + ",".join(labels) + "}"

    lines = ["digraph cuts {"]
    for i in range(len(lattice)):
        lines.append(f'  "{name(i)}";')
    for i, j in lattice.covers():
        lines.append(f'  "{name(i)}" -> "{name(j)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
