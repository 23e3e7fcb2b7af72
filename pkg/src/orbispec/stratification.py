"""Singular stratification of a global quotient M / G.

The cover is stratified first: every connected component of fix(H), for the
isotropy subgroups H that actually occur, minus the lower-dimensional loci
with strictly larger isotropy. Cover strata are then grouped into G-orbits,
one orbit per stratum of the quotient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import LemmaViolation, NotASubgroup, UnsupportedGeometry
from .isometry import (
    AffinePiece,
    GroupAction,
    IsometryElement,
    Orientation,
    fixed_components,
    manifold_fixed_dim,
    orientation,
)


@dataclass(frozen=True)
class CoverStratum:
    """A connected stratum of the cover: an open arc/whole flat of ``flat``."""

    flat: AffinePiece
    isotropy: frozenset[int]
    dimension: int
    volume: float
    representative: tuple
    arc: tuple | None = None  # (start, end) parameters on a cut circle
    removed: tuple[AffinePiece, ...] = ()

    def contains(self, point) -> bool:
        if not self.flat.contains(point):
            return False
        if self.arc is not None:
            (s,) = self.flat.coordinates(point)
            a, b = self.arc
            if b <= a:  # wraps through parameter 0
                return s > a or s < b
            return a < s < b
        return not any(w.contains(point) for w in self.removed)


@dataclass(frozen=True)
class Stratum:
    """A stratum of the quotient orbifold.

    ``volume`` is measured in the quotient (a point stratum has volume 1);
    ``cover_volume`` sums the cover components in the orbit. Element lists are
    indices into ``GroupAction.elements`` for the representative component.
    """

    dimension: int
    components_description: tuple[tuple, ...]
    isotropy_order: int
    isotropy_elements: tuple[int, ...]
    iso_max_elements: tuple[int, ...]
    is_primary: bool
    is_opposite_parity: bool
    volume: float
    cover_volume: float
    cover_components: int
    representative: tuple = ()
    is_regular: bool = False

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "regular": self.is_regular,
            "isotropy_order": self.isotropy_order,
            "isotropy_elements": list(self.isotropy_elements),
            "iso_max_elements": list(self.iso_max_elements),
            "primary": self.is_primary,
            "opposite_parity": self.is_opposite_parity,
            "volume": self.volume,
            "cover_volume": self.cover_volume,
            "cover_components": self.cover_components,
            "representative": [_num(x) for x in self.representative],
            "components": [
                {"basepoint": [_num(x) for x in base], "tangent": [[_num(x) for x in t] for t in tan], "volume": vol}
                for base, tan, vol in self.components_description
            ],
        }


def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return float(x)


@dataclass(frozen=True)
class StratificationReport:
    strata: tuple[Stratum, ...]
    regular_volume: float
    total_volume: float
    singular_set_present: bool
    dimension: int

    @property
    def singular_strata(self) -> tuple[Stratum, ...]:
        return tuple(s for s in self.strata if not s.is_regular)

    @property
    def regular_stratum(self) -> Stratum:
        return next(s for s in self.strata if s.is_regular)

    def summary(self) -> list[tuple[int, int, int]]:
        """Sorted (dimension, isotropy order, count) for the singular strata."""
        counts: dict[tuple[int, int], int] = {}
        for s in self.singular_strata:
            counts[(s.dimension, s.isotropy_order)] = counts.get((s.dimension, s.isotropy_order), 0) + 1
        return sorted((d, o, c) for (d, o), c in counts.items())

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "total_volume": self.total_volume,
            "regular_volume": self.regular_volume,
            "singular_set_present": self.singular_set_present,
            "strata": [s.to_dict() for s in self.strata],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [
            f"dimension {self.dimension}, total volume {self.total_volume:.12g}, "
            f"{len(self.singular_strata)} singular strata"
        ]
        for i, s in enumerate(self.strata):
            tag = "regular" if s.is_regular else ("primary" if s.is_primary else "non-primary")
            op = " OP" if s.is_opposite_parity else ""
            lines.append(
                f"  [{i}] dim {s.dimension} |iso| {s.isotropy_order} vol {s.volume:.12g} "
                f"cover pieces {s.cover_components} {tag}{op} iso_max {list(s.iso_max_elements)}"
            )
        return "\n".join(lines)


def isotropy_at(point, action: GroupAction) -> tuple[int, ...]:
    """Indices of the elements fixing ``point``; verified to be a subgroup."""
    idx = tuple(i for i, g in enumerate(action.elements) if g.fixes(point))
    if 0 not in idx or action.generated_subgroup(idx) != frozenset(idx):
        raise NotASubgroup(f"stabilizer of {point} is not a subgroup; tolerance too coarse?")
    return idx


def _pointwise_stabilizer(piece: AffinePiece, action: GroupAction) -> frozenset[int]:
    out = []
    for i, g in enumerate(action.elements):
        if not g.fixes(piece.basepoint):
            continue
        a = np.asarray(g.linear, dtype=float)
        if all(np.allclose(a @ np.asarray(t, dtype=float), np.asarray(t, dtype=float), atol=1e-9) for t in piece.tangent):
            out.append(i)
    return frozenset(out)


def _singular_flats(action: GroupAction) -> list[tuple[AffinePiece, frozenset[int]]]:
    """All components of fix(H) over the isotropy subgroups H that occur,
    each paired with its pointwise stabilizer."""
    flats: list[tuple[AffinePiece, frozenset[int]]] = []
    queued: set[frozenset[int]] = set()
    queue: list[frozenset[int]] = []
    stabilizers: list[frozenset[int]] = []

    def push(h):
        if h not in queued:
            queued.add(h)
            queue.append(h)

    for i in range(1, action.order):
        push(action.generated_subgroup([i]))
    while queue:
        h = queue.pop(0)
        comps = fixed_components([action.elements[i] for i in sorted(h)], action.geometry)
        for w in comps.components:
            stab = _pointwise_stabilizer(w, action)
            if not any(stab == s and w.same_as(v) for v, s in flats):
                flats.append((w, stab))
            if stab not in stabilizers:
                stabilizers.append(stab)
                push(stab)
                for other in stabilizers:
                    push(action.generated_subgroup(stab | other))
    return flats


def _generic_point(flat: AffinePiece, removed: Sequence[AffinePiece]):
    trials = [(Fraction(137, 1000), Fraction(291, 1000)), (Fraction(419, 1000), Fraction(53, 1000)),
              (Fraction(611, 1000), Fraction(877, 1000))]
    for params in trials:
        p = flat.point(params[: flat.dimension]) if flat.dimension else flat.basepoint
        if not any(w.contains(p) for w in removed):
            return p
    raise UnsupportedGeometry("could not find a generic point on a stratum")


def cover_strata(action: GroupAction) -> list[CoverStratum]:
    flats = _singular_flats(action)
    out: list[CoverStratum] = []
    for w, stab in flats:
        removed = [v for v, s in flats if s > stab and v.dimension < w.dimension and v.is_subset_of(w)]
        if w.dimension == 0:
            out.append(CoverStratum(w, stab, 0, 1.0, tuple(w.basepoint)))
            continue
        if w.dimension == 1 and removed:
            cuts = sorted({w.coordinates(v.basepoint)[0] for v in removed})
            for k, a in enumerate(cuts):
                b = cuts[(k + 1) % len(cuts)]
                length = (b - a) % 1 if len(cuts) > 1 else 1
                rep = w.point(((a + length / 2) % 1,))
                out.append(CoverStratum(w, stab, 1, float(length) * w.volume, tuple(rep), (a, b), tuple(removed)))
            continue
        if any(v.dimension == w.dimension - 1 for v in removed):
            raise UnsupportedGeometry(
                f"a {w.dimension}-dimensional stratum is cut by codimension-one loci; not supported"
            )
        rep = _generic_point(w, removed) if w.dimension else w.basepoint
        out.append(CoverStratum(w, stab, w.dimension, w.volume, tuple(rep), None, tuple(removed)))
    return out


def _find_stratum(point, strata: Sequence[CoverStratum], isotropy: frozenset[int]) -> int:
    hits = [k for k, s in enumerate(strata) if s.isotropy == isotropy and s.contains(point)]
    if len(hits) != 1:
        raise LemmaViolation(f"point {point} lies in {len(hits)} cover strata")
    return hits[0]


def iso_max(stratum: Stratum, action: GroupAction) -> list[IsometryElement]:
    """Isotropy elements whose fixed set has the stratum's dimension."""
    return [action.elements[i] for i in _iso_max_indices(stratum.isotropy_elements, stratum.dimension, action)]


def _iso_max_indices(isotropy: Sequence[int], dimension: int, action: GroupAction) -> tuple[int, ...]:
    out = []
    for i in isotropy:
        if i == 0:
            continue
        if manifold_fixed_dim(action.elements[i], action.geometry) == dimension:
            out.append(i)
    return tuple(out)


def enumerate_strata(action: GroupAction) -> StratificationReport:
    geometry = action.geometry
    n = geometry.dimension
    g_order = action.order
    pieces = cover_strata(action)

    # G permutes cover strata; union-find over representative images
    parent = list(range(len(pieces)))

    def root(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for k, s in enumerate(pieces):
        for gi, g in enumerate(action.elements):
            if gi == 0:
                continue
            ginv = action.inverse_index(gi)
            conj = frozenset(int(action.table[action.table[gi, h], ginv]) for h in s.isotropy)
            image = _find_stratum(g.apply(s.representative), pieces, conj)
            a, b = root(k), root(image)
            if a != b:
                parent[max(a, b)] = min(a, b)

    orbits: dict[int, list[int]] = {}
    for k in range(len(pieces)):
        orbits.setdefault(root(k), []).append(k)

    strata = []
    for members in orbits.values():
        rep = pieces[members[0]]
        iso = tuple(sorted(rep.isotropy))
        cover_vol = sum(pieces[k].volume for k in members)
        vol = cover_vol * len(iso) / g_order
        if rep.dimension == 0:
            vol = 1.0
        imax = _iso_max_indices(iso, rep.dimension, action)
        comps = tuple((pieces[k].representative, pieces[k].flat.tangent, pieces[k].volume) for k in members)
        strata.append(
            Stratum(
                dimension=rep.dimension,
                components_description=comps,
                isotropy_order=len(iso),
                isotropy_elements=iso,
                iso_max_elements=imax,
                is_primary=bool(imax),
                is_opposite_parity=(rep.dimension - n) % 2 == 1,
                volume=vol,
                cover_volume=cover_vol,
                cover_components=len(members),
                representative=rep.representative,
            )
        )
    strata.sort(key=lambda s: (-s.dimension, -s.isotropy_order, [str(x) for x in s.representative]))
    total = geometry.cover_volume / g_order
    regular = Stratum(
        dimension=n,
        components_description=(),
        isotropy_order=1,
        isotropy_elements=(0,),
        iso_max_elements=(),
        is_primary=False,
        is_opposite_parity=False,
        volume=total,
        cover_volume=geometry.cover_volume,
        cover_components=1,
        is_regular=True,
    )
    return StratificationReport((regular, *strata), total, total, bool(strata), n)


def primary_op_strata(report: StratificationReport, n: int | None = None) -> list[Stratum]:
    n = report.dimension if n is None else n
    return [s for s in report.singular_strata if s.is_primary and (s.dimension - n) % 2 == 1]


def locally_orientable_by_isotropy(action: GroupAction) -> bool:
    """Every element that fixes some point (hence lies in a chart group) preserves orientation."""
    for g in action.elements[1:]:
        if manifold_fixed_dim(g, action.geometry) is not None and orientation(g, action.eps) is Orientation.REVERSING:
            return False
    return True


def is_locally_orientable(action: GroupAction, report: StratificationReport | None = None) -> tuple[bool, bool]:
    """(isotropy-group route, primary-OP-strata route); they must agree."""
    by_charts = locally_orientable_by_isotropy(action)
    report = enumerate_strata(action) if report is None else report
    by_strata = not primary_op_strata(report, action.dimension)
    if by_charts != by_strata:
        raise LemmaViolation(f"isotropy route says {by_charts}, strata route says {by_strata}")
    return by_charts, by_strata
