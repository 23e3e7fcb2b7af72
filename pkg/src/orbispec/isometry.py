"""Isometries of flat tori and round spheres, and the finite groups they form.

Two numeric substrates are used side by side:

* flat tori work in lattice coordinates, where every lattice-preserving
  isometry has an integer linear part and a rational translation; all
  arithmetic is exact (``int`` / ``Fraction``);
* spheres work with 3x3 orthogonal matrices in floating point, compared with
  the module tolerance ``EPS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from . import intlinalg as il
from .errors import (
    DegenerateDeterminant,
    DuplicateElement,
    IllConditioned,
    NoIdentity,
    NonIntegralLinearPart,
    NotClosed,
    NotEffective,
    NotIsometric,
    UnsupportedDimension,
    UnsupportedGeometry,
)

EPS = 1e-12
# eigenvalues closer than this to +-1 are classified as +-1
EIG_TOL = 1e-9
# distances to +-1 in (EIG_TOL, EIG_AMBIGUOUS) cannot be classified reliably
EIG_AMBIGUOUS = 1e-7
POINT_TOL = 1e-9
MAX_GROUP_ORDER = 10_000


class GeometryKind(str, Enum):
    FLAT_TORUS = "flat_torus"
    SPHERE = "sphere"


class Orientation(str, Enum):
    PRESERVING = "preserving"
    REVERSING = "reversing"


def _frac_matrix(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(il.as_fraction(x) for x in row) for row in rows)


@dataclass(frozen=True, eq=False)
class ModelGeometry:
    """A flat torus R^n / (lattice) or a round 2-sphere of given radius.

    For tori the Gram matrix is kept exactly; the float ``lattice_basis`` (rows
    are basis vectors) is only used for Cartesian conversions.
    """

    kind: GeometryKind
    dimension: int
    lattice_basis: np.ndarray | None = None
    gram: tuple[tuple[Fraction, ...], ...] | None = None
    radius: float = 1.0
    exact_basis: tuple[tuple[Fraction, ...], ...] | None = None

    @classmethod
    def flat_torus(cls, basis=None, *, gram=None) -> "ModelGeometry":
        """Build a torus from basis rows, an exact Gram matrix, or both.

        Exact (int/Fraction/"p/q") basis rows give an exact Gram matrix.
        Float rows need ``gram`` unless their Gram matrix is rational to 1e-12.
        """
        if basis is None and gram is None:
            raise ValueError("need a lattice basis or a Gram matrix")
        exact_basis = None
        if basis is not None:
            try:
                exact_basis = _frac_matrix(basis)
            except TypeError:
                exact_basis = None
            fbasis = np.array([[float(x) for x in row] for row in basis], dtype=float)
        else:
            fbasis = None
        if gram is not None:
            g = _frac_matrix(gram)
        elif exact_basis is not None:
            g = tuple(tuple(sum(a * b for a, b in zip(r1, r2)) for r2 in exact_basis) for r1 in exact_basis)
        else:
            fg = fbasis @ fbasis.T
            g = tuple(tuple(Fraction(x).limit_denominator(10**6) for x in row) for row in fg)
            approx = np.array([[float(x) for x in row] for row in g])
            if np.max(np.abs(approx - fg)) > 1e-12:
                raise UnsupportedGeometry("float lattice basis has an irrational Gram matrix; pass gram=")
        n = len(g)
        if n not in (1, 2, 3, 4):
            raise UnsupportedDimension(f"flat tori are supported for n in 1..4, got {n}")
        if any(len(row) != n for row in g) or any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise UnsupportedGeometry("Gram matrix must be square and symmetric")
        # positive definite: all leading principal minors positive
        for k in range(1, n + 1):
            if il.det([row[:k] for row in g[:k]]) <= 0:
                raise UnsupportedGeometry("Gram matrix is not positive definite")
        if fbasis is None:
            fbasis = np.linalg.cholesky(np.array(g, dtype=float))
        elif fbasis.shape != (n, n):
            raise UnsupportedGeometry("lattice basis shape does not match the Gram matrix")
        else:
            if np.max(np.abs(fbasis @ fbasis.T - np.array(g, dtype=float))) > 1e-9:
                raise UnsupportedGeometry("lattice basis and Gram matrix disagree")
        fbasis.setflags(write=False)
        return cls(GeometryKind.FLAT_TORUS, n, fbasis, g, 1.0, exact_basis)

    @classmethod
    def unit_torus(cls, n: int = 2) -> "ModelGeometry":
        return cls.flat_torus(il.identity(n))

    @classmethod
    def sphere(cls, radius: float = 1.0, dimension: int = 2) -> "ModelGeometry":
        if dimension != 2:
            raise UnsupportedDimension("only the 2-sphere is supported")
        if not radius > 0:
            raise UnsupportedGeometry("radius must be positive")
        return cls(GeometryKind.SPHERE, 2, radius=float(radius))

    @property
    def is_torus(self) -> bool:
        return self.kind is GeometryKind.FLAT_TORUS

    @property
    def ambient_dim(self) -> int:
        """Size of the linear parts acting on this geometry."""
        return self.dimension if self.is_torus else self.dimension + 1

    @property
    def gram_float(self) -> np.ndarray:
        if self.is_torus:
            return np.array(self.gram, dtype=float)
        return np.eye(self.ambient_dim)

    @property
    def cover_volume(self) -> float:
        if self.is_torus:
            return math.sqrt(float(il.det(self.gram)))
        return 4.0 * math.pi * self.radius**2

    def to_cartesian(self, linear) -> np.ndarray:
        """Linear part in an orthonormal frame (identity for the sphere)."""
        a = np.asarray(linear, dtype=float)
        if not self.is_torus:
            return a
        bt = self.lattice_basis.T
        return bt @ a @ np.linalg.inv(bt)

    def __eq__(self, other):
        if not isinstance(other, ModelGeometry):
            return NotImplemented
        if self.kind is not other.kind or self.dimension != other.dimension:
            return False
        if self.is_torus:
            return self.gram == other.gram
        return abs(self.radius - other.radius) <= EPS

    def __hash__(self):
        return hash((self.kind, self.dimension, self.gram, round(self.radius, 9)))


def _normalize_translation(b: Iterable) -> tuple[Fraction, ...]:
    return tuple(il.as_fraction(x) % 1 for x in b)


@dataclass(frozen=True, eq=False)
class IsometryElement:
    """x -> A x + b. ``A`` is an integer matrix in lattice coordinates (torus) or
    a float 3x3 orthogonal matrix (sphere, where ``b`` is empty)."""

    linear: np.ndarray
    translation: tuple[Fraction, ...]
    kind: GeometryKind

    @classmethod
    def torus(cls, matrix, translation=None) -> "IsometryElement":
        rows = [list(r) for r in matrix]
        ints = []
        for row in rows:
            out = []
            for x in row:
                if isinstance(x, float):
                    if x != int(x):
                        raise NonIntegralLinearPart(f"non-integer entry {x}")
                    x = int(x)
                f = il.as_fraction(x)
                if f.denominator != 1:
                    raise NonIntegralLinearPart(f"non-integer entry {f}")
                out.append(int(f))
            ints.append(out)
        a = np.array(ints, dtype=np.int64)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("linear part must be square")
        b = _normalize_translation(translation if translation is not None else [0] * n)
        if len(b) != n:
            raise ValueError("translation length does not match the matrix")
        a.setflags(write=False)
        return cls(a, b, GeometryKind.FLAT_TORUS)

    @classmethod
    def sphere(cls, matrix) -> "IsometryElement":
        a = np.array(matrix, dtype=float)
        if a.shape != (3, 3):
            raise ValueError("sphere isometries are 3x3 matrices")
        a.setflags(write=False)
        return cls(a, (), GeometryKind.SPHERE)

    @property
    def is_exact(self) -> bool:
        return self.kind is GeometryKind.FLAT_TORUS

    @property
    def size(self) -> int:
        return self.linear.shape[0]

    def compose(self, other: "IsometryElement") -> "IsometryElement":
        """self ∘ other."""
        if self.is_exact:
            a = self.linear @ other.linear
            b = [sum(int(self.linear[i, j]) * other.translation[j] for j in range(self.size)) + self.translation[i]
                 for i in range(self.size)]
            return IsometryElement.torus(a, b)
        return IsometryElement.sphere(self.linear @ other.linear)

    def inverse(self) -> "IsometryElement":
        if self.is_exact:
            inv = il.inverse(self.linear.tolist())
            b = [-sum(inv[i][j] * self.translation[j] for j in range(self.size)) for i in range(self.size)]
            return IsometryElement.torus(inv, b)
        return IsometryElement.sphere(self.linear.T)

    def apply(self, point):
        if self.is_exact:
            return tuple(
                (sum(int(self.linear[i, j]) * point[j] for j in range(self.size)) + self.translation[i]) % 1
                for i in range(self.size)
            )
        return tuple(float(x) for x in self.linear @ np.asarray(point, dtype=float))

    def fixes(self, point) -> bool:
        image = self.apply(point)
        if self.is_exact:
            return image == tuple(Fraction(x) % 1 for x in point)
        return float(np.max(np.abs(np.asarray(image) - np.asarray(point, dtype=float)))) <= POINT_TOL

    def key(self):
        """Hashable exact identity for torus elements."""
        if not self.is_exact:
            raise TypeError("sphere elements have no exact key")
        return (tuple(map(tuple, self.linear.tolist())), self.translation)

    def distance(self, other: "IsometryElement") -> float:
        """Max entry distance (translations compared mod 1)."""
        d = float(np.max(np.abs(np.asarray(self.linear, float) - np.asarray(other.linear, float))))
        if self.is_exact:
            for x, y in zip(self.translation, other.translation):
                diff = abs(x - y) % 1
                d = max(d, float(min(diff, 1 - diff)))
        return d

    def same_as(self, other: "IsometryElement", eps: float = EPS) -> bool:
        if self.is_exact:
            return self.key() == other.key()
        return self.distance(other) <= 10 * eps

    def det(self) -> float:
        if self.is_exact:
            return float(il.det(self.linear.tolist()))
        return float(np.linalg.det(self.linear))

    @property
    def is_identity(self) -> bool:
        n = self.size
        if self.is_exact:
            return self.linear.tolist() == il.identity(n) and all(x == 0 for x in self.translation)
        return float(np.max(np.abs(self.linear - np.eye(n)))) <= 10 * EPS

    def __repr__(self):
        if self.is_exact:
            t = ", ".join(str(x) for x in self.translation)
            return f"IsometryElement(A={self.linear.tolist()}, b=({t}))"
        return f"IsometryElement(A={np.round(self.linear, 6).tolist()})"


def identity_element(geometry: ModelGeometry) -> IsometryElement:
    n = geometry.ambient_dim
    if geometry.is_torus:
        return IsometryElement.torus(il.identity(n))
    return IsometryElement.sphere(np.eye(n))


@dataclass(frozen=True, eq=False)
class GroupAction:
    """A verified finite isometry group; ``elements[0]`` is the identity and
    ``table[i, j]`` is the index of ``elements[i] ∘ elements[j]``."""

    elements: tuple[IsometryElement, ...]
    geometry: ModelGeometry
    table: np.ndarray
    eps: float = EPS

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    def index_of(self, element: IsometryElement) -> int:
        for i, g in enumerate(self.elements):
            if g.same_as(element, self.eps):
                return i
        raise KeyError(element)

    def inverse_index(self, i: int) -> int:
        return int(np.nonzero(self.table[i] == 0)[0][0])

    def generated_subgroup(self, indices: Iterable[int]) -> frozenset[int]:
        """Closure of a set of element indices under the group law."""
        group = {0} | set(indices)
        frontier = list(group)
        while frontier:
            new = []
            for i in frontier:
                for j in list(group):
                    for k in (int(self.table[i, j]), int(self.table[j, i])):
                        if k not in group:
                            group.add(k)
                            new.append(k)
            frontier = new
        return frozenset(group)

    def same_elements(self, other: "GroupAction") -> bool:
        if self.geometry != other.geometry or self.order != other.order:
            return False
        try:
            return all(other.index_of(g) is not None for g in self.elements)
        except KeyError:
            return False


def _check_compatible(g: IsometryElement, geometry: ModelGeometry) -> None:
    expected = GeometryKind.FLAT_TORUS if geometry.is_torus else GeometryKind.SPHERE
    if g.kind is not expected or g.size != geometry.ambient_dim:
        raise UnsupportedGeometry(f"element {g!r} is not compatible with {geometry.kind.value} of dim {geometry.dimension}")


def _check_isometric(g: IsometryElement, geometry: ModelGeometry, eps: float) -> None:
    if g.is_exact:
        a = g.linear.tolist()
        lhs = il.matmul(il.matmul(il.transpose(a), geometry.gram), a)
        if [[Fraction(x) for x in row] for row in lhs] != [list(row) for row in geometry.gram]:
            raise NotIsometric(f"{g!r} does not preserve the lattice metric")
    else:
        a = g.linear
        if float(np.max(np.abs(a.T @ a - np.eye(3)))) > 10 * eps:
            raise NotIsometric(f"{g!r} is not orthogonal")
    orientation(g, eps)


def verify_group(elements: Sequence[IsometryElement], geometry: ModelGeometry, eps: float = EPS) -> GroupAction:
    """Check that ``elements`` form a finite effective isometry group.

    The identity is moved to index 0; the remaining order is preserved, so
    verifying an already verified element list reproduces the same table.
    """
    if not elements:
        raise NoIdentity("empty element list")
    for g in elements:
        _check_compatible(g, geometry)
        _check_isometric(g, geometry, eps)
    ids = [i for i, g in enumerate(elements) if g.is_identity]
    if not ids:
        raise NoIdentity("identity element missing")
    if len(ids) > 1:
        raise NotEffective("more than one element acts as the identity map")
    ordered = [elements[ids[0]]] + [g for i, g in enumerate(elements) if i != ids[0]]
    n = len(ordered)

    if ordered[0].is_exact:
        lookup = {g.key(): i for i, g in enumerate(ordered)}
        if len(lookup) != n:
            raise DuplicateElement("repeated group element")

        def find(h):
            return lookup.get(h.key())
    else:
        mats = np.array([g.linear for g in ordered])
        for i in range(n):
            d = np.max(np.abs(mats - mats[i]), axis=(1, 2))
            d[i] = np.inf
            if np.min(d) <= 10 * eps:
                raise DuplicateElement(f"elements {i} and {int(np.argmin(d))} coincide within 10*eps")

        def find(h):
            d = np.max(np.abs(mats - h.linear), axis=(1, 2))
            k = int(np.argmin(d))
            return k if d[k] <= 10 * eps else None

    table = np.empty((n, n), dtype=np.int64)
    for i, g in enumerate(ordered):
        for j, h in enumerate(ordered):
            k = find(g.compose(h))
            if k is None:
                raise NotClosed(f"product of elements {i} and {j} is not in the set")
            table[i, j] = k
    for row in table:
        if sorted(row.tolist()) != list(range(n)):
            raise NotClosed("composition table is not a Latin square")
    table.setflags(write=False)
    return GroupAction(tuple(ordered), geometry, table, eps)


def generate_group(
    generators: Sequence[IsometryElement], geometry: ModelGeometry, cap: int = MAX_GROUP_ORDER, eps: float = EPS
) -> GroupAction:
    """Closure of ``generators`` under composition, then ``verify_group``."""
    elems = [identity_element(geometry)]
    for g in generators:
        _check_compatible(g, geometry)
        _check_isometric(g, geometry, eps)

    def known(h):
        return any(h.same_as(e, eps) for e in elems)

    frontier = [g for g in generators if not g.is_identity]
    uniq = []
    for g in frontier:
        if not known(g) and not any(g.same_as(u, eps) for u in uniq):
            uniq.append(g)
    elems.extend(uniq)
    frontier = list(uniq)
    while frontier:
        new = []
        for g in frontier:
            for s in generators:
                h = g.compose(s)
                if not known(h):
                    elems.append(h)
                    new.append(h)
                    if len(elems) > cap:
                        raise NotClosed(f"closure exceeds {cap} elements")
        frontier = new
    return verify_group(elems, geometry, eps)


def orientation(g: IsometryElement, eps: float = EPS) -> Orientation:
    d = g.det()
    if abs(abs(d) - 1.0) > 10 * eps:
        raise DegenerateDeterminant(f"|det| = {abs(d)} is not 1")
    return Orientation.PRESERVING if d > 0 else Orientation.REVERSING


@dataclass(frozen=True, eq=False)
class NormalDecomposition:
    """Orthogonal splitting of R^m into the +1, -1 and rotation-plane parts of A.

    ``frame`` is an orthonormal basis (columns) in which the Cartesian linear
    part is block diagonal with ``blocks``: 1x1 entries +-1 and 2x2 rotations.
    """

    fixed_dim: int
    minus_one_dim: int
    rotation_angles: tuple[tuple[float, int], ...]
    frame: np.ndarray
    blocks: tuple[np.ndarray, ...]

    @property
    def rotation_planes(self) -> int:
        return sum(m for _, m in self.rotation_angles)

    @property
    def det_sign(self) -> int:
        return -1 if self.minus_one_dim % 2 else 1

    def reconstruct(self) -> np.ndarray:
        return self.frame @ scipy.linalg.block_diag(*self.blocks) @ self.frame.T


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def normal_decomposition(g: IsometryElement, geometry: ModelGeometry | None = None) -> NormalDecomposition:
    if g.is_exact:
        if geometry is None:
            raise ValueError("torus elements need their geometry for a Cartesian frame")
        a = geometry.to_cartesian(g.linear)
    else:
        a = np.asarray(g.linear, dtype=float)
    m = a.shape[0]
    if float(np.max(np.abs(a.T @ a - np.eye(m)))) > 1e-9:
        raise IllConditioned("linear part is not orthogonal in the model metric")
    t, z = scipy.linalg.schur(a, output="real")
    z = z.copy()
    blocks: list[tuple[str, object, list[int]]] = []
    i = 0
    while i < m:
        if i + 1 < m and abs(t[i + 1, i]) > 1e-14:
            c = t[i + 1, i]
            b = t[i, i + 1]
            cos = 0.5 * (t[i, i] + t[i + 1, i + 1])
            sin = math.sqrt(max(-b * c, 0.0))
            theta = math.atan2(sin, cos)
            if c < 0:
                z[:, i + 1] = -z[:, i + 1]
            blocks.append(("rot", theta, [i, i + 1]))
            i += 2
        else:
            blocks.append(("real", float(t[i, i]), [i]))
            i += 1

    fixed = minus = 0
    angles: dict[float, int] = {}
    out_blocks = []
    for kind, val, idx in blocks:
        if kind == "real":
            dist = min(abs(val - 1), abs(val + 1))
            if EIG_TOL < dist:
                raise IllConditioned(f"real eigenvalue {val} of an orthogonal matrix")
            if abs(val - 1) <= EIG_TOL:
                fixed += 1
                out_blocks.append(np.array([[1.0]]))
            else:
                minus += 1
                out_blocks.append(np.array([[-1.0]]))
            continue
        theta = float(val)
        for ref, label in ((0.0, "fixed"), (math.pi, "minus")):
            gap = abs(theta - ref)
            if EIG_TOL < gap < EIG_AMBIGUOUS:
                raise IllConditioned(f"rotation angle {theta} too close to {ref}")
        if theta <= EIG_TOL:
            fixed += 2
            out_blocks.extend([np.array([[1.0]])] * 2)
        elif math.pi - theta <= EIG_TOL:
            minus += 2
            out_blocks.extend([np.array([[-1.0]])] * 2)
        else:
            key = next((k for k in angles if abs(k - theta) <= 1e-9), theta)
            angles[key] = angles.get(key, 0) + 1
            out_blocks.append(_rotation(theta))
    rot = tuple(sorted(angles.items()))
    z.setflags(write=False)
    return NormalDecomposition(fixed, minus, rot, z, tuple(out_blocks))


@dataclass(frozen=True)
class AffinePiece:
    """One connected component of a fixed set.

    ``tangent`` spans its directions; ``volume`` is its Riemannian volume
    (1 for a point, ``inf`` for a positive-dimensional linear subspace).
    """

    dimension: int
    basepoint: tuple
    tangent: tuple[tuple, ...]
    volume: float


@dataclass(frozen=True)
class TorusPiece(AffinePiece):
    """base + span(tangent) mod Z^n, with ``tangent`` a Z-basis of its lattice
    directions. ``frame_inverse`` is an integer unimodular matrix whose first
    ``n - dimension`` rows vanish on the tangent directions."""

    frame_inverse: tuple[tuple[int, ...], ...] = ()

    def _coords(self, point) -> list[Fraction]:
        diff = [Fraction(p) - q for p, q in zip(point, self.basepoint)]
        return [sum(c * d for c, d in zip(row, diff)) for row in self.frame_inverse]

    def contains(self, point) -> bool:
        codim = len(self.basepoint) - self.dimension
        return all(c.denominator == 1 for c in self._coords(point)[:codim])

    def coordinates(self, point) -> tuple[Fraction, ...]:
        """Position along the tangent basis, each in [0, 1)."""
        codim = len(self.basepoint) - self.dimension
        return tuple(c % 1 for c in self._coords(point)[codim:])

    def point(self, params: Sequence) -> tuple[Fraction, ...]:
        n = len(self.basepoint)
        return tuple(
            (self.basepoint[i] + sum(Fraction(s) * t[i] for s, t in zip(params, self.tangent))) % 1 for i in range(n)
        )

    def contains_direction(self, v: Sequence[int]) -> bool:
        codim = len(self.basepoint) - self.dimension
        return all(sum(c * x for c, x in zip(row, v)) == 0 for row in self.frame_inverse[:codim])

    def same_as(self, other: "TorusPiece") -> bool:
        return (
            self.dimension == other.dimension
            and self.contains(other.basepoint)
            and all(self.contains_direction(t) for t in other.tangent)
        )

    def is_subset_of(self, other: "TorusPiece") -> bool:
        return other.contains(self.basepoint) and all(other.contains_direction(t) for t in self.tangent)


@dataclass(frozen=True)
class SpherePiece(AffinePiece):
    """A great subsphere: a point (dim 0), a great circle through ``basepoint``
    with orthonormal ``tangent = (u, v)`` where u = basepoint / r, or all of S^2."""

    radius: float = 1.0

    def contains(self, point, tol: float = POINT_TOL) -> bool:
        p = np.asarray(point, dtype=float)
        if abs(np.linalg.norm(p) - self.radius) > tol * max(1.0, self.radius):
            return False
        if self.dimension == 0:
            return float(np.max(np.abs(p - np.asarray(self.basepoint)))) <= tol
        if self.dimension == 1:
            u, v = (np.asarray(x) for x in self.tangent)
            normal = np.cross(u, v)
            return abs(float(p @ normal)) <= tol
        return True

    def coordinates(self, point) -> tuple[float, ...]:
        if self.dimension != 1:
            raise ValueError("coordinates are only defined on great circles")
        u, v = (np.asarray(x) for x in self.tangent)
        p = np.asarray(point, dtype=float)
        return ((math.atan2(float(p @ v), float(p @ u)) / (2 * math.pi)) % 1.0,)

    def point(self, params: Sequence) -> tuple[float, ...]:
        if self.dimension != 1:
            raise ValueError("parametrization only for great circles")
        u, v = (np.asarray(x) for x in self.tangent)
        s = 2 * math.pi * float(params[0])
        return tuple(float(x) for x in self.radius * (math.cos(s) * u + math.sin(s) * v))

    def _directions(self) -> np.ndarray:
        if self.dimension == 0:
            return np.asarray(self.basepoint, dtype=float)[None, :] / self.radius
        if self.dimension == 1:
            return np.array(self.tangent, dtype=float)
        return np.eye(3)

    def is_subset_of(self, other: "SpherePiece") -> bool:
        if self.dimension == 0:
            return other.contains(self.basepoint)
        basis = other._directions()
        mine = self._directions()
        proj = mine @ basis.T @ basis
        return self.dimension <= other.dimension and float(np.max(np.abs(proj - mine))) <= POINT_TOL

    def same_as(self, other: "SpherePiece") -> bool:
        return self.dimension == other.dimension and self.is_subset_of(other)


@dataclass(frozen=True)
class FixedSet:
    components: tuple[AffinePiece, ...]

    @property
    def total_dimension(self) -> int | None:
        """Largest component dimension, ``None`` for an empty fixed set."""
        return max((c.dimension for c in self.components), default=None)

    @property
    def is_empty(self) -> bool:
        return not self.components


def _integer_columns(m: list[list[int]], cols: range) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(m[i][j]) for i in range(len(m))) for j in cols)


def torus_fixed_components(elements: Sequence[IsometryElement], geometry: ModelGeometry) -> FixedSet:
    """Common fixed points on R^n/Z^n of a set of torus isometries.

    Solves the stacked congruence (A_h - I) x = -b_h (mod Z) with one Smith
    normal form D = U M V: in y = V^{-1} x it decouples into d_i y_i = c_i.
    """
    n = geometry.dimension
    rows: list[list[int]] = []
    rhs: list[Fraction] = []
    for h in elements:
        a = h.linear.tolist()
        for i in range(n):
            rows.append([a[i][j] - int(i == j) for j in range(n)])
            rhs.append(-h.translation[i])
    if not rows or all(x == 0 for row in rows for x in row) and all(c % 1 == 0 for c in rhs):
        tangent = tuple(tuple(int(i == j) for i in range(n)) for j in range(n))
        return FixedSet((TorusPiece(n, tuple(Fraction(0) for _ in range(n)), tangent,
                                    geometry.cover_volume, tuple(tuple(r) for r in il.identity(n))),))
    d, u, v = il.smith_decomposition(rows)
    m = len(rows)
    r = sum(1 for i in range(min(m, n)) if d[i][i] != 0)
    c = [sum(u[i][k] * rhs[k] for k in range(m)) for i in range(m)]
    if any(c[i].denominator != 1 for i in range(r, m)):
        return FixedSet(())
    vinv = [[int(x) for x in row] for row in il.inverse(v)]
    tangent = _integer_columns(v, range(r, n))
    dim = n - r
    if dim:
        g = geometry.gram
        tgt = [[sum(t1[i] * g[i][j] * t2[j] for i in range(n) for j in range(n)) for t2 in tangent] for t1 in tangent]
        volume = math.sqrt(float(il.det(tgt)))
    else:
        volume = 1.0
    pieces = []
    for ks in product(*(range(d[i][i]) for i in range(r))):
        y = [(c[i] + ks[i]) / d[i][i] for i in range(r)] + [Fraction(0)] * dim
        x = tuple(sum(v[i][j] * y[j] for j in range(n)) % 1 for i in range(n))
        pieces.append(TorusPiece(dim, x, tangent, volume, tuple(map(tuple, vinv))))
    pieces.sort(key=lambda p: p.basepoint)
    return FixedSet(tuple(pieces))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-9))
    return -v if v[k] < 0 else v


def sphere_fixed_components(elements: Sequence[IsometryElement], geometry: ModelGeometry) -> FixedSet:
    """Common fixed points on S^2: the unit sphere of the common +1 eigenspace."""
    r = geometry.radius
    if elements:
        stacked = np.vstack([g.linear - np.eye(3) for g in elements])
        _, s, vt = np.linalg.svd(stacked)
        s = np.concatenate([s, np.zeros(3 - len(s))])
        null = vt[s <= 1e-9]
    else:
        null = np.eye(3)
    k = null.shape[0]
    if k == 0:
        return FixedSet(())
    if k == 3:
        return FixedSet((SpherePiece(2, (0.0, 0.0, r), (), 4 * math.pi * r**2, r),))
    if k == 1:
        u = _canonical_sign(null[0])
        return FixedSet(tuple(SpherePiece(0, tuple(float(x) for x in s_ * r * u), (), 1.0, r) for s_ in (1, -1)))
    q, _ = np.linalg.qr(null.T)
    u = _canonical_sign(q[:, 0])
    v = q[:, 1] - (q[:, 1] @ u) * u
    v = _canonical_sign(v / np.linalg.norm(v))
    return FixedSet((SpherePiece(1, tuple(float(x) for x in r * u),
                                 (tuple(float(x) for x in u), tuple(float(x) for x in v)), 2 * math.pi * r, r),))


def fixed_components(elements: Sequence[IsometryElement], geometry: ModelGeometry) -> FixedSet:
    if geometry.is_torus:
        return torus_fixed_components(elements, geometry)
    return sphere_fixed_components(elements, geometry)


def fixed_set_torus(g: IsometryElement, geometry: ModelGeometry) -> FixedSet:
    """All components of fix(g) on the torus; empty when g acts freely."""
    if not geometry.is_torus:
        raise UnsupportedGeometry("fixed_set_torus needs a flat torus")
    _check_compatible(g, geometry)
    return torus_fixed_components([g], geometry)


def fixed_set_sphere(g: IsometryElement, geometry: ModelGeometry) -> FixedSet:
    if geometry.is_torus:
        raise UnsupportedGeometry("fixed_set_sphere needs a sphere")
    return sphere_fixed_components([g], geometry)


def fixed_set(g: IsometryElement, geometry: ModelGeometry) -> FixedSet:
    return fixed_set_torus(g, geometry) if geometry.is_torus else fixed_set_sphere(g, geometry)


def fixed_set_linear(g: IsometryElement, geometry: ModelGeometry | None = None) -> FixedSet:
    """ker(A - I) as a single linear piece through the origin of R^m."""
    m = g.size
    if g.is_exact:
        if any(x != 0 for x in g.translation):
            raise ValueError("fixed_set_linear needs a linear element (zero translation)")
        mat = [[int(g.linear[i, j]) - int(i == j) for j in range(m)] for i in range(m)]
        basis = tuple(tuple(col) for col in il.integer_kernel_basis(mat, m))
        origin = tuple(Fraction(0) for _ in range(m))
    else:
        nd = normal_decomposition(g)
        _, s, vt = np.linalg.svd(g.linear - np.eye(m))
        basis = tuple(tuple(float(x) for x in row) for row in vt[s <= 1e-9])
        if len(basis) != nd.fixed_dim:
            raise IllConditioned("kernel dimension disagrees with the eigenvalue count")
        origin = tuple(0.0 for _ in range(m))
    dim = len(basis)
    return FixedSet((AffinePiece(dim, origin, basis, 1.0 if dim == 0 else math.inf),))


def linear_fixed_dim(g: IsometryElement) -> int:
    """dim ker(A - I) of the linear part, exact for torus elements."""
    m = g.size
    if g.is_exact:
        return m - il.rank([[int(g.linear[i, j]) - int(i == j) for j in range(m)] for i in range(m)])
    s = np.linalg.svd(g.linear - np.eye(m), compute_uv=False)
    return int(np.sum(s <= 1e-9))


def manifold_fixed_dim(g: IsometryElement, geometry: ModelGeometry) -> int | None:
    """Dimension of fix(g) as a subset of the model space, ``None`` if empty."""
    return fixed_set(g, geometry).total_dimension
