"""Independent reference computations used to check the main pipeline.

Nothing here shares code paths with the Smith-form fixed sets, the strata
closure or the character sums: isotropy is read off a rational grid, harmonic
invariants are counted by evaluating polynomials, and traces come from
closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .isometry import GroupAction, IsometryElement, ModelGeometry

GRID_DENOMINATOR = 24


def cone_point_term(k: int) -> float:
    """t^0 heat term of a Z_k cone point, (k^2 - 1) / (12 k)."""
    return (k * k - 1) / (12 * k)


def corner_term(alpha: float) -> float:
    """t^0 heat term of a Neumann corner of interior angle alpha."""
    return (math.pi**2 - alpha**2) / (24 * math.pi * alpha)


# --- rational grid isotropy -------------------------------------------------------


def _grid(n: int, N: int) -> np.ndarray:
    return np.stack(np.meshgrid(*([np.arange(N)] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _grid_images(g: IsometryElement, pts: np.ndarray, N: int) -> np.ndarray:
    shift = np.array([int(x * N) for x in g.translation], dtype=np.int64)
    if any(Fraction(x * N).denominator != 1 for x in g.translation):
        raise ValueError(f"translation not on the 1/{N} grid")
    return (pts @ np.asarray(g.linear, dtype=np.int64).T + shift) % N


def grid_fixed_points(g: IsometryElement, N: int = GRID_DENOMINATOR) -> list[tuple[Fraction, ...]]:
    """Grid points k/N fixed by g, found by direct evaluation."""
    pts = _grid(g.size, N)
    fixed = np.all(_grid_images(g, pts, N) == pts, axis=1)
    return [tuple(Fraction(int(c), N) for c in p) for p in pts[fixed]]


@dataclass(frozen=True)
class GridComponent:
    points: frozenset[tuple[int, ...]]
    dimension: int
    isotropy: frozenset[int]


def _components(points: set[tuple[int, ...]], N: int, n: int) -> list[tuple[frozenset, int]]:
    """Connected components under the 3^n - 1 neighbour steps (with wraparound),
    each with the rank of the steps used inside it."""
    steps = [s for s in itertools.product((-1, 0, 1), repeat=n) if any(s)]
    seen: set = set()
    out = []
    for start in sorted(points):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        used = []
        while stack:
            p = stack.pop()
            for s in steps:
                q = tuple((a + b) % N for a, b in zip(p, s))
                if q in points:
                    used.append(s)
                    if q not in comp:
                        comp.add(q)
                        stack.append(q)
        seen |= comp
        dim = int(np.linalg.matrix_rank(np.array(used))) if used else 0
        out.append((frozenset(comp), dim))
    return out


def grid_fixed_components(g: IsometryElement, N: int = GRID_DENOMINATOR) -> list[tuple[frozenset, int]]:
    pts = _grid(g.size, N)
    fixed = np.all(_grid_images(g, pts, N) == pts, axis=1)
    return _components({tuple(int(c) for c in p) for p in pts[fixed]}, N, g.size)


def grid_stratification(action: GroupAction, N: int = GRID_DENOMINATOR) -> list[tuple[int, int, int]]:
    """Brute-force singular strata summary [(dimension, isotropy order, count)].

    Isotropy is evaluated at every point of the 1/N grid, points with equal
    isotropy subgroups are split into grid-connected pieces, and pieces are
    identified under the group. Fixed directions must be grid steps in
    {-1, 0, 1}^n, which holds for all catalog groups.
    """
    geo = action.geometry
    if not geo.is_torus:
        raise ValueError("grid stratification needs a torus")
    n = geo.dimension
    pts = _grid(n, N)
    images = [_grid_images(g, pts, N) for g in action.elements]
    fixes = np.stack([np.all(im == pts, axis=1) for im in images], axis=1)
    by_iso: dict[frozenset, set] = {}
    for p, row in zip(pts, fixes):
        iso = frozenset(np.nonzero(row)[0].tolist())
        if len(iso) > 1:
            by_iso.setdefault(iso, set()).add(tuple(int(c) for c in p))
    pieces: list[GridComponent] = []
    for iso, ps in by_iso.items():
        for comp, dim in _components(ps, N, n):
            pieces.append(GridComponent(comp, dim, iso))
    where = {}
    for i, c in enumerate(pieces):
        for p in c.points:
            where[p] = i
    parent = list(range(len(pieces)))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    index = {tuple(int(c) for c in p): k for k, p in enumerate(pts)}
    for i, c in enumerate(pieces):
        p = next(iter(c.points))
        k = index[p]
        for im in images:
            j = where[tuple(int(x) for x in im[k])]
            parent[root(i)] = root(j)
    classes: dict[int, list[int]] = {}
    for i in range(len(pieces)):
        classes.setdefault(root(i), []).append(i)
    counts: dict[tuple[int, int], int] = {}
    for members in classes.values():
        c = pieces[members[0]]
        key = (c.dimension, len(c.isotropy))
        counts[key] = counts.get(key, 0) + 1
    return sorted((d, o, k) for (d, o), k in counts.items())


def grid_isotropy(point, action: GroupAction) -> frozenset[int]:
    return frozenset(i for i, g in enumerate(action.elements) if g.fixes(point))


# --- spectra in closed form -----------------------------------------------------


def neumann_cylinder_spectrum(cutoff: float) -> dict[int, int]:
    """Spectrum of S^1 (length 1) x [0, 1/2] with Neumann ends, as a map from
    q to the multiplicity of 4 pi^2 q: eigenfunctions e^{2 pi i k x} cos(2 pi m y)."""
    qmax = int(math.floor(cutoff / (4 * math.pi**2) * (1 + 1e-15)))
    K = math.isqrt(qmax)
    out: dict[int, int] = {}
    for k in range(-K, K + 1):
        for m in range(0, K + 1):
            q = k * k + m * m
            if q <= qmax:
                out[q] = out.get(q, 0) + 1
    return out


def theta_trace(geometry: ModelGeometry, t: float, terms: int = 12) -> float:
    """Heat trace of the cover torus from the Poisson dual (Jacobi) form:
    vol (4 pi t)^(-n/2) sum_v exp(-v^T G v / 4t) over lattice vectors v."""
    n = geometry.dimension
    g = geometry.gram_float
    rng = np.arange(-terms, terms + 1)
    grid = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    q = np.einsum("ij,jk,ik->i", grid, g, grid)
    return geometry.cover_volume * (4 * math.pi * t) ** (-n / 2) * float(np.sum(np.exp(-q / (4 * t))))


def direct_torus_trace(geometry: ModelGeometry, t: float, radius: int) -> float:
    """sum_k exp(-4 pi^2 t k^T G^-1 k) by brute force over a box of dual vectors."""
    n = geometry.dimension
    ginv = np.linalg.inv(geometry.gram_float)
    rng = np.arange(-radius, radius + 1)
    grid = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    q = np.einsum("ij,jk,ik->i", grid, ginv, grid)
    return float(np.sum(np.exp(-4 * math.pi**2 * t * q)))


def closed_form_spectrum(l_max: int, mirrors: str = "", antipodal: bool = False) -> dict[int, int]:
    """Degree -> multiplicity for S^2 modulo coordinate mirrors and/or -I.

    Counts the real harmonics P_l^m(cos theta) cos(m phi), sin(m phi) whose
    parities under each generator are all +1. ``mirrors`` lists the negated
    axes, e.g. "xy".
    """
    out = {}
    for l in range(l_max + 1):
        count = 0
        for m in range(l + 1):
            for kind in ("cos", "sin") if m else ("cos",):
                par = {"z": (-1) ** (l + m), "y": 1 if kind == "cos" else -1}
                par["x"] = (-1) ** m * par["y"]
                ok = all(par[a] == 1 for a in mirrors) and (not antipodal or l % 2 == 0)
                count += ok
        if count:
            out[l] = count
    return out


# --- spherical harmonics by evaluation ------------------------------------------


def _monomials(l: int) -> list[tuple[int, int, int]]:
    return [(a, b, l - a - b) for a in range(l + 1) for b in range(l + 1 - a)]


def harmonic_basis(l: int) -> list[dict[tuple[int, int, int], Fraction]]:
    """Exact basis of the degree-l harmonic polynomials in x, y, z."""
    src = _monomials(l)
    dst = {m: i for i, m in enumerate(_monomials(l - 2))} if l >= 2 else {}
    lap = sympy.zeros(len(dst), len(src))
    for j, (a, b, c) in enumerate(src):
        for axis, e in enumerate((a, b, c)):
            if e >= 2:
                m = [a, b, c]
                m[axis] -= 2
                lap[dst[tuple(m)], j] += e * (e - 1)
    null = lap.nullspace() if dst else [sympy.eye(len(src))[:, j] for j in range(len(src))]
    return [{src[i]: Fraction(int(v[i].p), int(v[i].q)) for i in range(len(src)) if v[i] != 0} for v in null]


def _evaluate(poly, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts))
    for (a, b, c), coef in poly.items():
        out += float(coef) * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c
    return out


def invariant_harmonics(action: GroupAction, l: int, samples: int = 64, seed: int = 0) -> int:
    """Dimension of the G-invariant degree-l harmonics, by averaging each basis
    polynomial over the group and taking the numerical rank of the results."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(samples, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    basis = harmonic_basis(l)
    averaged = np.zeros((len(basis), samples))
    for g in action.elements:
        moved = pts @ np.asarray(g.linear, dtype=float).T
        averaged += np.array([_evaluate(p, moved) for p in basis])
    averaged /= action.order
    s = np.linalg.svd(averaged, compute_uv=False)
    return int(np.sum(s > 1e-8 * max(1.0, s[0] if s.size else 1.0)))


# --- openness sampling for iso^max -----------------------------------------------


def open_in_fixed_set(point, g: IsometryElement, isotropy: frozenset[int], action: GroupAction,
                      samples: int = 8, seed: int = 0) -> bool:
    """Whether points of fix(g) near ``point`` all keep the isotropy group
    ``isotropy``, i.e. the stratum through ``point`` is open in fix(g)."""
    from .isometry import fixed_set

    comps = fixed_set(g, action.geometry).components
    comp = next(c for c in comps if c.contains(point))
    if comp.dimension == 0:
        return True
    rng = np.random.default_rng(seed)
    base = comp.coordinates(point)
    for _ in range(samples):
        if action.geometry.is_torus:
            step = [Fraction(int(rng.integers(-5, 6)), 997) for _ in range(comp.dimension)]
        else:
            step = [float(x) * 1e-3 for x in rng.normal(size=comp.dimension)]
        q = comp.point([b + s for b, s in zip(base, step)])
        if grid_isotropy(q, action) != isotropy:
            return False
    return True
