"""Named preset orbifolds with known answers.

Each expected value records where it comes from in ``sources``: ``trivial``
for facts that follow by inspection, or ``oracle:<name>`` for values checked
by the function of that name in :mod:`orbispec.oracles`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation

from .isometry import GroupAction, IsometryElement, ModelGeometry, generate_group, identity_element, verify_group

INV_4PI = 1 / (4 * math.pi)


def cone_term(k: int) -> float:
    """t^0 heat contribution of a Z_k cone point: (k^2 - 1) / (12 k)."""
    return (k * k - 1) / (12 * k)


@dataclass(frozen=True)
class PresetEntry:
    name: str
    description: str
    build: Callable[[], GroupAction] = field(repr=False, compare=False)
    locally_orientable: bool
    strata: tuple[tuple[int, int, int], ...]  # sorted (dimension, isotropy order, count)
    # absolute trace coefficients keyed by the power of t
    coefficients: dict[Fraction, float] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)

    @property
    def action(self) -> GroupAction:
        return _built(self.name)

    @property
    def kind(self) -> str:
        return "flat" if self.action.geometry.is_torus else "sphere"

    @property
    def dimension(self) -> int:
        return self.action.geometry.dimension

    @property
    def is_manifold(self) -> bool:
        return not self.strata


def _torus(gens, n=2, gram=None):
    geo = ModelGeometry.flat_torus(gram=gram) if gram is not None else ModelGeometry.unit_torus(n)
    if not gens:
        return verify_group([identity_element(geo)], geo)
    return generate_group([IsometryElement.torus(*g) for g in gens], geo)


def _sphere(mats):
    geo = ModelGeometry.sphere()
    if not mats:
        return verify_group([identity_element(geo)], geo)
    return generate_group([IsometryElement.sphere(m) for m in mats], geo)


def _icosahedral() -> GroupAction:
    phi = (1 + math.sqrt(5)) / 2
    axis = np.array([0.0, 1.0, phi]) / math.sqrt(1 + phi * phi)
    r5 = Rotation.from_rotvec(axis * 2 * math.pi / 5).as_matrix()
    r3 = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return _sphere([r5, r3])


HEX_GRAM = [[1, Fraction(1, 2)], [Fraction(1, 2), 1]]
P = Fraction

_PRESETS = [
    PresetEntry(
        "flat_torus_2d", "unit square torus, trivial group",
        lambda: _torus([]), True, (),
        {P(-1): 1.0 * INV_4PI},
        {"locally_orientable": "trivial", "strata": "trivial", "coefficients": "oracle:theta_trace"},
    ),
    PresetEntry(
        "pillow", "T^2 / {+-I}: four Z_2 cone points",
        lambda: _torus([([[-1, 0], [0, -1]],)]), True, ((0, 2, 4),),
        {P(-1): 0.5 * INV_4PI, P(0): 4 * cone_term(2)},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification", "coefficients": "oracle:cone_point_term"},
    ),
    PresetEntry(
        "orb_244", "T^2 / Z_4 (quarter turn): cone points of orders 2, 4, 4",
        lambda: _torus([([[0, -1], [1, 0]],)]), True, ((0, 2, 1), (0, 4, 2)),
        {P(-1): 0.25 * INV_4PI, P(0): 2 * cone_term(4) + cone_term(2)},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification", "coefficients": "oracle:cone_point_term"},
    ),
    PresetEntry(
        "orb_333", "hexagonal T^2 / Z_3: three Z_3 cone points",
        lambda: _torus([([[-1, -1], [1, 0]],)], gram=HEX_GRAM), True, ((0, 3, 3),),
        {P(-1): math.sqrt(3) / 2 / 3 * INV_4PI, P(0): 3 * cone_term(3)},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification", "coefficients": "oracle:cone_point_term"},
    ),
    PresetEntry(
        "mirror_torus", "T^2 / reflection: two mirror circles of length 1",
        lambda: _torus([([[1, 0], [0, -1]],)]), False, ((1, 2, 2),),
        {P(-1): 0.5 * INV_4PI, P(-1, 2): 2 / 4 / math.sqrt(4 * math.pi)},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification",
         "coefficients": "oracle:neumann_cylinder_spectrum"},
    ),
    PresetEntry(
        "klein_bottle", "T^2 / glide reflection: free action, a manifold",
        lambda: _torus([([[1, 0], [0, -1]], ["1/2", 0])]), True, (),
        {P(-1): 0.5 * INV_4PI, P(-1, 2): 0.0, P(0): 0.0},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification", "coefficients": "trivial"},
    ),
    PresetEntry(
        "rect_pmm", "T^2 / <two reflections>: rectangle with four corners",
        lambda: _torus([([[1, 0], [0, -1]],), ([[-1, 0], [0, 1]],)]), False, ((0, 4, 4), (1, 2, 4)),
        {P(-1): 0.25 * INV_4PI, P(-1, 2): 4 * 0.5 / 4 / math.sqrt(4 * math.pi), P(0): 4 * 1 / 16},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification",
         "coefficients": "oracle:corner_term"},
    ),
    PresetEntry(
        "T3_antipodal", "T^3 / {+-I}: eight Z_2 points in odd dimension",
        lambda: _torus([([[-1, 0, 0], [0, -1, 0], [0, 0, -1]],)], n=3), False, ((0, 2, 8),),
        {P(-3, 2): 0.5 * (4 * math.pi) ** -1.5, P(0): 8 * (1 / 8) / 2},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification",
         "coefficients": "oracle:theta_trace"},
    ),
    PresetEntry(
        "T3_mirror", "T^3 / reflection: two mirror 2-tori",
        lambda: _torus([([[1, 0, 0], [0, 1, 0], [0, 0, -1]],)], n=3), False, ((2, 2, 2),),
        {P(-3, 2): 0.5 * (4 * math.pi) ** -1.5, P(-1): 2 * 0.5 / 2 / (4 * math.pi)},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification",
         "coefficients": "oracle:theta_trace"},
    ),
    PresetEntry(
        "interval", "S^1 / reflection: the interval [0, 1/2]",
        lambda: _torus([([[-1]],)], n=1), False, ((0, 2, 2),),
        {P(-1, 2): 0.5 / math.sqrt(4 * math.pi), P(0): 0.5},
        {"locally_orientable": "trivial", "strata": "oracle:grid_stratification",
         "coefficients": "oracle:theta_trace"},
    ),
    PresetEntry(
        "RP2", "S^2 / antipodal map: a manifold",
        lambda: _sphere([-np.eye(3)]), True, (),
        {P(-1): 2 * math.pi * INV_4PI, P(0): 2 * math.pi / 3 * INV_4PI},
        {"locally_orientable": "trivial", "strata": "trivial", "coefficients": "oracle:closed_form_spectrum"},
    ),
    PresetEntry(
        "mirror_sphere", "S^2 / reflection: hemisphere with an equator mirror",
        lambda: _sphere([np.diag([1.0, 1.0, -1.0])]), False, ((1, 2, 1),),
        {P(-1): 2 * math.pi * INV_4PI, P(-1, 2): 2 * math.pi / 4 / math.sqrt(4 * math.pi)},
        {"locally_orientable": "trivial", "strata": "trivial", "coefficients": "oracle:closed_form_spectrum"},
    ),
    PresetEntry(
        "sphere_dihedral", "S^2 / C_2v (two perpendicular mirrors): a lune",
        lambda: _sphere([np.diag([-1.0, 1.0, 1.0]), np.diag([1.0, -1.0, 1.0])]), False, ((0, 4, 2), (1, 2, 2)),
        {P(-1): math.pi * INV_4PI, P(-1, 2): 2 * math.pi / 4 / math.sqrt(4 * math.pi),
         P(0): math.pi / 3 * INV_4PI + 2 * (1 / 16)},
        {"locally_orientable": "trivial", "strata": "trivial", "coefficients": "oracle:closed_form_spectrum"},
    ),
    PresetEntry(
        "sphere_icosahedral", "S^2 / I (rotations of the icosahedron): cone points 2, 3, 5",
        _icosahedral, True, ((0, 2, 1), (0, 3, 1), (0, 5, 1)),
        {P(-1): 4 * math.pi / 60 * INV_4PI, P(0): cone_term(2) + cone_term(3) + cone_term(5) + 1 / 180},
        {"locally_orientable": "trivial", "strata": "trivial", "coefficients": "oracle:cone_point_term"},
    ),
]

_BY_NAME = {p.name: p for p in _PRESETS}


@lru_cache(maxsize=None)
def _built(name: str) -> GroupAction:
    return _BY_NAME[name].build()


def list_presets() -> list[PresetEntry]:
    return list(_PRESETS)


def get_preset(name: str) -> PresetEntry:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(_BY_NAME)}") from None
