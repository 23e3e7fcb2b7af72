import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from orbispec.catalog import get_preset, list_presets
from orbispec.errors import (
    DegenerateDeterminant,
    DuplicateElement,
    IllConditioned,
    NoIdentity,
    NonIntegralLinearPart,
    NotClosed,
    NotEffective,
    NotIsometric,
)
from orbispec.isometry import (
    EPS,
    IsometryElement,
    ModelGeometry,
    Orientation,
    fixed_set,
    fixed_set_linear,
    fixed_set_torus,
    generate_group,
    identity_element,
    linear_fixed_dim,
    normal_decomposition,
    orientation,
    verify_group,
)
from orbispec.oracles import grid_fixed_components, grid_fixed_points

T2 = ModelGeometry.unit_torus(2)
T3 = ModelGeometry.unit_torus(3)
S2 = ModelGeometry.sphere()


def tor(a, b=None):
    return IsometryElement.torus(a, b)


# --- verify_group ------------------------------------------------------------------


def test_trivial_group_has_order_one():
    assert verify_group([identity_element(T2)], T2).order == 1


def test_antipodal_involution_on_square_torus():
    g = verify_group([tor([[1, 0], [0, 1]]), tor([[-1, 0], [0, -1]])], T2)
    assert g.order == 2
    assert g.table.tolist() == [[0, 1], [1, 0]]


def test_icosahedral_closure_has_order_60():
    action = get_preset("sphere_icosahedral").action
    assert action.order == 60
    # the closure again, from the full element list
    again = verify_group(list(action.elements), S2)
    assert again.order == 60
    assert all(abs(g.det() - 1) < 1e-9 for g in action.elements)


def test_missing_identity():
    with pytest.raises(NoIdentity):
        verify_group([tor([[-1, 0], [0, -1]])], T2)
    with pytest.raises(NoIdentity):
        verify_group([], T2)


def test_not_closed():
    r = tor([[0, -1], [1, 0]])
    with pytest.raises(NotClosed):
        verify_group([identity_element(T2), r], T2)


def test_not_isometric_for_shear():
    with pytest.raises(NotIsometric):
        verify_group([identity_element(T2), tor([[1, 1], [0, 1]])], T2)


def test_integer_translation_is_the_identity():
    # b is taken mod the lattice, so (I, (1, 0)) is the identity map again
    dup = tor([[1, 0], [0, 1]], [1, 0])
    with pytest.raises((NotEffective, DuplicateElement)):
        verify_group([identity_element(T2), dup], T2)


def test_duplicate_sphere_elements():
    m = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(DuplicateElement):
        verify_group([identity_element(S2), IsometryElement.sphere(m), IsometryElement.sphere(m + 1e-13)], S2)


def test_non_integral_linear_part():
    with pytest.raises(NonIntegralLinearPart):
        tor([[Fraction(1, 2), 0], [0, 1]])


def test_closure_cap():
    with pytest.raises(NotClosed):
        generate_group([IsometryElement.sphere(Rotation.from_rotvec([0, 0, 1.0]).as_matrix())], S2, cap=50)


@pytest.mark.parametrize("preset", [p.name for p in list_presets()])
def test_verify_is_idempotent(preset):
    action = get_preset(preset).action
    again = verify_group(list(action.elements), action.geometry)
    assert np.array_equal(again.table, action.table)
    assert all(a.same_as(b) for a, b in zip(again.elements, action.elements))


# --- orientation and normal decomposition ----------------------------------------


def test_orientation_examples():
    assert orientation(identity_element(T2)) is Orientation.PRESERVING
    assert orientation(tor([[1, 0], [0, -1]])) is Orientation.REVERSING
    # rotation by 2 pi / 3 on the hexagonal lattice
    action = get_preset("orb_333").action
    r3 = action.elements[1]
    assert action.order == 3 and linear_fixed_dim(r3) == 0
    assert orientation(r3) is Orientation.PRESERVING


def test_degenerate_determinant():
    with pytest.raises(DegenerateDeterminant):
        orientation(IsometryElement.sphere(np.diag([1.0, 1.0, 0.5])))


def test_normal_decomposition_examples():
    nd = normal_decomposition(identity_element(T3), T3)
    assert (nd.fixed_dim, nd.minus_one_dim, nd.rotation_angles) == (3, 0, ())
    nd = normal_decomposition(tor([[-1, 0], [0, -1]]), T2)
    assert (nd.fixed_dim, nd.minus_one_dim) == (0, 2)
    nd = normal_decomposition(tor([[0, -1], [1, 0]]), T2)
    assert nd.fixed_dim == 0 and nd.minus_one_dim == 0
    [(theta, mult)] = nd.rotation_angles
    assert theta == pytest.approx(math.pi / 2, abs=1e-12) and mult == 1


def test_normal_decomposition_rejects_non_orthogonal():
    with pytest.raises(IllConditioned):
        normal_decomposition(IsometryElement.sphere(np.diag([1.0, 2.0, 0.5])))


orthogonal = st.builds(
    lambda q, s: np.asarray(Rotation.from_quat(q).as_matrix()) * s,
    st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(lambda q: np.linalg.norm(q) > 0.1),
    st.sampled_from([1.0, -1.0]),
)


@given(orthogonal)
def test_normal_decomposition_reconstructs(a):
    g = IsometryElement.sphere(a)
    try:
        nd = normal_decomposition(g)
    except IllConditioned:
        return  # angle within 1e-7 of 0 or pi: refused on purpose
    assert np.linalg.norm(nd.reconstruct() - a, 2) <= 100 * EPS
    assert nd.det_sign == (1 if np.linalg.det(a) > 0 else -1)
    assert nd.fixed_dim + nd.minus_one_dim + 2 * nd.rotation_planes == 3


def signed_permutation(n):
    return st.tuples(st.permutations(range(n)), st.lists(st.sampled_from([1, -1]), min_size=n, max_size=n)).map(
        lambda ps: [[ps[1][i] if ps[0][i] == j else 0 for j in range(n)] for i in range(n)]
    )


@given(st.one_of(signed_permutation(2), signed_permutation(3)))
def test_codimension_parity_matches_orientation(a):
    g = tor(a)
    n = len(a)
    geo = ModelGeometry.unit_torus(n)
    fdim = linear_fixed_dim(g)
    nd = normal_decomposition(g, geo)
    assert (n - fdim) % 2 == nd.minus_one_dim % 2
    if fdim < n:
        assert ((n - fdim) % 2 == 1) == (orientation(g) is Orientation.REVERSING)


# --- fixed sets --------------------------------------------------------------------


def test_fixed_set_linear_examples():
    assert fixed_set_linear(identity_element(T2)).components[0].dimension == 2
    [c] = fixed_set_linear(tor([[1, 0], [0, -1]])).components
    assert c.dimension == 1 and c.tangent == ((1, 0),)
    [c] = fixed_set_linear(tor([[-1, 0], [0, -1]])).components
    assert c.dimension == 0 and c.basepoint == (0, 0)


def test_fixed_set_torus_identity():
    [c] = fixed_set_torus(identity_element(T2), T2).components
    assert c.dimension == 2 and c.volume == pytest.approx(1.0)


def test_fixed_set_torus_antipodal_points():
    fs = fixed_set_torus(tor([[-1, 0], [0, -1]]), T2)
    assert {c.basepoint for c in fs.components} == {
        (Fraction(a), Fraction(b)) for a in (0, Fraction(1, 2)) for b in (0, Fraction(1, 2))
    }
    assert all(c.dimension == 0 for c in fs.components)


def test_fixed_set_torus_mirror_circles():
    fs = fixed_set_torus(tor([[1, 0], [0, -1]]), T2)
    assert sorted(c.basepoint[1] for c in fs.components) == [0, Fraction(1, 2)]
    assert all(c.dimension == 1 and c.volume == pytest.approx(1.0) for c in fs.components)


def test_free_glide_has_empty_fixed_set():
    fs = fixed_set_torus(tor([[1, 0], [0, -1]], [Fraction(1, 2), 0]), T2)
    assert fs.is_empty and fs.total_dimension is None


def _check_against_grid(g, geo, N=24):
    fs = fixed_set(g, geo)
    grid = grid_fixed_components(g, N)
    assert len(fs.components) == len(grid)
    assert sorted(c.dimension for c in fs.components) == sorted(d for _, d in grid)
    for p in grid_fixed_points(g, N):
        assert sum(c.contains(p) for c in fs.components) == 1
    for c in fs.components:
        assert g.fixes(c.basepoint)


@pytest.mark.parametrize("preset", [p.name for p in list_presets() if p.kind == "flat"])
def test_catalog_fixed_sets_match_grid(preset):
    action = get_preset(preset).action
    for g in action.elements[1:]:
        _check_against_grid(g, action.geometry)


@given(signed_permutation(2), st.lists(st.integers(0, 11), min_size=2, max_size=2))
def test_fixed_sets_match_grid_2d(a, b):
    _check_against_grid(tor(a, [Fraction(x, 12) for x in b]), T2)


@given(signed_permutation(3), st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_fixed_sets_match_grid_3d(a, b):
    _check_against_grid(tor(a, [Fraction(x, 4) for x in b]), T3)


def test_sphere_fixed_sets():
    mirror = IsometryElement.sphere(np.diag([1.0, 1.0, -1.0]))
    [c] = fixed_set(mirror, S2).components
    assert c.dimension == 1 and c.volume == pytest.approx(2 * math.pi)
    rot = IsometryElement.sphere(Rotation.from_rotvec([0, 0, math.pi / 2]).as_matrix())
    comps = fixed_set(rot, S2).components
    assert sorted(tuple(np.round(c.basepoint, 12)) for c in comps) == [(0.0, 0.0, -1.0), (0.0, 0.0, 1.0)]
    assert fixed_set(IsometryElement.sphere(-np.eye(3)), S2).is_empty


def test_sign_flips_fix_the_expected_points():
    for signs in itertools.product((1, -1), repeat=3):
        g = tor(np.diag(signs).tolist())
        fs = fixed_set(g, T3)
        minus = signs.count(-1)
        assert len(fs.components) == 2**minus
        assert all(c.dimension == 3 - minus for c in fs.components)
