import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from orbispec import oracles
from orbispec.catalog import cone_term, get_preset, list_presets
from orbispec.heat_fit import FitConfig, TraceSample, extract_coefficients
from orbispec.isometry import ModelGeometry
from orbispec.oracles import closed_form_spectrum, cone_point_term, corner_term, neumann_cylinder_spectrum, theta_trace
from orbispec.stratification import enumerate_strata, is_locally_orientable

PRESETS = list_presets()
REQUIRED = ("flat_torus_2d", "pillow", "orb_244", "mirror_torus", "klein_bottle",
            "T3_antipodal", "RP2", "mirror_sphere", "sphere_dihedral")


def test_required_presets_exist():
    names = [p.name for p in PRESETS]
    assert len(names) == len(set(names)) >= 9
    assert all(n in names for n in REQUIRED)


def test_catalog_covers_each_class():
    dims = {p.dimension % 2 for p in PRESETS}
    assert dims == {0, 1}
    assert {p.locally_orientable for p in PRESETS} == {True, False}
    assert {p.is_manifold for p in PRESETS} == {True, False}
    assert {p.kind for p in PRESETS} == {"flat", "sphere"}


def test_unknown_preset():
    with pytest.raises(KeyError, match="unknown preset"):
        get_preset("nope")


@pytest.mark.parametrize("p", PRESETS, ids=lambda p: p.name)
def test_sources_name_real_oracles(p):
    assert set(p.sources) == {"locally_orientable", "strata", "coefficients"}
    for tag in p.sources.values():
        assert tag == "trivial" or (tag.startswith("oracle:") and callable(getattr(oracles, tag[7:], None)))


@pytest.mark.parametrize("p", PRESETS, ids=lambda p: p.name)
def test_recorded_facts_match_the_pipeline(p):
    action = p.action
    assert is_locally_orientable(action)[0] == p.locally_orientable
    assert tuple(enumerate_strata(action).summary()) == p.strata
    # leading term is the volume
    n = p.dimension
    area = action.geometry.cover_volume / action.order
    assert p.coefficients[Fraction(-n, 2)] == pytest.approx(area * (4 * math.pi) ** (-n / 2), rel=1e-12)


def test_klein_mirror_and_t3_facts():
    klein = get_preset("klein_bottle")
    assert klein.is_manifold and klein.locally_orientable
    assert get_preset("mirror_torus").strata == ((1, 2, 2),)
    t3 = get_preset("T3_antipodal")
    assert t3.strata == ((0, 2, 8),) and not t3.locally_orientable


def test_cone_term_matches_its_oracle():
    assert all(cone_term(k) == cone_point_term(k) for k in range(2, 12))
    assert cone_point_term(2) == pytest.approx(1 / 8)


def _cone_sum(p):
    return sum(count * cone_point_term(order) for dim, order, count in p.strata if dim == 0)


@pytest.mark.parametrize("name", ["pillow", "orb_244", "orb_333"])
def test_flat_cone_coefficients(name):
    p = get_preset(name)
    assert p.coefficients[Fraction(0)] == pytest.approx(_cone_sum(p), rel=1e-12)


def test_icosahedral_coefficient():
    p = get_preset("sphere_icosahedral")
    # curvature term area / (12 pi) plus the three cone points
    smooth = (4 * math.pi / 60) / (12 * math.pi)
    assert p.coefficients[Fraction(0)] == pytest.approx(_cone_sum(p) + smooth, rel=1e-12)


def test_rectangle_corners():
    assert get_preset("rect_pmm").coefficients[Fraction(0)] == pytest.approx(4 * corner_term(math.pi / 2))


def test_mirror_torus_against_the_cylinder_spectrum():
    p = get_preset("mirror_torus")
    spec = neumann_cylinder_spectrum(4e4)
    for t in (2e-3, 5e-3):
        z = sum(m * math.exp(-4 * math.pi**2 * q * t) for q, m in spec.items())
        series = sum(c * t ** float(k) for k, c in p.coefficients.items())
        assert z == pytest.approx(series, rel=1e-12)


@pytest.mark.parametrize("name, fixed", [("T3_antipodal", None), ("interval", None), ("T3_mirror", 2)])
def test_theta_series_traces(name, fixed):
    # -I fixes only the zero mode; the mirror fixes the modes of a 2-torus
    p = get_preset(name)
    geo = p.action.geometry
    for t in (2e-3, 5e-3):
        extra = 1.0 if fixed is None else theta_trace(ModelGeometry.unit_torus(fixed), t)
        z = (theta_trace(geo, t) + extra) / 2
        series = sum(c * t ** float(k) for k, c in p.coefficients.items())
        assert z == pytest.approx(series, rel=1e-12)


@pytest.mark.parametrize("name, kw", [("RP2", {"antipodal": True}), ("mirror_sphere", {"mirrors": "z"}),
                                      ("sphere_dihedral", {"mirrors": "xy"})])
def test_sphere_coefficients_from_the_closed_form(name, kw):
    p = get_preset(name)
    spec = closed_form_spectrum(900, **kw)
    ls = np.array(sorted(spec))
    ms = np.array([spec[l] for l in ls], dtype=float)
    cfg = FitConfig(t_min=1e-4)
    samples = [TraceSample(float(t), float(np.sum(ms * np.exp(-ls * (ls + 1) * t))), 0.0) for t in cfg.times]
    fit = extract_coefficients(samples, 2, cfg)
    for power, value in p.coefficients.items():
        assert fit.series.absolute_at(power) == pytest.approx(value, abs=1e-5)


def test_strata_counts_are_consistent():
    for p in PRESETS:
        counts = Counter((d, o) for d, o, _ in p.strata)
        assert all(v == 1 for v in counts.values())
        assert list(p.strata) == sorted(p.strata)
